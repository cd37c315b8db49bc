use std::process::ExitCode;

fn main() -> ExitCode {
    stodyn::cli::main_with(std::env::args_os())
}
