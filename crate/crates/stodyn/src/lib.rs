//! File formats and the command-line pipeline around [`stodyn_core`]:
//! speed series and trajectories as CSV, AR models and reports as TOML,
//! grid functions and policies as TOML metadata plus a raw `f64` payload.

pub mod cli;
pub mod error;
pub mod gridfile;
pub mod modelfile;
pub mod reports;
pub mod series;

pub use error::{Error, Result};
