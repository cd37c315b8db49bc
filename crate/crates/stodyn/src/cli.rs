//! The `stodyn` command line: generate, fit, solve, simulate, compare.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stodyn_core::ar::{self, ArModel};
use stodyn_core::storage::{
    self, heuristic_grid_policy, heuristic_policy, pto_power, simulate_trajectory, state_grid, StorageParams,
    StorageProblem, SystemState, TrajectoryRecord,
};
use stodyn_core::{Policy, SdpError, Solver, SolverConfig};

use crate::error::{exit, Error, Result};
use crate::gridfile;
use crate::modelfile::{self, FitInfo, ModelDoc};
use crate::reports::{self, CompareDoc, CompareRow, MetricsDoc, SolveDoc, SolverDoc};
use crate::series::{self, SpeedSeries};

#[derive(Debug, Parser)]
#[command(name = "stodyn", version, about = "Optimal storage control for smoothing wave power", long_about = None)]
pub struct Cli {
    /// Worker threads for grid sweeps (default: one per core). Results do
    /// not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a speed series from an AR model and write it as CSV.
    Generate(GenerateArgs),
    /// Fit an AR model to a speed series.
    Fit(FitArgs),
    /// Optimize the storage policy on a state grid.
    Solve(SolveArgs),
    /// Run a policy on a speed series and report smoothing metrics.
    Simulate(SimulateArgs),
    /// Compare no storage, the heuristic policy and a policy file on series.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StorageArgs {
    /// Storage capacity, J.
    #[arg(long, default_value_t = 10e6)]
    pub e_rated: f64,
    /// Rated converter power, W.
    #[arg(long, default_value_t = 1.1e6)]
    pub p_max: f64,
    /// Timestep, s (defaults to the model's timestep where a model is read).
    #[arg(long)]
    pub dt: Option<f64>,
}

impl StorageArgs {
    fn params(&self, model_dt: Option<f64>) -> Result<StorageParams> {
        let dt = match (self.dt, model_dt) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Usage(format!("--dt {a} differs from the model timestep {b}")));
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => 0.1,
        };
        let p = StorageParams::new(self.e_rated, self.p_max, dt);
        p.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model file; the reference multi-lag AR(2) model when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of samples.
    #[arg(short = 'n', long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Discarded warm-up samples (default: ten slowest time constants).
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[command(flatten)]
    pub storage: StorageArgs,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    /// Match the autocorrelation over many lags.
    Multilag,
    /// Conditional least squares.
    Cls,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub series: PathBuf,
    /// Model order.
    #[arg(short = 'p', long, default_value_t = 2, value_parser = clap::value_parser!(u16).range(1..))]
    pub order: u16,
    /// Longest autocorrelation lag to match, s.
    #[arg(long, default_value_t = 15.0)]
    pub lag_seconds: f64,
    #[arg(long, value_enum, default_value_t = FitMethod::Multilag)]
    pub method: FitMethod,
    /// Sampling step of the series, s.
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMethod {
    Policy,
    Value,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Model file; the reference multi-lag AR(2) model when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub storage: StorageArgs,
    /// Nodes along (energy, speed, acceleration).
    #[arg(long, value_delimiter = ',', default_values_t = [30, 60, 60])]
    pub grid: Vec<usize>,
    /// Half-width of the speed and acceleration axes in stationary standard
    /// deviations.
    #[arg(long, default_value_t = 4.0)]
    pub n_std: f64,
    /// Sweep cap per evaluation (and for value iteration).
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    /// Span tolerance relative to |J| + 1.
    #[arg(long, default_value_t = 1e-9)]
    pub eval_tol: f64,
    #[arg(long, default_value_t = 10)]
    pub max_improvements: usize,
    /// Stop once no control moves by more than this, W.
    #[arg(long, default_value_t = 1e-9)]
    pub policy_change_tol: f64,
    #[arg(long, default_value_t = 5)]
    pub noise_nodes: usize,
    /// Candidate grid powers on [0, p_max].
    #[arg(long, default_value_t = 50)]
    pub controls: usize,
    #[arg(long, value_enum, default_value_t = SolveMethod::Policy)]
    pub method: SolveMethod,
    /// Fail when the final evaluation stops at the sweep cap.
    #[arg(long)]
    pub strict: bool,
    /// Directory receiving policy, value, report and slice files.
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Policy file, or `heuristic` for the linear storage feedback.
    #[arg(long)]
    pub policy: String,
    #[arg(long)]
    pub series: PathBuf,
    #[command(flatten)]
    pub storage: StorageArgs,
    /// Initial stored energy, J (default: half the capacity).
    #[arg(long)]
    pub e0: Option<f64>,
    /// Trajectory CSV.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Metrics report (TOML).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Policy file, or `heuristic`.
    #[arg(long)]
    pub policy: String,
    #[arg(long, num_args = 1.., required = true)]
    pub series: Vec<PathBuf>,
    #[command(flatten)]
    pub storage: StorageArgs,
    #[arg(long)]
    pub e0: Option<f64>,
    /// Comparison report (TOML).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command, returning the exit status.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Usage(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(&a),
        Command::Fit(a) => fit(&a),
        Command::Solve(a) => solve(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Compare(a) => compare(&a),
    }
}

fn load_model(path: Option<&Path>) -> Result<ArModel> {
    match path {
        Some(p) => modelfile::read_model(p),
        None => Ok(ArModel::searev_reference()),
    }
}

fn backward_difference(x: &[f64], dt: f64) -> Vec<f64> {
    (0..x.len()).map(|k| if k == 0 { 0.0 } else { (x[k] - x[k - 1]) / dt }).collect()
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let model = load_model(a.model.as_deref())?;
    let params = a.storage.params(Some(model.dt()))?;
    let omega = ar::simulate(&model, a.steps, a.seed, a.burn_in).map_err(Error::model)?;
    let s = SpeedSeries {
        t: (0..omega.len()).map(|k| k as f64 * model.dt()).collect(),
        p_prod: Some(omega.iter().map(|&w| pto_power(w, &params)).collect()),
        accel: Some(backward_difference(&omega, model.dt())),
        omega,
    };
    series::write_series(&a.out, &s)?;
    println!("wrote {} samples to {}", s.len(), a.out.display());
    Ok(())
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let s = series::read_series(&a.series, a.dt)?;
    let p = a.order as usize;
    let source = a.series.display().to_string();
    let (model, info) = match a.method {
        FitMethod::Cls => {
            let m = ar::fit_cls(&s.omega, p, a.dt).map_err(Error::model)?;
            let info = FitInfo { method: "cls".into(), source, samples: s.len(), lag_count: None, criterion: None };
            (m, info)
        }
        FitMethod::Multilag => {
            if !(a.lag_seconds > 0.0) {
                return Err(Error::Usage("--lag-seconds must be positive".into()));
            }
            let lags = (a.lag_seconds / a.dt).round() as usize;
            if lags < p {
                return Err(Error::Usage(format!("{lags} lags cannot determine {p} coefficients")));
            }
            let acf = ar::sample_acf(&s.omega, lags, a.dt).map_err(Error::model)?;
            let fit = ar::fit_multilag(&acf, p, lags).map_err(Error::model)?;
            let sigma = ar::innovation_std_from_acf(&fit.phi, ar::variance(&s.omega), &acf).map_err(Error::model)?;
            let m = ArModel::new(fit.phi.clone(), sigma, a.dt).map_err(Error::model)?;
            let info = FitInfo {
                method: "multilag".into(),
                source,
                samples: s.len(),
                lag_count: Some(fit.lag_count),
                criterion: Some(fit.criterion),
            };
            (m, info)
        }
    };
    modelfile::write_model(&a.out, &ModelDoc::from_model(&model, Some(info)))?;
    println!("phi = {:?}, sigma_eps = {}", model.phi(), model.sigma_eps());
    Ok(())
}

/// Energy levels of the policy slices, as fractions of the capacity.
const SLICE_LEVELS: usize = 7;

fn write_slices(path: &Path, policy: &Policy, params: &StorageParams) -> Result<()> {
    let grid = policy.grid();
    let (wa, aa) = (grid.axis(1), grid.axis(2));
    let io = |e: csv::Error| series::csv_err(path, e);
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["e_sto", "omega", "accel", "p_grid"]).map_err(io)?;
    let mut u = [0.0];
    for k in 0..SLICE_LEVELS {
        let e = params.e_rated * k as f64 / (SLICE_LEVELS - 1) as f64;
        for om in wa.nodes() {
            for ac in aa.nodes() {
                policy.control_at(&[e, om, ac], &mut u);
                w.write_record([e, om, ac, u[0]].map(|v| v.to_string())).map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn sdp_error(e: SdpError) -> Error {
    match e {
        SdpError::Diverged { .. } => Error::NotConverged(e.to_string()),
        other => Error::model(other),
    }
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let model = load_model(a.model.as_deref())?;
    let params = a.storage.params(Some(model.dt()))?;
    let sizes: [usize; 3] = a.grid.as_slice().try_into().map_err(|_| Error::Usage("--grid takes 3 sizes".into()))?;
    let cfg = SolverConfig {
        reference_node: 0,
        eval_max_sweeps: a.sweeps,
        eval_tol: a.eval_tol,
        max_improvements: a.max_improvements,
        policy_change_tol: a.policy_change_tol,
    };
    if a.noise_nodes == 0 || a.controls == 0 {
        return Err(Error::Usage("--noise-nodes and --controls must be positive".into()));
    }
    let problem = StorageProblem::new(&model, params, a.noise_nodes, a.controls).map_err(Error::model)?;
    let grid = state_grid(&model, &params, sizes, a.n_std).map_err(Error::model)?;
    cfg.validate(&grid).map_err(|e| Error::Usage(e.to_string()))?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;

    let solver = Solver::new(&problem, &grid, cfg.clone()).map_err(sdp_error)?;
    let report = match a.method {
        SolveMethod::Policy => {
            let init = heuristic_grid_policy(&grid, &params).map_err(Error::model)?;
            solver.policy_iteration(&init)
        }
        SolveMethod::Value => solver.value_iteration(),
    }
    .map_err(sdp_error)?;

    let doc = SolveDoc::new(
        &report,
        SolverDoc {
            method: format!("{:?}", a.method).to_lowercase(),
            grid: sizes.to_vec(),
            n_std: a.n_std,
            noise_nodes: a.noise_nodes,
            controls: a.controls,
            eval_max_sweeps: cfg.eval_max_sweeps,
            eval_tol: cfg.eval_tol,
            max_improvements: cfg.max_improvements,
            policy_change_tol: cfg.policy_change_tol,
        },
        &params,
    );
    gridfile::write_policy(&a.out_dir.join("policy.toml"), &report.policy)?;
    gridfile::write_value(&a.out_dir.join("value.toml"), &report.value)?;
    reports::write_toml(&a.out_dir.join("report.toml"), &doc)?;
    write_slices(&a.out_dir.join("policy_slices.csv"), &report.policy, &params)?;

    println!(
        "J = {:.6e} W^2 (rms {:.1} W), {} improvement steps, sweeps {:?}",
        report.avg_cost, doc.rms_p_grid, report.improvement_steps, report.sweeps_per_evaluation
    );
    if !report.final_evaluation_converged() {
        let msg = format!(
            "final evaluation stopped at the {}-sweep cap with span {:.3e} (tolerance {:.3e})",
            cfg.eval_max_sweeps,
            doc.evaluation_spans.last().copied().unwrap_or(f64::NAN),
            cfg.span_threshold(report.avg_cost)
        );
        if a.strict {
            return Err(Error::NotConverged(msg));
        }
        eprintln!("warning: {msg}");
    }
    Ok(())
}

/// A policy that can be applied off-grid.
enum Law {
    Heuristic,
    Grid(Policy),
}

impl Law {
    fn load(arg: &str, params: &StorageParams) -> Result<Self> {
        if arg == "heuristic" {
            return Ok(Law::Heuristic);
        }
        let path = Path::new(arg);
        let p = gridfile::read_policy(path)?;
        let g = p.grid();
        if g.dim() != 3 || p.control_dim() != 1 {
            return Err(Error::format(
                path,
                format!("expected a 3-d state and 1 control, found {}-d and {}", g.dim(), p.control_dim()),
            ));
        }
        let e = g.axis(0);
        if e.lo() != 0.0 || e.hi() != params.e_rated {
            return Err(Error::format(
                path,
                format!("energy axis [{}, {}] does not match e_rated = {}", e.lo(), e.hi(), params.e_rated),
            ));
        }
        Ok(Law::Grid(p))
    }

    fn run(&self, s: &SpeedSeries, params: &StorageParams, e0: f64) -> Result<TrajectoryRecord> {
        let prod = s.p_prod.as_deref();
        let r = match self {
            Law::Heuristic => simulate_trajectory(|x| heuristic_policy(x, params), &s.omega, prod, params, e0),
            Law::Grid(p) => {
                let mut u = [0.0];
                simulate_trajectory(
                    |x: &SystemState| {
                        p.control_at(&x.as_array(), &mut u);
                        u[0]
                    },
                    &s.omega,
                    prod,
                    params,
                    e0,
                )
            }
        };
        r.map_err(Error::model)
    }
}

fn population_std(x: &[f64]) -> f64 {
    ar::variance(x).sqrt()
}

fn initial_energy(e0: Option<f64>, params: &StorageParams) -> Result<f64> {
    let e = e0.unwrap_or(params.e_rated / 2.0);
    if !(0.0..=params.e_rated).contains(&e) {
        return Err(Error::Usage(format!("--e0 {e} outside [0, {}]", params.e_rated)));
    }
    Ok(e)
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let params = a.storage.params(None)?;
    let e0 = initial_energy(a.e0, &params)?;
    let law = Law::load(&a.policy, &params)?;
    let s = series::read_series(&a.series, params.dt)?;
    let tr = law.run(&s, &params, e0)?;
    series::write_trajectory(&a.out, &tr)?;
    let m = storage::metrics(&tr).map_err(Error::model)?;
    let doc = MetricsDoc::new(
        &a.policy,
        &a.series.display().to_string(),
        tr.len(),
        &m,
        population_std(&tr.p_prod),
        (e0, tr.e_final),
    );
    if let Some(path) = &a.metrics {
        reports::write_toml(path, &doc)?;
    }
    print!("{}", toml::to_string(&doc).map_err(|e| Error::format(&a.out, e))?);
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let params = a.storage.params(None)?;
    let e0 = initial_energy(a.e0, &params)?;
    let law = Law::load(&a.policy, &params)?;
    let mut rows = Vec::with_capacity(a.series.len());
    for path in &a.series {
        let s = series::read_series(path, params.dt)?;
        let heur = Law::Heuristic.run(&s, &params, e0)?;
        let opt = law.run(&s, &params, e0)?;
        let mh = storage::metrics(&heur).map_err(Error::model)?;
        let mo = storage::metrics(&opt).map_err(Error::model)?;
        let base = population_std(&heur.p_prod);
        rows.push(CompareRow {
            series: path.display().to_string(),
            std_no_storage: base,
            std_heuristic: mh.std_p_grid,
            std_optimized: mo.std_p_grid,
            reduction_vs_heuristic_pct: 100.0 * (1.0 - mo.std_p_grid / mh.std_p_grid),
            reduction_vs_no_storage_pct: 100.0 * (1.0 - mo.std_p_grid / base),
            quadratic_cost_heuristic: mh.quadratic_cost,
            quadratic_cost_optimized: mo.quadratic_cost,
        });
    }
    let red: Vec<f64> = rows.iter().map(|r| r.reduction_vs_heuristic_pct).collect();
    let doc = CompareDoc {
        policy: a.policy.clone(),
        mean_reduction_vs_heuristic_pct: red.iter().sum::<f64>() / red.len() as f64,
        min_reduction_vs_heuristic_pct: red.iter().copied().fold(f64::INFINITY, f64::min),
        series: rows,
    };
    println!("{:<40} {:>12} {:>12} {:>12} {:>9}", "series", "no storage", "heuristic", "optimized", "gain");
    for r in &doc.series {
        println!(
            "{:<40} {:>10.1}kW {:>10.1}kW {:>10.1}kW {:>8.1}%",
            r.series,
            r.std_no_storage / 1e3,
            r.std_heuristic / 1e3,
            r.std_optimized / 1e3,
            r.reduction_vs_heuristic_pct
        );
    }
    println!("mean std reduction vs heuristic: {:.1}%", doc.mean_reduction_vs_heuristic_pct);
    if let Some(out) = &a.out {
        reports::write_toml(out, &doc)?;
    }
    Ok(())
}
