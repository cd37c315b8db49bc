//! Structured TOML reports written by the pipeline stages.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stodyn_core::storage::{SmoothingMetrics, StorageParams};
use stodyn_core::SolveReport;

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub e_rated: f64,
    pub p_max: f64,
    pub dt: f64,
    pub beta: f64,
}

impl From<&StorageParams> for ParamsDoc {
    fn from(p: &StorageParams) -> Self {
        Self { e_rated: p.e_rated, p_max: p.p_max, dt: p.dt, beta: p.beta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDoc {
    pub method: String,
    pub grid: Vec<usize>,
    pub n_std: f64,
    pub noise_nodes: usize,
    pub controls: usize,
    pub eval_max_sweeps: usize,
    pub eval_tol: f64,
    pub max_improvements: usize,
    pub policy_change_tol: f64,
}

/// Outcome of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDoc {
    /// Average cost per step, W².
    pub avg_cost: f64,
    /// `√avg_cost`, the RMS injected power, W.
    pub rms_p_grid: f64,
    pub improvement_steps: usize,
    pub final_evaluation_converged: bool,
    pub sweeps_per_evaluation: Vec<usize>,
    pub evaluation_costs: Vec<f64>,
    pub evaluation_spans: Vec<f64>,
    pub evaluation_converged: Vec<bool>,
    pub policy_changes: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub solver: SolverDoc,
    pub params: ParamsDoc,
}

impl SolveDoc {
    pub fn new(r: &SolveReport, solver: SolverDoc, params: &StorageParams) -> Self {
        Self {
            avg_cost: r.avg_cost,
            rms_p_grid: r.avg_cost.max(0.0).sqrt(),
            improvement_steps: r.improvement_steps,
            final_evaluation_converged: r.final_evaluation_converged(),
            sweeps_per_evaluation: r.sweeps_per_evaluation.clone(),
            evaluation_costs: r.evaluation_costs.clone(),
            evaluation_spans: r.evaluation_spans.clone(),
            evaluation_converged: r.evaluation_converged.clone(),
            policy_changes: r.policy_changes.clone(),
            residual_history: r.residual_history.clone(),
            solver,
            params: params.into(),
        }
    }
}

/// Smoothing statistics of one simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub policy: String,
    pub series: String,
    pub steps: usize,
    pub std_p_grid: f64,
    pub mean_p_grid: f64,
    pub quadratic_cost: f64,
    pub std_p_prod: f64,
    pub e_sto_min: f64,
    pub e_sto_max: f64,
    pub e_initial: f64,
    pub e_final: f64,
}

impl MetricsDoc {
    pub fn new(policy: &str, series: &str, steps: usize, m: &SmoothingMetrics, std_p_prod: f64, e: (f64, f64)) -> Self {
        Self {
            policy: policy.into(),
            series: series.into(),
            steps,
            std_p_grid: m.std_p_grid,
            mean_p_grid: m.mean_p_grid,
            quadratic_cost: m.quadratic_cost,
            std_p_prod,
            e_sto_min: m.e_sto_min,
            e_sto_max: m.e_sto_max,
            e_initial: e.0,
            e_final: e.1,
        }
    }
}

/// One row of `compare`: the standard deviation of the power sent to the
/// grid without storage, with the heuristic policy and with the optimized
/// policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub series: String,
    pub std_no_storage: f64,
    pub std_heuristic: f64,
    pub std_optimized: f64,
    /// `100·(1 − std_optimized/std_heuristic)`.
    pub reduction_vs_heuristic_pct: f64,
    /// `100·(1 − std_optimized/std_no_storage)`.
    pub reduction_vs_no_storage_pct: f64,
    pub quadratic_cost_heuristic: f64,
    pub quadratic_cost_optimized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareDoc {
    pub policy: String,
    pub mean_reduction_vs_heuristic_pct: f64,
    pub min_reduction_vs_heuristic_pct: f64,
    pub series: Vec<CompareRow>,
}

pub fn write_toml<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let text = toml::to_string(doc).map_err(|e| Error::format(path, e))?;
    error::write(path, text)
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = error::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::format(path, e))
}
