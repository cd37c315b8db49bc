//! Infinite-horizon, average-cost-per-stage stochastic dynamic programming
//! on a rectangular state grid.
//!
//! A problem is described through [`ControlProblem`]: dynamics
//! `x' = f(x, u, w)`, a stage cost `c(x, u, w)`, a finite list of admissible
//! controls per state and a discrete law for the perturbation `w`. The
//! [`Solver`] then finds the average cost `J`, the differential value
//! function and a state-feedback policy, either by relative value iteration
//! or by policy iteration.

mod noise;
mod solve;

use alloc::vec::Vec;

use thiserror::Error;

use crate::grid::{GridError, GridFunction, RectGrid};

pub use noise::DiscreteNoise;
pub use solve::{Evaluation, Solver, Sweep};

/// Relative (differential) value function stored on the state grid.
pub type ValueFunction = GridFunction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid noise law: {0}")]
    InvalidNoise(&'static str),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("problem has state dimension {problem}, grid has {grid}")]
    StateDimension { problem: usize, grid: usize },
    #[error("policy has {policy} control components, problem expects {problem}")]
    ControlDimension { policy: usize, problem: usize },
    #[error("policy and value must live on the solver grid")]
    GridMismatch,
    #[error("no admissible control at node {node}")]
    NoCandidates { node: usize },
    #[error("non-finite stage cost at node {node} (candidate {candidate}, noise {noise})")]
    NonFiniteCost { node: usize, candidate: usize, noise: usize },
    #[error("non-finite next state at node {node} (candidate {candidate}, noise {noise})")]
    NonFiniteDynamics { node: usize, candidate: usize, noise: usize },
    #[error("diverging iterates: span went from {from:e} to {to:e} within 100 sweeps (sweep {sweeps})")]
    Diverged { sweeps: usize, from: f64, to: f64 },
}

/// Discrete-time stochastic control problem.
///
/// All state and control points are flat `f64` slices. Implementations must
/// return finite values for every grid node, candidate and noise node.
pub trait ControlProblem: Sync {
    fn state_dim(&self) -> usize;

    fn control_dim(&self) -> usize;

    fn noise(&self) -> &DiscreteNoise;

    /// Appends the admissible controls at `state` to `out`, `control_dim()`
    /// reals per candidate. Order matters: ties in the minimization go to
    /// the first candidate.
    fn control_candidates(&self, state: &[f64], out: &mut Vec<f64>);

    /// Writes `f(state, control, noise)` into `next`.
    fn dynamics(&self, state: &[f64], control: &[f64], noise: f64, next: &mut [f64]);

    fn stage_cost(&self, state: &[f64], control: &[f64], noise: f64) -> f64;
}

/// State-feedback policy: one grid function per control component.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    components: Vec<GridFunction>,
}

impl Policy {
    pub fn new(components: Vec<GridFunction>) -> Result<Self, SdpError> {
        let first = components.first().ok_or(SdpError::ControlDimension { policy: 0, problem: 1 })?;
        if components.iter().any(|c| c.grid() != first.grid()) {
            return Err(SdpError::GridMismatch);
        }
        Ok(Self { components })
    }

    /// Samples a feedback law `law(state, control_out)` at every node.
    pub fn from_fn(
        grid: &RectGrid,
        control_dim: usize,
        mut law: impl FnMut(&[f64], &mut [f64]),
    ) -> Result<Self, SdpError> {
        let mut cols = alloc::vec![Vec::with_capacity(grid.len()); control_dim];
        let mut x = alloc::vec![0.0; grid.dim()];
        let mut u = alloc::vec![0.0; control_dim];
        for i in 0..grid.len() {
            grid.write_node(i, &mut x);
            law(&x, &mut u);
            for (col, &v) in cols.iter_mut().zip(&u) {
                col.push(v);
            }
        }
        let components =
            cols.into_iter().map(|values| GridFunction::new(grid.clone(), values)).collect::<Result<Vec<_>, _>>()?;
        Self::new(components)
    }

    pub fn control_dim(&self) -> usize {
        self.components.len()
    }

    pub fn grid(&self) -> &RectGrid {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[GridFunction] {
        &self.components
    }

    pub fn into_components(self) -> Vec<GridFunction> {
        self.components
    }

    /// Stored control at a grid node.
    pub fn control_at_node(&self, node: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.values()[node];
        }
    }

    /// Interpolated control at an arbitrary (clamped) state.
    pub fn control_at(&self, state: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.interpolate_unchecked(state);
        }
    }

    /// Largest absolute difference between two policies over all nodes and
    /// components.
    pub fn max_abs_diff(&self, other: &Policy) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Flat index of the node whose relative value is pinned to zero.
    pub reference_node: usize,
    /// Sweep cap for one policy evaluation (and for value iteration).
    pub eval_max_sweeps: usize,
    /// Span-seminorm tolerance, relative to `|J| + 1`.
    pub eval_tol: f64,
    pub max_improvements: usize,
    /// Policy iteration stops once no control moves by more than this.
    pub policy_change_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { reference_node: 0, eval_max_sweeps: 1000, eval_tol: 1e-9, max_improvements: 10, policy_change_tol: 1e-9 }
    }
}

impl SolverConfig {
    pub fn validate(&self, grid: &RectGrid) -> Result<(), SdpError> {
        if self.reference_node >= grid.len() {
            return Err(SdpError::InvalidConfig("reference node outside the grid"));
        }
        if self.eval_max_sweeps == 0 || self.max_improvements == 0 {
            return Err(SdpError::InvalidConfig("sweep and improvement caps must be positive"));
        }
        if !(self.eval_tol > 0.0) || !(self.policy_change_tol > 0.0) {
            return Err(SdpError::InvalidConfig("tolerances must be positive"));
        }
        Ok(())
    }

    /// Absolute span threshold for an average cost estimate `avg_cost`.
    pub fn span_threshold(&self, avg_cost: f64) -> f64 {
        self.eval_tol * (avg_cost.abs() + 1.0)
    }
}

/// Outcome of value iteration or policy iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub avg_cost: f64,
    pub value: ValueFunction,
    pub policy: Policy,
    /// Sweeps used by each policy evaluation (a single entry for value
    /// iteration).
    pub sweeps_per_evaluation: Vec<usize>,
    /// Average cost of each evaluated policy, in order.
    pub evaluation_costs: Vec<f64>,
    /// Last sweep-to-sweep span of each evaluation.
    pub evaluation_spans: Vec<f64>,
    /// Whether each evaluation met the span tolerance before the sweep cap.
    pub evaluation_converged: Vec<bool>,
    /// Largest control change produced by each improvement step.
    pub policy_changes: Vec<f64>,
    pub improvement_steps: usize,
    /// Span of the sweep-to-sweep change, for every sweep performed.
    pub residual_history: Vec<f64>,
}

impl SolveReport {
    /// True when the reported value and cost come from an evaluation that
    /// met the span tolerance. Earlier evaluations may have been cut short
    /// by the sweep cap, which only makes policy iteration a modified one.
    pub fn final_evaluation_converged(&self) -> bool {
        self.evaluation_converged.last().copied().unwrap_or(false)
    }
}

/// Span seminorm `max(v) − min(v)`.
pub fn span(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        0.0
    } else {
        hi - lo
    }
}
