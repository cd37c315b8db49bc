use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{span, ControlProblem, Policy, SdpError, SolveReport, SolverConfig, ValueFunction};
use crate::grid::{GridFunction, RectGrid};

/// Result of one greedy Bellman sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Minimized right-hand side, shifted so the reference node is zero.
    pub value: ValueFunction,
    /// Argmin control at every node.
    pub policy: Policy,
    /// The constant removed by the shift.
    pub avg_cost_estimate: f64,
}

/// Average cost and differential value of a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub avg_cost: f64,
    pub value: ValueFunction,
    pub sweeps: usize,
    pub residuals: Vec<f64>,
    /// False when the sweep cap was hit before the span tolerance. The
    /// average cost then lies within the last residual of the true one.
    pub converged: bool,
}

struct Scratch {
    state: Vec<f64>,
    next: Vec<f64>,
    control: Vec<f64>,
    candidates: Vec<f64>,
}

/// Fixed-policy transition structure: expected stage cost per node and the
/// sparse rows of expected next-node weights (noise law times interpolation
/// weights).
struct Transition {
    cost: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    probs: Vec<f64>,
}

impl Transition {
    fn apply(&self, h: &[f64], out: &mut [f64]) {
        let row = |i: usize| {
            let (a, b) = (self.offsets[i], self.offsets[i + 1]);
            let mut acc = 0.0;
            for k in a..b {
                acc += self.probs[k] * h[self.cols[k]];
            }
            self.cost[i] + acc
        };
        #[cfg(feature = "parallel")]
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
        #[cfg(not(feature = "parallel"))]
        out.iter_mut().enumerate().for_each(|(i, o)| *o = row(i));
    }
}

/// Runs `f` on every node index and collects the results in node order.
/// The per-node work is independent, so the output does not depend on how
/// many threads run it.
fn map_nodes<T, I, S, F>(n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map_init(init, f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut s = init();
        (0..n).map(|i| f(&mut s, i)).collect()
    }
}

/// Solver bound to one problem, one state grid and one configuration.
pub struct Solver<'a, P: ?Sized> {
    problem: &'a P,
    grid: &'a RectGrid,
    cfg: SolverConfig,
}

impl<'a, P: ControlProblem + ?Sized> Solver<'a, P> {
    pub fn new(problem: &'a P, grid: &'a RectGrid, cfg: SolverConfig) -> Result<Self, SdpError> {
        if problem.state_dim() != grid.dim() {
            return Err(SdpError::StateDimension { problem: problem.state_dim(), grid: grid.dim() });
        }
        cfg.validate(grid)?;
        Ok(Self { problem, grid, cfg })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &RectGrid {
        self.grid
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            state: alloc::vec![0.0; self.grid.dim()],
            next: alloc::vec![0.0; self.grid.dim()],
            control: alloc::vec![0.0; self.problem.control_dim()],
            candidates: Vec::new(),
        }
    }

    fn check_value(&self, value: &ValueFunction) -> Result<(), SdpError> {
        if value.grid() != self.grid {
            return Err(SdpError::GridMismatch);
        }
        Ok(())
    }

    fn check_policy(&self, policy: &Policy) -> Result<(), SdpError> {
        if policy.control_dim() != self.problem.control_dim() {
            return Err(SdpError::ControlDimension {
                policy: policy.control_dim(),
                problem: self.problem.control_dim(),
            });
        }
        if policy.grid() != self.grid {
            return Err(SdpError::GridMismatch);
        }
        Ok(())
    }

    /// Minimizes the expected stage cost plus interpolated future value at
    /// one node. Returns the minimum and the index of the first minimizing
    /// candidate (left in `s.candidates`).
    fn greedy_node(&self, value: &GridFunction, node: usize, s: &mut Scratch) -> Result<(f64, usize), SdpError> {
        let Scratch { state, next, candidates, .. } = s;
        self.grid.write_node(node, state);
        candidates.clear();
        self.problem.control_candidates(state, candidates);
        let m = self.problem.control_dim();
        let n_cand = candidates.len() / m;
        if n_cand == 0 {
            return Err(SdpError::NoCandidates { node });
        }
        let noise = self.problem.noise();
        let mut best = (f64::INFINITY, 0);
        for (k, u) in candidates.chunks_exact(m).enumerate() {
            let mut q = 0.0;
            for (j, (w, p)) in noise.iter().enumerate() {
                let c = self.problem.stage_cost(state, u, w);
                if !c.is_finite() {
                    return Err(SdpError::NonFiniteCost { node, candidate: k, noise: j });
                }
                self.problem.dynamics(state, u, w, next);
                if next.iter().any(|x| !x.is_finite()) {
                    return Err(SdpError::NonFiniteDynamics { node, candidate: k, noise: j });
                }
                q += p * (c + value.interpolate_unchecked(next));
            }
            if q < best.0 {
                best = (q, k);
            }
        }
        Ok(best)
    }

    /// One application of the minimized Bellman operator followed by the
    /// relative-value shift at the reference node.
    pub fn bellman_sweep(&self, value: &ValueFunction) -> Result<Sweep, SdpError> {
        self.check_value(value)?;
        let m = self.problem.control_dim();
        let results = map_nodes(
            self.grid.len(),
            || self.scratch(),
            |s, node| self.greedy_node(value, node, s).map(|(q, k)| (q, s.candidates[k * m..(k + 1) * m].to_vec())),
        );
        let mut values = Vec::with_capacity(self.grid.len());
        let mut controls = alloc::vec![Vec::with_capacity(self.grid.len()); m];
        for r in results {
            let (q, u) = r?;
            values.push(q);
            for (col, v) in controls.iter_mut().zip(u) {
                col.push(v);
            }
        }
        let avg_cost_estimate = values[self.cfg.reference_node];
        for v in &mut values {
            *v -= avg_cost_estimate;
        }
        let value = GridFunction::new(self.grid.clone(), values)?;
        let policy = Policy::new(
            controls.into_iter().map(|c| GridFunction::new(self.grid.clone(), c)).collect::<Result<Vec<_>, _>>()?,
        )?;
        Ok(Sweep { value, policy, avg_cost_estimate })
    }

    /// Greedy policy with respect to `value`.
    pub fn policy_improvement(&self, value: &ValueFunction) -> Result<Policy, SdpError> {
        Ok(self.bellman_sweep(value)?.policy)
    }

    fn transition(&self, policy: &Policy) -> Result<Transition, SdpError> {
        let m = self.problem.control_dim();
        let noise = self.problem.noise();
        let rows = map_nodes(
            self.grid.len(),
            || self.scratch(),
            |s, node| -> Result<(f64, Vec<(usize, f64)>), SdpError> {
                let Scratch { state, next, control, candidates } = s;
                self.grid.write_node(node, state);
                policy.control_at(state, control);
                candidates.clear();
                self.problem.control_candidates(state, candidates);
                if candidates.len() < m {
                    return Err(SdpError::NoCandidates { node });
                }
                // project onto the nearest admissible candidate
                let mut best = (f64::INFINITY, 0);
                for (k, u) in candidates.chunks_exact(m).enumerate() {
                    let d: f64 = u.iter().zip(control.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d < best.0 {
                        best = (d, k);
                    }
                }
                let k = best.1;
                let u = &candidates[k * m..(k + 1) * m];
                let mut cost = 0.0;
                let mut row = Vec::with_capacity(noise.len() << self.grid.dim());
                for (j, (w, p)) in noise.iter().enumerate() {
                    let c = self.problem.stage_cost(state, u, w);
                    if !c.is_finite() {
                        return Err(SdpError::NonFiniteCost { node, candidate: k, noise: j });
                    }
                    self.problem.dynamics(state, u, w, next);
                    if next.iter().any(|x| !x.is_finite()) {
                        return Err(SdpError::NonFiniteDynamics { node, candidate: k, noise: j });
                    }
                    cost += p * c;
                    self.grid.for_each_corner(next, |i, wt| row.push((i, p * wt)));
                }
                row.sort_by_key(|e| e.0);
                row.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
                Ok((cost, row))
            },
        );
        let mut t = Transition {
            cost: Vec::with_capacity(self.grid.len()),
            offsets: Vec::with_capacity(self.grid.len() + 1),
            cols: Vec::new(),
            probs: Vec::new(),
        };
        t.offsets.push(0);
        for r in rows {
            let (cost, row) = r?;
            t.cost.push(cost);
            for (i, p) in row {
                t.cols.push(i);
                t.probs.push(p);
            }
            t.offsets.push(t.cols.len());
        }
        Ok(t)
    }

    /// Average cost and relative value of `policy`, starting from `h ≡ 0`.
    pub fn policy_evaluation(&self, policy: &Policy) -> Result<Evaluation, SdpError> {
        self.policy_evaluation_from(policy, None)
    }

    /// Policy evaluation warm-started from `start` (typically the value of
    /// the previous policy).
    ///
    /// At every node the stored control is projected onto the nearest
    /// admissible candidate, then the fixed-policy right-hand side is
    /// iterated with the relative-value shift until the span of the
    /// sweep-to-sweep change drops below the configured tolerance or the
    /// sweep cap is reached. Only divergence is an error.
    pub fn policy_evaluation_from(
        &self,
        policy: &Policy,
        start: Option<&ValueFunction>,
    ) -> Result<Evaluation, SdpError> {
        self.check_policy(policy)?;
        let mut h = match start {
            Some(v) => {
                self.check_value(v)?;
                v.values().to_vec()
            }
            None => alloc::vec![0.0; self.grid.len()],
        };
        let t = self.transition(policy)?;
        let mut next = alloc::vec![0.0; self.grid.len()];
        let mut residuals = Vec::new();
        let reference = self.cfg.reference_node;
        for sweep in 1..=self.cfg.eval_max_sweeps {
            t.apply(&h, &mut next);
            let avg_cost = next[reference];
            for v in &mut next {
                *v -= avg_cost;
            }
            let change = span(next.iter().zip(&h).map(|(a, b)| a - b));
            residuals.push(change);
            core::mem::swap(&mut h, &mut next);
            let converged = change <= self.cfg.span_threshold(avg_cost);
            if converged || sweep == self.cfg.eval_max_sweeps {
                let value = GridFunction::new(self.grid.clone(), h)?;
                return Ok(Evaluation { avg_cost, value, sweeps: sweep, residuals, converged });
            }
            check_divergence(&residuals)?;
        }
        unreachable!("sweep cap is positive")
    }

    /// Alternates evaluation and greedy improvement, starting from `init`,
    /// until no control changes by more than `policy_change_tol` or the
    /// improvement cap is reached. The returned policy is always the one
    /// whose cost and value are reported.
    pub fn policy_iteration(&self, init: &Policy) -> Result<SolveReport, SdpError> {
        self.check_policy(init)?;
        let mut policy = init.clone();
        let mut warm: Option<ValueFunction> = None;
        let mut sweeps_per_evaluation = Vec::new();
        let mut evaluation_costs = Vec::new();
        let mut policy_changes = Vec::new();
        let mut residual_history = Vec::new();
        let mut evaluation_spans = Vec::new();
        let mut evaluation_converged = Vec::new();
        let mut steps = 0;
        loop {
            let ev = self.policy_evaluation_from(&policy, warm.as_ref())?;
            sweeps_per_evaluation.push(ev.sweeps);
            evaluation_costs.push(ev.avg_cost);
            residual_history.extend_from_slice(&ev.residuals);
            evaluation_spans.push(*ev.residuals.last().unwrap_or(&0.0));
            evaluation_converged.push(ev.converged);
            let done = if steps == self.cfg.max_improvements {
                true
            } else {
                let improved = self.policy_improvement(&ev.value)?;
                steps += 1;
                let change = improved.max_abs_diff(&policy);
                policy_changes.push(change);
                if change < self.cfg.policy_change_tol {
                    true
                } else {
                    policy = improved;
                    false
                }
            };
            if done {
                return Ok(SolveReport {
                    avg_cost: ev.avg_cost,
                    value: ev.value,
                    policy,
                    sweeps_per_evaluation,
                    evaluation_costs,
                    evaluation_spans,
                    evaluation_converged,
                    policy_changes,
                    improvement_steps: steps,
                    residual_history,
                });
            }
            warm = Some(ev.value);
        }
    }

    /// Relative value iteration from `h ≡ 0`, stopped by the span
    /// tolerance or after `eval_max_sweeps` sweeps.
    pub fn value_iteration(&self) -> Result<SolveReport, SdpError> {
        let mut h = GridFunction::constant(self.grid.clone(), 0.0);
        let mut residual_history = Vec::new();
        for sweep in 1..=self.cfg.eval_max_sweeps {
            let sw = self.bellman_sweep(&h)?;
            let change = span(sw.value.values().iter().zip(h.values()).map(|(a, b)| a - b));
            residual_history.push(change);
            let converged = change <= self.cfg.span_threshold(sw.avg_cost_estimate);
            if converged || sweep == self.cfg.eval_max_sweeps {
                return Ok(SolveReport {
                    avg_cost: sw.avg_cost_estimate,
                    value: sw.value,
                    policy: sw.policy,
                    sweeps_per_evaluation: alloc::vec![sweep],
                    evaluation_costs: alloc::vec![sw.avg_cost_estimate],
                    evaluation_spans: alloc::vec![change],
                    evaluation_converged: alloc::vec![converged],
                    policy_changes: Vec::new(),
                    improvement_steps: sweep,
                    residual_history,
                });
            }
            check_divergence(&residual_history)?;
            h = sw.value;
        }
        unreachable!("sweep cap is positive")
    }
}

/// Flags a span that grew more than tenfold over the last 100 sweeps.
fn check_divergence(residuals: &[f64]) -> Result<(), SdpError> {
    let n = residuals.len();
    if n > 100 {
        let (from, to) = (residuals[n - 101], residuals[n - 1]);
        if to > 10.0 * from || !to.is_finite() {
            return Err(SdpError::Diverged { sweeps: n, from, to });
        }
    }
    Ok(())
}
