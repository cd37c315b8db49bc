//! Smoothing a wave energy converter's output with an energy storage.
//!
//! The converter produces `P_prod = min(β·Ω², P_max)` from the pendulum
//! speed `Ω`. The storage absorbs `P_sto = P_prod − P_grid` and its energy
//! follows `E(k+1) = E(k) + P_sto(k)·Δt` within `[0, E_rated]`, losses
//! neglected. The state seen by the controller is `(E_sto, Ω, A)` where the
//! speed follows the AR(2) speed/acceleration model; the control is the power
//! injected to the grid and the stage cost is `P_grid²`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::ar::{self, ArError, ArModel, StateSpaceAr2};
use crate::grid::{GridError, RectGrid};
use crate::sdp::{ControlProblem, DiscreteNoise, Policy, SdpError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StorageError {
    #[error("storage parameter {0} must be finite and strictly positive")]
    BadParameter(&'static str),
    #[error("speed series needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("non-finite input at step {0}")]
    NonFinite(usize),
    #[error("initial energy {0} outside [0, e_rated]")]
    BadInitialEnergy(f64),
    #[error("production series length {prod} differs from speed series length {speed}")]
    LengthMismatch { speed: usize, prod: usize },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("need at least one control candidate")]
    NoControls,
    #[error(transparent)]
    Model(#[from] ArError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Physical constants of the storage and the power take-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageParams {
    /// Storage capacity, J.
    pub e_rated: f64,
    /// Rated power of the converter, W.
    pub p_max: f64,
    /// Timestep, s.
    pub dt: f64,
    /// Viscous damping of the PTO, W·s²/rad².
    pub beta: f64,
}

/// Speed above which the PTO levels its power at `p_max`, rad/s.
pub const LEVELING_SPEED: f64 = 0.5;

impl Default for StorageParams {
    fn default() -> Self {
        Self::new(10e6, 1.1e6, 0.1)
    }
}

impl StorageParams {
    /// Parameters with `β` chosen so that leveling starts at
    /// [`LEVELING_SPEED`].
    pub fn new(e_rated: f64, p_max: f64, dt: f64) -> Self {
        Self { e_rated, p_max, dt, beta: p_max / (LEVELING_SPEED * LEVELING_SPEED) }
    }

    pub fn validate(&self) -> Result<(), StorageError> {
        for (name, v) in [("e_rated", self.e_rated), ("p_max", self.p_max), ("dt", self.dt), ("beta", self.beta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(StorageError::BadParameter(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    pub e_sto: f64,
    pub omega: f64,
    pub accel: f64,
}

impl SystemState {
    pub fn as_array(&self) -> [f64; 3] {
        [self.e_sto, self.omega, self.accel]
    }
}

/// PTO power with viscous damping and leveling: `min(β·ω², p_max)`.
#[inline]
pub fn pto_power(omega: f64, params: &StorageParams) -> f64 {
    (params.beta * omega * omega).min(params.p_max)
}

/// Linear storage feedback `P_grid = (P_max / E_rated)·E_sto`.
#[inline]
pub fn heuristic_policy(state: &SystemState, params: &StorageParams) -> f64 {
    params.p_max / params.e_rated * state.e_sto
}

/// Range of grid powers that keeps the next stored energy in `[0, e_rated]`
/// given the current production.
#[inline]
pub fn feasible_interval(state: &SystemState, params: &StorageParams) -> (f64, f64) {
    feasible_interval_for(state.e_sto, pto_power(state.omega, params), params)
}

#[inline]
fn feasible_interval_for(e_sto: f64, p_prod: f64, params: &StorageParams) -> (f64, f64) {
    (p_prod - (params.e_rated - e_sto) / params.dt, p_prod + e_sto / params.dt)
}

/// Grid over `(E_sto, Ω, A)`: `[0, e_rated]` for the energy and
/// `±n_std` stationary standard deviations for speed and acceleration.
pub fn state_grid(
    model: &ArModel,
    params: &StorageParams,
    sizes: [usize; 3],
    n_std: f64,
) -> Result<RectGrid, StorageError> {
    let mo = ar::stationary_moments(model)?;
    let (so, sa) = (n_std * mo.std_omega, n_std * mo.std_accel);
    Ok(RectGrid::new(&[(0.0, params.e_rated, sizes[0]), (-so, so, sizes[1]), (-sa, sa, sizes[2])])?)
}

/// The heuristic linear policy sampled on `grid`.
pub fn heuristic_grid_policy(grid: &RectGrid, params: &StorageParams) -> Result<Policy, StorageError> {
    Ok(Policy::from_fn(grid, 1, |x, u| {
        u[0] = heuristic_policy(&SystemState { e_sto: x[0], omega: x[1], accel: x[2] }, params)
    })?)
}

/// The storage control problem over the state `(E_sto, Ω, A)`.
#[derive(Debug, Clone)]
pub struct StorageProblem {
    params: StorageParams,
    speed: StateSpaceAr2,
    noise: DiscreteNoise,
    controls: Vec<f64>,
}

impl StorageProblem {
    /// Builds the problem with `n_controls` candidate grid powers uniformly
    /// spaced on `[0, p_max]` and a `n_noise`-node discretization of the
    /// speed innovation.
    pub fn new(
        model: &ArModel,
        params: StorageParams,
        n_noise: usize,
        n_controls: usize,
    ) -> Result<Self, StorageError> {
        Self::with_control_range(model, params, n_noise, n_controls, (0.0, params.p_max))
    }

    /// Same as [`StorageProblem::new`] with candidates spread on `range`.
    pub fn with_control_range(
        model: &ArModel,
        params: StorageParams,
        n_noise: usize,
        n_controls: usize,
        range: (f64, f64),
    ) -> Result<Self, StorageError> {
        params.validate()?;
        if !model.is_stationary() {
            return Err(ArError::NotStationary.into());
        }
        if n_controls == 0 {
            return Err(StorageError::NoControls);
        }
        let speed = ar::to_state_space(model)?;
        let noise = DiscreteNoise::gaussian(model.sigma_eps(), n_noise)?;
        let controls = if n_controls == 1 {
            alloc::vec![range.0]
        } else {
            (0..n_controls).map(|i| range.0 + i as f64 * (range.1 - range.0) / (n_controls - 1) as f64).collect()
        };
        Ok(Self { params, speed, noise, controls })
    }

    pub fn params(&self) -> &StorageParams {
        &self.params
    }

    pub fn base_controls(&self) -> &[f64] {
        &self.controls
    }
}

impl ControlProblem for StorageProblem {
    fn state_dim(&self) -> usize {
        3
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn noise(&self) -> &DiscreteNoise {
        &self.noise
    }

    fn control_candidates(&self, state: &[f64], out: &mut Vec<f64>) {
        let p_prod = pto_power(state[1], &self.params);
        let (lo, hi) = feasible_interval_for(state[0], p_prod, &self.params);
        for &u in &self.controls {
            let v = u.clamp(lo, hi);
            // projection is monotone, so duplicates are adjacent
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
    }

    fn dynamics(&self, state: &[f64], control: &[f64], noise: f64, next: &mut [f64]) {
        let p_prod = pto_power(state[1], &self.params);
        let e = state[0] + (p_prod - control[0]) * self.params.dt;
        next[0] = e.clamp(0.0, self.params.e_rated);
        let [w, a] = self.speed.step([state[1], state[2]], noise);
        next[1] = w;
        next[2] = a;
    }

    fn stage_cost(&self, _state: &[f64], control: &[f64], _noise: f64) -> f64 {
        control[0] * control[0]
    }
}

/// Per-step record of a storage simulation. `e_sto[k]` is the energy at
/// the start of step `k`; `e_final` is the energy after the last step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub t: Vec<f64>,
    pub omega: Vec<f64>,
    pub accel: Vec<f64>,
    pub p_prod: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub p_sto: Vec<f64>,
    pub e_sto: Vec<f64>,
    pub e_final: f64,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingMetrics {
    pub std_p_grid: f64,
    pub mean_p_grid: f64,
    /// Time average of `P_grid²`, W².
    pub quadratic_cost: f64,
    pub e_sto_min: f64,
    pub e_sto_max: f64,
}

/// Powers in a simulated trajectory are kept on a grid of `2⁻⁸ W` so that
/// `P_prod − P_sto`, `P_grid + P_sto` and the energy-bound corrections are all
/// exact in floating point.
const POWER_QUANTUM: f64 = 1.0 / 256.0;

#[inline]
fn quantize(p: f64) -> f64 {
    libm::round(p / POWER_QUANTUM) * POWER_QUANTUM
}

/// Simulates the storage driven by an exogenous speed series.
///
/// Acceleration is the backward difference of the speed (zero at the first
/// step). Production is `pto_power(Ω)` unless `p_prod` is supplied. The
/// grid power requested by `policy` is projected onto the feasible interval
/// and, if rounding would still push the energy out of bounds, nudged by
/// the power quantum until `0 ≤ E ≤ e_rated` holds exactly.
pub fn simulate_trajectory(
    mut policy: impl FnMut(&SystemState) -> f64,
    speed: &[f64],
    p_prod: Option<&[f64]>,
    params: &StorageParams,
    e0: f64,
) -> Result<TrajectoryRecord, StorageError> {
    params.validate()?;
    if speed.len() < 2 {
        return Err(StorageError::TooShort(speed.len()));
    }
    if let Some(p) = p_prod {
        if p.len() != speed.len() {
            return Err(StorageError::LengthMismatch { speed: speed.len(), prod: p.len() });
        }
    }
    if !(0.0..=params.e_rated).contains(&e0) {
        return Err(StorageError::BadInitialEnergy(e0));
    }
    let n = speed.len();
    let mut rec = TrajectoryRecord {
        t: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        accel: Vec::with_capacity(n),
        p_prod: Vec::with_capacity(n),
        p_grid: Vec::with_capacity(n),
        p_sto: Vec::with_capacity(n),
        e_sto: Vec::with_capacity(n),
        e_final: e0,
    };
    let mut e = e0;
    for k in 0..n {
        let omega = speed[k];
        let accel = if k == 0 { 0.0 } else { (omega - speed[k - 1]) / params.dt };
        let raw_prod = match p_prod {
            Some(p) => p[k],
            None => pto_power(omega, params),
        };
        if !omega.is_finite() || !accel.is_finite() || !raw_prod.is_finite() {
            return Err(StorageError::NonFinite(k));
        }
        let prod = quantize(raw_prod);
        let state = SystemState { e_sto: e, omega, accel };
        let requested = policy(&state);
        if !requested.is_finite() {
            return Err(StorageError::NonFinite(k));
        }
        let (lo, hi) = feasible_interval_for(e, prod, params);
        let mut sto = prod - quantize(requested.clamp(lo, hi));
        let mut next = e + sto * params.dt;
        while next > params.e_rated {
            sto -= POWER_QUANTUM;
            next = e + sto * params.dt;
        }
        while next < 0.0 {
            sto += POWER_QUANTUM;
            next = e + sto * params.dt;
        }
        rec.t.push(k as f64 * params.dt);
        rec.omega.push(omega);
        rec.accel.push(accel);
        rec.p_prod.push(prod);
        rec.p_grid.push(prod - sto);
        rec.p_sto.push(sto);
        rec.e_sto.push(e);
        e = next;
    }
    rec.e_final = e;
    Ok(rec)
}

/// Population statistics of the injected power and the energy range.
pub fn metrics(traj: &TrajectoryRecord) -> Result<SmoothingMetrics, StorageError> {
    if traj.p_grid.is_empty() {
        return Err(StorageError::EmptyTrajectory);
    }
    let n = traj.p_grid.len() as f64;
    let mean = traj.p_grid.iter().sum::<f64>() / n;
    let var = traj.p_grid.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
    let quadratic_cost = traj.p_grid.iter().map(|p| p * p).sum::<f64>() / n;
    let (e_sto_min, e_sto_max) = traj
        .e_sto
        .iter()
        .chain(core::iter::once(&traj.e_final))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    Ok(SmoothingMetrics { std_p_grid: libm::sqrt(var), mean_p_grid: mean, quadratic_cost, e_sto_min, e_sto_max })
}
