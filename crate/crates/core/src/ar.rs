//! Autoregressive models of the pendulum speed.
//!
//! An AR(p) model `x_k = φ₁x_{k−1} + … + φₚx_{k−p} + ε_k` with Gaussian
//! innovations of standard deviation `σ_ε`, sampled every `dt` seconds.
//! Two estimators are provided: conditional least squares (which coincides
//! with conditional maximum likelihood for Gaussian innovations) and
//! multi-lag autocorrelation matching, which fits the model acf to the data
//! acf over a chosen range of lags.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg;
use crate::optim::NelderMead;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArError {
    #[error("model order must be at least 1")]
    ZeroOrder,
    #[error("invalid model parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("model is not stationary")]
    NotStationary,
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("series of length {len} is too short for {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("regression is singular")]
    Singular,
    #[error("only order-2 models have a speed/acceleration state-space form (got order {0})")]
    NotOrderTwo(usize),
    #[error("inconsistent inputs: innovation variance would be negative ({0:e})")]
    NegativeVariance(f64),
    #[error("acf fit did not converge within {evals} criterion evaluations")]
    FitNotConverged { evals: usize },
}

/// AR(p) model with its sampling period.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    phi: Vec<f64>,
    sigma_eps: f64,
    dt: f64,
}

impl ArModel {
    pub fn new(phi: Vec<f64>, sigma_eps: f64, dt: f64) -> Result<Self, ArError> {
        if phi.is_empty() {
            return Err(ArError::ZeroOrder);
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(ArError::InvalidParameter("coefficients must be finite"));
        }
        if !(sigma_eps >= 0.0) || !sigma_eps.is_finite() {
            return Err(ArError::InvalidParameter("innovation std must be finite and nonnegative"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(ArError::InvalidParameter("timestep must be positive"));
        }
        Ok(Self { phi, sigma_eps, dt })
    }

    /// AR(2) speed model obtained by acf matching over 15 s of lags on the
    /// recorded float speed of a wave energy converter (φ₁ = 1.9799,
    /// φ₂ = −0.9879, σ_ε = 0.00347 rad/s, Δt = 0.1 s).
    pub fn searev_reference() -> Self {
        Self { phi: alloc::vec![1.9799, -0.9879], sigma_eps: 0.00347, dt: 0.1 }
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn sigma_eps(&self) -> f64 {
        self.sigma_eps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// True iff every root of `1 − φ₁z − … − φₚzᵖ` lies strictly outside
    /// the unit circle.
    pub fn is_stationary(&self) -> bool {
        is_stationary(&self.phi)
    }

    /// Roots of `zᵖ − φ₁zᵖ⁻¹ − … − φₚ` as `(re, im)` pairs: the reciprocals of
    /// the AR characteristic roots, i.e. the eigenvalues of the companion
    /// matrix.
    pub fn inverse_roots(&self) -> Vec<(f64, f64)> {
        inverse_roots(&self.phi)
    }

    /// e-folding time of the slowest mode, in steps.
    pub fn slowest_time_constant(&self) -> f64 {
        let r = self.inverse_roots().iter().map(|&(re, im)| libm::hypot(re, im)).fold(0.0, f64::max);
        if r == 0.0 {
            0.0
        } else {
            -1.0 / libm::log(r)
        }
    }

    /// Burn-in used by [`simulate`] when none is given: ten times the
    /// slowest time constant.
    pub fn default_burn_in(&self) -> usize {
        libm::ceil(10.0 * self.slowest_time_constant()) as usize
    }

    /// Stationary variance `γ₀ = σ_ε² / (1 − Σ φ_j ρ(j))`.
    pub fn stationary_variance(&self) -> Result<f64, ArError> {
        let acf = theoretical_acf(self, self.order())?;
        let s: f64 = self.phi.iter().zip(&acf.values[1..]).map(|(p, r)| p * r).sum();
        Ok(self.sigma_eps * self.sigma_eps / (1.0 - s))
    }
}

/// Autocorrelations `ρ(0..=K)` at a fixed lag spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfSeries {
    pub values: Vec<f64>,
    pub dt: f64,
}

impl AcfSeries {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }
}

/// Speed/acceleration form of an AR(2) model, with `A_k = (Ω_k − Ω_{k−1})/Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpaceAr2 {
    pub transition: [[f64; 2]; 2],
    pub noise_gain: [f64; 2],
    pub dt: f64,
}

impl StateSpaceAr2 {
    /// Advances `(Ω, A)` by one step with innovation `eps`.
    #[inline]
    pub fn step(&self, state: [f64; 2], eps: f64) -> [f64; 2] {
        let t = &self.transition;
        [
            t[0][0] * state[0] + t[0][1] * state[1] + self.noise_gain[0] * eps,
            t[1][0] * state[0] + t[1][1] * state[1] + self.noise_gain[1] * eps,
        ]
    }

    /// Eigenvalues of the transition matrix as `(re, im)` pairs.
    pub fn eigenvalues(&self) -> [(f64, f64); 2] {
        let t = &self.transition;
        let tr = t[0][0] + t[1][1];
        let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let s = libm::sqrt(disc);
            [(tr / 2.0 + s, 0.0), (tr / 2.0 - s, 0.0)]
        } else {
            let s = libm::sqrt(-disc);
            [(tr / 2.0, s), (tr / 2.0, -s)]
        }
    }
}

/// Stationary standard deviations of speed and backward-difference
/// acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryMoments {
    pub std_omega: f64,
    pub std_accel: f64,
}

/// Outcome of multi-lag acf matching.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilagFit {
    pub phi: Vec<f64>,
    /// Sum of squared acf differences over lags `1..=lag_count`.
    pub criterion: f64,
    pub lag_count: usize,
    pub evaluations: usize,
    /// Trial points rejected because they left the stationarity region.
    pub rejected: usize,
}

pub fn is_stationary(phi: &[f64]) -> bool {
    // Step-down recursion: stationary iff every partial autocorrelation
    // recovered from the coefficients has modulus below one.
    let mut a = phi.to_vec();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let p = a.len();
        let d = 1.0 - k * k;
        let lower: Vec<f64> = (0..p - 1).map(|j| (a[j] + k * a[p - 2 - j]) / d).collect();
        a = lower;
    }
    true
}

fn inverse_roots(phi: &[f64]) -> Vec<(f64, f64)> {
    // Durand–Kerner on the monic polynomial z^p − φ₁z^{p−1} − … − φₚ.
    let p = phi.len();
    let coef: Vec<f64> = phi.iter().map(|v| -v).collect();
    let eval = |z: (f64, f64)| {
        let mut acc = (1.0, 0.0);
        for &c in &coef {
            acc = cadd(cmul(acc, z), (c, 0.0));
        }
        acc
    };
    let bound = 1.0 + coef.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots: Vec<(f64, f64)> = (0..p)
        .map(|k| {
            let ang = 0.4 + core::f64::consts::TAU * k as f64 / p as f64;
            (0.5 * bound * libm::cos(ang), 0.5 * bound * libm::sin(ang))
        })
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..p {
            let mut den = (1.0, 0.0);
            for j in 0..p {
                if i != j {
                    den = cmul(den, csub(roots[i], roots[j]));
                }
            }
            let delta = cdiv(eval(roots[i]), den);
            if !(delta.0.is_finite() && delta.1.is_finite()) {
                continue;
            }
            roots[i] = csub(roots[i], delta);
            moved = moved.max(libm::hypot(delta.0, delta.1));
        }
        if moved < 1e-15 * bound {
            break;
        }
    }
    roots
}

fn cadd(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

fn csub(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 - b.0, a.1 - b.1)
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

fn check_finite(series: &[f64]) -> Result<(), ArError> {
    if series.iter().any(|v| !v.is_finite()) {
        Err(ArError::NonFinite)
    } else {
        Ok(())
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Biased sample autocorrelation (full-length denominator), lags `0..=max_lag`.
pub fn sample_acf(series: &[f64], max_lag: usize, dt: f64) -> Result<AcfSeries, ArError> {
    if max_lag == 0 || series.len() <= max_lag {
        return Err(ArError::TooShort { len: series.len(), needed: max_lag + 1 });
    }
    check_finite(series)?;
    if series.iter().all(|&v| v == series[0]) {
        return Err(ArError::ZeroVariance);
    }
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|v| v - m).collect();
    let denom: f64 = centered.iter().map(|v| v * v).sum();
    let scale = series.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if denom <= series.len() as f64 * (1e-14 * scale) * (1e-14 * scale) {
        return Err(ArError::ZeroVariance);
    }
    let values = (0..=max_lag)
        .map(|k| {
            let num: f64 = centered[..centered.len() - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum();
            num / denom
        })
        .collect();
    Ok(AcfSeries { values, dt })
}

/// Model autocorrelation: `ρ(1..=p)` from the Yule–Walker system, then the
/// recursion `ρ(k) = Σ φ_j ρ(k−j)`.
pub fn theoretical_acf(model: &ArModel, max_lag: usize) -> Result<AcfSeries, ArError> {
    let values = acf_of(&model.phi, max_lag).ok_or(ArError::NotStationary)?;
    Ok(AcfSeries { values, dt: model.dt })
}

fn acf_of(phi: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    if !is_stationary(phi) {
        return None;
    }
    let p = phi.len();
    // unknowns ρ(1..=p): ρ(k) − Σ_j φ_j ρ(|k−j|) = 0, with ρ(0) = 1
    let mut a = alloc::vec![0.0; p * p];
    let mut b = alloc::vec![0.0; p];
    for k in 1..=p {
        a[(k - 1) * p + (k - 1)] += 1.0;
        for (j, &ph) in phi.iter().enumerate() {
            let lag = k.abs_diff(j + 1);
            if lag == 0 {
                b[k - 1] += ph;
            } else {
                a[(k - 1) * p + (lag - 1)] -= ph;
            }
        }
    }
    let head = linalg::solve(a, b)?;
    let mut rho = Vec::with_capacity(max_lag.max(p) + 1);
    rho.push(1.0);
    rho.extend_from_slice(&head);
    for k in p + 1..=max_lag {
        let v = phi.iter().enumerate().map(|(j, ph)| ph * rho[k - j - 1]).sum();
        rho.push(v);
    }
    rho.truncate(max_lag + 1);
    Some(rho)
}

/// Conditional least squares: regresses `x_t` on its `p` lags over
/// `t = p..N−1`, each column centered on its own window mean. `σ̂_ε` is the
/// root mean square residual.
pub fn fit_cls(series: &[f64], p: usize, dt: f64) -> Result<ArModel, ArError> {
    if p == 0 {
        return Err(ArError::ZeroOrder);
    }
    if series.len() < 2 * p + 2 {
        return Err(ArError::TooShort { len: series.len(), needed: 2 * p + 2 });
    }
    check_finite(series)?;
    let m = series.len() - p;
    let target = &series[p..];
    let ty = mean(target);
    let lags: Vec<&[f64]> = (1..=p).map(|j| &series[p - j..series.len() - j]).collect();
    let means: Vec<f64> = lags.iter().map(|l| mean(l)).collect();
    let mut xtx = alloc::vec![0.0; p * p];
    let mut xty = alloc::vec![0.0; p];
    for t in 0..m {
        let y = target[t] - ty;
        for i in 0..p {
            let xi = lags[i][t] - means[i];
            xty[i] += xi * y;
            for j in 0..=i {
                xtx[i * p + j] += xi * (lags[j][t] - means[j]);
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            xtx[i * p + j] = xtx[j * p + i];
        }
    }
    if xtx.iter().all(|&v| v == 0.0) {
        return Err(ArError::Singular);
    }
    let phi = linalg::solve(xtx, xty).ok_or(ArError::Singular)?;
    let ss: f64 = (0..m)
        .map(|t| {
            let fit: f64 = (0..p).map(|j| phi[j] * (lags[j][t] - means[j])).sum();
            let r = target[t] - ty - fit;
            r * r
        })
        .sum();
    ArModel::new(phi, libm::sqrt(ss / m as f64), dt)
}

/// Multi-lag acf matching: minimizes `Σ_{k=1..lag_count} (ρ_model(k; φ) − ρ̂(k))²`
/// over stationary `φ` with a simplex search started from the Yule–Walker
/// solution of the first `p` sample lags. Non-stationary trial points are
/// rejected.
pub fn fit_multilag(acf: &AcfSeries, p: usize, lag_count: usize) -> Result<MultilagFit, ArError> {
    if p == 0 {
        return Err(ArError::ZeroOrder);
    }
    if lag_count == 0 || lag_count > acf.max_lag() || p > acf.max_lag() {
        return Err(ArError::TooShort { len: acf.values.len(), needed: lag_count.max(p) + 1 });
    }
    let target = &acf.values[1..=lag_count];
    let mut rejected = 0usize;
    let mut criterion = |phi: &[f64]| match acf_of(phi, lag_count) {
        Some(rho) => rho[1..].iter().zip(target).map(|(m, d)| (m - d) * (m - d)).sum(),
        None => {
            rejected += 1;
            f64::INFINITY
        }
    };
    let start = yule_walker(&acf.values[..=p]).filter(|phi| is_stationary(phi)).unwrap_or_else(|| alloc::vec![0.0; p]);
    let step: Vec<f64> = start.iter().map(|v| 0.01 * v.abs().max(0.1)).collect();
    let nm = NelderMead { max_evals: 10_000, ftol: 1e-14, xtol: 1e-12 };
    let best = nm.minimize(&mut criterion, &start, &step);
    if !best.converged {
        return Err(ArError::FitNotConverged { evals: best.evals });
    }
    if !best.fx.is_finite() {
        return Err(ArError::NotStationary);
    }
    Ok(MultilagFit { phi: best.x, criterion: best.fx, lag_count, evaluations: best.evals, rejected })
}

/// Solves the Yule–Walker equations `R·φ = r` for `rho = ρ(0..=p)`.
pub fn yule_walker(rho: &[f64]) -> Option<Vec<f64>> {
    let p = rho.len().checked_sub(1).filter(|&p| p > 0)?;
    let mut r = alloc::vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            r[i * p + j] = rho[i.abs_diff(j)];
        }
    }
    linalg::solve(r, rho[1..].to_vec())
}

/// Innovation std from the Yule–Walker variance relation
/// `σ_ε² = γ₀ (1 − Σ φ_j ρ(j))`.
pub fn innovation_std_from_acf(phi: &[f64], gamma0: f64, acf: &AcfSeries) -> Result<f64, ArError> {
    if !(gamma0 > 0.0) {
        return Err(ArError::InvalidParameter("sample variance must be positive"));
    }
    if acf.max_lag() < phi.len() {
        return Err(ArError::TooShort { len: acf.values.len(), needed: phi.len() + 1 });
    }
    let s: f64 = phi.iter().zip(&acf.values[1..]).map(|(p, r)| p * r).sum();
    let var = gamma0 * (1.0 - s);
    if var < 0.0 {
        return Err(ArError::NegativeVariance(var));
    }
    Ok(libm::sqrt(var))
}

/// Population variance of a series.
pub fn variance(series: &[f64]) -> f64 {
    let m = mean(series);
    series.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / series.len() as f64
}

/// Simulates `n` samples from zero initial lags with seeded Gaussian
/// innovations, discarding `burn_in` leading samples
/// (default [`ArModel::default_burn_in`]).
pub fn simulate(model: &ArModel, n: usize, seed: u64, burn_in: Option<usize>) -> Result<Vec<f64>, ArError> {
    if !model.is_stationary() {
        return Err(ArError::NotStationary);
    }
    let burn = burn_in.unwrap_or_else(|| model.default_burn_in());
    let p = model.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // lags[0] is the most recent value
    let mut lags = alloc::vec![0.0; p];
    let mut out = Vec::with_capacity(n);
    for t in 0..burn + n {
        let eps: f64 = StandardNormal.sample(&mut rng);
        let x = model.phi.iter().zip(&lags).map(|(a, b)| a * b).sum::<f64>() + model.sigma_eps * eps;
        lags.rotate_right(1);
        lags[0] = x;
        if t >= burn {
            out.push(x);
        }
    }
    Ok(out)
}

pub fn to_state_space(model: &ArModel) -> Result<StateSpaceAr2, ArError> {
    let [p1, p2] = model.phi[..] else {
        return Err(ArError::NotOrderTwo(model.order()));
    };
    let dt = model.dt;
    Ok(StateSpaceAr2 {
        transition: [[p1 + p2, -p2 * dt], [(p1 + p2 - 1.0) / dt, -p2]],
        noise_gain: [1.0, 1.0 / dt],
        dt,
    })
}

/// `std_omega = √γ₀`, `std_accel = √(2γ₀(1 − ρ(1))) / Δt`.
pub fn stationary_moments(model: &ArModel) -> Result<StationaryMoments, ArError> {
    let gamma0 = model.stationary_variance()?;
    let rho1 = theoretical_acf(model, 1)?.values[1];
    Ok(StationaryMoments {
        std_omega: libm::sqrt(gamma0),
        std_accel: libm::sqrt(2.0 * gamma0 * (1.0 - rho1)) / model.dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table() -> ArModel {
        ArModel::searev_reference()
    }

    /// Closed-form AR(2) stationary variance.
    fn ar2_gamma0(p1: f64, p2: f64, s: f64) -> f64 {
        s * s * (1.0 - p2) / ((1.0 + p2) * ((1.0 - p2).powi(2) - p1 * p1))
    }

    /// AR(2) stationarity triangle.
    fn in_triangle(p1: f64, p2: f64) -> bool {
        p2 > -1.0 && p1 + p2 < 1.0 && p2 - p1 < 1.0
    }

    #[test]
    fn stationarity_examples() {
        assert!(is_stationary(&[0.0, 0.0, 0.0]));
        assert!(table().is_stationary());
        assert!(!is_stationary(&[1.0, 0.5]));
        assert!(!is_stationary(&[1.0]));
        assert!(is_stationary(&[0.99]));
    }

    #[test]
    fn stationarity_matches_triangle_and_roots() {
        let mut k = 0u64;
        for i in -25..=25 {
            for j in -12..=12 {
                let (p1, p2) = (i as f64 * 0.0837 + 1e-3, j as f64 * 0.0891 + 1e-3);
                k += 1;
                assert_eq!(is_stationary(&[p1, p2]), in_triangle(p1, p2), "({p1}, {p2})");
                let r = inverse_roots(&[p1, p2]).iter().map(|&(a, b)| a.hypot(b)).fold(0.0, f64::max);
                assert_eq!(r < 1.0, in_triangle(p1, p2), "({p1}, {p2}) r = {r}");
            }
        }
        assert!(k > 1000);
    }

    #[test]
    fn acf_ar1_geometric() {
        let m = ArModel::new(vec![0.5], 1.0, 1.0).unwrap();
        let acf = theoretical_acf(&m, 10).unwrap();
        for (k, r) in acf.values.iter().enumerate() {
            assert!((r - 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn acf_table_lag_one() {
        let acf = theoretical_acf(&table(), 3).unwrap();
        let expect = 1.9799 / (1.0 + 0.9879);
        assert!((acf.values[1] - expect).abs() < 1e-14);
        assert!((acf.values[1] - 0.99598).abs() < 5e-6);
    }

    #[test]
    fn acf_complex_roots_oscillate() {
        let acf = theoretical_acf(&table(), 600).unwrap();
        let sign_changes = acf.values.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert!(sign_changes >= 10, "{sign_changes}");
        // decaying envelope
        let early = acf.values[..100].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let late = acf.values[500..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(late < 0.2 * early);
    }

    #[test]
    fn acf_rejects_nonstationary() {
        let m = ArModel::new(vec![1.0, 0.5], 1.0, 1.0).unwrap();
        assert_eq!(theoretical_acf(&m, 5), Err(ArError::NotStationary));
        assert_eq!(simulate(&m, 5, 0, None), Err(ArError::NotStationary));
    }

    #[test]
    fn sample_acf_errors() {
        assert_eq!(sample_acf(&[2.0; 50], 5, 1.0), Err(ArError::ZeroVariance));
        assert!(matches!(sample_acf(&[1.0, 2.0], 2, 1.0), Err(ArError::TooShort { .. })));
    }

    #[test]
    fn sample_acf_alternating() {
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let acf = sample_acf(&xs, 1, 1.0).unwrap();
        // mean is zero for even n, so ρ̂(1) = −(n−1)/n exactly
        assert!((acf.values[1] + (n as f64 - 1.0) / n as f64).abs() < 1e-12);
    }

    #[test]
    fn sample_acf_white_noise() {
        let m = ArModel::new(vec![0.0], 1.0, 1.0).unwrap();
        let xs = simulate(&m, 100_000, 11, Some(0)).unwrap();
        let acf = sample_acf(&xs, 20, 1.0).unwrap();
        assert_eq!(acf.values[0], 1.0);
        for k in 1..=20 {
            assert!(acf.values[k].abs() < 0.02, "lag {k}: {}", acf.values[k]);
        }
    }

    #[test]
    fn cls_recovers_ar2() {
        let truth = ArModel::new(vec![1.2, -0.5], 0.3, 0.1).unwrap();
        let xs = simulate(&truth, 100_000, 3, None).unwrap();
        let fit = fit_cls(&xs, 2, 0.1).unwrap();
        assert!((fit.phi()[0] - 1.2).abs() < 0.02, "{:?}", fit.phi());
        assert!((fit.phi()[1] + 0.5).abs() < 0.02);
        assert!((fit.sigma_eps() / 0.3 - 1.0).abs() < 0.05);
    }

    #[test]
    fn cls_white_noise() {
        let m = ArModel::new(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let xs = simulate(&m, 100_000, 5, Some(0)).unwrap();
        let fit = fit_cls(&xs, 2, 1.0).unwrap();
        assert!(fit.phi().iter().all(|p| p.abs() < 0.02), "{:?}", fit.phi());
    }

    #[test]
    fn cls_noiseless_ar1() {
        let xs: Vec<f64> = (0..60).map(|k| 3.0 * 0.8f64.powi(k)).collect();
        let fit = fit_cls(&xs, 1, 1.0).unwrap();
        assert!((fit.phi()[0] - 0.8).abs() < 1e-12);
        assert!(fit.sigma_eps() < 1e-12);
    }

    #[test]
    fn cls_errors() {
        assert_eq!(fit_cls(&[1.0; 100], 2, 1.0), Err(ArError::Singular));
        assert_eq!(fit_cls(&[1.0, 2.0, 3.0], 0, 1.0), Err(ArError::ZeroOrder));
    }

    #[test]
    fn multilag_exact_acf() {
        let acf = theoretical_acf(&table(), 150).unwrap();
        let fit = fit_multilag(&acf, 2, 150).unwrap();
        assert!((fit.phi[0] - 1.9799).abs() < 1e-6, "{:?}", fit.phi);
        assert!((fit.phi[1] + 0.9879).abs() < 1e-6);
        assert!(fit.criterion < 1e-12);
        assert_eq!(fit.lag_count, 150);
    }

    #[test]
    fn multilag_white_noise_target() {
        let mut values = vec![0.0; 31];
        values[0] = 1.0;
        let fit = fit_multilag(&AcfSeries { values, dt: 1.0 }, 2, 30).unwrap();
        assert!(fit.phi.iter().all(|p| p.abs() < 1e-6), "{:?}", fit.phi);
    }

    #[test]
    fn multilag_from_misfit_start() {
        // target acf of one AR(2), but perturbed so Yule–Walker on the first
        // two lags starts away from the optimum
        let truth = ArModel::new(vec![1.5, -0.7], 1.0, 1.0).unwrap();
        let mut acf = theoretical_acf(&truth, 40).unwrap();
        acf.values[1] += 0.01;
        let fit = fit_multilag(&acf, 2, 40).unwrap();
        assert!((fit.phi[0] - 1.5).abs() < 0.02 && (fit.phi[1] + 0.7).abs() < 0.02, "{:?}", fit.phi);
        let start = yule_walker(&acf.values[..3]).unwrap();
        let crit = |phi: &[f64]| -> f64 {
            let m = acf_of(phi, 40).unwrap();
            (1..=40).map(|k| (m[k] - acf.values[k]).powi(2)).sum()
        };
        assert!(fit.criterion < crit(&start));
    }

    #[test]
    fn innovation_std_examples() {
        let white = AcfSeries { values: vec![1.0, 0.0, 0.0], dt: 1.0 };
        assert_eq!(innovation_std_from_acf(&[0.0, 0.0], 4.0, &white).unwrap(), 2.0);
        let m = ArModel::new(vec![0.6], 1.0, 1.0).unwrap();
        let acf = theoretical_acf(&m, 1).unwrap();
        let s = innovation_std_from_acf(&[0.6], 2.0, &acf).unwrap();
        assert!((s * s - 2.0 * (1.0 - 0.36)).abs() < 1e-14);
        let bad = AcfSeries { values: vec![1.0, 0.9], dt: 1.0 };
        assert!(matches!(innovation_std_from_acf(&[2.0], 1.0, &bad), Err(ArError::NegativeVariance(_))));
    }

    #[test]
    fn innovation_std_round_trip() {
        let truth = ArModel::new(vec![1.2, -0.5], 0.3, 0.1).unwrap();
        let xs = simulate(&truth, 100_000, 8, None).unwrap();
        let acf = sample_acf(&xs, 2, 0.1).unwrap();
        let s = innovation_std_from_acf(&[1.2, -0.5], variance(&xs), &acf).unwrap();
        assert!((s / 0.3 - 1.0).abs() < 0.05, "{s}");
    }

    #[test]
    fn simulate_zero_noise_is_zero() {
        let m = ArModel::new(vec![0.5, 0.2], 0.0, 1.0).unwrap();
        assert!(simulate(&m, 100, 1, None).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn simulate_deterministic() {
        let a = simulate(&table(), 1000, 42, None).unwrap();
        let b = simulate(&table(), 1000, 42, None).unwrap();
        let c = simulate(&table(), 1000, 43, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn table_burn_in() {
        // slowest inverse root has modulus √0.9879
        let tau = -1.0 / 0.9879f64.sqrt().ln();
        assert!((table().slowest_time_constant() - tau).abs() < 1e-6 * tau);
        assert_eq!(table().default_burn_in(), (10.0 * tau).ceil() as usize);
    }

    #[test]
    fn stationary_variance_closed_form() {
        let m = table();
        let g = ar2_gamma0(1.9799, -0.9879, 0.00347);
        assert!((m.stationary_variance().unwrap() / g - 1.0).abs() < 1e-10);
        let ar1 = ArModel::new(vec![0.5], 1.0, 1.0).unwrap();
        assert!((ar1.stationary_variance().unwrap() - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn moments_examples() {
        let w = ArModel::new(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let mo = stationary_moments(&w).unwrap();
        assert!((mo.std_omega - 1.0).abs() < 1e-15);
        assert!((mo.std_accel - 2f64.sqrt()).abs() < 1e-15);
        let ar1 = ArModel::new(vec![0.5], 1.0, 1.0).unwrap();
        let mo = stationary_moments(&ar1).unwrap();
        assert!((mo.std_omega.powi(2) - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn state_space_examples() {
        let rw = ArModel::new(vec![1.0, 0.0], 1.0, 0.37).unwrap();
        let ss = to_state_space(&rw).unwrap();
        assert_eq!(ss.transition, [[1.0, 0.0], [0.0, 0.0]]);
        let ss = to_state_space(&table()).unwrap();
        let want = [[0.9920, 0.09879], [-0.0800, 0.9879]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((ss.transition[i][j] - want[i][j]).abs() < 1e-12, "{:?}", ss.transition);
            }
        }
        assert_eq!(ss.noise_gain, [1.0, 10.0]);
        let ar1 = ArModel::new(vec![0.5], 1.0, 1.0).unwrap();
        assert_eq!(to_state_space(&ar1), Err(ArError::NotOrderTwo(1)));
    }

    #[test]
    fn state_space_eigenvalues_are_inverse_roots() {
        for phi in [[1.9799, -0.9879], [0.5, 0.3], [1.2, -0.5], [-0.4, 0.2]] {
            let m = ArModel::new(phi.to_vec(), 1.0, 0.1).unwrap();
            let mut ev = to_state_space(&m).unwrap().eigenvalues().to_vec();
            let mut roots = m.inverse_roots();
            let key = |a: &(f64, f64), b: &(f64, f64)| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1));
            ev.sort_by(key);
            roots.sort_by(key);
            for (a, b) in ev.iter().zip(&roots) {
                assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9, "{ev:?} vs {roots:?}");
            }
        }
    }

    #[test]
    fn state_space_matches_recursion() {
        let m = table();
        let ss = to_state_space(&m).unwrap();
        let eps: Vec<f64> = (0..500).map(|k| 0.003 * ((k as f64) * 0.7).sin()).collect();
        let (mut w1, mut w2) = (0.1, 0.08);
        let mut s = [w1, (w1 - w2) / m.dt()];
        for &e in &eps {
            let w = 1.9799 * w1 - 0.9879 * w2 + e;
            s = ss.step(s, e);
            assert!((s[0] - w).abs() < 1e-10);
            assert!((s[1] - (w - w1) / m.dt()).abs() < 1e-8);
            w2 = w1;
            w1 = w;
        }
    }
}
