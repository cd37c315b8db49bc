use alloc::vec::Vec;

use super::SdpError;

/// A finite probability law over scalar perturbation values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteNoise {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteNoise {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self, SdpError> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(SdpError::InvalidNoise("nodes and weights must be nonempty and of equal length"));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(SdpError::InvalidNoise("noise nodes must be finite"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(SdpError::InvalidNoise("weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SdpError::InvalidNoise("weights must sum to one"));
        }
        Ok(Self { nodes, weights })
    }

    /// A single certain outcome.
    pub fn certain(value: f64) -> Self {
        Self { nodes: alloc::vec![value], weights: alloc::vec![1.0] }
    }

    /// Equal-probability discretization of `N(0, std²)`.
    ///
    /// The real line is cut into `n_nodes` strata of probability `1/n_nodes`
    /// at the normal quantiles and each node is the conditional mean of its
    /// stratum. Nodes are mirrored so the law is exactly symmetric.
    pub fn gaussian(std: f64, n_nodes: usize) -> Result<Self, SdpError> {
        if n_nodes == 0 {
            return Err(SdpError::InvalidNoise("at least one noise node is required"));
        }
        if !(std >= 0.0) || !std.is_finite() {
            return Err(SdpError::InvalidNoise("standard deviation must be finite and nonnegative"));
        }
        let n = n_nodes;
        let mut nodes = alloc::vec![0.0; n];
        for k in 0..n / 2 {
            // stratum k spans [z_k, z_{k+1}] with z_0 = -inf
            let upper = normal_quantile((k + 1) as f64 / n as f64);
            let lower_pdf = if k == 0 { 0.0 } else { normal_pdf(normal_quantile(k as f64 / n as f64)) };
            let mean = n as f64 * (lower_pdf - normal_pdf(upper));
            nodes[k] = std * mean;
            nodes[n - 1 - k] = -std * mean;
        }
        let weights = alloc::vec![1.0 / n as f64; n];
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Expected value, summed from both ends inward so that a symmetric
    /// law gives exactly zero.
    pub fn mean(&self) -> f64 {
        let n = self.len();
        let term = |k: usize| self.nodes[k] * self.weights[k];
        let mut acc = 0.0;
        for k in 0..n / 2 {
            acc += term(k) + term(n - 1 - k);
        }
        if n % 2 == 1 {
            acc += term(n / 2);
        }
        acc
    }
}

pub(crate) fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF for `p` in (0, 1).
///
/// Rational approximation (Acklam) followed by two Halley corrections,
/// accurate to a few ulps in the central region.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    debug_assert!(p > 0.0 && p < 1.0);
    if p == 0.5 {
        return 0.0;
    }
    let p_low = 0.024_25;
    let mut x = if p < p_low {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e / normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}
