//! Rectangular state grids and multilinear interpolation of grid-stored
//! scalar functions.
//!
//! Nodes are uniformly spaced along every axis and flattened in row-major
//! order (last axis fastest). Queries outside the grid hull are clamped
//! coordinate-wise onto the hull before interpolating, so a next state that
//! leaves the grid sees the boundary value instead of an extrapolation.

use alloc::vec::Vec;

use thiserror::Error;

/// Largest supported number of axes. Interpolation touches `2^dim` corners.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least one axis")]
    NoAxes,
    #[error("grid has {0} axes, at most {MAX_DIM} are supported")]
    TooManyAxes(usize),
    #[error("axis {axis}: bounds must be finite")]
    NonFiniteBounds { axis: usize },
    #[error("axis {axis}: node count must be at least 1")]
    EmptyAxis { axis: usize },
    #[error("axis {axis}: lo must be below hi (lo = hi only allowed with a single node)")]
    BadBounds { axis: usize },
    #[error("expected a {expected}-dimensional point, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node index {index} out of range for a grid of {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value at node {index} is not finite")]
    NonFiniteValue { index: usize },
}

/// One uniformly discretized axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, GridError> {
        Self::checked(0, lo, hi, n)
    }

    fn checked(axis: usize, lo: f64, hi: f64, n: usize) -> Result<Self, GridError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GridError::NonFiniteBounds { axis });
        }
        if n == 0 {
            return Err(GridError::EmptyAxis { axis });
        }
        let ok = if n == 1 { lo <= hi } else { lo < hi };
        if !ok {
            return Err(GridError::BadBounds { axis });
        }
        Ok(Self { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i`: `lo + i·(hi−lo)/(n−1)`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else {
            self.lo + i as f64 * (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Cell index and fractional position of `x`, clamped to the axis.
    ///
    /// Exact node coordinates map to a zero (or unit) fraction so that
    /// interpolation reproduces stored values bit for bit.
    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        if self.n == 1 {
            return (0, 0.0);
        }
        let x = x.clamp(self.lo, self.hi);
        let last = self.n - 1;
        let t = (x - self.lo) / (self.hi - self.lo) * last as f64;
        let r = libm::round(t);
        if r >= 0.0 && r <= last as f64 && self.node(r as usize) == x {
            let r = r as usize;
            return if r == last { (last - 1, 1.0) } else { (r, 0.0) };
        }
        let i = (libm::floor(t).max(0.0) as usize).min(last - 1);
        let frac = (t - i as f64).clamp(0.0, 1.0);
        (i, frac)
    }
}

/// Axis-aligned rectangular grid of arbitrary dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct RectGrid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

impl RectGrid {
    /// Builds a grid from `(lo, hi, n)` triples, one per axis.
    pub fn new(specs: &[(f64, f64, usize)]) -> Result<Self, GridError> {
        let axes = specs
            .iter()
            .enumerate()
            .map(|(k, &(lo, hi, n))| Axis::checked(k, lo, hi, n))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_axes(axes)
    }

    pub fn from_axes(axes: Vec<Axis>) -> Result<Self, GridError> {
        if axes.is_empty() {
            return Err(GridError::NoAxes);
        }
        if axes.len() > MAX_DIM {
            return Err(GridError::TooManyAxes(axes.len()));
        }
        let mut strides = alloc::vec![1usize; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].n;
        }
        let len = strides[0] * axes[0].n;
        Ok(Self { axes, strides, len })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Coordinates of the node at `flat_index` (row-major, last axis fastest).
    pub fn node_coordinates(&self, flat_index: usize) -> Result<Vec<f64>, GridError> {
        if flat_index >= self.len {
            return Err(GridError::IndexOutOfRange { index: flat_index, len: self.len });
        }
        let mut out = alloc::vec![0.0; self.dim()];
        self.write_node(flat_index, &mut out);
        Ok(out)
    }

    /// Writes node coordinates into `out` without bounds checks beyond debug
    /// assertions. `out.len()` must equal `dim()`.
    #[inline]
    pub fn write_node(&self, flat_index: usize, out: &mut [f64]) {
        debug_assert!(flat_index < self.len);
        debug_assert_eq!(out.len(), self.dim());
        let mut rem = flat_index;
        for (k, axis) in self.axes.iter().enumerate() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            out[k] = axis.node(i);
        }
    }

    /// Multi-index of a flat node index.
    pub fn unflatten(&self, flat_index: usize) -> Vec<usize> {
        let mut rem = flat_index;
        self.strides
            .iter()
            .map(|&s| {
                let i = rem / s;
                rem %= s;
                i
            })
            .collect()
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Calls `visit(flat_index, weight)` for every corner of the cell that
    /// encloses the clamped `point`, skipping zero weights. Weights are the
    /// multilinear (tensor-product) weights and sum to one.
    #[inline]
    pub fn for_each_corner(&self, point: &[f64], mut visit: impl FnMut(usize, f64)) {
        debug_assert_eq!(point.len(), self.dim());
        let d = self.dim();
        let mut base = 0usize;
        let mut frac = [0.0f64; MAX_DIM];
        let mut step = [0usize; MAX_DIM];
        for k in 0..d {
            let (i, f) = self.axes[k].locate(point[k]);
            base += i * self.strides[k];
            frac[k] = f;
            step[k] = if self.axes[k].n == 1 { 0 } else { self.strides[k] };
        }
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = base;
            for k in 0..d {
                if corner >> (d - 1 - k) & 1 == 1 {
                    w *= frac[k];
                    idx += step[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                visit(idx, w);
            }
        }
    }
}

/// A scalar function sampled on every node of a [`RectGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: RectGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: RectGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFiniteValue { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: RectGrid, value: f64) -> Self {
        let values = alloc::vec![value; grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: RectGrid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self, GridError> {
        let mut x = alloc::vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.write_node(i, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &RectGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn interpolate(&self, point: &[f64]) -> Result<f64, GridError> {
        if point.len() != self.grid.dim() {
            return Err(GridError::DimensionMismatch { expected: self.grid.dim(), got: point.len() });
        }
        Ok(self.interpolate_unchecked(point))
    }

    /// Interpolates without checking the point's dimension.
    #[inline]
    pub fn interpolate_unchecked(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.grid.for_each_corner(point, |i, w| acc += w * self.values[i]);
        acc
    }

    /// Interpolates a batch of points stored back to back (`dim` reals each).
    pub fn interpolate_batch(&self, points: &[f64]) -> Result<Vec<f64>, GridError> {
        let d = self.grid.dim();
        if points.len() % d != 0 {
            return Err(GridError::DimensionMismatch { expected: d, got: points.len() % d });
        }
        Ok(points.chunks_exact(d).map(|p| self.interpolate_unchecked(p)).collect())
    }
}
