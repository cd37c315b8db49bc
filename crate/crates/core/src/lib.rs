//! Numerical core for computing average-cost optimal storage policies.
//!
//! * [`grid`]: rectangular grids and multilinear interpolation.
//! * [`sdp`]: average-cost stochastic dynamic programming (relative value
//!   iteration, policy evaluation and policy iteration).
//! * [`ar`]: AR(p) speed models: autocorrelation, fitting, simulation and the
//!   AR(2) speed/acceleration state-space form.
//! * [`storage`]: the wave-power smoothing application built on the above.
//!
//! The crate is `no_std` (it needs `alloc`). The `parallel` feature spreads
//! grid sweeps over a rayon thread pool without changing any result bit.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod ar;
pub mod grid;
mod linalg;
mod optim;
pub mod sdp;
pub mod storage;

pub use grid::{Axis, GridError, GridFunction, RectGrid};
pub use sdp::{ControlProblem, DiscreteNoise, Policy, SdpError, SolveReport, Solver, SolverConfig, ValueFunction};
