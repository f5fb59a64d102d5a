//! Conformal Ricci flow on the periodic 3-torus, the heat and conjugate heat
//! equations it drives, and the parabolic frequency built from them.
//!
//! The crate is `no_std` and needs only `alloc`. Everything operates on node
//! values of a periodic [`Grid`]; file formats and the command line live in the
//! companion `crflow-lab` crate.
//!
//! Module map:
//!
//! - [`grid`], [`field`], [`sym3`], [`operators`], [`metric`], [`curvature`],
//!   [`calculus`]: discrete Riemannian geometry.
//! - [`elliptic`]: conjugate gradients and the pressure equations.
//! - [`flow`]: time integration of the metric, heat and conjugate heat equations.
//! - [`spectral`]: the first nonzero eigenpair of the drifting Laplacian.
//! - [`frequency`]: `I`, `E`, `Q`, the curvature-saturating weight `k` and the
//!   monotonicity and backward-uniqueness inequalities.
//! - [`audit`]: residuals of the pointwise and integral identities and
//!   refinement slopes.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod audit;
pub mod calculus;
pub mod curvature;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod flow;
pub mod frequency;
pub mod grid;
pub mod metric;
pub mod operators;
pub mod series;
pub mod spectral;
pub mod sym3;

pub use error::{Error, Result};
pub use field::{NodeData, ScalarField, SymTensorField, VectorField};
pub use grid::{FdOrder, Grid, DIM, M};
pub use metric::{MetricField, MetricPreset};
pub use sym3::Sym3;
