//! Physics-embedded neural surrogate modeling for semi-explicit index-1 DAE
//! systems, applied to the pseudo-two-dimensional (P2D) lithium-ion cell model.
//!
//! The crate provides:
//!
//! - [`grid`]: Chebyshev spectral collocation primitives (nodes, differentiation,
//!   quadrature, cumulative integration, barycentric interpolation).
//! - [`physics`]: the discretized P2D model — Butler–Volmer kinetics, potential
//!   field reconstruction from integration constants, the dynamic right-hand
//!   side, charge-conservation residuals, and the output map (terminal voltage,
//!   SOC, plating potential).
//! - [`solver`]: a stiffly accurate 4th-order Rosenbrock integrator with
//!   adaptive steps, plus a ground-truth DAE driver that re-solves the
//!   algebraic subsystem by Newton iteration at every stage evaluation.
//! - [`neural`]: a GELU multilayer perceptron and forward-mode (dual number)
//!   differentiation through arbitrary compositions, including the integrator.
//! - [`minn`]: the surrogate model proper — closed-loop simulation with the
//!   network supplying the algebraic variables, the augmented-Lagrangian loss,
//!   and the AdamW training loop with multiplier ascent.
//! - [`baselines`]: supervised comparison models (state-map surrogate,
//!   time-to-state regression, and its physics-regularized variant).
//!
//! All floating-point kernels are generic over [`scalar::Scalar`], so the same
//! code path evaluates in plain `f64` and in dual-number arithmetic when
//! gradients are required.

pub mod baselines;
pub mod config;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod minn;
pub mod neural;
pub mod physics;
pub mod profile;
pub mod scalar;
pub mod scaling;
pub mod solver;
pub mod toy;

pub use error::CoreError;
pub use scalar::{Dual, Scalar};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
