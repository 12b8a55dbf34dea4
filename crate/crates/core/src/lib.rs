//! Harmonic manifolds of hypergeometric type as computable objects.
//!
//! A harmonic manifold of hypergeometric type is determined (up to isometry of its
//! radial data) by the triple `(n, ℓ, Q)`: dimension, scale and volume entropy.
//! From it follow closed forms for the volume density `Θ(r)` of geodesic spheres,
//! their mean curvature `σ(r) = Θ'(r)/Θ(r)`, the Einstein constant, and the
//! spherical functions `Φ_λ(r) = ₂F₁(a, b; n/2; −sinh²(ℓr/2))`.
//!
//! Modules:
//!
//! - [`model`]: closed-form geometry, rescaling, Ricci normalization and the
//!   volume-entropy bound `2√2(n−1)/3 ≤ Q ≤ n−1`.
//! - [`special`]: Gamma, unit-sphere volume, Gauss ₂F₁ on the non-positive axis,
//!   spherical functions.
//! - [`radial_ode`]: direct integration of the radial eigen-equation from a
//!   Frobenius start, plus finite-difference residual checkers.
//! - [`transform`]: adaptive quadrature, spherical Fourier transform, ball
//!   volumes and two volume-entropy estimators.
//! - [`damek_ricci`]: Damek–Ricci spaces, Clifford module admissibility and the
//!   classification of spaces attaining the lower bound.
//! - [`verify`]: the executable check battery with a machine-readable report.

// `!(x > 0.0)` guards are meant to reject NaN; coefficient tables are kept as published
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod damek_ricci;
pub mod error;
pub mod model;
pub mod radial_ode;
pub mod special;
pub mod transform;
pub mod verify;

mod sum;

pub use error::{Error, Result};
pub use model::{
    BoundClassification, BoundTag, EinsteinConstant, GeneralizedDensity, ModelParams, ScaleFactor,
};
pub use special::{EvalReport, HypergeometricParams};
