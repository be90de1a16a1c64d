//! Numerical laboratory for canonical typicality.
//!
//! The reduced state `ρ_S = tr_B |φ⟩⟨φ|` of a uniformly random pure state
//! `|φ⟩` drawn from a subspace `H_R ⊂ H_S ⊗ H_B` is, with overwhelming
//! probability, close in trace distance to the canonical state
//! `Ω_S = tr_B(P_R / d_R)`. This crate samples such states, measures the
//! distances, and compares empirical means and tails with the analytic bounds.
//! It also covers the sphere geometry behind the concentration estimates.
//!
//! Modules:
//! - [`linalg`]: dense complex matrices, Jacobi eigensolver, partial traces, norms, entropy.
//! - [`states`]: uniform pure states, constrained sampling, fast reductions, coefficient moments.
//! - [`ensembles`]: spectral windows, equiprobable and canonical states, Gibbs states, bath entropy.
//! - [`typicality`]: the Monte Carlo engine for distances to the canonical state.
//! - [`geometry`]: ball volumes, cap and belt measures, median-centred concentration.

pub mod ensembles;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod parallel;
pub mod rng;
pub mod states;
pub mod stats;
pub mod typicality;

pub use ensembles::{SpectralWindow, Spectrum, Subspace};
pub use error::{Error, Result};
pub use geometry::SpherePoint;
pub use linalg::{BipartiteDims, ComplexMatrix, DensityMatrix, HermitianOperator, Subsystem, C64};
pub use parallel::Sampling;
pub use rng::RngStream;
pub use states::{OrthonormalBasis, PureState};
pub use stats::Proportion;
