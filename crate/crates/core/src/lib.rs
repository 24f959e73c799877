//! Minimization of Orlicz energies `∫ G(|∇u|)` over a triangulated half-disc
//! under the thin-obstacle (Signorini) constraint `u ≥ 0` on the flat part of
//! the boundary, together with the diagnostic machinery around it:
//!
//! - [`orlicz`]: N-function catalog, Lieberman constants, modular and
//!   Luxemburg norm computation.
//! - [`mesh`]: structured half-disc triangulations with tagged boundary
//!   parts, reflections to the full disc, ball patches.
//! - [`energy`]: discrete energy, first variation (g-Laplacian residual),
//!   the analytic Signorini benchmark.
//! - [`solver`]: projected-gradient solvers for the thin-obstacle, Dirichlet
//!   and classical-obstacle problems, KKT verification.
//! - [`extension`]: even/odd reflection workflows and the
//!   thin-obstacle/classical-obstacle equivalence check.
//! - [`regularity`]: Caccioppoli and level-set diagnostics, iteration-lemma
//!   verifiers, Hölder exponent and gradient-distance fits.
//! - [`nodal`]: contact set, free boundary, nodal sets, stratification.
//! - [`config`] / [`runner`]: INI-style experiment configs and the CLI
//!   driver behind the `thin-obstacle` binary.
//!
//! All core math is generic over the scalar type through [`scalar::Scalar`];
//! concrete `f64` aliases live at the crate root.

pub mod config;
pub mod energy;
pub mod extension;
pub mod io;
pub mod mesh;
pub mod nodal;
pub mod orlicz;
pub mod regularity;
pub mod runner;
pub mod scalar;
pub mod solver;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("unknown catalog kind `{0}`")]
    UnknownKind(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("mesh resolution error: {0}")]
    Resolution(String),
    #[error("parity error: {0}")]
    Parity(String),
    #[error("constraint error: {0}")]
    Constraint(String),
    #[error("unsupported nodal order {0}: fields are piecewise linear")]
    UnsupportedOrder(usize),
    #[error("config error in key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("malformed input: {0}")]
    Input(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

// Concrete f64 aliases for the generic core types.
pub type NFunction64 = orlicz::NFunction<f64>;
pub type Mesh64 = mesh::Mesh<f64>;
pub type ScalarField64 = energy::ScalarField<f64>;
pub type GradientField64 = energy::GradientField<f64>;
pub type Residual64 = energy::Residual<f64>;
pub type BoundaryData64 = solver::BoundaryData<f64>;
pub type SolveOptions64 = solver::SolveOptions<f64>;
pub type SolveReport64 = solver::SolveReport<f64>;
pub type RegularityReport64 = regularity::RegularityReport<f64>;
