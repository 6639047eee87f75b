//! Numerical solvers for linear Volterra equations of convolution type,
//!
//! ```text
//! X(t, x) = X_0(x) + ∫_0^t a(t - τ) ∂²X/∂x²(τ, x) dτ + W(t, x),
//! ```
//!
//! with a Galerkin-in-time / finite-difference-in-space scheme for the
//! deterministic part and resolvent-based sampling of the stochastic
//! convolution for the noise-driven part.

// `!(a > b)` rejects NaN on purpose; float guards read better than literal patterns.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::redundant_guards)]

pub mod basis;
pub mod config;
pub mod error;
pub mod galerkin;
pub mod kernels;
pub mod linalg;
pub mod resolvent;
pub mod run;
pub mod stochastic;
pub mod validate;

pub use basis::{BasisKind, BasisSet, JacobiRule, Quadrature};
pub use config::{parse_config, DeterministicSource, Mode, RunConfig};
pub use error::{Result, VolterraError};
pub use galerkin::{
    compute_ajk, compute_g, DeterministicProblem, GalerkinSystem, ScalarField, SolutionSurface,
    SolverKind, SpaceGrid,
};
pub use kernels::{
    check_complete_positivity, relaxation_closed, relaxation_numeric, KernelSpec,
    PositivityReport, RelaxationTable,
};
pub use resolvent::{analytic_solution, apply_resolvent, phi_heat, Resolvent, ResolventKind};
pub use run::{run, RunOutcome};
pub use stochastic::{
    normal_stream, sample_trajectory, spectral_mc, stoch_conv_generic, stoch_conv_heat,
    stoch_conv_wave, ModeEstimate, NoiseSpec, NormalStream, SamplePath, SpatialProfile,
    SpectralModel, StochasticConvolution,
};
