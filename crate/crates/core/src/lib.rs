//! Simulator and verification toolkit for the regularized thin-film equation
//!
//! `h_t + (f(h)(a0 h_xxx + a1 h_x + a2 w'(x)))_x + a3 h_x = 0`
//!
//! on a periodic domain, together with its energy and entropy functionals,
//! the a-priori constant chain of the existence analysis, and steady states
//! of the rotating-cylinder coating problem.

// `!(x > 0.0)` is how NaN is rejected alongside bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod mobility;
pub mod model;
pub mod solver;
pub mod spectral;
pub mod steady;

pub use diagnostics::{
    apriori_constants, continuation_times, energy_bound_check, energy_e0, entropy_integral, even_asymmetry,
    interpolation_bound_check, mass, steadiness_residual, AprioriConstants, BoundVerdict, DiagnosticsRow,
    DiagnosticsSeries,
};
pub use error::{Error, Result};
pub use mobility::{
    entropy_g, entropy_g_alpha, entropy_g_general, entropy_g_prime, mobility, mobility_derivative, EntropyRef,
    MobilitySpec,
};
pub use model::{
    build_grid, lift_initial_data, make_forcing_sine, sample_initial_data, FilmState, Forcing, InitialData, Params,
    PeriodicGrid,
};
pub use solver::{evolve, step, Advection, FaceRule, RunEvent, SchemeOptions, StepRejection, StepSuccess, Trajectory};
pub use steady::{
    beta_admissible, continue_branch, moffatt_profile, nonexistence_bound, pukhnachov_steady, solvability_residuals,
    MoffattOutcome, SolvabilityResiduals, SteadyProfile,
};
