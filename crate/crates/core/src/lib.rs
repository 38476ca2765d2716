//! Nonparametric maximum likelihood for multivariate scale mixtures of
//! uniform densities.
//!
//! The crate provides:
//!
//! - rectangle calculus on the positive orthant: signed vertices, g-volumes
//!   and the coordinate grid generated by a dataset ([`geom`]);
//! - the mixture model itself: density/CDF evaluation, inversion of a
//!   gridded density back to its mixing measure, membership testing and
//!   seeded sampling ([`mixture`], [`gridded`], [`truth`]);
//! - the likelihood maximizer with its Fenchel optimality certificate and a
//!   univariate least-concave-majorant oracle ([`solver`], [`grenander`]);
//! - exact and Monte Carlo distances between densities ([`metrics`]);
//! - a numerical verifier for the local-minimax perturbation construction
//!   ([`minimax`]).

pub mod error;
pub mod geom;
pub mod gridded;
pub mod grenander;
pub mod io;
pub mod metrics;
pub mod minimax;
pub mod mixture;
pub mod quad;
pub mod rng;
pub mod scan;
pub mod solver;
pub mod truth;

pub use error::{Error, Result};
pub use geom::{g_volume, grid_join, vertex_signs, Grid, Point, Rect, RectClosure, SignedVertex};
pub use gridded::{is_smu, GriddedDensity, Membership};
pub use grenander::grenander_1d;
pub use metrics::{hellinger, hellinger_vs_exp_truth, l1_distance, mc_distance, CellPartition, McEstimate, Metric};
pub use minimax::{
    check_mml1, check_mml2, g_perturb, g_perturb_definitional, h_step, hellinger_limit_sequence,
    lower_bound_constant, membership_scan, membership_threshold, perturbed_density,
    HellingerLimitReport, Mml1Report, Mml2Report, Mml2Verdict, PerturbationSpec,
};
pub use mixture::{weights_from_density, MixingMeasure, SmuDensity};
pub use solver::{
    build_cache, certify, directional_derivative, em_step, fit, FenchelCertificate, FitOptions,
    FitResult, LikelihoodCache,
};
pub use truth::{exp_truth_density, TruthModel};
