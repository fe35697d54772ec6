//! Rearranged dependence measures.
//!
//! Checkerboard and grid copulas, their SI rearrangement, exact evaluation of
//! classical and rearranged dependence measures, rank-based estimation with
//! cross-validated bandwidths, and permutation tests for independence.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below fix the common double-precision case.

pub mod checkerboard;
pub mod data;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod inference;
pub mod measures;
pub mod models;
pub mod rearrangement;
pub mod rng;
pub mod scalar;
pub mod special;

pub use checkerboard::{d_p_distance, CheckerboardMatrix, GridCopula};
pub use error::{Error, Result};
pub use estimation::{
    chatterjee_xi, cv_score, empirical_checkerboard, estimate_r, multivariate_estimate, pseudo_observations,
    select_bandwidth, Bandwidth, BandwidthMode, Estimate, MultiGrid, RankedSample, TiePolicy,
};
pub use inference::{
    bh_fdr, chatterjee_test, knn_fit, permutation_test, permutation_tests, screen, PermutationOptions, ScreenOptions,
    ScreenReport, ScreenRow, TestResult,
};
pub use measures::{
    checkerboard_measure, concordance_q, measure, rearranged_checkerboard_measure, rearranged_measure, MeasureKind,
};
pub use models::CopulaModel;
pub use rearrangement::{
    multivariate_rearrange, sd_rearrange, si_rearrange, si_rearrange_grid, ConditionalTable, StepFunction,
};
pub use scalar::Scalar;

pub type Checkerboard64 = CheckerboardMatrix<f64>;
pub type Checkerboard32 = CheckerboardMatrix<f32>;
pub type Grid64 = GridCopula<f64>;
pub type Grid32 = GridCopula<f32>;
pub type Step64 = StepFunction<f64>;
pub type Table64 = ConditionalTable<f64>;
