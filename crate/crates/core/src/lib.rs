//! High-dimensional sphericity tests.
//!
//! Six procedures for `H0: Σ = σ² I_p`:
//!
//! | name | kind | built on | null calibration |
//! |------|------|----------|------------------|
//! | NS | sum | sample covariance (kurtosis-corrected John statistic) | `N(0,1)` |
//! | NM | max | sample covariance | Gumbel `G` |
//! | SS | sum | spatial signs (bias-corrected) | `N(0,1)` |
//! | SM | max | spatial-sign covariance | Gumbel `G` |
//! | CN | adaptive | Cauchy combination of NS and NM | combined p-value |
//! | CS | adaptive | Cauchy combination of SS and SM | combined p-value |
//!
//! The estimators and statistics are generic over [`Real`] (`f32`, `f64`);
//! data generation and the Monte Carlo engine use `f64`.

pub mod datagen;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod matrix;
pub mod procedures;
pub mod scalar;
pub mod simulation;

pub use datagen::{
    derive_rep_seed, make_sigma, sample_scenario, sqrt_psd, CovarianceModel, Family, Sampler,
    ScenarioSpec,
};
pub use distributions::{cauchy_combine, gumbel_cdf, gumbel_quantile, GumbelLaw};
pub use error::{Error, Result};
pub use estimators::{
    moment_summary, sign_summary, spatial_median, spatial_sign, MomentSummary, SignSummary,
};
pub use matrix::{DataMatrix, SquareMatrix};
pub use procedures::{evaluate, t_cn, t_cs, t_nm, t_ns, t_sm, t_ss, TestName, TestOutcome};
pub use scalar::Real;
pub use simulation::{Campaign, SimulationReport};

pub type DataMatrixF64 = DataMatrix<f64>;
pub type DataMatrixF32 = DataMatrix<f32>;
pub type SquareMatrixF64 = SquareMatrix<f64>;
pub type MomentSummaryF64 = MomentSummary<f64>;
pub type SignSummaryF64 = SignSummary<f64>;
pub type TestOutcomeF64 = TestOutcome<f64>;
pub type TestOutcomeF32 = TestOutcome<f32>;
