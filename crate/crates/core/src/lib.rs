//! Journey-time distributions from two-point vehicle re-identification
//! surveys, corrected for survivorship bias.
//!
//! Observations are modeled as a truncated density over the time-time plane
//! (upstream arrival × journey time), restricted to the zone both stations
//! can see. The crate provides the zone geometry, the truncated density and
//! its normalization, maximum-likelihood fitting with Fisher and bootstrap
//! intervals, goodness-of-fit checks, and a Monte Carlo survey simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bootstrap;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod geometry;
pub mod model;
pub mod optimize;
pub mod quadrature;
pub mod simulation;

pub use bootstrap::{bootstrap_ci, BootstrapResult, BootstrapSpec, BootstrapStatistic};
pub use distributions::{build_empirical_arrival, ArrivalDist, JourneyDist, JourneyFamily, Knot};
pub use error::{Error, Result};
pub use estimation::{
    fisher_ci, fit_mle, observed_information, score, total_log_likelihood, Dataset, FisherIntervals, FitOptions,
    FitResult, Interval, ReidRecord,
};
pub use evaluation::{ks_test, replicate_dataset, KsReport, Replicate};
pub use geometry::{DownstreamPoint, SurveyWindows, TimeTimePoint, Zone};
pub use model::{ArrivalModel, JourneyModel, ModelSpec, NormalizationResult, TruncatedDensity, ZoneMasses};
pub use simulation::{coverage_study, simulate_survey, CoverageReport, SimConfig, SimulatedSurvey};
