//! Perfect-decomposition analysis for simultaneous linkage learning on
//! concatenated unitation functions.
//!
//! Modules, bottom up: [`functions`] defines the problems, [`fihc`] produces
//! locally optimal populations, [`stats`] turns a population into a
//! dependency structure matrix, [`theory`] predicts pair distributions and
//! population sizes, [`linkage`] runs a small linkage-tree optimizer, and
//! [`harness`] drives the population-growth experiments.

pub mod error;
pub mod fihc;
pub mod functions;
pub mod harness;
pub mod linkage;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use fihc::{fihc_optimize, sample_optimized_population, Individual, Population};
pub use functions::{ConcatenatedProblem, Family, MonotonicityProfile, UnitationFunction};
pub use rng::RngSeed;
pub use stats::{build_dsm, fill, is_perfect_decomposition, Dsm, PairCounts};
pub use harness::{run_growth_experiment, ExperimentConfig, ExperimentRecord};
pub use linkage::{run_lt_gomea_lite, LtConfig, LtRun};
pub use theory::{s_min, theoretical_distribution, EstimateResult};
