//! Numerics for Brownian motion penalized by its range at the critical
//! drift: theta-type series, killed-interval kernels, the survival
//! normalizer and its asymptotic expansion, limit laws, and an importance
//! sampling Monte Carlo engine.

pub mod asymptotics;
pub mod error;
pub mod killed_bm;
pub mod limit_laws;
pub mod mc_engine;
pub mod quad;
pub mod rng;
pub mod series;
pub mod special_fn;
pub mod stats;

pub use asymptotics::{ExpansionTable, ModelParams, Normalizer};
pub use error::{Error, Result};
pub use mc_engine::{EnsembleConfig, Functional, PathSample, RefinementMode, WeightedEnsemble};
pub use rng::PathRng;
pub use series::SeriesCtl;
pub use special_fn::GArgs;
pub use stats::WeightedEcdf;

/// Library version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
