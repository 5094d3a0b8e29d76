//! Simulation-based calibration checking.
//!
//! A [`Generator`] draws a parameter and a dataset, a [`PosteriorFamily`]
//! fits the dataset, and every [`TestQuantity`] is ranked: the prior draw's
//! value against the posterior draws' values. Under a correct posterior the
//! ranks are uniform; [`diagnostics`] measures how far they are from it.

pub mod binomial;
pub mod diagnostics;
pub mod engine;
pub mod ess;
pub mod plot;
pub mod quantity;
pub mod rank;
pub mod report;
pub mod rng;

pub use diagnostics::{GammaResult, NullCalibrator, RankSet};
pub use engine::{
    run_sbc, FailedSimulation, FitError, Generator, PosteriorFamily, RankRow, SbcConfig, SbcError,
    SbcRun, SeedInfo, SimulationRecord, SimulationResult,
};
pub use quantity::{ParameterVector, QuantityError, TestQuantity};
pub use rank::{compute_rank, RankStatistic};
pub use rng::RngStream;
