//! Oracle experiments: how much is it worth to know which strategies the
//! other traders run?
//!
//! A prediction phase simulates the market as the oracle reports it and
//! names the kind with the highest pooled average profit. A real phase then
//! adds one buyer and one seller of that kind to the true population and
//! measures how the newcomers' kind fares against the market average.

use thiserror::Error;

use crate::exchange::ExchangeError;
use crate::strategies::{StrategyError, StrategyKind};

mod experiment;
mod landscape;
mod noise;
mod population;
pub mod seeds;

pub use experiment::{
    discarded_schedules, read_records_csv, write_records_csv, CellFailure, ExperimentOutput,
    ExperimentRecord, Harness, NamedSchedule, PhaseOutcome, Prediction, RecordRow,
    REQUIRED_COLUMNS,
};
pub use landscape::{simplex_grid, LandscapePoint};
pub use noise::{apply_noise, distort_population, p_max, NoiseSpec};
pub use population::{enumerate_populations, SideCounts, TraderPopulation};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("need at least one trader per kind per side: {n_per_side} < {kinds}")]
    TooFewTraders { n_per_side: u32, kinds: usize },
    #[error("strategy set is empty")]
    EmptyStrategySet,
    #[error("noise probability {p} outside [0, {max}]")]
    NoiseOutOfRange { p: f64, max: f64 },
    #[error("{0} is not in the strategy set")]
    KindNotInSet(StrategyKind),
    #[error("subtrial count must be at least 1")]
    ZeroSubtrials,
    #[error("landscape needs exactly 3 strategy kinds, got {0}")]
    NotThreeKinds(usize),
    #[error("cannot parse population `{0}`")]
    BadPopulation(String),
    #[error("records file is missing columns: {0}")]
    Schema(String),
    #[error("records file row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}
