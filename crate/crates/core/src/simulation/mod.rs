//! Monte Carlo harness: ground-truth models, sampling, the trial runner and
//! verification of the limit laws.
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! `(master_seed, domain, index)`, so results do not depend on the number of
//! workers or on the order in which trials execute.

mod ks;
mod model;
mod sampling;
mod trials;
mod verify;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use ks::ks_distance;
pub use model::{build_covariance, CovarianceModel, GroundTruth, Spectrum};
pub use sampling::{draw_sample_covariance, sample_gaussian, sample_wishart, SamplingScheme};
pub use trials::{
    operator_norm_errors, oracle_bias, run_experiment, run_trials, Experiment, OracleEstimate,
    TrialConfig, TrialOutcome, DEFAULT_ORACLE_REPS,
};
pub use verify::{
    diagnostics, verify, verify_experiment, CheckRecord, Diagnostics, Informational,
    MonteCarloReport, Thresholds,
};

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Domain {
    Rotation = 1,
    Oracle = 2,
    Trial = 3,
    NormStudy = 4,
}

pub(crate) fn stream_rng(master_seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((domain as u64) << 48) | index);
    rng
}
