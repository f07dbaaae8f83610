use std::ops::Range;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{build_covariance, CovarianceModel, GroundTruth};
use super::sampling::{draw_sample_covariance, SamplingScheme};
use super::{stream_rng, Domain};
use crate::eigen::selected_eigenpairs;
use crate::error::{Error, Result};
use crate::estimators::{pivots, PivotSet};
use crate::operator::{b_r_normalizer, SymOperator};
use crate::perturbation::empirical_projector;

/// Default number of replications behind the oracle bias.
pub const DEFAULT_ORACLE_REPS: usize = 100_000;

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub model: CovarianceModel,
    /// Size of each of the three independent samples in a trial.
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub oracle_reps: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub sampling: SamplingScheme,
}

impl TrialConfig {
    pub fn new(model: CovarianceModel, n: usize, trials: usize, master_seed: u64) -> Self {
        Self {
            model,
            n,
            trials,
            master_seed,
            oracle_reps: DEFAULT_ORACLE_REPS,
            workers: None,
            sampling: SamplingScheme::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.oracle_reps < 2 {
            return Err(Error::InvalidParameter(
                "oracle_reps must be at least 2".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        if self.sampling == SamplingScheme::Wishart && self.n < self.model.dim {
            return Err(Error::InvalidParameter(format!(
                "wishart sampling needs n >= dim ({} < {})",
                self.n, self.model.dim
            )));
        }
        Ok(())
    }

    fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(f()),
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map(|pool| pool.install(f))
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}"))),
        }
    }
}

/// Monte Carlo estimate of `b = E⟨θ̂, θ⟩² − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Per-trial statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub pivots: PivotSet,
    /// `‖P̂ − P‖₂²` computed from the projector matrices.
    pub proj_error_hs_sq: f64,
    /// `n(‖P̂ − P‖₂² + 2b)/B`, centered with the oracle `b`.
    pub normalized_proj_stat: f64,
    /// `2n(b̂ − b)/B`.
    pub bias_z: f64,
    /// `n((1 + b̂)² − (1 + b̃)²)/B`.
    pub scaled_denom_diff: f64,
    /// `‖Σ̂ − Σ‖∞` for the first sample.
    pub op_norm_error: f64,
    /// Matched empirical eigenvalue of the first sample.
    pub matched_eigenvalue: f64,
    pub cluster_separated: bool,
    /// `‖Σ̂ − Σ‖∞ < ḡ/2` but the matched eigenvalue left `(μ − ḡ/2, μ + ḡ/2)`.
    pub weyl_violation: bool,
    pub degenerate: bool,
}

/// Oracle estimate and trial outcomes of one configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub truth: GroundTruth,
    pub oracle: OracleEstimate,
    /// `B_r(Σ)`.
    pub normalizer: f64,
    pub outcomes: Vec<TrialOutcome>,
}

struct Target {
    theta: DVector<f64>,
    indices: Range<usize>,
}

fn target(truth: &GroundTruth) -> Result<Target> {
    let theta = truth.target_vector()?;
    let indices = truth
        .spectral
        .eigenspace(truth.target_index)?
        .indices
        .clone();
    Ok(Target { theta, indices })
}

fn prepare(cfg: &TrialConfig) -> Result<(GroundTruth, Target)> {
    cfg.validate()?;
    let truth = build_covariance(&cfg.model)?;
    let target = target(&truth)?;
    Ok((truth, target))
}

/// Brute-force `E⟨θ̂, θ⟩² − 1` over `cfg.oracle_reps` independent samples.
pub fn oracle_bias(cfg: &TrialConfig) -> Result<OracleEstimate> {
    let (truth, target) = prepare(cfg)?;
    oracle_with(cfg, &truth, &target)
}

fn oracle_with(cfg: &TrialConfig, truth: &GroundTruth, target: &Target) -> Result<OracleEstimate> {
    let draws: Vec<f64> = cfg.in_pool(|| {
        (0..cfg.oracle_reps)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(cfg.master_seed, Domain::Oracle, i as u64);
                let s = draw_sample_covariance(truth, cfg.n, cfg.sampling, &mut rng)?;
                let pairs = selected_eigenpairs(s.matrix(), target.indices.clone());
                Ok(pairs.vectors.column(0).dot(&target.theta).powi(2) - 1.0)
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    let reps = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / reps;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1.0);
    Ok(OracleEstimate {
        mean,
        std_error: (var / reps).sqrt(),
        reps: draws.len(),
    })
}

/// Runs `cfg.trials` trials against a given value of the bias `b`.
pub fn run_trials(cfg: &TrialConfig, oracle_b: f64) -> Result<Vec<TrialOutcome>> {
    let (truth, target) = prepare(cfg)?;
    let normalizer = b_r_normalizer(&truth.spectral, &truth.sigma, truth.target_index)?;
    trials_with(cfg, &truth, &target, oracle_b, normalizer)
}

fn trials_with(
    cfg: &TrialConfig,
    truth: &GroundTruth,
    target: &Target,
    oracle_b: f64,
    normalizer: f64,
) -> Result<Vec<TrialOutcome>> {
    let p_true = SymOperator::outer(&target.theta);
    let half_gap = truth.spectral.gap(truth.target_index)? / 2.0;
    cfg.in_pool(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                one_trial(
                    cfg, truth, target, &p_true, half_gap, oracle_b, normalizer, t,
                )
            })
            .collect::<Result<Vec<_>>>()
    })?
}

#[allow(clippy::too_many_arguments)]
fn one_trial(
    cfg: &TrialConfig,
    truth: &GroundTruth,
    target: &Target,
    p_true: &SymOperator,
    half_gap: f64,
    oracle_b: f64,
    normalizer: f64,
    t: usize,
) -> Result<TrialOutcome> {
    let mut rng = stream_rng(cfg.master_seed, Domain::Trial, t as u64);
    let r = truth.target_index;
    let mut draw = || draw_sample_covariance(truth, cfg.n, cfg.sampling, &mut rng);
    let (hat, tilde, bar) = (draw()?, draw()?, draw()?);
    let ep_hat = empirical_projector(&truth.spectral, r, &hat)?;
    let ep_tilde = empirical_projector(&truth.spectral, r, &tilde)?;
    let ep_bar = empirical_projector(&truth.spectral, r, &bar)?;
    let piv = pivots(
        &ep_hat.eigenvectors,
        &ep_tilde.eigenvectors,
        &ep_bar.eigenvectors,
        Some(&target.theta),
        Some(oracle_b),
    )?;

    let n = cfg.n as f64;
    let proj_error_sq = piv.proj_error_sq.expect("true vector supplied");
    let op_norm_error = hat.try_sub(&truth.sigma)?.op_norm();
    Ok(TrialOutcome {
        trial: t,
        proj_error_hs_sq: ep_hat.projector.try_sub(p_true)?.hs_norm().powi(2),
        normalized_proj_stat: n * (proj_error_sq + 2.0 * oracle_b) / normalizer,
        bias_z: 2.0 * n * (piv.b_hat - oracle_b) / normalizer,
        scaled_denom_diff: n * ((1.0 + piv.b_hat).powi(2) - (1.0 + piv.b_tilde).powi(2))
            / normalizer,
        op_norm_error,
        matched_eigenvalue: ep_hat.eigenvalues[0],
        cluster_separated: ep_hat.cluster_separated,
        weyl_violation: op_norm_error < half_gap && !ep_hat.cluster_separated,
        degenerate: piv.degenerate,
        pivots: piv,
    })
}

/// Oracle bias followed by the trials.
pub fn run_experiment(cfg: &TrialConfig) -> Result<Experiment> {
    let (truth, target) = prepare(cfg)?;
    let normalizer = b_r_normalizer(&truth.spectral, &truth.sigma, truth.target_index)?;
    let oracle = oracle_with(cfg, &truth, &target)?;
    let outcomes = trials_with(cfg, &truth, &target, oracle.mean, normalizer)?;
    Ok(Experiment {
        truth,
        oracle,
        normalizer,
        outcomes,
    })
}

/// `‖Σ̂ − Σ‖∞` over `cfg.trials` independent samples of size `n`. The target
/// eigenvalue is not used.
pub fn operator_norm_errors(cfg: &TrialConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let truth = build_covariance(&cfg.model)?;
    cfg.in_pool(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.master_seed, Domain::NormStudy, t as u64);
                let s = draw_sample_covariance(&truth, cfg.n, cfg.sampling, &mut rng)?;
                Ok(s.try_sub(&truth.sigma)?.op_norm())
            })
            .collect::<Result<Vec<f64>>>()
    })?
}
