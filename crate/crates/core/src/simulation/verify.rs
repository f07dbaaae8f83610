use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ks::ks_distance;
use super::model::{CovarianceModel, GroundTruth};
use super::sampling::SamplingScheme;
use super::trials::{run_experiment, Experiment, OracleEstimate, TrialConfig, TrialOutcome};
use crate::error::Result;
use crate::estimators::ci_bias;
use crate::limit::{std_normal_cdf, CauchyMixture};
use crate::operator::{a_r, b_r_normalizer, effective_rank};

/// Points on each side of the oracle value when propagating its
/// uncertainty.
const ORACLE_GRID_HALF: i32 = 6;

/// Pass/fail tolerances of [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// KS distance to `Φ`.
    pub ks_normal: f64,
    /// KS distance to a Cauchy mixture.
    pub ks_cauchy: f64,
    /// Relative tolerance of the variance ratios.
    pub moment_rel: f64,
    /// Relative tolerance of the mean denominator ratio.
    pub mean_rel: f64,
    /// Absolute tolerance on confidence-interval coverage.
    pub coverage_tol: f64,
    pub ci_level: f64,
    /// Allowed factor between the operator-norm ratio and 1.
    pub op_ratio_factor: f64,
    /// Standard errors allowed in the risk–bias comparison.
    pub risk_bias_se: f64,
    /// Oracle standard errors spanned when propagating oracle uncertainty.
    pub oracle_se: f64,
    pub identity_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            ks_normal: 0.08,
            ks_cauchy: 0.08,
            moment_rel: 0.2,
            mean_rel: 0.15,
            coverage_tol: 0.03,
            ci_level: 0.9,
            op_ratio_factor: 4.0,
            risk_bias_se: 4.0,
            oracle_se: 3.0,
            identity_tol: 1e-12,
        }
    }
}

/// One pass/fail check. `pass == (statistic ≤ threshold)`; an undefined
/// statistic fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The measured quantity (a KS distance, ratio, coverage or count).
    pub value: Option<f64>,
    /// The quantity compared against the threshold.
    pub statistic: Option<f64>,
    /// Base tolerance plus `oracle_allowance`.
    pub threshold: f64,
    /// Largest improvement of the statistic when the oracle bias moves
    /// within its uncertainty band.
    pub oracle_allowance: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn new(
        name: &str,
        value: Option<f64>,
        statistic: Option<f64>,
        base: f64,
        allowance: f64,
    ) -> Self {
        let threshold = base + allowance;
        Self {
            name: name.to_owned(),
            value,
            statistic,
            threshold,
            oracle_allowance: allowance,
            pass: statistic.is_some_and(|s| s <= threshold),
        }
    }

    fn plain(name: &str, value: Option<f64>, statistic: Option<f64>, threshold: f64) -> Self {
        Self::new(name, value, statistic, threshold, 0.0)
    }
}

/// A reported quantity without a pass/fail decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Informational {
    pub name: String,
    pub value: Option<f64>,
}

/// Population quantities behind the asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub effective_rank: f64,
    pub operator_norm: f64,
    pub target_eigenvalue: f64,
    pub multiplicity: usize,
    pub gap: f64,
    pub a_n: f64,
    pub b_n: f64,
    /// `r(Σ)/(B_n √n)`.
    pub rank_over_b_sqrt_n: f64,
    /// `‖Σ‖∞ / ḡ`.
    pub norm_over_gap: f64,
}

pub fn diagnostics(truth: &GroundTruth, n: usize) -> Result<Diagnostics> {
    let r = truth.target_index;
    let space = truth.spectral.eigenspace(r)?;
    let effective_rank = effective_rank(&truth.sigma)?;
    let operator_norm = truth.sigma.op_norm();
    let gap = truth.spectral.gap(r)?;
    let b_n = b_r_normalizer(&truth.spectral, &truth.sigma, r)?;
    Ok(Diagnostics {
        effective_rank,
        operator_norm,
        target_eigenvalue: space.value,
        multiplicity: space.multiplicity,
        gap,
        a_n: a_r(&truth.spectral, &truth.sigma, r)?,
        b_n,
        rank_over_b_sqrt_n: effective_rank / (b_n * (n as f64).sqrt()),
        norm_over_gap: operator_norm / gap,
    })
}

/// Verification report. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub model: CovarianceModel,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub sampling: SamplingScheme,
    pub oracle: OracleEstimate,
    pub diagnostics: Diagnostics,
    pub thresholds: Thresholds,
    pub checks: Vec<CheckRecord>,
    pub informational: Vec<Informational>,
    pub degenerate_trials: usize,
    pub pass: bool,
}

impl MonteCarloReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn variance(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    (xs.len() > 1).then(|| xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

fn ks(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Option<f64> {
    ks_distance(sample, cdf).ok()
}

/// `statistic(b) − min statistic(b')` over a grid spanning `b ± width`.
fn oracle_allowance(b: f64, width: f64, statistic: impl Fn(f64) -> Option<f64>) -> f64 {
    let Some(at_oracle) = statistic(b) else {
        return 0.0;
    };
    let best = (-ORACLE_GRID_HALF..=ORACLE_GRID_HALF)
        .filter_map(|k| statistic(b + width * k as f64 / ORACLE_GRID_HALF as f64))
        .fold(at_oracle, f64::min);
    at_oracle - best
}

/// Runs the experiment and evaluates every check.
pub fn verify(cfg: &TrialConfig, thresholds: &Thresholds) -> Result<MonteCarloReport> {
    let exp = run_experiment(cfg)?;
    verify_experiment(cfg, thresholds, &exp)
}

/// Evaluates the checks on a finished experiment.
pub fn verify_experiment(
    cfg: &TrialConfig,
    thresholds: &Thresholds,
    exp: &Experiment,
) -> Result<MonteCarloReport> {
    let diag = diagnostics(&exp.truth, cfg.n)?;
    let outcomes: &[TrialOutcome] = &exp.outcomes;
    let n = cfg.n as f64;
    let big_b = exp.normalizer;
    let b = exp.oracle.mean;
    let width = thresholds.oracle_se * exp.oracle.std_error;
    let th = thresholds;

    let proj_err: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.pivots.proj_error_sq)
        .collect();
    let live: Vec<&TrialOutcome> = outcomes.iter().filter(|o| !o.degenerate).collect();
    let normal = |x: f64| std_normal_cdf(x);
    let bias_law = CauchyMixture::bias_pivot();
    let proj_law = CauchyMixture::proj_pivot();
    let mut checks = Vec::new();

    // (a) n(‖P̂ − P‖₂² + 2b)/B against Φ.
    let stat_a = |bb: f64| {
        let xs: Vec<f64> = proj_err
            .iter()
            .map(|e| n * (e + 2.0 * bb) / big_b)
            .collect();
        ks(&xs, normal)
    };
    let value = stat_a(b);
    checks.push(CheckRecord::new(
        "proj_error_normal_ks",
        value,
        value,
        th.ks_normal,
        oracle_allowance(b, width, stat_a),
    ));

    // (b) 2n(b̂ − b)/B against Φ.
    let stat_b = |bb: f64| {
        let xs: Vec<f64> = outcomes
            .iter()
            .map(|o| 2.0 * n * (o.pivots.b_hat - bb) / big_b)
            .collect();
        ks(&xs, normal)
    };
    let value = stat_b(b);
    checks.push(CheckRecord::new(
        "bias_normal_ks",
        value,
        value,
        th.ks_normal,
        oracle_allowance(b, width, stat_b),
    ));

    // (c) 2(b̂ − b)/denom against Y(1/2, √(5/12)).
    let stat_c = |bb: f64| {
        let xs: Vec<f64> = live
            .iter()
            .map(|o| 2.0 * (o.pivots.b_hat - bb) / o.pivots.denom)
            .collect();
        ks(&xs, |x| bias_law.cdf(x))
    };
    let value = stat_c(b);
    checks.push(CheckRecord::new(
        "bias_pivot_ks",
        value,
        value,
        th.ks_cauchy,
        oracle_allowance(b, width, stat_c),
    ));

    // (d) (‖P̂ − P‖₂² + 2b̂)/denom against Y(5/6, √47/6).
    let proj_pivots: Vec<f64> = live.iter().filter_map(|o| o.pivots.pivot_proj).collect();
    let value = ks(&proj_pivots, |x| proj_law.cdf(x));
    checks.push(CheckRecord::plain(
        "proj_pivot_ks",
        value,
        value,
        th.ks_cauchy,
    ));

    // (e) n² Var ‖P̂ − P‖₂² / B².
    let value = variance(&proj_err).map(|v| n * n * v / (big_b * big_b));
    checks.push(CheckRecord::plain(
        "proj_error_variance_ratio",
        value,
        value.map(|v| (v - 1.0).abs()),
        th.moment_rel,
    ));

    // (f) Var of n((1 + b̂)² − (1 + b̃)²)/B relative to 3/2.
    let diffs: Vec<f64> = outcomes.iter().map(|o| o.scaled_denom_diff).collect();
    let value = variance(&diffs).map(|v| v / 1.5);
    checks.push(CheckRecord::plain(
        "denominator_variance_ratio",
        value,
        value.map(|v| (v - 1.0).abs()),
        th.moment_rel,
    ));

    // (g) mean of n·denom/B relative to √(3/π).
    let denoms: Vec<f64> = outcomes
        .iter()
        .map(|o| n * o.pivots.denom / big_b)
        .collect();
    let value = mean(&denoms).map(|m| m / (3.0 / PI).sqrt());
    checks.push(CheckRecord::plain(
        "denominator_mean_ratio",
        value,
        value.map(|v| (v - 1.0).abs()),
        th.mean_rel,
    ));

    // (h) E‖Σ̂ − Σ‖∞ / (‖Σ‖∞ (√(r/n) ∨ r/n)).
    let op_errors: Vec<f64> = outcomes.iter().map(|o| o.op_norm_error).collect();
    let value = mean(&op_errors).map(|m| operator_norm_ratio(m, &diag, cfg.n));
    checks.push(CheckRecord::plain(
        "operator_norm_ratio",
        value,
        value.map(|v| v.ln().abs()),
        th.op_ratio_factor.ln(),
    ));

    // (i) coverage of b by the bias interval.
    let coverage = |bb: f64| -> Option<f64> {
        let hits = outcomes
            .iter()
            .map(|o| {
                ci_bias(o.pivots.b_hat, o.pivots.b_tilde, th.ci_level).map(|ci| ci.contains(bb))
            })
            .collect::<Result<Vec<bool>>>()
            .ok()?;
        Some(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
    };
    let stat_i = |bb: f64| coverage(bb).map(|c| (c - th.ci_level).abs());
    checks.push(CheckRecord::new(
        "bias_ci_coverage",
        coverage(b),
        stat_i(b),
        th.coverage_tol,
        oracle_allowance(b, width, stat_i),
    ));

    // Mean projection error against −2b, in combined standard errors.
    let value = mean(&proj_err).map(|m| m + 2.0 * b);
    let se = variance(&proj_err)
        .map(|v| (v / proj_err.len() as f64 + 4.0 * exp.oracle.std_error.powi(2)).sqrt());
    checks.push(CheckRecord::plain(
        "risk_bias_identity",
        value,
        value.zip(se).map(|(v, s)| v.abs() / s),
        th.risk_bias_se,
    ));

    let identity_gap = outcomes
        .iter()
        .filter_map(|o| {
            o.pivots
                .proj_error_sq
                .map(|e| (e - o.proj_error_hs_sq).abs())
        })
        .fold(0.0, f64::max);
    checks.push(CheckRecord::plain(
        "projection_error_identity",
        Some(identity_gap),
        Some(identity_gap),
        th.identity_tol,
    ));

    let violations = outcomes.iter().filter(|o| o.weyl_violation).count() as f64;
    checks.push(CheckRecord::plain(
        "weyl_cluster",
        Some(violations),
        Some(violations),
        0.0,
    ));

    let joint = CauchyMixture::proj_pivot_joint_limit();
    let informational = vec![
        Informational {
            name: "proj_pivot_ks_vs_y_1_6".into(),
            value: ks(&proj_pivots, |x| joint.cdf(x)),
        },
        Informational {
            name: "mean_proj_error".into(),
            value: mean(&proj_err),
        },
        Informational {
            name: "cluster_separated_fraction".into(),
            value: Some(
                outcomes.iter().filter(|o| o.cluster_separated).count() as f64
                    / outcomes.len() as f64,
            ),
        },
    ];

    let pass = checks.iter().all(|c| c.pass);
    Ok(MonteCarloReport {
        model: cfg.model.clone(),
        n: cfg.n,
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        sampling: cfg.sampling.resolve(cfg.n, cfg.model.dim),
        oracle: exp.oracle,
        diagnostics: diag,
        thresholds: *thresholds,
        checks,
        informational,
        degenerate_trials: outcomes.len() - live.len(),
        pass,
    })
}

/// `mean_error / (‖Σ‖∞ (√(r/n) ∨ r/n))`.
pub(crate) fn operator_norm_ratio(mean_error: f64, diag: &Diagnostics, n: usize) -> f64 {
    let q = diag.effective_rank / n as f64;
    mean_error / (diag.operator_norm * q.sqrt().max(q))
}
