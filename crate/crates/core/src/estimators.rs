//! Sample covariance, sample-split bias estimators and studentized pivots.
//!
//! For a rank-one target `P = θ ⊗ θ` and three independent samples of equal
//! size with leading empirical eigenvectors `θ̂`, `θ̃`, `θ̄`:
//!
//! ```text
//! b̂ = ⟨θ̂, θ̃⟩ − 1,   b̃ = ⟨θ̃, θ̄⟩ − 1        (signs aligned so the products are ≥ 0)
//! denom = |(1 + b̂)² − (1 + b̃)²|
//! bias pivot  = 2 (b̂ − b) / denom            ~ Y(1/2, √(5/12))
//! proj pivot  = (‖P̂ − P‖₂² + 2 b̂) / denom
//! ```
//!
//! Samples are assumed to be mean zero; no centering is applied.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::CauchyMixture;
use crate::operator::SymOperator;
use crate::perturbation::align_sign;

/// Default floor on `1 + b̂` for [`corrected_vector`].
pub const DEFAULT_CORRECTION_FLOOR: f64 = 0.1;

/// `n⁻¹ Σ_j X_j ⊗ X_j` for the rows `X_j` of an `n × d` block.
pub fn sample_covariance(samples: &DMatrix<f64>) -> Result<SymOperator> {
    let n = samples.nrows();
    if n == 0 || samples.ncols() == 0 {
        return Err(Error::EmptySample);
    }
    Ok(SymOperator::symmetrized(samples.tr_mul(samples) / n as f64))
}

/// Three independent `n × d` sample blocks.
#[derive(Debug, Clone)]
pub struct TripleSample {
    pub x: DMatrix<f64>,
    pub x_tilde: DMatrix<f64>,
    pub x_bar: DMatrix<f64>,
}

impl TripleSample {
    pub fn new(x: DMatrix<f64>, x_tilde: DMatrix<f64>, x_bar: DMatrix<f64>) -> Result<Self> {
        for other in [&x_tilde, &x_bar] {
            if other.shape() != x.shape() {
                return Err(Error::DimensionMismatch {
                    left: x.nrows() * x.ncols(),
                    right: other.nrows() * other.ncols(),
                });
            }
        }
        if x.nrows() == 0 {
            return Err(Error::EmptySample);
        }
        Ok(Self { x, x_tilde, x_bar })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn covariances(&self) -> Result<[SymOperator; 3]> {
        Ok([
            sample_covariance(&self.x)?,
            sample_covariance(&self.x_tilde)?,
            sample_covariance(&self.x_bar)?,
        ])
    }
}

fn aligned_inner(v: &DVector<f64>, reference: &DVector<f64>) -> f64 {
    align_sign(v, reference).dot(reference)
}

/// `b̂ = ⟨θ̂, θ̃⟩ − 1` after sign alignment, clamped to `[−1, 0]`.
pub fn bias_estimate(theta_hat: &DVector<f64>, theta_tilde: &DVector<f64>) -> f64 {
    (aligned_inner(theta_hat, theta_tilde) - 1.0).clamp(-1.0, 0.0)
}

/// `b̃ = ⟨θ̃, θ̄⟩ − 1`, aligning `θ̄` to `θ̃`.
pub fn second_bias_estimate(theta_tilde: &DVector<f64>, theta_bar: &DVector<f64>) -> f64 {
    (aligned_inner(theta_bar, theta_tilde) - 1.0).clamp(-1.0, 0.0)
}

/// Bias-corrected eigenvector `θ̂/√(1 + b̂)`.
pub fn corrected_vector(theta_hat: &DVector<f64>, b_hat: f64, floor: f64) -> Result<DVector<f64>> {
    let value = 1.0 + b_hat;
    if !(value >= floor) {
        return Err(Error::CorrectionFloor { value, floor });
    }
    Ok(theta_hat / value.sqrt())
}

/// `|(1 + b̂)² − (1 + b̃)²|`.
pub fn pivot_denominator(b_hat: f64, b_tilde: f64) -> f64 {
    ((1.0 + b_hat).powi(2) - (1.0 + b_tilde).powi(2)).abs()
}

/// `(π/3) · denom²`, an estimator of `Var ‖P̂ − P‖₂²`.
pub fn variance_estimate(b_hat: f64, b_tilde: f64) -> f64 {
    PI / 3.0 * pivot_denominator(b_hat, b_tilde).powi(2)
}

/// Per-trial bias estimates and studentized pivots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PivotSet {
    pub b_hat: f64,
    pub b_tilde: f64,
    /// `‖P̂ − P‖₂² = 2 − 2⟨θ̂, θ⟩²`, when the true vector is known.
    pub proj_error_sq: Option<f64>,
    pub denom: f64,
    /// `2(b̂ − b)/denom`, when the true bias is known.
    pub pivot_bias: Option<f64>,
    /// `(‖P̂ − P‖₂² + 2b̂)/denom`, when the true vector is known.
    pub pivot_proj: Option<f64>,
    /// The denominator vanished and both pivots are undefined.
    pub degenerate: bool,
}

fn single_column(basis: &DMatrix<f64>) -> Result<DVector<f64>> {
    if basis.ncols() != 1 {
        return Err(Error::MultiplicityNotOne(basis.ncols()));
    }
    Ok(basis.column(0).into_owned())
}

/// Pivots from the eigenvector bases (`d × m`, `m` must be 1) of the three
/// empirical projectors. `truth` and `true_bias` are only known in
/// simulation.
pub fn pivots(
    hat: &DMatrix<f64>,
    tilde: &DMatrix<f64>,
    bar: &DMatrix<f64>,
    truth: Option<&DVector<f64>>,
    true_bias: Option<f64>,
) -> Result<PivotSet> {
    let theta_hat = single_column(hat)?;
    let theta_tilde = single_column(tilde)?;
    let theta_bar = single_column(bar)?;
    for v in [&theta_tilde, &theta_bar] {
        if v.len() != theta_hat.len() {
            return Err(Error::DimensionMismatch {
                left: theta_hat.len(),
                right: v.len(),
            });
        }
    }

    let b_hat = bias_estimate(&theta_hat, &theta_tilde);
    let b_tilde = second_bias_estimate(&theta_tilde, &theta_bar);
    let denom = pivot_denominator(b_hat, b_tilde);
    let degenerate = denom == 0.0;

    let proj_error_sq = match truth {
        Some(theta) => {
            if theta.len() != theta_hat.len() {
                return Err(Error::DimensionMismatch {
                    left: theta_hat.len(),
                    right: theta.len(),
                });
            }
            Some(2.0 - 2.0 * theta_hat.dot(theta).powi(2))
        }
        None => None,
    };
    let studentize = |num: f64| (!degenerate).then(|| num / denom);
    Ok(PivotSet {
        b_hat,
        b_tilde,
        proj_error_sq,
        denom,
        pivot_bias: true_bias.and_then(|b| studentize(2.0 * (b_hat - b))),
        pivot_proj: proj_error_sq.and_then(|e| studentize(e + 2.0 * b_hat)),
        degenerate,
    })
}

/// Closed interval with a flag for zero-width (degenerate) intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub degenerate: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn two_sided_quantile(law: &CauchyMixture, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Probability(level));
    }
    law.quantile(1.0 - (1.0 - level) / 2.0)
}

/// Confidence interval for the bias `b` from the `Y(1/2, √(5/12))` pivot:
/// `b̂ ± q · denom / 2`.
pub fn ci_bias(b_hat: f64, b_tilde: f64, level: f64) -> Result<Interval> {
    let q = two_sided_quantile(&CauchyMixture::bias_pivot(), level)?;
    let denom = pivot_denominator(b_hat, b_tilde);
    let half = q * denom / 2.0;
    Ok(Interval {
        lower: b_hat - half,
        upper: b_hat + half,
        degenerate: denom == 0.0,
    })
}

/// Confidence interval for `‖P̂ − P‖₂²`: `−2b̂ ± q · denom`, clipped to
/// `[0, 2]`.
pub fn ci_proj_error(b_hat: f64, b_tilde: f64, level: f64) -> Result<Interval> {
    let q = two_sided_quantile(&CauchyMixture::proj_pivot(), level)?;
    let denom = pivot_denominator(b_hat, b_tilde);
    let center = -2.0 * b_hat;
    let half = q * denom;
    Ok(Interval {
        lower: (center - half).clamp(0.0, 2.0),
        upper: (center + half).clamp(0.0, 2.0),
        degenerate: denom == 0.0,
    })
}
