use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::GroundTruth;
use crate::error::Result;
use crate::estimators::sample_covariance;
use crate::operator::SymOperator;

/// How a sample covariance is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// Draw `n` Gaussian rows and form `XᵀX/n`.
    Direct,
    /// Draw `Σ̂ ~ W_d(Σ, n)/n` through the Bartlett factor. Requires `n ≥ d`.
    Wishart,
    /// `Wishart` when `n ≥ d`, otherwise `Direct`.
    #[default]
    Auto,
}

impl SamplingScheme {
    pub fn resolve(self, n: usize, d: usize) -> SamplingScheme {
        match self {
            SamplingScheme::Auto if n >= d => SamplingScheme::Wishart,
            SamplingScheme::Auto => SamplingScheme::Direct,
            other => other,
        }
    }
}

/// `n × d` block of independent `N(0, Σ)` rows, `X = G Σ^{1/2}`.
pub fn sample_gaussian<R: Rng + ?Sized>(root: &SymOperator, n: usize, rng: &mut R) -> DMatrix<f64> {
    let d = root.dim();
    let g = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    g * root.matrix()
}

/// Lower-triangular Bartlett factor `A` with `AAᵀ ~ W_d(I, n)`.
fn bartlett_factor<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(n >= d, "Bartlett factor needs n >= d ({n} < {d})");
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new((n - i) as f64).expect("positive degrees of freedom");
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    a
}

/// `Σ^{1/2} A Aᵀ Σ^{1/2} / n`, distributed as the sample covariance of `n`
/// Gaussian rows.
pub fn sample_wishart<R: Rng + ?Sized>(truth: &GroundTruth, n: usize, rng: &mut R) -> SymOperator {
    let d = truth.sigma.dim();
    let mut factor = bartlett_factor(d, n, rng);
    match &truth.diagonal_root {
        Some(roots) => {
            for (i, mut row) in factor.row_iter_mut().enumerate() {
                row *= roots[i];
            }
        }
        None => factor = truth.root.matrix() * factor,
    }
    SymOperator::symmetrized(&factor * factor.transpose() / n as f64)
}

/// One sample covariance of size `n` under the given scheme.
pub fn draw_sample_covariance<R: Rng + ?Sized>(
    truth: &GroundTruth,
    n: usize,
    scheme: SamplingScheme,
    rng: &mut R,
) -> Result<SymOperator> {
    match scheme.resolve(n, truth.sigma.dim()) {
        SamplingScheme::Wishart => Ok(sample_wishart(truth, n, rng)),
        _ => sample_covariance(&sample_gaussian(&truth.root, n, rng)),
    }
}
