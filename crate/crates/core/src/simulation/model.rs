use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{stream_rng, Domain};
use crate::error::{Error, Result};
use crate::operator::{SpectralData, SymOperator};

/// Population spectrum, listed in descending order once expanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Spectrum {
    /// `Σ_j λ_j² θ_j ⊗ θ_j + σ² I` with `spikes = [λ_1², …, λ_m²]`.
    Spiked { spikes: Vec<f64>, sigma2: f64 },
    /// `top · ratio^k` for `k = 0, …, d − 1`.
    Geometric { top: f64, ratio: f64 },
    /// Eigenvalues given directly.
    Explicit { eigenvalues: Vec<f64> },
}

/// Ground-truth covariance specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub dim: usize,
    pub spectrum: Spectrum,
    /// Index of the target among the distinct nonzero eigenvalues, 0 = top.
    pub target_index: usize,
    /// Seed of a random orthogonal conjugation; `None` keeps Σ diagonal.
    pub rotation: Option<u64>,
}

impl CovarianceModel {
    pub fn spiked(dim: usize, spikes: Vec<f64>, sigma2: f64) -> Self {
        Self::diagonal(dim, Spectrum::Spiked { spikes, sigma2 })
    }

    pub fn geometric(dim: usize, top: f64, ratio: f64) -> Self {
        Self::diagonal(dim, Spectrum::Geometric { top, ratio })
    }

    pub fn explicit(eigenvalues: Vec<f64>) -> Self {
        Self::diagonal(eigenvalues.len(), Spectrum::Explicit { eigenvalues })
    }

    fn diagonal(dim: usize, spectrum: Spectrum) -> Self {
        Self {
            dim,
            spectrum,
            target_index: 0,
            rotation: None,
        }
    }

    pub fn with_target(mut self, target_index: usize) -> Self {
        self.target_index = target_index;
        self
    }

    pub fn with_rotation(mut self, seed: u64) -> Self {
        self.rotation = Some(seed);
        self
    }

    /// The declared eigenvalues in descending order, validated.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::EmptyOperator);
        }
        let values = match &self.spectrum {
            Spectrum::Spiked { spikes, sigma2 } => {
                if !(sigma2.is_finite() && *sigma2 >= 0.0) {
                    return Err(invalid(format!(
                        "sigma2 must be non-negative, got {sigma2}"
                    )));
                }
                if spikes.len() > d {
                    return Err(invalid(format!(
                        "{} spikes exceed dimension {d}",
                        spikes.len()
                    )));
                }
                if spikes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                    return Err(invalid("spikes must be positive".into()));
                }
                let mut v: Vec<f64> = spikes.iter().map(|s| s + sigma2).collect();
                v.resize(d, *sigma2);
                v
            }
            Spectrum::Geometric { top, ratio } => {
                if !(top.is_finite() && *top > 0.0) {
                    return Err(invalid(format!("top must be positive, got {top}")));
                }
                if !(*ratio > 0.0 && *ratio <= 1.0) {
                    return Err(invalid(format!("ratio must lie in (0, 1], got {ratio}")));
                }
                (0..d).map(|k| top * ratio.powi(k as i32)).collect()
            }
            Spectrum::Explicit { eigenvalues } => {
                if eigenvalues.len() != d {
                    return Err(Error::DimensionMismatch {
                        left: d,
                        right: eigenvalues.len(),
                    });
                }
                if eigenvalues.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(invalid(
                        "eigenvalues must be finite and non-negative".into(),
                    ));
                }
                eigenvalues.clone()
            }
        };
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(invalid(
                "eigenvalues must be listed in descending order".into(),
            ));
        }
        if values[0] == 0.0 {
            return Err(Error::ZeroOperator);
        }
        Ok(values)
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

/// Σ with its exact spectral data and symmetric square root.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub sigma: SymOperator,
    pub spectral: SpectralData,
    /// `Σ^{1/2}`.
    pub root: SymOperator,
    /// `√λ` on the diagonal when no rotation is applied.
    pub(crate) diagonal_root: Option<Vec<f64>>,
    pub target_index: usize,
}

impl GroundTruth {
    /// Unit eigenvector of the target when it has multiplicity one.
    pub fn target_vector(&self) -> Result<DVector<f64>> {
        let space = self.spectral.eigenspace(self.target_index)?;
        if space.multiplicity != 1 {
            return Err(Error::MultiplicityNotOne(space.multiplicity));
        }
        Ok(self
            .spectral
            .basis()
            .column(space.indices.start)
            .into_owned())
    }
}

/// Builds `Σ = Q diag(λ) Qᵀ`, where `Q` is the identity or a seeded Haar
/// orthogonal matrix.
pub fn build_covariance(model: &CovarianceModel) -> Result<GroundTruth> {
    let values = model.eigenvalues()?;
    let d = values.len();
    let q = match model.rotation {
        Some(seed) => random_orthogonal(d, seed),
        None => DMatrix::identity(d, d),
    };
    let spectral = SpectralData::from_exact(&values, q.clone())?;
    let count = spectral.distinct().len();
    if model.target_index >= count {
        return Err(Error::IndexOutOfRange {
            index: model.target_index,
            count,
        });
    }
    let roots: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    let conj = |diag: &[f64]| {
        let scaled = DMatrix::from_fn(d, d, |i, j| q[(i, j)] * diag[j]);
        SymOperator::symmetrized(scaled * q.transpose())
    };
    let (sigma, root) = match model.rotation {
        Some(_) => (conj(&values), conj(&roots)),
        None => (
            SymOperator::from_diagonal(&values)?,
            SymOperator::from_diagonal(&roots)?,
        ),
    };
    Ok(GroundTruth {
        sigma,
        spectral,
        root,
        diagonal_root: model.rotation.is_none().then_some(roots),
        target_index: model.target_index,
    })
}

/// Haar-distributed orthogonal matrix from the QR factorisation of a
/// Gaussian matrix, with column signs fixed by `diag(R) > 0`.
fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, Domain::Rotation, 0);
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
