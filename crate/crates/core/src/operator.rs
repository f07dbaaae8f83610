//! Dense symmetric operators and their spectral structure.
//!
//! [`SymOperator`] is the single carrier for covariance operators, their
//! empirical counterparts, perturbations `E = Σ̂ − Σ`, spectral projectors and
//! derived operators. [`SpectralData`] groups the eigenvalues of an operator
//! into distinct values `μ_r` with multiplicities `m_r`, index sets `Δ_r`
//! into the descending spectrum, and spectral gaps `ḡ_r`.
//!
//! Conventions:
//! - Eigenvalues whose magnitude does not exceed `dim · ε · ‖S‖∞` form the
//!   zero eigenspace. It is not one of the distinct eigenvalues `μ_r`, but it
//!   does take part in gaps and in `C_r` whenever it is present.
//! - A full-rank operator has no zero eigenspace, so a single distinct
//!   eigenvalue has an infinite gap and `C_r = 0`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::eigen::{self, EigenPairs};
use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`SymOperator::new`] before rejecting.
const SYMMETRY_TOL: f64 = 1e-10;

/// Default relative tolerance for merging nearby eigenvalues.
pub const DEFAULT_CLUSTER_REL_TOL: f64 = 1e-8;

/// Dense symmetric `d × d` real operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOperator {
    m: DMatrix<f64>,
}

impl SymOperator {
    /// Validates squareness, finiteness and symmetry, then stores the exact
    /// symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::EmptyOperator);
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite entry".into()));
        }
        let scale = m.amax();
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self::symmetrized(m))
    }

    /// Stores `(m + mᵀ)/2` without validation. For products that are
    /// symmetric in exact arithmetic.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self { m: (m + t) * 0.5 }
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: data.len(),
                right: dim * dim,
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::EmptyOperator);
        }
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    /// The rank-one operator `v ⊗ v`.
    pub fn outer(v: &DVector<f64>) -> Self {
        Self {
            m: v * v.transpose(),
        }
    }

    /// Orthogonal projector onto the span of orthonormal columns.
    pub fn projector_onto(columns: &DMatrix<f64>) -> Self {
        Self::symmetrized(columns * columns.transpose())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    fn check_dim(&self, other: &SymOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &SymOperator) -> Result<SymOperator> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn try_sub(&self, other: &SymOperator) -> Result<SymOperator> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m - &other.m,
        })
    }

    pub fn scale(&self, c: f64) -> SymOperator {
        Self { m: &self.m * c }
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigen::eigenvalues_desc(&self.m)
    }

    /// Full eigendecomposition in descending order.
    pub fn eigen(&self) -> EigenPairs {
        eigen::eigh_desc(&self.m)
    }

    /// Operator norm `‖A‖∞ = max |λ|`.
    pub fn op_norm(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Sum of absolute eigenvalues.
    pub fn nuclear_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.abs()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Hilbert–Schmidt inner product `Σᵢⱼ AᵢⱼBᵢⱼ`.
    pub fn hs_inner(&self, other: &SymOperator) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.m.dot(&other.m))
    }
}

/// Effective rank `tr(S)/‖S‖∞` of a positive semi-definite operator.
pub fn effective_rank(s: &SymOperator) -> Result<f64> {
    let ev = s.eigenvalues();
    let top = ev[0].abs().max(ev[ev.len() - 1].abs());
    if top == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let tol = rank_tolerance(s.dim(), top);
    let min = ev[ev.len() - 1];
    if min < -tol {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    Ok(s.trace() / top)
}

fn rank_tolerance(dim: usize, norm: f64) -> f64 {
    dim as f64 * f64::EPSILON * norm
}

/// One distinct nonzero eigenvalue `μ_r` and its cluster `Δ_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspace {
    pub value: f64,
    pub multiplicity: usize,
    /// Positions in the descending eigenvalue list.
    pub indices: Range<usize>,
}

/// Spectral decomposition grouped into distinct eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues_desc: Vec<f64>,
    basis: DMatrix<f64>,
    distinct: Vec<Eigenspace>,
    zero_space: Option<Range<usize>>,
    gaps: Vec<f64>,
}

impl SpectralData {
    /// Builds spectral data from an exactly known eigensystem: eigenvalues in
    /// descending order and orthonormal eigenvector columns. Equal values
    /// (bitwise) form one cluster and exact zeros form the zero eigenspace.
    pub fn from_exact(eigenvalues_desc: &[f64], basis: DMatrix<f64>) -> Result<Self> {
        let d = eigenvalues_desc.len();
        if d == 0 {
            return Err(Error::EmptyOperator);
        }
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: basis.ncols(),
            });
        }
        if eigenvalues_desc.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "eigenvalues must be listed in descending order".into(),
            ));
        }
        let mut groups = Vec::new();
        let mut start = 0;
        for j in 1..=d {
            if j == d || eigenvalues_desc[j] != eigenvalues_desc[start] {
                groups.push((start..j, eigenvalues_desc[start]));
                start = j;
            }
        }
        Ok(Self::assemble(eigenvalues_desc.to_vec(), basis, groups))
    }

    fn assemble(
        eigenvalues_desc: Vec<f64>,
        basis: DMatrix<f64>,
        groups: Vec<(Range<usize>, f64)>,
    ) -> Self {
        let mut distinct = Vec::new();
        let mut zero_space = None;
        for (indices, value) in groups {
            if value == 0.0 {
                zero_space = Some(indices);
            } else {
                distinct.push(Eigenspace {
                    value,
                    multiplicity: indices.len(),
                    indices,
                });
            }
        }
        let gaps = distinct
            .iter()
            .enumerate()
            .map(|(r, e)| {
                let others = distinct
                    .iter()
                    .enumerate()
                    .filter(|&(s, _)| s != r)
                    .map(|(_, o)| (e.value - o.value).abs());
                let to_zero = zero_space.as_ref().map(|_| e.value.abs());
                others.chain(to_zero).fold(f64::INFINITY, f64::min)
            })
            .collect();
        Self {
            eigenvalues_desc,
            basis,
            distinct,
            zero_space,
            gaps,
        }
    }

    /// All eigenvalues in descending order, repeated with multiplicity.
    pub fn eigenvalues_desc(&self) -> &[f64] {
        &self.eigenvalues_desc
    }

    /// Orthonormal eigenvectors, one column per entry of
    /// [`eigenvalues_desc`](Self::eigenvalues_desc).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues_desc.len()
    }

    /// Distinct nonzero eigenvalues in descending order.
    pub fn distinct(&self) -> &[Eigenspace] {
        &self.distinct
    }

    pub fn zero_is_eigenvalue(&self) -> bool {
        self.zero_space.is_some()
    }

    pub fn zero_multiplicity(&self) -> usize {
        self.zero_space.as_ref().map_or(0, |r| r.len())
    }

    /// Spectral gaps `ḡ_r`, parallel to [`distinct`](Self::distinct).
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn eigenspace(&self, r: usize) -> Result<&Eigenspace> {
        self.distinct.get(r).ok_or(Error::IndexOutOfRange {
            index: r,
            count: self.distinct.len(),
        })
    }

    pub fn gap(&self, r: usize) -> Result<f64> {
        self.eigenspace(r)?;
        Ok(self.gaps[r])
    }

    /// Orthonormal basis of the eigenspace of `μ_r` (`d × m_r`).
    pub fn eigenvectors(&self, r: usize) -> Result<DMatrix<f64>> {
        let e = self.eigenspace(r)?;
        Ok(self
            .basis
            .columns(e.indices.start, e.multiplicity)
            .into_owned())
    }

    /// Spectral projector `P_r`.
    pub fn projector(&self, r: usize) -> Result<SymOperator> {
        Ok(SymOperator::projector_onto(&self.eigenvectors(r)?))
    }

    /// Projector onto the zero eigenspace, if present.
    pub fn zero_projector(&self) -> Option<SymOperator> {
        self.zero_space.as_ref().map(|range| {
            SymOperator::projector_onto(&self.basis.columns(range.start, range.len()).into_owned())
        })
    }

    /// `C_r = Σ_{s≠r} (μ_r − μ_s)⁻¹ P_s`, including the zero eigenspace when
    /// present.
    pub fn reduced_resolvent(&self, r: usize) -> Result<SymOperator> {
        let target = self.eigenspace(r)?;
        let d = self.dim();
        let mut weights = vec![0.0; d];
        for (s, e) in self.distinct.iter().enumerate() {
            if s != r {
                let w = 1.0 / (target.value - e.value);
                weights[e.indices.clone()].iter_mut().for_each(|x| *x = w);
            }
        }
        if let Some(zero) = &self.zero_space {
            let w = 1.0 / target.value;
            weights[zero.clone()].iter_mut().for_each(|x| *x = w);
        }
        let scaled = DMatrix::from_fn(d, d, |i, j| self.basis[(i, j)] * weights[j]);
        Ok(SymOperator::symmetrized(scaled * self.basis.transpose()))
    }

    /// Rebuilds `Σ_r μ_r P_r` from the grouped spectrum.
    pub fn reconstruct(&self) -> SymOperator {
        let d = self.dim();
        let mut weights = vec![0.0; d];
        for e in &self.distinct {
            weights[e.indices.clone()]
                .iter_mut()
                .for_each(|x| *x = e.value);
        }
        let scaled = DMatrix::from_fn(d, d, |i, j| self.basis[(i, j)] * weights[j]);
        SymOperator::symmetrized(scaled * self.basis.transpose())
    }
}

/// Eigendecomposition with eigenvalue clustering.
///
/// Adjacent eigenvalues (in descending order) closer than
/// `cluster_rel_tol · ‖S‖∞` are merged; the cluster value is their mean.
/// Eigenvalues with `|λ| ≤ dim · ε · ‖S‖∞` are reported as the zero
/// eigenvalue.
pub fn spectral_decompose(s: &SymOperator, cluster_rel_tol: f64) -> Result<SpectralData> {
    if !(cluster_rel_tol > 0.0 && cluster_rel_tol <= 1e-2) {
        return Err(Error::InvalidParameter(format!(
            "cluster_rel_tol {cluster_rel_tol} outside (0, 1e-2]"
        )));
    }
    let EigenPairs { values, vectors } = s.eigen();
    let d = values.len();
    let norm = values[0].abs().max(values[d - 1].abs());
    let zero_tol = rank_tolerance(d, norm);
    let merge_tol = cluster_rel_tol * norm;

    let is_zero = |x: f64| x.abs() <= zero_tol;
    let mut groups: Vec<(Range<usize>, f64)> = Vec::new();
    let mut start = 0;
    for j in 1..=d {
        let split = j == d
            || is_zero(values[j]) != is_zero(values[start])
            || (!is_zero(values[j]) && values[j - 1] - values[j] > merge_tol);
        if split {
            let value = if is_zero(values[start]) {
                0.0
            } else {
                values[start..j].iter().sum::<f64>() / (j - start) as f64
            };
            groups.push((start..j, value));
            start = j;
        }
    }
    Ok(SpectralData::assemble(values, vectors, groups))
}

/// `A_r(Σ) = 2 tr(P_r Σ P_r) tr(C_r Σ C_r)`.
pub fn a_r(spec: &SpectralData, s: &SymOperator, r: usize) -> Result<f64> {
    let (psp, csc) = sandwiches(spec, s, r)?;
    Ok(2.0 * psp.trace() * csc.trace())
}

/// `B_r(Σ) = 2√2 ‖P_r Σ P_r‖₂ ‖C_r Σ C_r‖₂`.
pub fn b_r_normalizer(spec: &SpectralData, s: &SymOperator, r: usize) -> Result<f64> {
    let (psp, csc) = sandwiches(spec, s, r)?;
    Ok(2.0 * std::f64::consts::SQRT_2 * psp.hs_norm() * csc.hs_norm())
}

fn sandwiches(
    spec: &SpectralData,
    s: &SymOperator,
    r: usize,
) -> Result<(SymOperator, SymOperator)> {
    if spec.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            left: spec.dim(),
            right: s.dim(),
        });
    }
    let p = spec.projector(r)?;
    let c = spec.reduced_resolvent(r)?;
    let psp = SymOperator::symmetrized(p.matrix() * s.matrix() * p.matrix());
    let csc = SymOperator::symmetrized(c.matrix() * s.matrix() * c.matrix());
    Ok((psp, csc))
}
