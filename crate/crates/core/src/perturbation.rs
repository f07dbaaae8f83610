//! First-order perturbation of spectral projectors and the resolvent series
//! for the remainder.
//!
//! For `Σ̂ = Σ + E` and a distinct eigenvalue `μ_r` of `Σ`,
//!
//! ```text
//! P̂_r − P_r = L_r(E) + S_r(E),    L_r(E) = C_r E P_r + P_r E C_r,
//! ```
//!
//! and `S_r(E)` expands into orders `k ≥ 2`. The order-`k` contribution is
//! the signed sum of words `B_1 E B_2 E ⋯ E B_{k+1}`, where each block is
//! either `P_r` or a power `C_r^e` (`e ≥ 1`), at least one block of each kind
//! occurs, the `C_r` exponents add up to `k`, and the sign is
//! `(−1)^{#P − 1}`. This is the subset/composition enumeration over
//! `L ⊂ {1, …, k+1}` and `ν ∈ V_L`, since `Σ_{l∉L} (ν_l + 1) = k` exactly
//! when `Σ ν_l = |L| − 1`.
//!
//! [`SeriesTerms`] evaluates all words of one order at once by a left-to-right
//! dynamic program over prefixes, keyed by the accumulated `C_r` exponent and
//! whether a `P_r` block has occurred. Each word is still formed by dense
//! left-to-right multiplication, but shared prefixes are multiplied only once.

use nalgebra::{DMatrix, DVector};

use crate::eigen;
use crate::error::{Error, Result};
use crate::operator::{SpectralData, SymOperator};

/// Truncation controls for [`remainder_series`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    /// Highest order included (≥ 2).
    pub k_max: usize,
    /// Stop once a whole order has norm below this.
    pub term_tol: f64,
    /// Required bound on `‖E‖∞ / ḡ_r` (at most 1/4).
    pub convergence_ratio_limit: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            k_max: 30,
            term_tol: 1e-14,
            convergence_ratio_limit: 0.25,
        }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 2 {
            return Err(Error::InvalidParameter("k_max must be at least 2".into()));
        }
        if !(self.term_tol > 0.0) {
            return Err(Error::InvalidParameter("term_tol must be positive".into()));
        }
        if !(self.convergence_ratio_limit > 0.0 && self.convergence_ratio_limit <= 0.25) {
            return Err(Error::InvalidParameter(
                "convergence_ratio_limit must lie in (0, 0.25]".into(),
            ));
        }
        Ok(())
    }
}

/// `P̂_r − P_r` split into its linear part and the truncated remainder.
#[derive(Debug, Clone)]
pub struct PerturbationSplit {
    pub linear: SymOperator,
    pub remainder: SymOperator,
    /// Highest order included in `remainder`.
    pub orders_used: usize,
    /// A priori bound on the operator norm of the omitted orders:
    /// `Σ_{k > orders_used} 4^{k+1} ρ^k` with `ρ = ‖E‖∞/ḡ_r`.
    pub truncation_residual: f64,
    /// `‖E‖∞ / ḡ_r`.
    pub ratio: f64,
}

/// `C_r = Σ_{s≠r} (μ_r − μ_s)⁻¹ P_s` (with the zero eigenspace when present).
pub fn c_operator(spec: &SpectralData, r: usize) -> Result<SymOperator> {
    spec.reduced_resolvent(r)
}

fn check_dims(spec: &SpectralData, e: &SymOperator) -> Result<()> {
    if spec.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            left: spec.dim(),
            right: e.dim(),
        });
    }
    Ok(())
}

/// `L_r(E) = C_r E P_r + P_r E C_r`.
pub fn linear_term(spec: &SpectralData, r: usize, e: &SymOperator) -> Result<SymOperator> {
    check_dims(spec, e)?;
    let p = spec.projector(r)?;
    let c = c_operator(spec, r)?;
    let cep = c.matrix() * e.matrix() * p.matrix();
    let pec = cep.transpose();
    Ok(SymOperator::symmetrized(cep + pec))
}

/// Order-by-order terms of the perturbation series, starting at order 1
/// (which equals `L_r(E)`).
pub struct SeriesTerms {
    p: DMatrix<f64>,
    c: DMatrix<f64>,
    e: DMatrix<f64>,
    k_max: usize,
    order: usize,
    /// Prefix sums indexed by accumulated `C` exponent, for prefixes without
    /// and with a `P` block. `None` marks an identically zero state.
    without_p: Vec<Option<DMatrix<f64>>>,
    with_p: Vec<Option<DMatrix<f64>>>,
}

impl SeriesTerms {
    pub fn new(spec: &SpectralData, r: usize, e: &SymOperator, k_max: usize) -> Result<Self> {
        check_dims(spec, e)?;
        let p = spec.projector(r)?.into_matrix();
        let c = c_operator(spec, r)?.into_matrix();
        let d = p.nrows();

        // Single-block prefixes: −P (each P block carries a factor −1) and C^e.
        let mut without_p = vec![None; k_max + 1];
        let mut with_p = vec![None; k_max + 1];
        with_p[0] = Some(-&p);
        let mut power = DMatrix::<f64>::identity(d, d);
        for slot in without_p.iter_mut().skip(1) {
            power = &power * &c;
            *slot = Some(power.clone());
        }
        Ok(Self {
            p,
            c,
            e: e.matrix().clone(),
            k_max,
            order: 0,
            without_p,
            with_p,
        })
    }

    fn step(&mut self) -> DMatrix<f64> {
        let width = self.k_max + 1;
        let times_e = |states: &[Option<DMatrix<f64>>]| -> Vec<Option<DMatrix<f64>>> {
            states
                .iter()
                .map(|s| s.as_ref().map(|m| m * &self.e))
                .collect()
        };
        let x_without = times_e(&self.without_p);
        let x_with = times_e(&self.with_p);

        let mut next_without: Vec<Option<DMatrix<f64>>> = vec![None; width];
        let mut next_with: Vec<Option<DMatrix<f64>>> = vec![None; width];

        // Append a P block.
        for cexp in 0..width {
            let sum = add_opt(x_without[cexp].as_ref(), x_with[cexp].as_ref());
            next_with[cexp] = sum.map(|m| -(m * &self.p));
        }
        // Append C^e, e ≥ 1: chain[c] = (x[c−1] + chain[c−1]) C.
        for (x, next) in [(&x_without, &mut next_without), (&x_with, &mut next_with)] {
            let mut chain: Option<DMatrix<f64>> = None;
            for cexp in 1..width {
                chain = add_opt(x[cexp - 1].as_ref(), chain.as_ref()).map(|m| m * &self.c);
                if let Some(g) = &chain {
                    next[cexp] = add_opt(next[cexp].as_ref(), Some(g));
                }
            }
        }
        self.without_p = next_without;
        self.with_p = next_with;
        self.order += 1;

        // Completed words of order k have C exponent k and contain a P block;
        // the trailing −1 undoes the extra sign of the first P.
        match &self.with_p[self.order] {
            Some(m) => -m,
            None => DMatrix::zeros(self.p.nrows(), self.p.ncols()),
        }
    }
}

fn add_opt(a: Option<&DMatrix<f64>>, b: Option<&DMatrix<f64>>) -> Option<DMatrix<f64>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a + b),
        (Some(a), None) => Some(a.clone()),
        (None, Some(b)) => Some(b.clone()),
        (None, None) => None,
    }
}

impl Iterator for SeriesTerms {
    type Item = (usize, SymOperator);

    fn next(&mut self) -> Option<Self::Item> {
        if self.order >= self.k_max {
            return None;
        }
        let term = self.step();
        Some((self.order, SymOperator::symmetrized(term)))
    }
}

fn tail_bound(ratio: f64, orders_used: usize) -> f64 {
    let q = 4.0 * ratio;
    if q >= 1.0 {
        return f64::INFINITY;
    }
    4.0 * q.powi(orders_used as i32 + 1) / (1.0 - q)
}

/// Linear term plus the truncated series for `S_r(E)`.
///
/// Requires `‖E‖∞ / ḡ_r < cfg.convergence_ratio_limit`.
pub fn remainder_series(
    spec: &SpectralData,
    r: usize,
    e: &SymOperator,
    cfg: &SeriesConfig,
) -> Result<PerturbationSplit> {
    cfg.validate()?;
    check_dims(spec, e)?;
    let gap = spec.gap(r)?;
    let ratio = e.op_norm() / gap;
    if !(ratio < cfg.convergence_ratio_limit) {
        return Err(Error::SeriesDivergence {
            ratio,
            limit: cfg.convergence_ratio_limit,
        });
    }
    let linear = linear_term(spec, r, e)?;
    let d = e.dim();
    let mut remainder = DMatrix::<f64>::zeros(d, d);
    let mut orders_used = 2;
    for (order, term) in SeriesTerms::new(spec, r, e, cfg.k_max)?.skip(1) {
        remainder += term.matrix();
        orders_used = order;
        // The Hilbert–Schmidt norm dominates the operator norm.
        if term.hs_norm() < cfg.term_tol {
            break;
        }
    }
    Ok(PerturbationSplit {
        linear,
        remainder: SymOperator::symmetrized(remainder),
        orders_used,
        truncation_residual: tail_bound(ratio, orders_used),
        ratio,
    })
}

/// Projector built from the eigenvectors of an empirical operator at the
/// positions `Δ_r` of a known true cluster.
#[derive(Debug, Clone)]
pub struct EmpiricalProjector {
    pub projector: SymOperator,
    /// Empirical eigenvalues at the matched positions (descending).
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one column per matched position.
    pub eigenvectors: DMatrix<f64>,
    /// Whether every matched eigenvalue lies in `(μ_r − ḡ_r/2, μ_r + ḡ_r/2)`.
    pub cluster_separated: bool,
}

/// `P̂_r` for `Σ̂`, matched to the cluster `Δ_r` of `true_spec`.
pub fn empirical_projector(
    true_spec: &SpectralData,
    r: usize,
    sigma_hat: &SymOperator,
) -> Result<EmpiricalProjector> {
    check_dims(true_spec, sigma_hat)?;
    let space = true_spec.eigenspace(r)?;
    let half_gap = true_spec.gaps()[r] / 2.0;
    let pairs = eigen::selected_eigenpairs(sigma_hat.matrix(), space.indices.clone());
    let cluster_separated = pairs
        .values
        .iter()
        .all(|&l| (l - space.value).abs() < half_gap);
    Ok(EmpiricalProjector {
        projector: SymOperator::projector_onto(&pairs.vectors),
        eigenvalues: pairs.values,
        eigenvectors: pairs.vectors,
        cluster_separated,
    })
}

/// Flips `v` so that `⟨v, reference⟩ ≥ 0`; ties keep the input sign.
pub fn align_sign(v: &DVector<f64>, reference: &DVector<f64>) -> DVector<f64> {
    if v.dot(reference) < 0.0 {
        -v
    } else {
        v.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{spectral_decompose, DEFAULT_CLUSTER_REL_TOL};
    use approx::assert_relative_eq;

    fn diag_spec(v: &[f64]) -> (SymOperator, SpectralData) {
        let s = SymOperator::from_diagonal(v).unwrap();
        let spec = spectral_decompose(&s, DEFAULT_CLUSTER_REL_TOL).unwrap();
        (s, spec)
    }

    fn offdiag(eps: f64) -> SymOperator {
        SymOperator::from_row_slice(2, &[0.0, eps, eps, 0.0]).unwrap()
    }

    #[test]
    fn c_operator_hand_cases() {
        let (_, spec) = diag_spec(&[2.0, 1.0]);
        let c = c_operator(&spec, 0).unwrap();
        assert!((c.matrix() - DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])).amax() < 1e-15);

        let (_, spec) = diag_spec(&[2.0, 1.0, 1.0]);
        let c = c_operator(&spec, 1).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.0, 0.0]));
        assert!((c.matrix() - expected).amax() < 1e-15);
        assert!(c_operator(&spec, 5).is_err());
    }

    #[test]
    fn c_operator_includes_zero_eigenspace() {
        let (_, spec) = diag_spec(&[2.0, 1.0, 0.0]);
        let c = c_operator(&spec, 0).unwrap();
        assert_relative_eq!(c.get(1, 1), 1.0);
        assert_relative_eq!(c.get(2, 2), 0.5);
        assert_relative_eq!(c.op_norm(), 1.0 / spec.gaps()[0], max_relative = 1e-12);
    }

    #[test]
    fn linear_term_hand_case() {
        let (_, spec) = diag_spec(&[2.0, 1.0]);
        let eps = 0.3;
        let l = linear_term(&spec, 0, &offdiag(eps)).unwrap();
        assert_relative_eq!(l.get(0, 1), eps, epsilon = 1e-15);
        assert_relative_eq!(l.get(0, 0), 0.0);
        assert_relative_eq!(l.hs_norm().powi(2), 2.0 * eps * eps, max_relative = 1e-14);

        let diag_e = SymOperator::from_diagonal(&[0.1, -0.2]).unwrap();
        assert_eq!(linear_term(&spec, 0, &diag_e).unwrap().hs_norm(), 0.0);
        assert_eq!(
            linear_term(&spec, 0, &SymOperator::zeros(2))
                .unwrap()
                .hs_norm(),
            0.0
        );
        assert!(linear_term(&spec, 0, &SymOperator::zeros(3)).is_err());
    }

    #[test]
    fn first_series_order_is_the_linear_term() {
        let (_, spec) = diag_spec(&[3.0, 1.5, 1.0]);
        let e = SymOperator::from_row_slice(3, &[0.1, 0.2, -0.1, 0.2, 0.0, 0.05, -0.1, 0.05, 0.3])
            .unwrap();
        let (order, first) = SeriesTerms::new(&spec, 0, &e, 5).unwrap().next().unwrap();
        assert_eq!(order, 1);
        let l = linear_term(&spec, 0, &e).unwrap();
        assert!(first.try_sub(&l).unwrap().op_norm() < 1e-15);
    }

    #[test]
    fn zero_perturbation_has_zero_remainder() {
        let (_, spec) = diag_spec(&[2.0, 1.0]);
        let split =
            remainder_series(&spec, 0, &SymOperator::zeros(2), &SeriesConfig::default()).unwrap();
        assert_eq!(split.orders_used, 2);
        assert_eq!(split.remainder.hs_norm(), 0.0);
    }

    #[test]
    fn two_by_two_remainder_matches_closed_form() {
        let (s, spec) = diag_spec(&[2.0, 1.0]);
        let eps = 0.01;
        let e = offdiag(eps);
        let split = remainder_series(&spec, 0, &e, &SeriesConfig::default()).unwrap();
        // Closed form: top eigenvector of [[2, ε], [ε, 1]] at angle φ with
        // tan 2φ = 2ε, so ⟨P̂₁e₁, e₁⟩ − 1 = −(1 − cos 2φ)/2.
        let cos2phi = 1.0 / (1.0 + 4.0 * eps * eps).sqrt();
        let expected = -(1.0 - cos2phi) / 2.0;
        assert_relative_eq!(expected, -9.997000999645e-5, max_relative = 1e-10);
        assert_relative_eq!(split.remainder.get(0, 0), expected, max_relative = 1e-10);

        let hat = empirical_projector(&spec, 0, &s.try_add(&e).unwrap()).unwrap();
        let recon = split.linear.try_add(&split.remainder).unwrap();
        let p = spec.projector(0).unwrap();
        let diff = hat.projector.try_sub(&p).unwrap().try_sub(&recon).unwrap();
        assert!(diff.op_norm() < 1e-10);
    }

    #[test]
    fn second_order_contracts_to_half_linear_norm() {
        let (_, spec) = diag_spec(&[4.0, 2.0, 1.5, 0.5]);
        let e = SymOperator::from_row_slice(
            4,
            &[
                0.01, 0.02, -0.03, 0.01, 0.02, -0.01, 0.02, 0.0, -0.03, 0.02, 0.03, 0.01, 0.01,
                0.0, 0.01, -0.02,
            ],
        )
        .unwrap();
        let second = SeriesTerms::new(&spec, 0, &e, 3).unwrap().nth(1).unwrap().1;
        let p = spec.projector(0).unwrap();
        let l = linear_term(&spec, 0, &e).unwrap();
        let lhs = second.hs_inner(&p).unwrap();
        let rhs = -0.5 * l.hs_norm().powi(2);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) + 1e-18);
    }

    #[test]
    fn series_rejects_large_perturbations() {
        let (_, spec) = diag_spec(&[2.0, 1.0]);
        let err = remainder_series(&spec, 0, &offdiag(0.3), &SeriesConfig::default()).unwrap_err();
        match err {
            Error::SeriesDivergence { ratio, limit } => {
                assert_relative_eq!(ratio, 0.3);
                assert_eq!(limit, 0.25);
            }
            other => panic!("unexpected error {other:?}"),
        }
        let bad = SeriesConfig {
            k_max: 1,
            ..SeriesConfig::default()
        };
        assert!(remainder_series(&spec, 0, &offdiag(0.01), &bad).is_err());
    }

    #[test]
    fn truncation_residual_decreases_with_order() {
        let (_, spec) = diag_spec(&[2.0, 1.0, 0.5]);
        let e = SymOperator::from_row_slice(3, &[0.0, 0.1, 0.05, 0.1, 0.0, 0.02, 0.05, 0.02, 0.0])
            .unwrap();
        let mut last = f64::INFINITY;
        for k_max in 2..12 {
            let cfg = SeriesConfig {
                k_max,
                term_tol: 1e-300,
                ..SeriesConfig::default()
            };
            let split = remainder_series(&spec, 0, &e, &cfg).unwrap();
            assert_eq!(split.orders_used, k_max);
            assert!(split.truncation_residual < last);
            last = split.truncation_residual;
        }
    }

    #[test]
    fn empirical_projector_of_truth_is_exact() {
        let (s, spec) = diag_spec(&[3.0, 2.0, 2.0, 1.0]);
        for r in 0..spec.distinct().len() {
            let hat = empirical_projector(&spec, r, &s).unwrap();
            let p = spec.projector(r).unwrap();
            assert!(hat.projector.try_sub(&p).unwrap().op_norm() < 1e-14);
            assert!(hat.cluster_separated);
        }
    }

    #[test]
    fn empirical_projector_flags_cluster_violation() {
        let (_, spec) = diag_spec(&[2.0, 1.0]);
        let far = SymOperator::from_diagonal(&[3.0, 1.0]).unwrap();
        let hat = empirical_projector(&spec, 0, &far).unwrap();
        assert!(!hat.cluster_separated);
    }

    #[test]
    fn align_sign_cases() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(align_sign(&e1, &e1), e1);
        assert_eq!(align_sign(&-&e1, &e1), e1);
        assert_eq!(align_sign(&-&e2, &e1), -&e2);
    }
}
