//! Symmetric eigensolvers.
//!
//! All routines return eigenvalues in descending order with eigenvectors as
//! the matching columns. The dense path is `nalgebra`'s implicit QR
//! algorithm. Requests for only the leading eigenpair of a large operator go
//! through a fully reorthogonalized Lanczos iteration instead; it falls back
//! to the dense path whenever it breaks down or fails to converge.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Smallest dimension for which the Lanczos path is attempted.
const LANCZOS_MIN_DIM: usize = 64;
const LANCZOS_MAX_STEPS: usize = 160;
const LANCZOS_CHECK_EVERY: usize = 4;
const LANCZOS_RESIDUAL_TOL: f64 = 1e-13;
const START_VECTOR_SEED: u64 = 0x5eed_1a2c_2057_0001;

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Full eigendecomposition, descending.
pub fn eigh_desc(m: &DMatrix<f64>) -> EigenPairs {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    EigenPairs { values, vectors }
}

/// Eigenvalues only, descending.
pub fn eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Eigenpairs at the given positions of the descending spectrum.
///
/// Panics if `range` is empty or extends past the dimension.
pub fn selected_eigenpairs(m: &DMatrix<f64>, range: Range<usize>) -> EigenPairs {
    let n = m.nrows();
    assert!(
        range.start < range.end && range.end <= n,
        "eigenpair range {range:?} invalid for dimension {n}"
    );
    if range == (0..1) && n >= LANCZOS_MIN_DIM {
        if let Some(top) = lanczos_leading(m) {
            return top;
        }
    }
    let full = eigh_desc(m);
    EigenPairs {
        values: full.values[range.clone()].to_vec(),
        vectors: full.vectors.columns(range.start, range.len()).into_owned(),
    }
}

fn start_vector(n: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_VECTOR_SEED);
    let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = v.norm();
    v / norm
}

/// Leading eigenpair by Lanczos with full reorthogonalization.
///
/// Returns `None` on breakdown (an invariant subspace was found, so the start
/// vector may miss part of the spectrum) or when the step budget runs out.
fn lanczos_leading(a: &DMatrix<f64>) -> Option<EigenPairs> {
    let n = a.nrows();
    let max_steps = n.min(LANCZOS_MAX_STEPS);
    // Row-sum norm bounds the spectral radius.
    let scale = a
        .row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return None;
    }

    let mut basis = DMatrix::<f64>::zeros(n, max_steps + 1);
    basis.set_column(0, &start_vector(n));
    let mut alpha = Vec::with_capacity(max_steps);
    let mut beta: Vec<f64> = Vec::with_capacity(max_steps);

    for j in 0..max_steps {
        let mut w = a * basis.column(j);
        let a_j = basis.column(j).dot(&w);
        alpha.push(a_j);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            let q = basis.columns(0, j + 1);
            let coeffs = q.tr_mul(&w);
            w -= q * coeffs;
        }
        let b_j = w.norm();
        let steps = j + 1;

        let breakdown = b_j <= f64::EPSILON * scale;
        if steps % LANCZOS_CHECK_EVERY == 0 || breakdown || steps == max_steps {
            let t = DMatrix::from_fn(steps, steps, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let ritz = eigh_desc(&t);
            let residual = b_j * ritz.vectors[(steps - 1, 0)].abs();
            if !breakdown && residual <= LANCZOS_RESIDUAL_TOL * scale {
                let mut v = basis.columns(0, steps) * ritz.vectors.column(0);
                v /= v.norm();
                return Some(EigenPairs {
                    values: vec![ritz.values[0]],
                    vectors: DMatrix::from_column_slice(n, 1, v.as_slice()),
                });
            }
        }
        if breakdown {
            return None;
        }
        beta.push(b_j);
        basis.set_column(j + 1, &(w / b_j));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &g * g.transpose() / n as f64
    }

    #[test]
    fn eigh_desc_is_sorted_and_reconstructs() {
        let m = random_spd(12, 3);
        let e = eigh_desc(&m);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let back = &e.vectors * d * e.vectors.transpose();
        assert!((back - m).amax() < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_top_pair() {
        let mut m = random_spd(150, 9);
        m[(0, 0)] += 5.0;
        let top = lanczos_leading(&m).expect("lanczos converges");
        let dense = eigh_desc(&m);
        assert!((top.values[0] - dense.values[0]).abs() < 1e-11);
        let overlap = top.vectors.column(0).dot(&dense.vectors.column(0)).abs();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_breakdown_falls_back() {
        // Two distinct eigenvalues: the Krylov space is exhausted after two steps.
        let mut diag = vec![1.0; 100];
        diag[0] = 4.0;
        let m = DMatrix::from_diagonal(&DVector::from_vec(diag));
        assert!(lanczos_leading(&m).is_none());
        let sel = selected_eigenpairs(&m, 0..1);
        assert_eq!(sel.values, vec![4.0]);
        assert!((sel.vectors[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn selected_slices_match_full() {
        let m = random_spd(20, 4);
        let full = eigh_desc(&m);
        let sel = selected_eigenpairs(&m, 3..6);
        assert_eq!(sel.values, full.values[3..6].to_vec());
        assert_eq!(sel.vectors.ncols(), 3);
    }
}
