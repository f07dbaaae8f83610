//! Norms, clustered spectral decomposition and the variance functionals of a
//! covariance operator with a repeated eigenvalue.

use spectral_pivot::operator::{
    a_r, b_r_normalizer, effective_rank, spectral_decompose, DEFAULT_CLUSTER_REL_TOL,
};
use spectral_pivot::SymOperator;

fn main() -> spectral_pivot::Result<()> {
    let sigma = SymOperator::from_diagonal(&[5.0, 3.0, 3.0, 1.0, 0.0])?;
    println!("‖Σ‖∞ = {}", sigma.op_norm());
    println!("‖Σ‖₂ = {:.6}", sigma.hs_norm());
    println!("‖Σ‖₁ = {}", sigma.nuclear_norm());
    println!("r(Σ) = {}", effective_rank(&sigma)?);

    let spec = spectral_decompose(&sigma, DEFAULT_CLUSTER_REL_TOL)?;
    println!("zero eigenspace dimension: {}", spec.zero_multiplicity());
    for (r, space) in spec.distinct().iter().enumerate() {
        println!(
            "μ_{r} = {}  multiplicity {}  gap {}  A = {:.4}  B = {:.4}",
            space.value,
            space.multiplicity,
            spec.gap(r)?,
            a_r(&spec, &sigma, r)?,
            b_r_normalizer(&spec, &sigma, r)?,
        );
    }

    let back = spec.reconstruct();
    println!(
        "reconstruction error {:.2e}",
        back.try_sub(&sigma)?.op_norm()
    );
    Ok(())
}
