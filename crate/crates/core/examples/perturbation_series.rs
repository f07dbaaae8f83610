//! First-order term and resolvent-series remainder of a perturbed spectral
//! projector, compared with the exact empirical projector.

use nalgebra::DMatrix;
use spectral_pivot::operator::{spectral_decompose, DEFAULT_CLUSTER_REL_TOL};
use spectral_pivot::perturbation::{empirical_projector, remainder_series, SeriesTerms};
use spectral_pivot::{SeriesConfig, SymOperator};

fn main() -> spectral_pivot::Result<()> {
    let sigma = SymOperator::from_diagonal(&[4.0, 2.0, 2.0, 1.0])?;
    let spec = spectral_decompose(&sigma, DEFAULT_CLUSTER_REL_TOL)?;
    let r = 1; // the double eigenvalue 2
    let e = SymOperator::new(DMatrix::from_fn(4, 4, |i, j| 0.02 / (1.0 + (i + j) as f64)))?;

    let split = remainder_series(&spec, r, &e, &SeriesConfig::default())?;
    println!(
        "‖E‖/ḡ = {:.4}, orders used {}",
        split.ratio, split.orders_used
    );
    println!("‖L(E)‖∞ = {:.3e}", split.linear.op_norm());
    println!("‖S(E)‖∞ = {:.3e}", split.remainder.op_norm());
    println!("tail bound {:.3e}", split.truncation_residual);

    for (k, term) in SeriesTerms::new(&spec, r, &e, 5)? {
        println!("order {k}: ‖term‖₂ = {:.3e}", term.hs_norm());
    }

    let hat = sigma.try_add(&e)?;
    let emp = empirical_projector(&spec, r, &hat)?;
    let exact = emp.projector.try_sub(&spec.projector(r)?)?;
    let gap = exact.try_sub(&split.linear)?.try_sub(&split.remainder)?;
    println!("matched eigenvalues {:?}", emp.eigenvalues);
    println!("‖P̂ − P − L − S‖∞ = {:.2e}", gap.op_norm());
    Ok(())
}
