//! Bias estimation from three independent samples, the corrected
//! eigenvector and confidence intervals from the pivots.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_pivot::estimators::{
    ci_bias, ci_proj_error, corrected_vector, pivots, variance_estimate, TripleSample,
    DEFAULT_CORRECTION_FLOOR,
};
use spectral_pivot::perturbation::empirical_projector;
use spectral_pivot::simulation::{build_covariance, sample_gaussian, CovarianceModel};

fn main() -> spectral_pivot::Result<()> {
    let truth = build_covariance(&CovarianceModel::spiked(100, vec![3.0], 1.0).with_rotation(1))?;
    let theta = truth.target_vector()?;
    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut block = || sample_gaussian(&truth.root, n, &mut rng);
    let data = TripleSample::new(block(), block(), block())?;

    let [s_hat, s_tilde, s_bar] = data.covariances()?;
    let vectors = [&s_hat, &s_tilde, &s_bar]
        .map(|s| empirical_projector(&truth.spectral, 0, s).map(|p| p.eigenvectors));
    let [hat, tilde, bar] = vectors;
    let (hat, tilde, bar) = (hat?, tilde?, bar?);

    let p = pivots(&hat, &tilde, &bar, Some(&theta), None)?;
    println!(
        "b̂ = {:.5}, b̃ = {:.5}, denominator {:.5}",
        p.b_hat, p.b_tilde, p.denom
    );
    println!(
        "‖P̂ − P‖₂² = {:.5}, estimate −2b̂ = {:.5}",
        p.proj_error_sq.unwrap(),
        -2.0 * p.b_hat
    );
    println!(
        "variance estimate {:.3e}",
        variance_estimate(p.b_hat, p.b_tilde)
    );

    let theta_hat = hat.column(0).into_owned();
    let checked = corrected_vector(&theta_hat, p.b_hat, DEFAULT_CORRECTION_FLOOR)?;
    let plain = theta_hat.dot(&theta).abs();
    let corrected = checked.dot(&theta).abs();
    println!("⟨θ̂, θ⟩ = {plain:.5}, ⟨θ̌, θ⟩ = {corrected:.5}");

    let ci = ci_bias(p.b_hat, p.b_tilde, 0.9)?;
    println!("90% interval for b: [{:.5}, {:.5}]", ci.lower, ci.upper);
    let ci = ci_proj_error(p.b_hat, p.b_tilde, 0.9)?;
    println!(
        "90% interval for ‖P̂ − P‖₂²: [{:.5}, {:.5}]",
        ci.lower, ci.upper
    );
    Ok(())
}
