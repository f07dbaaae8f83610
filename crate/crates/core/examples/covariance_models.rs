//! Ground-truth models and the two ways of drawing a sample covariance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_pivot::estimators::sample_covariance;
use spectral_pivot::simulation::{
    build_covariance, sample_gaussian, sample_wishart, CovarianceModel,
};

fn main() -> spectral_pivot::Result<()> {
    let models = [
        CovarianceModel::spiked(50, vec![3.0, 1.5], 1.0),
        CovarianceModel::geometric(50, 1.0, 0.9),
        CovarianceModel::explicit(vec![3.0, 2.0, 1.0, 0.0]).with_rotation(7),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for model in models {
        let truth = build_covariance(&model)?;
        let n = 500;
        let direct = sample_covariance(&sample_gaussian(&truth.root, n, &mut rng))?;
        let wishart = sample_wishart(&truth, n, &mut rng);
        println!(
            "{:?} d={}: ‖Σ̂ − Σ‖∞ direct {:.4}, wishart {:.4}",
            model.spectrum,
            model.dim,
            direct.try_sub(&truth.sigma)?.op_norm(),
            wishart.try_sub(&truth.sigma)?.op_norm()
        );
    }
    Ok(())
}
