use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_pivot::limit::std_normal_cdf;
use spectral_pivot::simulation::ks_distance;
use spectral_pivot::CauchyMixture;

fn main() -> spectral_pivot::Result<()> {
    for (name, law) in [
        ("bias pivot", CauchyMixture::bias_pivot()),
        ("projection pivot", CauchyMixture::proj_pivot()),
    ] {
        println!("{name}: Y({:.6}, {:.6})", law.alpha(), law.beta());
        println!("  pdf(0) = {:.12}", law.pdf(0.0));
        println!("  cdf(1) = {:.12}", law.cdf(1.0));
        for level in [0.8, 0.9, 0.95] {
            let q = law.quantile(1.0 - (1.0 - level) / 2.0)?;
            println!("  two-sided {level} quantile = {q:.6}");
        }

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let direct: Vec<f64> = (0..100_000).map(|_| law.sample_direct(&mut rng)).collect();
        let ratio: Vec<f64> = (0..100_000).map(|_| law.sample_ratio(&mut rng)).collect();
        println!(
            "  KS direct {:.4}, ratio-of-normals {:.4}",
            ks_distance(&direct, |x| law.cdf(x))?,
            ks_distance(&ratio, |x| law.cdf(x))?
        );
    }
    println!("Φ(1.96) = {:.16}", std_normal_cdf(1.96));
    Ok(())
}
