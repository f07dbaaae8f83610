use crate::error::{Error, Result};

/// Kolmogorov–Smirnov distance `sup_x |F_N(x) − F(x)|` between the empirical
/// CDF of `sample` and `cdf`. The sample need not be sorted.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "sample contains non-finite values".into(),
        ));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::CauchyMixture;
    use approx::assert_relative_eq;

    #[test]
    fn three_point_cauchy_sample() {
        let c = CauchyMixture::new(0.0, 1.0).unwrap();
        let ks = ks_distance(&[1.0, -1.0, 0.0], |x| c.cdf(x)).unwrap();
        assert_relative_eq!(ks, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn exact_quantiles_give_half_step() {
        let c = CauchyMixture::bias_pivot();
        let n = 50;
        let sample: Vec<f64> = (0..n)
            .map(|i| c.quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        assert_relative_eq!(
            ks_distance(&sample, |x| c.cdf(x)).unwrap(),
            0.5 / n as f64,
            epsilon = 1e-10
        );
    }

    #[test]
    fn single_point_and_errors() {
        assert_eq!(ks_distance(&[0.0], |_| 0.5).unwrap(), 0.5);
        assert_eq!(ks_distance(&[], |_| 0.5), Err(Error::EmptySample));
        assert!(ks_distance(&[f64::NAN], |_| 0.5).is_err());
    }
}
