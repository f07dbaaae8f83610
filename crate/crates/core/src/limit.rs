//! The symmetric Cauchy mixture `Y(α, β)` and the standard normal CDF.
//!
//! `Y(α, β)` has density
//!
//! ```text
//! ½ [ β⁻¹ f((x − α)/β) + β⁻¹ f((x + α)/β) ],    f(t) = 1 / (π (1 + t²)),
//! ```
//!
//! an equal-weight mixture of Cauchy laws at `±α` with scale `β`. It is the
//! law of `ξ/|η|` for a centered Gaussian pair with `σ_ξ/σ_η = √(α² + β²)`
//! and correlation `ρ = α/√(α² + β²)`, which gives the second sampler.

use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const QUANTILE_PROB_TOL: f64 = 1e-12;

/// Parameters of `Y(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyMixture {
    alpha: f64,
    beta: f64,
}

impl CauchyMixture {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and non-negative, got {alpha}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and positive, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Limit law of the studentized bias pivot: `Y(1/2, √(5/12))`.
    pub fn bias_pivot() -> Self {
        Self {
            alpha: 0.5,
            beta: (5.0_f64 / 12.0).sqrt(),
        }
    }

    /// Limit law used for the studentized projection-error pivot:
    /// `Y(5/6, √47/6)`.
    pub fn proj_pivot() -> Self {
        Self {
            alpha: 5.0 / 6.0,
            beta: 47.0_f64.sqrt() / 6.0,
        }
    }

    /// `Y(1/6, √23/6)`: the law of `⟨Z, u+v⟩/|⟨Z, v−w⟩|` obtained from the
    /// joint Gaussian limit of the projection error and the two bias
    /// estimators. Reported alongside [`proj_pivot`](Self::proj_pivot) as a
    /// diagnostic.
    pub fn proj_pivot_joint_limit() -> Self {
        Self {
            alpha: 1.0 / 6.0,
            beta: 23.0_f64.sqrt() / 6.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let f = |t: f64| FRAC_1_PI / (1.0 + t * t);
        0.5 * (f((x - self.alpha) / self.beta) + f((x + self.alpha) / self.beta)) / self.beta
    }

    pub fn cdf(&self, x: f64) -> f64 {
        0.5 * (cauchy_cdf((x - self.alpha) / self.beta) + cauchy_cdf((x + self.alpha) / self.beta))
    }

    /// Inverse CDF by bisection on a geometrically grown bracket.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Probability(p));
        }
        if p == 0.5 {
            return Ok(0.0);
        }
        let mut step = self.alpha + self.beta;
        let (mut lo, mut hi) = if p > 0.5 { (0.0, step) } else { (-step, 0.0) };
        while p > 0.5 && self.cdf(hi) < p {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
        while p < 0.5 && self.cdf(lo) > p {
            hi = lo;
            step *= 2.0;
            lo -= step;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            let f = self.cdf(mid);
            if (f - p).abs() <= QUANTILE_PROB_TOL && (hi - lo) <= 1e-9 * mid.abs().max(1.0) {
                return Ok(mid);
            }
            if f < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// `s·α + β·tan(π(U − ½))` with a fair sign `s`.
    pub fn sample_direct<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let u: f64 = rng.random();
        sign * self.alpha + self.beta * (PI * (u - 0.5)).tan()
    }

    /// `(σ_ξ/σ_η, ρ)` of the Gaussian pair whose ratio `ξ/|η|` has this law.
    pub fn ratio_parameters(&self) -> (f64, f64) {
        let sigma_ratio = self.alpha.hypot(self.beta);
        (sigma_ratio, self.alpha / sigma_ratio)
    }

    /// `ξ/|η|` for correlated centered normals.
    pub fn sample_ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (sigma_ratio, rho) = self.ratio_parameters();
        let eta: f64 = rng.sample(StandardNormal);
        let indep: f64 = rng.sample(StandardNormal);
        let xi = sigma_ratio * (rho * eta + (1.0 - rho * rho).sqrt() * indep);
        xi / eta.abs()
    }
}

/// Standard Cauchy CDF, accurate in both tails.
fn cauchy_cdf(t: f64) -> f64 {
    FRAC_1_PI * 1.0_f64.atan2(-t)
}

/// Standard normal CDF `Φ(x) = ½ erfc(−x/√2)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}
