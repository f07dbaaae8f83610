//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spectral_pivot::cli;
use spectral_pivot::limit::CauchyMixture;
use spectral_pivot::perturbation::{empirical_projector, remainder_series};
use spectral_pivot::simulation::{
    build_covariance, diagnostics, ks_distance, operator_norm_errors, CovarianceModel,
    MonteCarloReport, TrialConfig,
};
use spectral_pivot::{SeriesConfig, SpectralData, SymOperator};

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// A random symmetric PSD matrix of dimension ≤ 10 with repeated
/// eigenvalues and sometimes a zero eigenvalue, plus a target with finite
/// gap.
struct Instance {
    sigma: SymOperator,
    spec: SpectralData,
    r: usize,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let d = rng.random_range(2..=10);
        let mut values = Vec::with_capacity(d);
        let mut current: f64 = rng.random_range(3.0..8.0);
        while values.len() < d {
            let mult = rng.random_range(1..=3).min(d - values.len());
            values.extend(std::iter::repeat_n(current, mult));
            current -= rng.random_range(0.2..1.5);
            if current <= 0.0 {
                current = 0.0;
            }
        }
        if rng.random_bool(0.5) {
            values[d - 1] = 0.0;
        }
        let q = gaussian_matrix(rng, d, d).qr().q();
        let Ok(spec) = SpectralData::from_exact(&values, q.clone()) else {
            continue;
        };
        let count = spec.distinct().len();
        let r = rng.random_range(0..count);
        if !spec.gap(r).unwrap().is_finite() {
            continue;
        }
        let scaled = DMatrix::from_fn(d, d, |i, j| q[(i, j)] * values[j]);
        let sigma = SymOperator::new(scaled * q.transpose()).unwrap();
        return Instance { sigma, spec, r };
    }
}

fn perturbation(rng: &mut ChaCha8Rng, d: usize, norm: f64) -> SymOperator {
    let g = gaussian_matrix(rng, d, d);
    let sym = SymOperator::new((&g + g.transpose()) * 0.5).unwrap();
    sym.scale(norm / sym.op_norm())
}

fn exact_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = SeriesConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let inst = random_instance(&mut rng);
        let gap = inst.spec.gap(inst.r).unwrap();
        let ratio = rng.random_range(0.001..=0.05);
        let e = perturbation(&mut rng, inst.sigma.dim(), ratio * gap);
        let hat = inst.sigma.try_add(&e).unwrap();
        let p_hat = empirical_projector(&inst.spec, inst.r, &hat)
            .unwrap()
            .projector;
        let p = inst.spec.projector(inst.r).unwrap();
        let split = remainder_series(&inst.spec, inst.r, &e, &cfg).unwrap();
        let residual = p_hat
            .try_sub(&p)
            .and_then(|x| x.try_sub(&split.linear))
            .and_then(|x| x.try_sub(&split.remainder))
            .unwrap()
            .op_norm();
        worst = worst.max(residual);
    }
    Outcome {
        id: 1,
        title: "exact decomposition P̂ − P = L + S",
        pass: worst <= 1e-9,
        detail: format!("max residual {worst:.3e} over 200 instances (tol 1e-9)"),
    }
}

fn remainder_certificate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut violations = 0;
    let mut worst_constant: f64 = 0.0;
    for _ in 0..1000 {
        let inst = random_instance(&mut rng);
        let gap = inst.spec.gap(inst.r).unwrap();
        let ratio = rng.random_range(0.001..0.25);
        let e = perturbation(&mut rng, inst.sigma.dim(), ratio * gap);
        let hat = inst.sigma.try_add(&e).unwrap();
        let p_hat = empirical_projector(&inst.spec, inst.r, &hat)
            .unwrap()
            .projector;
        let p = inst.spec.projector(inst.r).unwrap();
        let linear = spectral_pivot::perturbation::linear_term(&inst.spec, inst.r, &e).unwrap();
        let s = p_hat
            .try_sub(&p)
            .unwrap()
            .try_sub(&linear)
            .unwrap()
            .op_norm();
        let rho = e.op_norm() / gap;
        worst_constant = worst_constant.max(s / (rho * rho));
        if s > 14.0 * rho * rho {
            violations += 1;
        }
    }
    Outcome {
        id: 2,
        title: "remainder bound ‖S‖ ≤ 14 (‖E‖/ḡ)²",
        pass: violations == 0,
        detail: format!(
            "{violations} violations in 1000 instances; largest ‖S‖/ρ² = {worst_constant:.3}"
        ),
    }
}

/// `∫_{−∞}^x pdf` by composite Simpson in `θ = atan(y/β)`, where the
/// integrand is smooth and bounded.
fn cdf_by_quadrature(law: &CauchyMixture, x: f64) -> f64 {
    let b = law.beta();
    let lo = -FRAC_PI_2;
    let hi = (x / b).atan();
    let m = 20_000;
    let h = (hi - lo) / m as f64;
    let f = |t: f64| {
        // The integrand tends to 1/π at the left end.
        if t <= -FRAC_PI_2 {
            return FRAC_1_PI;
        }
        let c = t.cos();
        law.pdf(b * t.tan()) * b / (c * c)
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

fn mixture_suite() -> Outcome {
    let laws = [
        CauchyMixture::new(0.0, 1.0).unwrap(),
        CauchyMixture::bias_pivot(),
        CauchyMixture::proj_pivot(),
        CauchyMixture::new(2.0, 0.3).unwrap(),
    ];
    let mut quad_err: f64 = 0.0;
    let mut round_trip: f64 = 0.0;
    for law in &laws {
        for k in -40..=40 {
            let x = k as f64 * 0.25;
            quad_err = quad_err.max((law.cdf(x) - cdf_by_quadrature(law, x)).abs());
            let back = law.quantile(law.cdf(x)).unwrap();
            round_trip = round_trip.max((back - x).abs() / x.abs().max(1.0));
        }
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            round_trip = round_trip.max((law.cdf(law.quantile(p).unwrap()) - p).abs());
        }
    }
    let mut ks_worst: f64 = 0.0;
    let mut ks_detail = Vec::new();
    for (i, law) in [CauchyMixture::bias_pivot(), CauchyMixture::proj_pivot()]
        .iter()
        .enumerate()
    {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + i as u64);
        let direct: Vec<f64> = (0..1_000_000)
            .map(|_| law.sample_direct(&mut rng))
            .collect();
        let ratio: Vec<f64> = (0..1_000_000).map(|_| law.sample_ratio(&mut rng)).collect();
        let kd = ks_distance(&direct, |x| law.cdf(x)).unwrap();
        let kr = ks_distance(&ratio, |x| law.cdf(x)).unwrap();
        ks_worst = ks_worst.max(kd).max(kr);
        ks_detail.push(format!(
            "Y({:.4},{:.4}) direct {kd:.5} ratio {kr:.5}",
            law.alpha(),
            law.beta()
        ));
    }
    Outcome {
        id: 4,
        title: "Y(α, β) CDF, quantile and samplers",
        pass: quad_err <= 1e-8 && round_trip <= 1e-8 && ks_worst <= 0.005,
        detail: format!(
            "quadrature {quad_err:.2e} (1e-8), round trip {round_trip:.2e} (1e-8), KS [{}] (0.005)",
            ks_detail.join("; ")
        ),
    }
}

fn check_line(report: &MonteCarloReport, name: &str) -> (bool, String) {
    let c = report
        .check(name)
        .unwrap_or_else(|| panic!("check {name} missing"));
    let fmt = |v: Option<f64>| v.map_or("undefined".to_owned(), |v| format!("{v:.5}"));
    (
        c.pass,
        format!(
            "{name}: value {} statistic {} threshold {:.5}",
            fmt(c.value),
            fmt(c.statistic),
            c.threshold
        ),
    )
}

fn from_checks(id: u32, title: &'static str, report: &MonteCarloReport, names: &[&str]) -> Outcome {
    let lines: Vec<(bool, String)> = names.iter().map(|n| check_line(report, n)).collect();
    Outcome {
        id,
        title,
        pass: lines.iter().all(|(p, _)| *p),
        detail: lines
            .into_iter()
            .map(|(_, s)| s)
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn small_model_identity() -> f64 {
    let models = [
        CovarianceModel::spiked(8, vec![4.0, 2.0], 1.0)
            .with_rotation(3)
            .with_target(1),
        CovarianceModel::geometric(30, 2.0, 0.8),
        CovarianceModel::explicit(vec![3.0, 2.0, 0.0, 0.0]),
    ];
    let mut worst: f64 = 0.0;
    for (i, model) in models.into_iter().enumerate() {
        let mut cfg = TrialConfig::new(model, 60, 200, 40 + i as u64);
        cfg.oracle_reps = 100;
        let outcomes = spectral_pivot::simulation::run_trials(&cfg, -0.05).unwrap();
        for o in outcomes {
            worst = worst.max((o.pivots.proj_error_sq.unwrap() - o.proj_error_hs_sq).abs());
        }
    }
    worst
}

fn stability(report: &MonteCarloReport) -> Outcome {
    let mut ratios = vec![(
        "reference".to_owned(),
        report
            .check("operator_norm_ratio")
            .and_then(|c| c.value)
            .unwrap_or(f64::NAN),
    )];
    let others = [
        (
            "geometric d=200 n=2000",
            CovarianceModel::geometric(200, 1.0, 0.97),
            2000,
        ),
        (
            "spiked d=50 n=500",
            CovarianceModel::spiked(50, vec![3.0], 1.0),
            500,
        ),
    ];
    for (label, model, n) in others {
        let cfg = TrialConfig::new(model, n, 200, 11);
        let errors = operator_norm_errors(&cfg).unwrap();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let truth = build_covariance(&cfg.model).unwrap();
        let diag = diagnostics(&truth, n).unwrap();
        let q = diag.effective_rank / n as f64;
        ratios.push((
            label.to_owned(),
            mean / (diag.operator_norm * q.sqrt().max(q)),
        ));
    }
    let values: Vec<f64> = ratios.iter().map(|(_, v)| *v).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let in_band = values.iter().all(|v| (0.25..=4.0).contains(v));
    Outcome {
        id: 11,
        title: "operator-norm ratio stability",
        pass: in_band && max / min < 4.0,
        detail: format!(
            "{}; spread {:.3} (< 4)",
            ratios
                .iter()
                .map(|(l, v)| format!("{l} {v:.4}"))
                .collect::<Vec<_>>()
                .join(", "),
            max / min
        ),
    }
}

fn run_cli_verify(config: &Path, out: &Path) -> (i32, Vec<u8>) {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = cli::run(
        [
            "spectral-pivot".as_ref(),
            "verify".as_ref(),
            "--config".as_ref(),
            config.as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
        ],
        &mut stdout,
        &mut stderr,
    );
    assert!(
        code == 0 || code == 1,
        "verify failed: {}",
        String::from_utf8_lossy(&stderr)
    );
    (code, fs::read(out).expect("report written"))
}

fn main() {
    let started = Instant::now();
    let mut outcomes = Vec::new();
    let mut emit = |o: Outcome| {
        println!(
            "criterion {:>2} [{}] {}: {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.detail
        );
        outcomes.push(o.pass);
    };

    emit(exact_decomposition());
    emit(remainder_certificate());

    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json");
    let dir =
        std::env::temp_dir().join(format!("spectral-pivot-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let (code_a, bytes_a) = run_cli_verify(&config, &dir.join("first.json"));
    let report: MonteCarloReport = serde_json::from_slice(&bytes_a).unwrap();

    let (ok, line) = check_line(&report, "projection_error_identity");
    let small = small_model_identity();
    emit(Outcome {
        id: 3,
        title: "per-trial identity ‖P̂ − P‖₂² = 2 − 2⟨θ̂, θ⟩²",
        pass: ok && small <= 1e-12,
        detail: format!("reference run {line}; other models max gap {small:.3e}"),
    });
    emit(mixture_suite());
    emit(from_checks(
        5,
        "projection error statistic vs Φ",
        &report,
        &["proj_error_normal_ks"],
    ));
    emit(from_checks(
        6,
        "bias statistic vs Φ",
        &report,
        &["bias_normal_ks"],
    ));
    emit(from_checks(
        7,
        "bias pivot vs Y(1/2, √(5/12))",
        &report,
        &["bias_pivot_ks"],
    ));
    emit(from_checks(
        8,
        "projection pivot vs Y(5/6, √47/6)",
        &report,
        &["proj_pivot_ks"],
    ));
    emit(from_checks(
        9,
        "variance and denominator moments",
        &report,
        &[
            "proj_error_variance_ratio",
            "denominator_variance_ratio",
            "denominator_mean_ratio",
        ],
    ));
    emit(from_checks(
        10,
        "90% bias interval coverage",
        &report,
        &["bias_ci_coverage"],
    ));
    emit(stability(&report));
    emit(from_checks(
        12,
        "risk–bias identity",
        &report,
        &["risk_bias_identity"],
    ));

    let (code_b, bytes_b) = run_cli_verify(&config, &dir.join("second.json"));
    emit(Outcome {
        id: 13,
        title: "deterministic verify reports",
        pass: bytes_a == bytes_b && code_a == code_b,
        detail: format!("{} bytes, identical: {}", bytes_a.len(), bytes_a == bytes_b),
    });
    let _ = fs::remove_dir_all(&dir);

    if let Some(info) = report
        .informational
        .iter()
        .find(|i| i.name == "proj_pivot_ks_vs_y_1_6")
    {
        println!(
            "info: projection pivot KS vs Y(1/6, √23/6) = {:?}",
            info.value
        );
    }
    let failed = outcomes.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} passed, {failed} failed ({:.0}s)",
        outcomes.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
