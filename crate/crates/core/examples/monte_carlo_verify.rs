//! A reduced verification run. Pass a config path to run that instead, for
//! example `configs/reference.json` for the full reference configuration.

use spectral_pivot::cli::RunConfig;
use spectral_pivot::simulation::{verify, CovarianceModel, Thresholds, TrialConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cfg, thresholds) = match std::env::args().nth(1) {
        Some(path) => {
            let rc = RunConfig::load(path.as_ref()).map_err(|e| e.to_string())?;
            (
                rc.trial_config(None).map_err(|e| e.to_string())?,
                rc.thresholds,
            )
        }
        None => {
            let mut cfg =
                TrialConfig::new(CovarianceModel::spiked(60, vec![3.0], 1.0), 600, 400, 1);
            cfg.oracle_reps = 10_000;
            (cfg, Thresholds::default())
        }
    };
    let report = verify(&cfg, &thresholds)?;
    let d = &report.diagnostics;
    println!(
        "r(Σ) = {:.3}, B = {:.4}, r/(B√n) = {:.4}, oracle b = {:.6} ± {:.1e}",
        d.effective_rank, d.b_n, d.rank_over_b_sqrt_n, report.oracle.mean, report.oracle.std_error
    );
    for c in &report.checks {
        println!(
            "{:<28} {:>5}  statistic {:>12}  threshold {:.4}",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.statistic
                .map_or("undefined".into(), |s| format!("{s:.5}")),
            c.threshold
        );
    }
    for i in &report.informational {
        println!("{:<28} {:?}", i.name, i.value);
    }
    Ok(())
}
