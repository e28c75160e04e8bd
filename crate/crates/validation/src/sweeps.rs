//! Infidelity sweeps over sweep time and the saturation fits built on them.

use std::sync::OnceLock;

use dqa_core::dynamics::{gamma_rate, DissipatorSpec, IntegratorConfig};
use dqa_core::observables::{fit_saturation, optimal_working_point};
use dqa_core::optimize::{grid_search_sqs, sweep_infidelity, Family, SqsChoice, SqsGrids, SweepCase, SweepTable};
use dqa_core::{Error, Result};

use crate::baths::DISSIPATIVE_TIMES;
use crate::{catalyst, instance, Outcome};

pub const SIZES: [usize; 3] = [5, 7, 9];
pub const UNITARY_TIMES: [f64; 7] = [10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

fn nsdqa_case(n: usize) -> Result<SweepCase> {
    Ok(SweepCase {
        instance: instance(n)?,
        family: Family::Nsdqa { jxx: catalyst(n)?.jxx },
    })
}

/// NSDQA and searched SQS for every size, shared by the comparison and
/// monotonicity checks.
fn unitary_sweep() -> Result<&'static SweepTable> {
    static TABLE: OnceLock<SweepTable> = OnceLock::new();
    if let Some(t) = TABLE.get() {
        return Ok(t);
    }
    let mut cases = Vec::new();
    for n in SIZES {
        cases.push(nsdqa_case(n)?);
        cases.push(SweepCase {
            instance: instance(n)?,
            family: Family::Sqs {
                choice: SqsChoice::Search {
                    grids: SqsGrids::default(),
                },
            },
        });
    }
    let table = sweep_infidelity(&cases, &UNITARY_TIMES, &DissipatorSpec::None, &IntegratorConfig::unitary())?;
    Ok(TABLE.get_or_init(|| table))
}

/// SQS wins at the shortest sweep time and NSDQA at the longest.
pub fn protocol_comparison() -> Result<Outcome> {
    let table = unitary_sweep()?;
    let mut pass = true;
    let mut lines = Vec::new();
    for n in SIZES {
        let nsdqa = table.series(n, "nsdqa");
        let sqs = table.series(n, "sqs");
        let (first_n, first_s) = (nsdqa[0], sqs[0]);
        let (last_n, last_s) = (*nsdqa.last().unwrap(), *sqs.last().unwrap());
        let short = first_s.1 <= first_n.1;
        let long = last_n.1 <= last_s.1;
        pass &= short && long;
        lines.push(format!(
            "N={n}: shortest SQS {:.3e} (T'={}) vs NSDQA {:.3e} (T'={}) [{}]; longest NSDQA {:.3e} (T'={}) vs SQS {:.3e} (T'={}) [{}]",
            first_s.1,
            first_s.0,
            first_n.1,
            first_n.0,
            if short { "ok" } else { "violated" },
            last_n.1,
            last_n.0,
            last_s.1,
            last_s.0,
            if long { "ok" } else { "violated" },
        ));
    }
    Ok(Outcome::new(pass, lines.join("; ")))
}

/// Unitary NSDQA infidelity never grows by more than 5% from one sweep time
/// to the next.
pub fn nsdqa_monotonicity() -> Result<Outcome> {
    let table = unitary_sweep()?;
    let mut pass = true;
    let mut lines = Vec::new();
    for n in SIZES {
        let series = table.series(n, "nsdqa");
        let worst = series
            .windows(2)
            .map(|w| w[1].1 / w[0].1)
            .fold(0.0, f64::max);
        pass &= worst <= 1.05;
        let values: Vec<String> = series.iter().map(|p| format!("{:.2e}", p.1)).collect();
        lines.push(format!("N={n}: max step ratio {worst:.4} [{}]", values.join(" ")));
    }
    Ok(Outcome::new(pass, format!("{} (limit 1.05)", lines.join("; "))))
}

/// Best grid fidelity at N = 5 does not drop from T = 15 to 50 to 100.
pub fn sqs_saturation() -> Result<Outcome> {
    let inst = instance(5)?;
    let mut best = Vec::new();
    for t in [15.0, 50.0, 100.0] {
        let search = grid_search_sqs(
            &inst,
            t,
            &SqsGrids::default(),
            &DissipatorSpec::None,
            &IntegratorConfig::unitary(),
        )?;
        best.push(search.best_fidelity);
    }
    Ok(Outcome::new(
        best[2] >= best[1] && best[1] >= best[0],
        format!(
            "best fidelity T=15: {:.5}, T=50: {:.5}, T=100: {:.5}",
            best[0], best[1], best[2]
        ),
    ))
}

fn synthetic_recovery() -> Result<(f64, String)> {
    let times: Vec<f64> = (0..16).map(|k| 50.0 * 1.3f64.powi(k)).collect();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (y0, tau) in [(0.02, 800.0), (0.1, 1500.0), (0.3, 4000.0)] {
        // a Landau-Zener branch before the working point must be ignored
        let points: Vec<(f64, f64)> = times
            .iter()
            .map(|&t| {
                let lz = 0.9 * (-t / 60.0).exp();
                (t, lz.max(y0 + (1.0 - y0) * (1.0 - (-t / tau).exp())))
            })
            .collect();
        let start = optimal_working_point(&points).ok_or_else(|| Error::Fit("empty".into()))?;
        let fit = fit_saturation(&points, start, 1.0)?;
        let rel = (fit.tau / tau - 1.0).abs();
        worst = worst.max(rel);
        lines.push(format!("tau {tau}: {:.2e}", rel));
    }
    Ok((worst, lines.join(", ")))
}

/// Synthetic recovery of `tau`, then `tau` from dephasing sweeps at
/// `T_ref = 1400` agreeing across N = 5, 7, 9.
pub fn fit_recovery() -> Result<Outcome> {
    let (synthetic, synthetic_lines) = synthetic_recovery()?;
    let mut taus = Vec::new();
    let mut lines = Vec::new();
    for n in SIZES {
        let spec = DissipatorSpec::Dephasing {
            gamma: gamma_rate(n, 1400.0)?,
        };
        let table = sweep_infidelity(&[nsdqa_case(n)?], &DISSIPATIVE_TIMES, &spec, &IntegratorConfig::lindblad())?;
        let series = table.series(n, "nsdqa");
        let start = optimal_working_point(&series).expect("non-empty sweep");
        let fit = fit_saturation(&series, start, 1.0)?;
        let values: Vec<String> = series.iter().map(|p| format!("{:.3}", p.1)).collect();
        lines.push(format!(
            "N={n}: T'_opt {start}, y0 {:.3}, tau {:.1} [{}]",
            fit.y0,
            fit.tau,
            values.join(" ")
        ));
        taus.push(fit.tau);
    }
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    let spread = (taus.iter().cloned().fold(f64::MIN, f64::max) - taus.iter().cloned().fold(f64::MAX, f64::min)) / mean;
    Ok(Outcome::new(
        synthetic < 0.01 && spread < 0.25,
        format!(
            "synthetic relative tau error {synthetic:.2e} (limit 1e-2; {synthetic_lines}); \
             dephasing tau spread (max - min) / mean = {spread:.3} (limit 0.25); {}",
            lines.join("; ")
        ),
    ))
}
