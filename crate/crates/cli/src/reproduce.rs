//! Figure-level bundles. Each study writes into `<out>/<study>/` and starts
//! from the loaded configuration, overriding only what the study fixes.

use std::path::PathBuf;

use anyhow::{Context, Result};

use dqa_core::hamiltonian::build_reduced;
use dqa_core::observables::gap_trace;
use dqa_core::optimize::SweepTable;
use dqa_core::protocols::Protocol;

use crate::commands::{self, FIT_COLUMNS, HEATMAP_COLUMNS, SWEEP_COLUMNS};
use crate::config::{Axis, BathKind, ExperimentConfig, ProtocolKind};
use crate::output::num;
use dqa_core::dynamics::{OutputGrid, TrajectoryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Study {
    /// QA fidelity versus T, a long QA trajectory and the QA gap.
    Fig3,
    /// NSDQA and SQS trajectories near T' = 100 with their gaps.
    Fig4,
    /// Unitary infidelity sweeps for QA, NSDQA and SQS.
    Fig5,
    /// Unitary infidelity against system size.
    Fig6,
    /// Dephasing sweeps with saturation fits.
    Fig7,
    /// Gain-and-loss sweeps at two bath temperatures.
    Fig8,
    /// SQS grid-search heatmaps, unitary and with dephasing.
    AppB,
    All,
}

impl Study {
    pub fn name(&self) -> &'static str {
        match self {
            Study::Fig3 => "fig3",
            Study::Fig4 => "fig4",
            Study::Fig5 => "fig5",
            Study::Fig6 => "fig6",
            Study::Fig7 => "fig7",
            Study::Fig8 => "fig8",
            Study::AppB => "app-b",
            Study::All => "all",
        }
    }
}

const ALL: [Study; 7] = [
    Study::Fig3,
    Study::Fig4,
    Study::Fig5,
    Study::Fig6,
    Study::Fig7,
    Study::Fig8,
    Study::AppB,
];

pub fn run(base: &ExperimentConfig, study: Study, quick: bool) -> Result<Vec<PathBuf>> {
    if study == Study::All {
        let mut paths = Vec::new();
        for s in ALL {
            paths.extend(run(base, s, quick)?);
        }
        return Ok(paths);
    }
    let mut config = base.clone();
    config.output.dir = base.output.dir.join(study.name());
    config.dissipator.kind = BathKind::None;
    config.dissipator.gamma = None;
    config.dissipator.t_ref = None;
    config.dissipator.beta = None;
    if quick {
        config.sweep.sizes = vec![5];
        config.sqs_grid.b_q = Axis::new(0.0, 1.0, 0.25);
        config.sqs_grid.tau_q = Axis::new(0.5, 1.0, 0.125);
        config.sqs_grid.delta_t = Axis::new(0.0, 20.0, 1.0);
    } else {
        config.sweep.sizes = vec![5, 7, 9];
    }
    config.validate()?;
    match study {
        Study::Fig3 => fig3(config, quick),
        Study::Fig4 => fig4(config, quick),
        Study::Fig5 | Study::Fig6 => unitary_sweeps(config, study, quick),
        Study::Fig7 => dephasing(config, quick),
        Study::Fig8 => gain_loss(config, quick),
        Study::AppB => heatmaps(config, quick),
        Study::All => unreachable!(),
    }
    .with_context(|| format!("study {}", study.name()))
}

fn set_protocol(config: &mut ExperimentConfig, kind: ProtocolKind, t: f64) {
    config.protocol.kind = kind;
    config.protocol.t = t;
    config.protocol.jxx = None;
    config.protocol.tau_q = None;
    config.protocol.delta_t = None;
    config.protocol.b_q = None;
}

fn unitary_times(quick: bool) -> Vec<f64> {
    if quick {
        vec![10.0, 50.0, 100.0]
    } else {
        vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0]
    }
}

fn dissipative_times(quick: bool) -> Vec<f64> {
    if quick {
        vec![100.0, 300.0, 1000.0, 2000.0]
    } else {
        vec![100.0, 200.0, 400.0, 700.0, 1000.0, 1500.0, 2000.0, 3000.0]
    }
}

fn gap_rows(config: &ExperimentConfig, protocol: &Protocol, points: usize) -> Result<Vec<Vec<String>>> {
    let inst = config.instance.build()?;
    let ops = build_reduced(&inst, protocol.jxx())?;
    let times = OutputGrid::Uniform { points }.times(protocol.total_time())?;
    let trace = gap_trace(&ops, protocol, &times)?;
    Ok(trace
        .points
        .iter()
        .map(|p| vec![num(p.t), num(p.s), num(p.gap)])
        .collect())
}

fn fig3(mut config: ExperimentConfig, quick: bool) -> Result<Vec<PathBuf>> {
    let out = commands::artifacts(&config, "reproduce fig3")?;
    let inst = config.instance.build()?;
    let times: Vec<f64> = if quick {
        vec![10.0, 100.0, 1000.0]
    } else {
        vec![10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 1e4, 3e4, 1e5]
    };
    let table = commands::run_sweep(&config, &[inst.n], &times, &[ProtocolKind::Qa])?;
    let fid: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), num(r.t), num(1.0 - r.infidelity)])
        .collect();
    let mut paths = vec![out.csv("qa_fidelity.csv", &["n", "T", "fidelity"], &fid)?];

    let t_long = if quick { 200.0 } else { 2000.0 };
    set_protocol(&mut config, ProtocolKind::Qa, t_long);
    config.output.grid = OutputGrid::Uniform { points: 401 };
    let protocol = commands::protocol(&config, &inst)?;
    let traj = commands::run_trajectory(&config, &inst, &protocol)?;
    paths.push(out.csv("qa_trajectory.csv", &TrajectoryRecord::COLUMNS, &commands::trajectory_rows(&traj))?);
    paths.push(out.csv("qa_gap.csv", &["t", "s", "gap"], &gap_rows(&config, &protocol, 1001)?)?);
    Ok(paths)
}

fn fig4(mut config: ExperimentConfig, quick: bool) -> Result<Vec<PathBuf>> {
    let out = commands::artifacts(&config, "reproduce fig4")?;
    let inst = config.instance.build()?;
    let t = 100.0;
    config.output.grid = OutputGrid::Uniform { points: if quick { 201 } else { 1001 } };
    let mut paths = Vec::new();

    set_protocol(&mut config, ProtocolKind::Nsdqa, t);
    let jxx = commands::jxx_for(&config, &inst)?;
    config.protocol.jxx = Some(jxx);
    let nsdqa = commands::protocol(&config, &inst)?;
    let traj = commands::run_trajectory(&config, &inst, &nsdqa)?;
    paths.push(out.csv("nsdqa_trajectory.csv", &TrajectoryRecord::COLUMNS, &commands::trajectory_rows(&traj))?);
    paths.push(out.csv("nsdqa_gap.csv", &["t", "s", "gap"], &gap_rows(&config, &nsdqa, 1001)?)?);

    let search = commands::sqs_search(&config, &inst, t)?;
    set_protocol(&mut config, ProtocolKind::Sqs, t);
    config.protocol.b_q = Some(search.best.b_q);
    config.protocol.tau_q = Some(search.best.tau_q);
    config.protocol.delta_t = Some(search.best.delta_t);
    let sqs = commands::protocol(&config, &inst)?;
    let traj = commands::run_trajectory(&config, &inst, &sqs)?;
    paths.push(out.csv("sqs_trajectory.csv", &TrajectoryRecord::COLUMNS, &commands::trajectory_rows(&traj))?);
    paths.push(out.json("sqs_best.json", &commands::sqs_record(&inst, &search))?);
    Ok(paths)
}

fn write_sweep(config: &ExperimentConfig, name: &str, table: &SweepTable) -> Result<PathBuf> {
    let out = commands::artifacts(config, "reproduce")?;
    out.csv(name, &SWEEP_COLUMNS, &commands::sweep_rows(table))
}

fn unitary_sweeps(mut config: ExperimentConfig, study: Study, quick: bool) -> Result<Vec<PathBuf>> {
    set_protocol(&mut config, ProtocolKind::Nsdqa, 100.0);
    let kinds = [ProtocolKind::Qa, ProtocolKind::Nsdqa, ProtocolKind::Sqs];
    let table = commands::run_sweep(&config, &config.sweep.sizes.clone(), &unitary_times(quick), &kinds)?;
    if study == Study::Fig5 {
        return Ok(vec![write_sweep(&config, "sweep_unitary.csv", &table)?]);
    }
    // infidelity against N, one row per (T, protocol, N)
    let mut rows: Vec<_> = table.rows.iter().collect();
    rows.sort_by(|a, b| {
        a.t.partial_cmp(&b.t)
            .unwrap()
            .then(a.family().cmp(b.family()))
            .then(a.n.cmp(&b.n))
    });
    let out = commands::artifacts(&config, "reproduce fig6")?;
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.t),
                r.family().to_string(),
                r.n.to_string(),
                num(r.t_prime),
                num(r.infidelity),
            ]
        })
        .collect();
    Ok(vec![out.csv(
        "infidelity_vs_n.csv",
        &["T", "protocol", "n", "T_prime", "infidelity"],
        &body,
    )?])
}

fn fit_outputs(config: &ExperimentConfig, table: &SweepTable) -> Result<Vec<PathBuf>> {
    let out = commands::artifacts(config, "reproduce fit")?;
    let records = commands::fit_table(table, config.fit.start, config.fit.y_sat)?;
    let mut curves = Vec::new();
    for r in &records {
        let t_max = table
            .rows
            .iter()
            .filter(|row| row.n == r.n && row.family() == r.protocol && row.bath == r.bath)
            .map(|row| row.t_prime)
            .fold(r.start, f64::max);
        for k in 0..=100 {
            let t = r.start + (t_max - r.start) * k as f64 / 100.0;
            let y = r.fit.y0 + (r.fit.y_sat - r.fit.y0) * (1.0 - (-t / r.fit.tau).exp());
            curves.push(vec![r.n.to_string(), r.protocol.clone(), r.bath.clone(), num(t), num(y)]);
        }
    }
    Ok(vec![
        out.csv("fit.csv", &FIT_COLUMNS, &commands::fit_rows(&records))?,
        out.json("fit.json", &records)?,
        out.csv("fit_curves.csv", &["n", "protocol", "bath", "T_prime", "infidelity"], &curves)?,
    ])
}

fn dephasing(mut config: ExperimentConfig, quick: bool) -> Result<Vec<PathBuf>> {
    set_protocol(&mut config, ProtocolKind::Nsdqa, 100.0);
    config.dissipator.kind = BathKind::Dephasing;
    config.dissipator.t_ref = Some(1400.0);
    config.validate()?;
    let kinds: &[ProtocolKind] = if quick {
        &[ProtocolKind::Nsdqa]
    } else {
        &[ProtocolKind::Nsdqa, ProtocolKind::Sqs]
    };
    let table = commands::run_sweep(&config, &config.sweep.sizes.clone(), &dissipative_times(quick), kinds)?;
    let mut paths = vec![write_sweep(&config, "sweep_dephasing.csv", &table)?];
    paths.extend(fit_outputs(&config, &table)?);
    Ok(paths)
}

fn gain_loss(mut config: ExperimentConfig, quick: bool) -> Result<Vec<PathBuf>> {
    set_protocol(&mut config, ProtocolKind::Nsdqa, 100.0);
    config.dissipator.kind = BathKind::Gainloss;
    config.dissipator.t_ref = Some(1400.0);
    let kinds: &[ProtocolKind] = if quick {
        &[ProtocolKind::Nsdqa]
    } else {
        &[ProtocolKind::Nsdqa, ProtocolKind::Sqs]
    };
    let mut paths = Vec::new();
    for beta in [0.1, 1.0] {
        config.dissipator.beta = Some(beta);
        config.validate()?;
        let table = commands::run_sweep(&config, &config.sweep.sizes.clone(), &dissipative_times(quick), kinds)?;
        paths.push(write_sweep(&config, &format!("sweep_gainloss_beta{beta}.csv"), &table)?);
    }
    Ok(paths)
}

fn heatmaps(mut config: ExperimentConfig, _quick: bool) -> Result<Vec<PathBuf>> {
    let inst = config.instance.build()?;
    let mut paths = Vec::new();
    for (bath, t_ref) in [(BathKind::None, None), (BathKind::Dephasing, Some(50.0))] {
        config.dissipator.kind = bath;
        config.dissipator.t_ref = t_ref;
        config.validate()?;
        let out = commands::artifacts(&config, "reproduce app-b")?;
        for t in [15.0, 50.0, 100.0] {
            let search = commands::sqs_search(&config, &inst, t)?;
            let stem = format!("{}_T{}", bath.name(), num(t));
            paths.push(out.csv(
                &format!("heatmap_{stem}.csv"),
                &HEATMAP_COLUMNS,
                &commands::heatmap_rows(&search),
            )?);
            paths.push(out.json(&format!("best_{stem}.json"), &commands::sqs_record(&inst, &search))?);
        }
    }
    Ok(paths)
}
