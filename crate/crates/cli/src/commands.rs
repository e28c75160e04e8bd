//! One function per subcommand. Each validates nothing itself; the caller
//! validates the configuration first.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use dqa_core::dynamics::{
    evolve_lindblad, evolve_unitary, initial_state, BlockDensity, IntegratorConfig, LindbladEngine, OutputGrid, Trajectory,
    TrajectoryRecord,
};
use dqa_core::hamiltonian::build_reduced;
use dqa_core::observables::{fit_saturation, optimal_working_point, spectrum, FitResult};
use dqa_core::optimize::{
    grid_search_sqs, optimize_jxx, CatalystResult, Family, SqsChoice, SqsParams, SqsSearch, SweepCase, SweepTable,
};
use dqa_core::problem::MwisInstance;
use dqa_core::protocols::Protocol;

use crate::config::{BathKind, ExperimentConfig, ProtocolKind};
use crate::output::{num, opt_num, read_csv, Artifacts};

pub fn artifacts(config: &ExperimentConfig, command: &str) -> Result<Artifacts> {
    Artifacts::new(&config.output.dir, command, &config.hash())
}

pub fn catalyst(config: &ExperimentConfig, instance: &MwisInstance) -> Result<CatalystResult> {
    let c = &config.catalyst;
    optimize_jxx(instance, (c.lo, c.hi), c.resolution).with_context(|| format!("optimizing j_xx at N={}", instance.n))
}

/// `j_xx` from the config, or the optimized value for this size.
pub fn jxx_for(config: &ExperimentConfig, instance: &MwisInstance) -> Result<f64> {
    match (config.protocol.kind, config.protocol.jxx) {
        (ProtocolKind::Nsdqa, Some(jxx)) => Ok(jxx),
        _ => Ok(catalyst(config, instance)?.jxx),
    }
}

pub fn protocol(config: &ExperimentConfig, instance: &MwisInstance) -> Result<Protocol> {
    let p = &config.protocol;
    Ok(match p.kind {
        ProtocolKind::Qa => Protocol::qa(p.t)?,
        ProtocolKind::Nsdqa => Protocol::nsdqa(p.t, jxx_for(config, instance)?)?,
        ProtocolKind::Sqs => p.sqs_params().context("sqs parameters")?.protocol(p.t)?,
    })
}

fn dissipative(config: &ExperimentConfig) -> bool {
    config.dissipator.kind != BathKind::None
}

/// Integrator settings for runs where only the final state matters.
pub fn final_only(config: &ExperimentConfig) -> IntegratorConfig {
    config.integrator(dissipative(config)).with_output(OutputGrid::Final)
}

pub fn instance(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = config.instance.build()?;
    let out = artifacts(config, "instance")?;
    Ok(vec![out.write(&format!("instance_N{}.json", inst.n), &(inst.to_json() + "\n"))?])
}

pub fn spectrum_cmd(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = config.instance.build()?;
    let protocol = protocol(config, &inst)?;
    let ops = build_reduced(&inst, protocol.jxx())?;
    let times = config.output.grid.times(protocol.total_time())?;
    let mut rows = Vec::with_capacity(times.len());
    let mut best = (f64::INFINITY, 0.0);
    for &t in &times {
        let c = protocol.coefficients(t)?;
        let slice = spectrum(&ops, c, 2);
        let gap = slice.gap();
        if gap < best.0 {
            best = (gap, protocol.fraction(t));
        }
        rows.push(vec![
            num(t),
            num(protocol.fraction(t)),
            num(c.a),
            num(c.b),
            num(c.c),
            num(slice.energies[0]),
            num(slice.energies[1]),
            num(gap),
        ]);
    }
    let out = artifacts(config, "spectrum")?;
    let path = out.csv(
        &format!("spectrum_{}_N{}.csv", protocol.name(), inst.n),
        &["t", "s", "A", "B", "C", "E0", "E1", "gap"],
        &rows,
    )?;
    println!("min gap {} at s = {}", num(best.0), num(best.1));
    Ok(vec![path])
}

pub fn run_trajectory(config: &ExperimentConfig, instance: &MwisInstance, protocol: &Protocol) -> Result<Trajectory> {
    let traj = if dissipative(config) {
        let engine = LindbladEngine::new(instance, protocol.jxx(), config.dissipator.spec(instance.n)?)?;
        let psi0 = initial_state(engine.symmetric_ops())?;
        let rho0 = BlockDensity::from_symmetric(engine.layout.clone(), &psi0)?;
        evolve_lindblad(&engine, protocol, &rho0, &config.integrator(true))?
    } else {
        let ops = build_reduced(instance, protocol.jxx())?;
        evolve_unitary(&ops, protocol, &initial_state(&ops)?, &config.integrator(false))?
    };
    Ok(traj)
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.records.iter().map(|r| r.values().iter().map(|&x| num(x)).collect()).collect()
}

pub fn evolve(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = config.instance.build()?;
    let protocol = protocol(config, &inst)?;
    let traj = run_trajectory(config, &inst, &protocol)?;
    let out = artifacts(config, "evolve")?;
    let path = out.csv(
        &format!("trajectory_{}_N{}_{}.csv", protocol.name(), inst.n, config.dissipator.kind.name()),
        &TrajectoryRecord::COLUMNS,
        &trajectory_rows(&traj),
    )?;
    println!(
        "final fid_gs {} after {} steps",
        num(traj.final_fidelity()),
        traj.steps
    );
    Ok(vec![path])
}

/// Sweep cases for one size following the config's protocol list.
pub fn sweep_cases(config: &ExperimentConfig, instance: &MwisInstance, kinds: &[ProtocolKind]) -> Result<Vec<SweepCase>> {
    kinds
        .iter()
        .map(|kind| {
            let family = match kind {
                ProtocolKind::Qa => Family::Qa,
                ProtocolKind::Nsdqa => Family::Nsdqa {
                    jxx: jxx_for(config, instance)?,
                },
                ProtocolKind::Sqs => Family::Sqs {
                    choice: match config.protocol.sqs_params() {
                        Some(params) => SqsChoice::Fixed { params },
                        None => SqsChoice::Search {
                            grids: config.sqs_grid.grids()?,
                        },
                    },
                },
            };
            Ok(SweepCase {
                instance: instance.clone(),
                family,
            })
        })
        .collect()
}

/// Sweeps every size in `sizes`; the bath rate is resolved per size.
pub fn run_sweep(config: &ExperimentConfig, sizes: &[usize], times: &[f64], kinds: &[ProtocolKind]) -> Result<SweepTable> {
    let mut rows = Vec::new();
    for &n in sizes {
        let inst = config.instance.build_size(n)?;
        let cases = sweep_cases(config, &inst, kinds)?;
        let spec = config.dissipator.spec(n)?;
        let table = dqa_core::optimize::sweep_infidelity(&cases, times, &spec, &final_only(config))?;
        rows.extend(table.rows);
    }
    Ok(SweepTable { rows })
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "n", "T", "T_prime", "protocol", "bath", "infidelity", "jxx", "b_q", "tau_q", "delta_t",
];

pub fn sweep_rows(table: &SweepTable) -> Vec<Vec<String>> {
    table
        .rows
        .iter()
        .map(|r| {
            let (jxx, quench) = match r.protocol {
                Protocol::Nsdqa { jxx, .. } => (Some(jxx), None),
                Protocol::Sqs { t, t_q, delta_t, b_q } => (None, Some((b_q, t_q / t, delta_t))),
                Protocol::Qa { .. } => (None, None),
            };
            vec![
                r.n.to_string(),
                num(r.t),
                num(r.t_prime),
                r.family().to_string(),
                r.bath.clone(),
                num(r.infidelity),
                opt_num(jxx),
                opt_num(quench.map(|q| q.0)),
                opt_num(quench.map(|q| q.1)),
                opt_num(quench.map(|q| q.2)),
            ]
        })
        .collect()
}

pub fn sweep(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let s = &config.sweep;
    let table = run_sweep(config, &s.sizes, &s.times, &s.protocols)?;
    let out = artifacts(config, "sweep")?;
    let path = out.csv(
        &format!("sweep_{}.csv", config.dissipator.kind.name()),
        &SWEEP_COLUMNS,
        &sweep_rows(&table),
    )?;
    Ok(vec![path])
}

#[derive(Debug, Serialize)]
pub struct SqsRecord {
    pub n: usize,
    pub t: f64,
    pub bath: String,
    pub best: SqsParams,
    pub best_fidelity: f64,
    pub t_prime: f64,
}

pub fn heatmap_rows(search: &SqsSearch) -> Vec<Vec<String>> {
    let g = &search.grid;
    let heat = g.heatmap();
    let best_dt = g.best_delta_t();
    let mut rows = Vec::new();
    for (ib, &b) in g.grids.b_q.iter().enumerate() {
        for (it, &tau) in g.grids.tau_q.iter().enumerate() {
            rows.push(vec![num(b), num(tau), num(heat[ib][it]), num(best_dt[ib][it])]);
        }
    }
    rows
}

pub const HEATMAP_COLUMNS: [&str; 4] = ["b_q", "tau_q", "best_fidelity", "best_delta_t"];

pub fn sqs_search(config: &ExperimentConfig, instance: &MwisInstance, t: f64) -> Result<SqsSearch> {
    let spec = config.dissipator.spec(instance.n)?;
    Ok(grid_search_sqs(
        instance,
        t,
        &config.sqs_grid.grids()?,
        &spec,
        &final_only(config),
    )?)
}

pub fn sqs_record(instance: &MwisInstance, search: &SqsSearch) -> SqsRecord {
    SqsRecord {
        n: instance.n,
        t: search.grid.t,
        bath: search.dissipator.name().to_string(),
        best: search.best,
        best_fidelity: search.best_fidelity,
        t_prime: search.grid.t + search.best.delta_t,
    }
}

pub fn optimize_sqs(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = config.instance.build()?;
    let t = config.protocol.t;
    let search = sqs_search(config, &inst, t)?;
    let out = artifacts(config, "optimize-sqs")?;
    let stem = format!("N{}_T{}_{}", inst.n, num(t), config.dissipator.kind.name());
    let heat = out.csv(&format!("sqs_heatmap_{stem}.csv"), &HEATMAP_COLUMNS, &heatmap_rows(&search))?;
    let best = out.json(&format!("sqs_best_{stem}.json"), &sqs_record(&inst, &search))?;
    println!(
        "best B_q={} tau_q={} dT_q={} F={}",
        num(search.best.b_q),
        num(search.best.tau_q),
        num(search.best.delta_t),
        num(search.best_fidelity)
    );
    Ok(vec![heat, best])
}

pub const CATALYST_COLUMNS: [&str; 5] = ["jxx", "delta_c", "s_c", "delta_min", "s_min"];

pub fn catalyst_rows(result: &CatalystResult) -> Vec<Vec<String>> {
    result
        .trace
        .iter()
        .map(|p| {
            vec![
                num(p.jxx),
                opt_num(p.delta_c),
                opt_num(p.s_c),
                num(p.delta_min),
                num(p.s_min),
            ]
        })
        .collect()
}

pub fn optimize_jxx_cmd(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let inst = config.instance.build()?;
    let result = catalyst(config, &inst)?;
    let out = artifacts(config, "optimize-jxx")?;
    let trace = out.csv(&format!("jxx_trace_N{}.csv", inst.n), &CATALYST_COLUMNS, &catalyst_rows(&result))?;
    let best = out.json(&format!("jxx_best_N{}.json", inst.n), &result)?;
    println!(
        "j_xx={} delta_c={} at s={}; delta_min={} at s={}",
        num(result.jxx),
        num(result.delta_c),
        num(result.s_c),
        num(result.delta_min),
        num(result.s_min)
    );
    Ok(vec![trace, best])
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub n: usize,
    pub protocol: String,
    pub bath: String,
    /// `T'` of the smallest sampled infidelity.
    pub t_opt: f64,
    pub start: f64,
    pub fit: FitResult,
}

pub const FIT_COLUMNS: [&str; 10] = [
    "n", "protocol", "bath", "t_opt", "start", "y0", "y_sat", "tau", "residual_norm", "points_used",
];

/// Fits every `(n, protocol, bath)` series of a sweep table.
pub fn fit_table(table: &SweepTable, start: Option<f64>, y_sat: f64) -> Result<Vec<FitRecord>> {
    let mut keys: Vec<(usize, String, String)> = Vec::new();
    for r in &table.rows {
        let key = (r.n, r.family().to_string(), r.bath.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(n, protocol, bath)| {
            let points: Vec<(f64, f64)> = table
                .rows
                .iter()
                .filter(|r| r.n == n && r.family() == protocol && r.bath == bath)
                .map(|r| (r.t_prime, r.infidelity))
                .collect();
            let t_opt = optimal_working_point(&points).context("empty series")?;
            let from = start.unwrap_or(t_opt);
            let fit = fit_saturation(&points, from, y_sat)
                .map_err(|e| e.at(format!("N={n}, {protocol}, bath {bath}")))?;
            Ok(FitRecord {
                n,
                protocol,
                bath,
                t_opt,
                start: from,
                fit,
            })
        })
        .collect()
}

pub fn fit_rows(records: &[FitRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.protocol.clone(),
                r.bath.clone(),
                num(r.t_opt),
                num(r.start),
                num(r.fit.y0),
                num(r.fit.y_sat),
                num(r.fit.tau),
                num(r.fit.residual_norm),
                r.fit.points_used.to_string(),
            ]
        })
        .collect()
}

/// Rebuilds a sweep table from a CSV written by `sweep`.
pub fn parse_sweep_csv(path: &std::path::Path) -> Result<SweepTable> {
    let (header, rows) = read_csv(path)?;
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} lacks column `{name}`", path.display()))
    };
    let (n, t, tp, proto, bath, inf) = (col("n")?, col("T")?, col("T_prime")?, col("protocol")?, col("bath")?, col("infidelity")?);
    let (jxx, b_q, tau_q, delta_t) = (col("jxx")?, col("b_q")?, col("tau_q")?, col("delta_t")?);
    let float = |s: &str| -> Result<f64> { s.parse::<f64>().with_context(|| format!("bad number `{s}`")) };
    let table = rows
        .iter()
        .map(|r| {
            let sweep_time = float(&r[t])?;
            let protocol = match r[proto].as_str() {
                "qa" => Protocol::qa(sweep_time)?,
                "nsdqa" => Protocol::nsdqa(sweep_time, float(&r[jxx])?)?,
                "sqs" => Protocol::sqs(sweep_time, float(&r[tau_q])?, float(&r[delta_t])?, float(&r[b_q])?)?,
                other => bail!("unknown protocol `{other}`"),
            };
            Ok(dqa_core::optimize::SweepRow {
                n: r[n].parse().with_context(|| format!("bad size `{}`", r[n]))?,
                t: sweep_time,
                t_prime: float(&r[tp])?,
                protocol,
                bath: r[bath].clone(),
                infidelity: float(&r[inf])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows: table })
}

pub fn fit(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let input = config.fit.input.as_ref().context("fit needs an input sweep CSV (--input)")?;
    let table = parse_sweep_csv(input)?;
    let records = fit_table(&table, config.fit.start, config.fit.y_sat)?;
    let out = artifacts(config, "fit")?;
    let csv = out.csv("fit.csv", &FIT_COLUMNS, &fit_rows(&records))?;
    let json = out.json("fit.json", &records)?;
    for r in &records {
        println!(
            "N={} {} {}: y0={} tau={}",
            r.n,
            r.protocol,
            r.bath,
            num(r.fit.y0),
            num(r.fit.tau)
        );
    }
    Ok(vec![csv, json])
}
