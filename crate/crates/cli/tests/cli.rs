use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dqa_cli::output::read_csv;
use sha2::{Digest, Sha256};

fn dqa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqa"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dqa(dir, args);
    assert!(
        out.status.success(),
        "dqa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path).unwrap();
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| if r[i].is_empty() { f64::NAN } else { r[i].parse().unwrap() }).collect()
}

#[test]
fn qa_spectrum_has_a_small_late_gap() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--out", "o", "--points", "201", "spectrum"]);
    let path = dir.path().join("o/spectrum_qa_N5.csv");
    let gaps = column(&path, "gap");
    let s = column(&path, "s");
    assert_eq!(gaps.len(), 201);
    let (i, min) = gaps
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &g)| if g < acc.1 { (i, g) } else { acc });
    assert!(min > 1e-5 && min < 1e-3, "{min}");
    assert!(s[i] > 0.85, "{}", s[i]);
}

#[test]
fn long_qa_run_loses_the_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["--out", "o", "--t", "2000", "--points", "11", "evolve"]);
    assert!(stdout.contains("wrote"));
    let fid = column(&dir.path().join("o/trajectory_qa_N5_none.csv"), "fid_gs");
    assert_eq!(fid.len(), 11);
    assert!((fid[0] - 1.0).abs() < 1e-10);
    assert!(*fid.last().unwrap() < 1.0 / 32.0, "{fid:?}");
    let norm = column(&dir.path().join("o/trajectory_qa_N5_none.csv"), "norm_or_trace");
    assert!(norm.iter().all(|n| (n - 1.0).abs() < 1e-8));
}

#[test]
fn header_hash_matches_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--out", "o", "--n", "7", "--points", "21"];
    ok(dir.path(), &[&args[..], &["spectrum"]].concat());
    let toml = ok(dir.path(), &[&args[..], &["config"]].concat());
    let hash: String = Sha256::digest(toml.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let text = fs::read_to_string(dir.path().join("o/spectrum_qa_N7.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), format!("# config_sha256: {hash}"));
}

#[test]
fn config_file_and_flags_compose() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.toml"),
        "[protocol]\nkind = \"nsdqa\"\nt = 50\njxx = 1.5\n\n[output]\ndir = \"from_file\"\n",
    )
    .unwrap();
    ok(dir.path(), &["--config", "exp.toml", "--points", "5", "evolve"]);
    assert!(dir.path().join("from_file/trajectory_nsdqa_N5_none.csv").exists());
    ok(dir.path(), &["--config", "exp.toml", "--out", "flag", "--t", "20", "--points", "5", "evolve"]);
    let t = column(&dir.path().join("flag/trajectory_nsdqa_N5_none.csv"), "t");
    assert_eq!(*t.last().unwrap(), 20.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--out", "o", "--points", "31", "--protocol", "nsdqa", "--jxx", "1.9", "--t", "40", "evolve"];
    let path = dir.path().join("o/trajectory_nsdqa_N5_none.csv");
    ok(dir.path(), &args);
    let first = fs::read(&path).unwrap();
    ok(dir.path(), &args);
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn exit_codes_separate_config_and_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad_config = dqa(dir.path(), &["--protocol", "qa", "--tau-q", "0.5", "evolve"]);
    assert_eq!(bad_config.status.code(), Some(1));
    let missing = dqa(dir.path(), &["--input", "nope.csv", "fit"]);
    assert_eq!(missing.status.code(), Some(1));

    // flat data leaves tau unidentifiable
    let flat = "n,T,T_prime,protocol,bath,infidelity,jxx,b_q,tau_q,delta_t\n\
                5,100,100,qa,dephasing,0.5,,,,\n\
                5,200,200,qa,dephasing,0.5,,,,\n\
                5,300,300,qa,dephasing,0.5,,,,\n";
    fs::write(dir.path().join("flat.csv"), flat).unwrap();
    let numerical = dqa(dir.path(), &["--input", "flat.csv", "fit"]);
    assert_eq!(numerical.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&numerical.stderr).contains("tau"));
}

#[test]
fn fit_recovers_synthetic_saturation() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("# synthetic\nn,T,T_prime,protocol,bath,infidelity,jxx,b_q,tau_q,delta_t\n");
    for (n, tau) in [(5, 900.0f64), (7, 1100.0)] {
        for t in [50.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0] {
            // dip at T' = 100, saturation beyond
            let y = if t < 100.0 {
                0.6
            } else {
                0.05 + 0.95 * (1.0 - (-t / tau).exp())
            };
            csv.push_str(&format!("{n},{t},{t},nsdqa,dephasing,{y},1.5,,,\n"));
        }
    }
    fs::write(dir.path().join("sweep.csv"), csv).unwrap();
    ok(dir.path(), &["--out", "o", "--input", "sweep.csv", "fit"]);
    let tau = column(&dir.path().join("o/fit.csv"), "tau");
    let y0 = column(&dir.path().join("o/fit.csv"), "y0");
    assert!((tau[0] / 900.0 - 1.0).abs() < 1e-6, "{tau:?}");
    assert!((tau[1] / 1100.0 - 1.0).abs() < 1e-6, "{tau:?}");
    assert!(y0.iter().all(|y| (y - 0.05).abs() < 1e-6));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/fit.json")).unwrap()).unwrap();
    assert_eq!(json[0]["t_opt"], 100.0);
}

#[test]
fn sweep_rows_carry_the_chosen_quench() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "--out", "o", "--protocols", "nsdqa,sqs", "--protocol", "nsdqa", "--jxx", "1.9281907184743696", "--times", "10,50",
            "sweep",
        ],
    );
    let path = dir.path().join("o/sweep_none.csv");
    let (header, rows) = read_csv(&path).unwrap();
    assert_eq!(header.len(), 10);
    assert_eq!(rows.len(), 4);
    let inf = column(&path, "infidelity");
    assert!(inf.iter().all(|&x| (0.0..=1.0).contains(&x)));
    // SQS at T = 50 beats NSDQA at T = 50
    assert!(inf[3] < inf[1], "{inf:?}");
    let t_prime = column(&path, "T_prime");
    let delta = column(&path, "delta_t");
    assert_eq!(t_prime[3], 50.0 + delta[3]);
}

#[test]
fn reproduce_quick_bundles() {
    let dir = tempfile::tempdir().unwrap();
    for study in ["app-b", "fig5", "fig7"] {
        ok(dir.path(), &["--out", "r", "reproduce", study, "--quick"]);
    }
    let heat = dir.path().join("r/app-b/heatmap_none_T100.csv");
    let fid = column(&heat, "best_fidelity");
    assert_eq!(fid.len(), 5 * 5);
    assert!(fid.iter().all(|&f| (0.0..=1.0 + 1e-9).contains(&f)));
    assert!(dir.path().join("r/app-b/best_dephasing_T15.json").exists());

    let sweep = dir.path().join("r/fig5/sweep_unitary.csv");
    assert_eq!(read_csv(&sweep).unwrap().1.len(), 3 * 3);

    let fit = dir.path().join("r/fig7/fit.csv");
    let tau = column(&fit, "tau");
    assert_eq!(tau.len(), 1);
    assert!(tau[0] > 100.0 && tau[0] < 1e5, "{tau:?}");
    assert!(dir.path().join("r/fig7/fit_curves.csv").exists());
}
