//! End-to-end checks of the command-line interface: exit codes, file
//! contracts, and the JSON it prints.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use calabiflow::geometry::{GeometryConfig, PotentialField};

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_calabiflow"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cf_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("binary runs").status.code().unwrap_or(-1)
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn flow_run_flat_initial_data() {
    let dir = tmp_dir("flat");
    let cfg = dir.join("config.json");
    write(
        &cfg,
        r#"{
            "geometry": {"backend": "torus", "grid_n": 16, "period": 6.283185307179586},
            "initial": {"kind": "zero"},
            "t_max": 1.0
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run_ok(bin().args(["flow", "run"])
        .arg("--config").arg(&cfg)
        .arg("--out").arg(&out_dir));
    let summary: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("summary JSON on stdout");
    assert_eq!(summary["terminal_status"], "converged");
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "one-row trajectory expected:\n{csv}");
    assert_eq!(lines[0], calabiflow::io::TRAJECTORY_HEADER);
    assert!(out_dir.join("summary.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn flow_run_config_errors_exit_2_without_outputs() {
    let dir = tmp_dir("badcfg");
    let cfg = dir.join("config.json");
    write(&cfg, "{this is not json");
    let out_dir = dir.join("out");
    let code = exit_code(bin().args(["flow", "run"])
        .arg("--config").arg(&cfg)
        .arg("--out").arg(&out_dir));
    assert_eq!(code, 2);
    assert!(!out_dir.join("trajectory.csv").exists());
    assert!(!out_dir.join("summary.json").exists());
    // Validation failure (dt_init > dt_max) also exits 2.
    write(
        &cfg,
        r#"{
            "geometry": {"backend": "torus", "grid_n": 16, "period": 6.283185307179586},
            "initial": {"kind": "zero"},
            "dt_init": 1.0, "dt_max": 0.1
        }"#,
    );
    assert_eq!(
        exit_code(bin().args(["flow", "run"]).arg("--config").arg(&cfg).arg("--out").arg(&out_dir)),
        2
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn flow_run_not_kahler_exits_3_with_summary() {
    let dir = tmp_dir("nk");
    let cfg = dir.join("config.json");
    write(
        &cfg,
        r#"{
            "geometry": {"backend": "torus", "grid_n": 32, "period": 6.283185307179586},
            "initial": {"kind": "cosine", "amplitude": 3.0, "jx": 1, "ky": 0},
            "t_max": 1.0
        }"#,
    );
    let out_dir = dir.join("out");
    let code = exit_code(bin().args(["flow", "run"])
        .arg("--config").arg(&cfg)
        .arg("--out").arg(&out_dir));
    assert_eq!(code, 3);
    // Summary is still written for diagnostics.
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["terminal_status"], "not_kahler");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fit_decay_command_contract() {
    let dir = tmp_dir("fit");
    let csv = dir.join("traj.csv");
    let mut text = String::from("t,calabi_energy\n");
    for k in 0..40 {
        let t = 0.25 * k as f64;
        text.push_str(&format!("{t},{}\n", (-3.0 * t).exp()));
    }
    write(&csv, &text);
    let out = run_ok(bin().args(["flow", "fit-decay"]).arg(&csv).args(["--tail-fraction", "1.0"]));
    let fit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rate = fit["rate"].as_f64().unwrap();
    assert!((rate - 3.0).abs() < 1e-9, "rate {rate}");
    assert!((fit["r_squared"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(fit["window"]["records"].as_u64().unwrap() == 40);

    // Two usable rows: insufficient data, exit 4.
    write(&csv, "t,calabi_energy\n0,1.0\n1,0.5\n");
    assert_eq!(exit_code(bin().args(["flow", "fit-decay"]).arg(&csv)), 4);

    // Missing column: exit 2.
    write(&csv, "t,mabuchi\n0,1.0\n1,0.5\n2,0.25\n");
    assert_eq!(exit_code(bin().args(["flow", "fit-decay"]).arg(&csv)), 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn functionals_eval_contract() {
    let dir = tmp_dir("eval");
    let field = dir.join("field.json");
    let geom = GeometryConfig::torus(64, TAU).unwrap();

    // Zero field: all-zero report.
    let zero = PotentialField::zero(geom).unwrap();
    calabiflow::io::save_torus_field(&field, &zero).unwrap();
    let out = run_ok(bin().args(["functionals", "eval"]).arg("--field").arg(&field));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["aubin_I", "energy_E", "calabi_energy", "s_hat"] {
        assert!(report[key].as_f64().unwrap().abs() < 1e-12, "{key} nonzero");
    }

    // 0.4 cos x: I = 0.16 π² to near round-off, identity residual tiny.
    let phi = PotentialField::from_fn(geom, |x, _| 0.4 * x.cos()).unwrap();
    calabiflow::io::save_torus_field(&field, &phi).unwrap();
    let out = run_ok(bin().args(["functionals", "eval"]).arg("--field").arg(&field));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let i = report["aubin_I"].as_f64().unwrap();
    let expect = 0.16 * std::f64::consts::PI.powi(2);
    assert!((i - expect).abs() <= 1e-10 * expect, "I = {i}");
    assert!(report["identity_residual"].as_f64().unwrap() <= 1e-10 * (1.0 + i));

    // Non-Kähler field: exit 3.
    let bad = PotentialField::from_fn(geom, |x, _| 3.0 * x.cos()).unwrap();
    calabiflow::io::save_torus_field(&field, &bad).unwrap();
    assert_eq!(exit_code(bin().args(["functionals", "eval"]).arg("--field").arg(&field)), 3);

    // Parse failure: exit 2.
    write(&field, "{broken");
    assert_eq!(exit_code(bin().args(["functionals", "eval"]).arg("--field").arg(&field)), 2);

    // Toric field file evaluates against the canonical reference.
    let toric = calabiflow::geometry::toric::ToricPotential::guillemin(
        GeometryConfig::toric(64, 1.0).unwrap(),
    )
    .unwrap();
    calabiflow::io::save_toric_field(&field, &toric).unwrap();
    let out = run_ok(bin().args(["functionals", "eval"]).arg("--field").arg(&field));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["s_hat"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fs_sweep_contract() {
    let dir = tmp_dir("sweep");
    let out_csv = dir.join("sweep.csv");
    run_ok(bin().args(["fs", "sweep", "--p", "1", "--lambda", "1"])
        .arg("--out").arg(&out_csv));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], calabiflow::io::FS_SWEEP_HEADER);
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "1");
    assert_eq!(fields[2], "0"); // lp_norm vanishes at λ = 1

    // Parameter validation: p > 2 and λ < 1 exit 2.
    assert_eq!(
        exit_code(bin().args(["fs", "sweep", "--p", "2.5", "--lambda", "1"]).arg("--out").arg(&out_csv)),
        2
    );
    assert_eq!(
        exit_code(bin().args(["fs", "sweep", "--p", "1", "--lambda", "0.5"]).arg("--out").arg(&out_csv)),
        2
    );
    // p = 2 rows carry an infinite bound but still emit.
    run_ok(bin().args(["fs", "sweep", "--p", "2", "--lambda", "1,10"]).arg("--out").arg(&out_csv));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains(",inf,"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn lelong_probe_contract() {
    let dir = tmp_dir("lelong");
    let out_csv = dir.join("probe.csv");
    let out = run_ok(bin()
        .args(["lelong", "probe", "--gamma", "1.0", "--sigma", "0.06125", "--radii", "1.4,1.2,0.98"])
        .arg("--out").arg(&out_csv));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rel = summary["relative_error_vs_gamma"].as_f64().unwrap();
    assert!(rel <= 0.05, "relative error {rel}");
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], calabiflow::io::LELONG_HEADER);
    assert_eq!(lines.len(), 4); // three radii

    // Radii must decrease: exit 2.
    assert_eq!(
        exit_code(bin()
            .args(["lelong", "probe", "--gamma", "1.0", "--sigma", "0.05", "--radii", "0.5,0.5"])
            .arg("--out").arg(&out_csv)),
        2
    );
    std::fs::remove_dir_all(&dir).ok();
}
