//! Command-line driver: flow runs, decay fits, functional reports, sweep
//! tables, and Lelong probes, with file-based configs and deterministic
//! CSV/JSON outputs.

// Validation guards use negated comparisons (`!(x > 0.0)`) so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use calabiflow::error::Error;
use calabiflow::flow::{self, FlowConfig, SnapshotView};
use calabiflow::fubini_study::{self, FsProbe};
use calabiflow::geometry::{Backend, GeometryConfig};
use calabiflow::io::{self, FsSweepRow, LoadedField, RunManifest};
use calabiflow::regularity::{self, ProbeConfig};
use calabiflow::{functionals, Measure};

#[derive(Parser)]
#[command(name = "calabiflow", version, about = "Calabi flow numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Flow integration and trajectory analysis.
    Flow {
        #[command(subcommand)]
        cmd: FlowCmd,
    },
    /// Functional evaluation on stored fields.
    Functionals {
        #[command(subcommand)]
        cmd: FunctionalsCmd,
    },
    /// Scaled round-metric family sweeps.
    Fs {
        #[command(subcommand)]
        cmd: FsCmd,
    },
    /// Lelong-number probes.
    Lelong {
        #[command(subcommand)]
        cmd: LelongCmd,
    },
}

#[derive(Subcommand)]
enum FlowCmd {
    /// Integrate the flow described by a JSON config into an output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an exponential decay rate to the Calabi energy column of a
    /// trajectory CSV.
    FitDecay {
        csv: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        tail_fraction: f64,
    },
}

#[derive(Subcommand)]
enum FunctionalsCmd {
    /// Print the functional report of a stored field.
    Eval {
        #[arg(long)]
        field: PathBuf,
    },
}

#[derive(Subcommand)]
enum FsCmd {
    /// Tabulate L^p gradient norms against the majorant bound.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum LelongCmd {
    /// Estimate the Lelong number of a mollified log singularity.
    Probe {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        grid_n: usize,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NotKahler { .. } | Error::NotConvex { .. } | Error::StepFailure { .. } => 3,
        Error::InsufficientData { .. } => 4,
        Error::QuadratureNotConverged { .. } => 5,
        _ => 2,
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code_for(&err))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Flow { cmd: FlowCmd::Run { config, out } } => cmd_flow_run(&config, &out),
        Cmd::Flow { cmd: FlowCmd::FitDecay { csv, tail_fraction } } => {
            cmd_fit_decay(&csv, tail_fraction)
        }
        Cmd::Functionals { cmd: FunctionalsCmd::Eval { field } } => cmd_functionals_eval(&field),
        Cmd::Fs { cmd: FsCmd::Sweep { p, lambda, out } } => cmd_fs_sweep(&p, &lambda, &out),
        Cmd::Lelong { cmd: LelongCmd::Probe { gamma, sigma, radii, out, grid_n } } => {
            cmd_lelong_probe(gamma, sigma, &radii, &out, grid_n)
        }
    }
}

/// Default probe layout for flow snapshots: two centers, two radii scaled to
/// the chart (shrunk only when the grid cannot resolve them).
fn default_flow_probe(geometry: &GeometryConfig, epsilon: f64) -> ProbeConfig {
    let n = geometry.grid_n;
    let period = geometry.period;
    let h = geometry.cell();
    let radii = if period / 16.0 >= 4.0 * h {
        vec![period / 8.0, period / 16.0]
    } else {
        vec![period / 4.0, period / 8.0]
    };
    ProbeConfig::new(vec![(0, 0), (n / 2, n / 2)], radii, epsilon)
        .expect("default probe radii are decreasing")
}

fn cmd_flow_run(config_path: &Path, out_dir: &Path) -> ExitCode {
    let config: FlowConfig = match std::fs::read_to_string(config_path)
        .map_err(Error::from)
        .and_then(|text| serde_json::from_str(&text).map_err(Error::from))
    {
        Ok(cfg) => cfg,
        Err(e) => return fail(e),
    };
    if let Err(e) = config.validate() {
        return fail(e);
    }

    let probe = config
        .epsilon_probe
        .filter(|_| config.geometry.backend == Backend::Torus)
        .map(|eps| default_flow_probe(&config.geometry, eps));
    let mut probe_rows = String::from(io::PROBE_HEADER);
    probe_rows.push('\n');
    let mut probe_error: Option<Error> = None;

    let started = Instant::now();
    let result = flow::run_with_observer(&config, |record, view| {
        if let (Some(p), SnapshotView::Torus(phi)) = (&probe, &view) {
            if probe_error.is_none() {
                match regularity::epsilon_report(phi, p) {
                    Ok(report) => io::probe_csv_rows(&mut probe_rows, record.t, &report),
                    Err(e) => probe_error = Some(e),
                }
            }
        }
    });
    let trajectory = match result {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    if let Some(e) = probe_error {
        return fail(e);
    }
    let wall = started.elapsed().as_secs_f64();

    let mut manifest = RunManifest::new("flow run", &config, config.seed());
    let traj_path = out_dir.join("trajectory.csv");
    if let Err(e) = io::write_trajectory_csv(&traj_path, &trajectory) {
        return fail(e);
    }
    manifest.outputs.push(traj_path.display().to_string());
    if probe.is_some() {
        let probes_path = out_dir.join("probes.csv");
        if let Err(e) = io::atomic_write(&probes_path, probe_rows.as_bytes()) {
            return fail(e);
        }
        manifest.outputs.push(probes_path.display().to_string());
    }

    let decay = flow::fit_decay(&trajectory, 0.5).ok();
    let summary = json!({
        "terminal_status": trajectory.terminal_status,
        "final_report": trajectory.final_record().map(|r| r.report),
        "records": trajectory.records.len(),
        "decay": decay,
        "wall_time_s": wall,
        "manifest": manifest,
    });
    let summary_path = out_dir.join("summary.json");
    if let Err(e) = io::atomic_write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("summary serializes").as_bytes(),
    ) {
        return fail(e);
    }
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));

    match trajectory.terminal_status {
        flow::TerminalStatus::Converged | flow::TerminalStatus::TMaxReached => ExitCode::SUCCESS,
        flow::TerminalStatus::NotKahler | flow::TerminalStatus::StepFailure => ExitCode::from(3),
    }
}

fn cmd_fit_decay(csv: &Path, tail_fraction: f64) -> ExitCode {
    let series = match io::read_decay_series(csv) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    match flow::fit_decay_series(&series, tail_fraction) {
        Ok(fit) => {
            let out = json!({
                "rate": fit.rate,
                "r_squared": fit.r_squared,
                "window": {
                    "t_start": fit.t_start,
                    "t_end": fit.t_end,
                    "records": fit.used_records,
                },
            });
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn cmd_functionals_eval(field_path: &Path) -> ExitCode {
    let loaded = match io::load_field(field_path) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let (report, residual) = match loaded {
        LoadedField::Torus(phi) => {
            let report = match functionals::functional_report(&phi, 0.0) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let int_phi =
                calabiflow::geometry::integrate(phi.geometry(), phi.values(), Measure::Omega);
            (report, (report.energy_e - (report.aubin_i - int_phi)).abs())
        }
        LoadedField::Toric(u) => {
            let analysis = match calabiflow::geometry::toric::analyze(&u) {
                Ok(a) => a,
                Err(e) => return fail(e),
            };
            let report = match functionals::functional_report_toric(&u, 0.0) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            (
                report,
                (report.energy_e - (report.aubin_i - analysis.int_phi_omega)).abs(),
            )
        }
    };
    let mut out = serde_json::to_value(report).expect("report serializes");
    out["identity_residual"] = json!(residual);
    println!("{out}");
    ExitCode::SUCCESS
}

fn cmd_fs_sweep(ps: &[f64], lambdas: &[f64], out: &Path) -> ExitCode {
    for &p in ps {
        if !(p > 0.0 && p <= 2.0) {
            return fail(Error::InvalidConfig(format!("p = {p} outside (0, 2]")));
        }
    }
    for &lambda in lambdas {
        if !(lambda >= 1.0) {
            return fail(Error::InvalidConfig(format!("lambda = {lambda} below 1")));
        }
    }
    let mut rows = Vec::new();
    for &p in ps {
        for &lambda in lambdas {
            let probe = match FsProbe::new(lambda, p) {
                Ok(pr) => pr,
                Err(e) => return fail(e),
            };
            let lp_norm = match fubini_study::lp_gradient_norm(&probe) {
                Ok(v) => v,
                Err(e) => return fail(e),
            };
            let upper_bound = match fubini_study::lp_upper_bound(p) {
                Ok(v) => v,
                Err(Error::DivergentBound { .. }) => f64::INFINITY,
                Err(e) => return fail(e),
            };
            rows.push(FsSweepRow {
                lambda,
                p,
                lp_norm,
                upper_bound,
                ratio: lp_norm / upper_bound,
                curvature_dev: fubini_study::fs_curvature_check_scaled(lambda),
            });
        }
    }
    if let Err(e) = io::atomic_write(out, io::fs_sweep_csv(&rows).as_bytes()) {
        return fail(e);
    }
    println!("{}", json!({"rows": rows.len(), "out": out.display().to_string()}));
    ExitCode::SUCCESS
}

fn cmd_lelong_probe(
    gamma: f64,
    sigma: f64,
    radii: &[f64],
    out: &Path,
    grid_n: usize,
) -> ExitCode {
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] >= w[0]) {
        return fail(Error::InvalidConfig("radii must be strictly decreasing".into()));
    }
    if !(sigma >= 0.0) {
        return fail(Error::InvalidConfig("sigma must be nonnegative".into()));
    }
    let geometry = match GeometryConfig::torus(grid_n, 2.0 * std::f64::consts::PI) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let center = (grid_n / 2, grid_n / 2);
    let psi = match regularity::mollified_log_probe(geometry, center, gamma, sigma) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let est = match regularity::lelong_estimate(&psi, center, radii) {
        Ok(e) => e,
        Err(e) => return fail(e),
    };
    let mut csv = String::from(io::LELONG_HEADER);
    csv.push('\n');
    for &(r, v) in &est.sequence {
        use std::fmt::Write as _;
        let _ = writeln!(csv, "{gamma},{sigma},{},{},{r},{v}", center.0, center.1);
    }
    if let Err(e) = io::atomic_write(out, csv.as_bytes()) {
        return fail(e);
    }
    let summary = json!({
        "gamma": gamma,
        "sigma": sigma,
        "extrapolated": est.extrapolated,
        "relative_error_vs_gamma": if gamma != 0.0 {
            ((est.extrapolated - gamma) / gamma).abs()
        } else {
            est.extrapolated.abs()
        },
    });
    println!("{summary}");
    ExitCode::SUCCESS
}
