//! Trajectory-level invariants of the flow engine.

use calabiflow::flow::{
    run, run_with_observer, step, FlowConfig, FlowState, InitialData, SnapshotView,
    TerminalStatus,
};
use calabiflow::geometry::{density, integrate, GeometryConfig, Measure, PotentialField};

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn torus(n: usize) -> GeometryConfig {
    GeometryConfig::torus(n, TAU).unwrap()
}

fn base_config(initial: InitialData) -> FlowConfig {
    FlowConfig {
        geometry: torus(64),
        initial,
        dt_init: 1e-3,
        dt_max: 0.1,
        t_max: 100.0,
        stop_calabi_tol: 1e-12,
        a: 4.0,
        monitor_every: 1,
        epsilon_probe: None,
    }
}

#[test]
fn gauge_and_volume_hold_along_trajectories() {
    let cfg = base_config(InitialData::Random { seed: 5, max_mode: 4, min_density: 0.5 });
    let vol = cfg.geometry.volume();
    let mut snapshots = 0;
    let traj = run_with_observer(&cfg, |_record, view| {
        if let SnapshotView::Torus(phi) = view {
            assert!(phi.mean().abs() <= 1e-12, "gauge violated: {}", phi.mean());
            let u = density(phi).unwrap();
            let ones = vec![1.0; phi.values().len()];
            let v = integrate(phi.geometry(), &ones, Measure::OmegaPhi(&u));
            assert!((v - vol).abs() <= 1e-10 * vol, "volume drifted: {v}");
            snapshots += 1;
        }
    })
    .unwrap();
    assert_eq!(traj.terminal_status, TerminalStatus::Converged);
    assert_eq!(snapshots, traj.records.len());
}

#[test]
fn records_strictly_increase_and_converged_means_below_tol() {
    let cfg = base_config(InitialData::Random { seed: 9, max_mode: 4, min_density: 0.5 });
    let traj = run(&cfg).unwrap();
    for w in traj.records.windows(2) {
        assert!(w[1].t > w[0].t, "records not strictly increasing in t");
    }
    if traj.terminal_status == TerminalStatus::Converged {
        let last = traj.records.last().unwrap();
        assert!(last.report.calabi_energy <= cfg.stop_calabi_tol);
    }
}

#[test]
fn csck_fixed_point_is_stable_for_long_horizons() {
    // sup |φ(T) - φ(0)| at T = 100 under a coarse accepted-step schedule.
    let phi = PotentialField::zero(torus(32)).unwrap();
    let mut state = FlowState::initial(&phi).unwrap();
    for _ in 0..20 {
        state = step(&state, 5.0, 1.0).unwrap();
    }
    assert!((state.t - 100.0).abs() < 1e-9);
    let sup = state.phi.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(sup <= 1e-9, "fixed point drifted by {sup}");
}

#[test]
fn monitor_thinning_still_emits_final_record() {
    let mut cfg = base_config(InitialData::Cosine { amplitude: 0.05, jx: 1, ky: 1, phase: 0.0 });
    cfg.monitor_every = 25;
    cfg.a = 1.0;
    let traj = run(&cfg).unwrap();
    assert_eq!(traj.terminal_status, TerminalStatus::Converged);
    let last = traj.records.last().unwrap();
    assert!(last.report.calabi_energy <= cfg.stop_calabi_tol);
    // Thinned: far fewer records than accepted steps, but at least initial
    // and final are present.
    assert!(traj.records.len() >= 2);
}

#[test]
fn step_accumulates_mabuchi_between_states() {
    let phi = PotentialField::from_fn(torus(32), |x, y| 0.05 * (x.cos() + y.cos())).unwrap();
    let state = FlowState::initial(&phi).unwrap();
    assert_eq!(state.report.mabuchi, 0.0);
    let next = step(&state, 0.05, 1.0).unwrap();
    assert!(next.report.mabuchi < 0.0, "Mabuchi should drop across a step");
    let third = step(&next, 0.05, 1.0).unwrap();
    assert!(third.report.mabuchi < next.report.mabuchi);
    assert!(third.t > next.t && next.t > state.t);
}

#[test]
fn file_initial_data_round_trips_through_run() {
    let dir = std::env::temp_dir().join(format!("cf_flowprop_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("init.json");
    let phi = PotentialField::from_fn(torus(64), |x, _| 0.05 * x.cos()).unwrap();
    calabiflow::io::save_torus_field(&path, &phi).unwrap();
    let mut cfg = base_config(InitialData::File { path: path.display().to_string() });
    cfg.a = 1.0;
    let traj = run(&cfg).unwrap();
    assert_eq!(traj.terminal_status, TerminalStatus::Converged);
    // A geometry mismatch is a configuration error, not a trajectory.
    let mut bad = cfg.clone();
    bad.geometry = torus(32);
    assert!(run(&bad).is_err());
    std::fs::remove_dir_all(&dir).ok();
}
