//! File formats: the JSON field file shared with the CLI, CSV emission for
//! trajectories, probes and sweeps, and the reproducibility manifest.
//!
//! CSV headers are part of the external contract and never reordered.
//! Floats are written in Rust's shortest round-trip encoding, so identical
//! runs produce byte-identical files; all writes go through a temp file and
//! an atomic rename.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::fubini_study::FsProbe;
use crate::geometry::toric::ToricPotential;
use crate::geometry::{Backend, GeometryConfig, PotentialField};
use crate::regularity::ProbeReport;

/// Fixed column order of trajectory CSV files.
pub const TRAJECTORY_HEADER: &str =
    "t,dt,calabi_energy,mabuchi,aubin_I,energy_E,s_hat,sup_s_dev,min_u,max_u,sup_e";

/// Fixed column order of `fs sweep` CSV files.
pub const FS_SWEEP_HEADER: &str = "lambda,p,lp_norm,upper_bound,ratio,curvature_dev";

/// Fixed column order of regularity probe CSV files.
pub const PROBE_HEADER: &str = "t,center_x,center_y,r,local_energy,sup_half_ball,\
hypothesis_met,link_sup_bound,link_energy_bound,conclusion_met";

/// Fixed column order of Lelong probe CSV files.
pub const LELONG_HEADER: &str = "gamma,sigma,center_x,center_y,r,estimate";

/// On-disk field representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldFile {
    #[serde(flatten)]
    pub geometry: GeometryConfig,
    /// Row-major potential samples (torus) or smooth-part samples (toric).
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum LoadedField {
    Torus(PotentialField),
    Toric(ToricPotential),
}

pub fn load_field(path: impl AsRef<Path>) -> Result<LoadedField> {
    let text = std::fs::read_to_string(path)?;
    let file: FieldFile = serde_json::from_str(&text)?;
    match file.geometry.backend {
        Backend::Torus => Ok(LoadedField::Torus(PotentialField::new(
            file.geometry,
            file.values,
        )?)),
        Backend::Toric => Ok(LoadedField::Toric(ToricPotential::new(
            file.geometry,
            file.values,
        )?)),
    }
}

pub fn save_torus_field(path: impl AsRef<Path>, phi: &PotentialField) -> Result<()> {
    let file = FieldFile { geometry: *phi.geometry(), values: phi.values().to_vec() };
    atomic_write(path, serde_json::to_string_pretty(&file)?.as_bytes())
}

pub fn save_toric_field(path: impl AsRef<Path>, u: &ToricPotential) -> Result<()> {
    let file = FieldFile { geometry: *u.geometry(), values: u.smooth_part().to_vec() };
    atomic_write(path, serde_json::to_string_pretty(&file)?.as_bytes())
}

/// Write through a sibling temp file and rename into place.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(
        ".{}.tmp{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn trajectory_csv(trajectory: &FlowTrajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for r in &trajectory.records {
        let rep = &r.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.dt,
            rep.calabi_energy,
            rep.mabuchi,
            rep.aubin_i,
            rep.energy_e,
            rep.s_hat,
            rep.sup_s_dev,
            rep.min_u,
            rep.max_u,
            rep.sup_e
        );
    }
    out
}

pub fn write_trajectory_csv(path: impl AsRef<Path>, trajectory: &FlowTrajectory) -> Result<()> {
    atomic_write(path, trajectory_csv(trajectory).as_bytes())
}

/// Parse `(t, calabi_energy)` out of a trajectory CSV; errors on missing
/// columns or malformed rows.
pub fn read_decay_series(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let t_idx = cols
        .iter()
        .position(|c| *c == "t")
        .ok_or_else(|| Error::InvalidConfig("CSV is missing the t column".into()))?;
    let ca_idx = cols.iter().position(|c| *c == "calabi_energy").ok_or_else(|| {
        Error::InvalidConfig("CSV is missing the calabi_energy column".into())
    })?;
    let mut series = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64> {
            fields
                .get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("bad CSV row {}: {line}", lineno + 2))
                })
        };
        series.push((parse(t_idx)?, parse(ca_idx)?));
    }
    Ok(series)
}

/// One `fs sweep` output row.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FsSweepRow {
    pub lambda: f64,
    pub p: f64,
    pub lp_norm: f64,
    /// Infinite when the majorant integral diverges (p = 2).
    pub upper_bound: f64,
    pub ratio: f64,
    pub curvature_dev: f64,
}

pub fn fs_sweep_csv(rows: &[FsSweepRow]) -> String {
    let mut out = String::from(FS_SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.lambda, r.p, r.lp_norm, r.upper_bound, r.ratio, r.curvature_dev
        );
    }
    out
}

/// Probe rows for one monitored snapshot, tagged with the flow time.
pub fn probe_csv_rows(out: &mut String, t: f64, report: &ProbeReport) {
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            t,
            row.center_x,
            row.center_y,
            row.r,
            row.local_energy,
            row.sup_half_ball,
            row.hypothesis_met,
            row.link_sup_bound,
            row.link_energy_bound,
            row.conclusion_met
        );
    }
}

/// Reproducibility manifest attached to every CLI summary.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub artifact_version: String,
    pub seed: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_digest: config_digest(config),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            outputs: Vec::new(),
        }
    }
}

/// Content hash of the resolved configuration (hex SHA-256 of its canonical
/// JSON encoding).
pub fn config_digest(config: &impl Serialize) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    hex::encode(hasher.finalize())
}

/// Convenience constructor of a default `fs sweep` probe.
pub fn fs_probe(lambda: f64, p: f64) -> Result<FsProbe> {
    FsProbe::new(lambda, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{FlowRecord, TerminalStatus};
    use crate::functionals::FunctionalReport;

    #[test]
    fn field_file_round_trip() {
        let geom = GeometryConfig::torus(16, 2.0 * std::f64::consts::PI).unwrap();
        let phi = PotentialField::from_fn(geom, |x, y| 0.1 * (x + y).cos()).unwrap();
        let dir = std::env::temp_dir().join(format!("cf_io_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.json");
        save_torus_field(&path, &phi).unwrap();
        match load_field(&path).unwrap() {
            LoadedField::Torus(back) => {
                assert_eq!(back.values(), phi.values());
                assert_eq!(back.geometry(), phi.geometry());
            }
            _ => panic!("expected torus field"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn field_file_schema_keys() {
        let geom = GeometryConfig::toric(8, 1.0).unwrap();
        let file = FieldFile { geometry: geom, values: vec![0.0; 8] };
        let json = serde_json::to_value(&file).unwrap();
        assert_eq!(json["backend"], "toric");
        assert!(json["grid_n"].is_number());
        assert!(json["period"].is_number());
        assert!(json["polytope_length"].is_number());
        assert!(json["values"].is_array());
    }

    #[test]
    fn trajectory_csv_header_is_pinned() {
        let traj = FlowTrajectory {
            records: vec![FlowRecord { t: 0.0, dt: 0.0, report: FunctionalReport::zero() }],
            terminal_status: TerminalStatus::Converged,
        };
        let csv = trajectory_csv(&traj);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_HEADER);
        assert_eq!(lines.next().unwrap().split(',').count(), 11);
    }

    #[test]
    fn decay_series_parsing_and_errors() {
        let dir = std::env::temp_dir().join(format!("cf_io_csv_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.csv");
        atomic_write(&good, b"t,calabi_energy\n0,1.0\n1,0.5\n").unwrap();
        let series = read_decay_series(&good).unwrap();
        assert_eq!(series, vec![(0.0, 1.0), (1.0, 0.5)]);
        let bad = dir.join("bad.csv");
        atomic_write(&bad, b"t,mabuchi\n0,1.0\n").unwrap();
        assert!(read_decay_series(&bad).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn digest_is_stable_and_input_sensitive() {
        let a = config_digest(&serde_json::json!({"x": 1}));
        let b = config_digest(&serde_json::json!({"x": 1}));
        let c = config_digest(&serde_json::json!({"x": 2}));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
