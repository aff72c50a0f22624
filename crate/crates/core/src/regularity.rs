//! Local-energy probes and the Lelong-number estimator.
//!
//! `local_energy` is the scaled ball mass `r^{2-2n} ∫_{B_r(x)} e(φ) ω`
//! (the prefactor is 1 at n = 1), computed by cell-center masked quadrature
//! with periodic distances. `epsilon_report` records, per probe point and
//! radius, both links of the regularity chain
//! `sup_{B_{r/2}} e < (4 r^{-2}/ε) ∫_{B_r} e < 4 r^{-2}`
//! without asserting either: the ε in the hypothesis is existential and
//! user-supplied.
//!
//! The Lelong estimator integrates `Δψ` over shrinking balls, normalized so
//! that the model potential `log|z|` has value 1 at its singularity
//! (`Δ log|z| = π δ₀` under the half-Laplacian, hence `c₁ = 1/π`); the
//! small-radius limit is a linear-in-r² extrapolation of the last two
//! points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{energy_density, GeometryConfig, PotentialField};

/// Normalization of the dimension-1 Lelong mass: `1/π`.
pub const LELONG_NORMALIZATION: f64 = std::f64::consts::FRAC_1_PI;

/// Probe configuration: centers are grid points, radii strictly decreasing.
#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub centers: Vec<(usize, usize)>,
    pub radii: Vec<f64>,
    pub epsilon: f64,
    pub lelong_c: f64,
    pub mollify_sigma: f64,
}

impl ProbeConfig {
    pub fn new(centers: Vec<(usize, usize)>, radii: Vec<f64>, epsilon: f64) -> Result<Self> {
        if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig(
                "probe radii must be strictly decreasing".into(),
            ));
        }
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidConfig("probe radii must be positive".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig("probe epsilon must be positive".into()));
        }
        Ok(Self {
            centers,
            radii,
            epsilon,
            lelong_c: LELONG_NORMALIZATION,
            mollify_sigma: 0.0,
        })
    }
}

/// One `(x, r)` row of the regularity report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeRow {
    pub center_x: usize,
    pub center_y: usize,
    pub r: f64,
    pub local_energy: f64,
    pub sup_half_ball: f64,
    /// `local_energy < ε`.
    pub hypothesis_met: bool,
    /// First link: `sup_half_ball < 4 local_energy / (ε r²)`.
    pub link_sup_bound: bool,
    /// Second link: `4 local_energy / (ε r²) < 4 / r²`.
    pub link_energy_bound: bool,
    pub conclusion_met: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LelongEstimate {
    pub center_x: usize,
    pub center_y: usize,
    /// `(r, c₁ ∫_{B_r} Δψ ω)` in the probe's radius order.
    pub sequence: Vec<(f64, f64)>,
    /// Linear-in-r² extrapolation of the two smallest radii.
    pub extrapolated: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub lelong: Vec<LelongEstimate>,
}

fn embedding_bound(geometry: &GeometryConfig) -> f64 {
    geometry.period / 2.0
}

/// Squared periodic distance from grid node `(ix, iy)` to `(cx, cy)`.
fn periodic_dist2(n: usize, h: f64, ix: usize, iy: usize, cx: usize, cy: usize) -> f64 {
    let dx = (ix as isize - cx as isize).unsigned_abs() % n;
    let dy = (iy as isize - cy as isize).unsigned_abs() % n;
    let dx = dx.min(n - dx) as f64 * h;
    let dy = dy.min(n - dy) as f64 * h;
    dx * dx + dy * dy
}

fn masked_sum(field: &[f64], geometry: &GeometryConfig, center: (usize, usize), r: f64) -> f64 {
    let n = geometry.grid_n;
    let h = geometry.cell();
    let r2 = r * r;
    let mut acc = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            if periodic_dist2(n, h, ix, iy, center.0, center.1) < r2 {
                acc += field[iy * n + ix];
            }
        }
    }
    acc * h * h
}

fn masked_max(field: &[f64], geometry: &GeometryConfig, center: (usize, usize), r: f64) -> f64 {
    let n = geometry.grid_n;
    let h = geometry.cell();
    let r2 = r * r;
    let mut m = f64::NEG_INFINITY;
    for iy in 0..n {
        for ix in 0..n {
            if periodic_dist2(n, h, ix, iy, center.0, center.1) < r2 {
                m = m.max(field[iy * n + ix]);
            }
        }
    }
    m
}

/// `r^{2-2n} ∫_{B_r(x)} e(φ) ω` by masked quadrature.
pub fn local_energy(phi: &PotentialField, center: (usize, usize), r: f64) -> Result<f64> {
    let bound = embedding_bound(phi.geometry());
    if !(r > 0.0) || r >= bound {
        return Err(Error::BallTooLarge { r, bound });
    }
    let e = energy_density(phi)?;
    Ok(masked_sum(&e, phi.geometry(), center, r))
}

/// Evaluate both inequality links of the regularity chain for every
/// `(center, radius)` pair, plus the Lelong sequences of the same probes.
/// Purely observational; nothing is asserted about the user's ε.
pub fn epsilon_report(phi: &PotentialField, probe: &ProbeConfig) -> Result<ProbeReport> {
    let e = energy_density(phi)?;
    let geometry = phi.geometry();
    let bound = embedding_bound(geometry);
    let mut rows = Vec::new();
    for &(cx, cy) in &probe.centers {
        for &r in &probe.radii {
            if r >= bound {
                return Err(Error::BallTooLarge { r, bound });
            }
            let le = masked_sum(&e, geometry, (cx, cy), r);
            let sup_half = masked_max(&e, geometry, (cx, cy), r / 2.0);
            let mid = 4.0 * le / (probe.epsilon * r * r);
            let link_sup = sup_half < mid;
            let link_energy = mid < 4.0 / (r * r);
            rows.push(ProbeRow {
                center_x: cx,
                center_y: cy,
                r,
                local_energy: le,
                sup_half_ball: sup_half,
                hypothesis_met: le < probe.epsilon,
                link_sup_bound: link_sup,
                link_energy_bound: link_energy,
                conclusion_met: link_sup && link_energy,
            });
        }
    }
    // Lelong sequences ride along when the radius list admits them (two or
    // more radii, all resolvable on the grid).
    let mut lelong = Vec::new();
    let h = geometry.cell();
    if probe.radii.len() >= 2 && probe.radii.iter().all(|r| *r >= 4.0 * h) {
        for &(cx, cy) in &probe.centers {
            lelong.push(lelong_estimate(phi, (cx, cy), &probe.radii)?);
        }
    }
    Ok(ProbeReport { rows, lelong })
}

/// Normalized ball masses of `Δψ` over a decreasing radius list and their
/// small-radius extrapolation.
pub fn lelong_estimate(
    psi: &PotentialField,
    center: (usize, usize),
    radii: &[f64],
) -> Result<LelongEstimate> {
    let geometry = psi.geometry();
    let h = geometry.cell();
    let bound = embedding_bound(geometry);
    if radii.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: radii.len() });
    }
    for &r in radii {
        if r < 4.0 * h {
            return Err(Error::RadiiTooSmall { r, min_cells: 4, bound: 4.0 * h });
        }
        if r >= bound {
            return Err(Error::BallTooLarge { r, bound });
        }
    }
    let lap = crate::geometry::laplacian(psi)?;
    let sequence: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            (
                r,
                LELONG_NORMALIZATION * masked_sum(lap.values(), geometry, center, r),
            )
        })
        .collect();
    // The two smallest radii sit at the end of the decreasing list.
    let (r1, e1) = sequence[sequence.len() - 2];
    let (r2, e2) = sequence[sequence.len() - 1];
    let extrapolated = (e2 * r1 * r1 - e1 * r2 * r2) / (r1 * r1 - r2 * r2);
    Ok(LelongEstimate { center_x: center.0, center_y: center.1, sequence, extrapolated })
}

/// Smooth periodic mollified log-singularity
/// `ψ = γ · ½ log(ρ² + σ²)` (ρ the periodic distance to the center), tapered
/// to a constant well outside the probe radii so the field stays periodic.
pub fn mollified_log_probe(
    geometry: GeometryConfig,
    center: (usize, usize),
    gamma: f64,
    sigma: f64,
) -> Result<PotentialField> {
    geometry.require_torus()?;
    let n = geometry.grid_n;
    let h = geometry.cell();
    let period = geometry.period;
    let (taper_hi, taper_lo) = (0.45 * period, 0.35 * period);
    let mut values = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let rho2 = periodic_dist2(n, h, ix, iy, center.0, center.1);
            let rho = rho2.sqrt();
            let chi = if rho <= taper_lo {
                1.0
            } else if rho >= taper_hi {
                0.0
            } else {
                let s = (taper_hi - rho) / (taper_hi - taper_lo);
                s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
            };
            values[iy * n + ix] = gamma * 0.5 * (rho2 + sigma * sigma).ln() * chi;
        }
    }
    PotentialField::new(geometry, values)
}
