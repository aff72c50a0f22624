//! Energy functionals on the space of Kähler potentials: the Aubin
//! I-functional, the energy E, the Mabuchi energy as a path integral, the
//! Calabi energy, and the average scalar curvature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::toric::{self, ToricPotential};
use crate::geometry::{
    density, integrate, laplacian, scalar_curvature_from_density, Measure, MetricDensity,
    PotentialField,
};

/// Default threshold on the sup-difference of consecutive path nodes.
pub const PATH_COARSENESS_THRESHOLD: f64 = 0.5;

/// Snapshot of every monitored functional at one instant.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FunctionalReport {
    #[serde(rename = "aubin_I")]
    pub aubin_i: f64,
    #[serde(rename = "energy_E")]
    pub energy_e: f64,
    /// Mabuchi energy relative to the reference path start.
    pub mabuchi: f64,
    pub calabi_energy: f64,
    pub s_hat: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub sup_e: f64,
    pub sup_s_dev: f64,
}

impl FunctionalReport {
    pub fn zero() -> Self {
        Self {
            aubin_i: 0.0,
            energy_e: 0.0,
            mabuchi: 0.0,
            calabi_energy: 0.0,
            s_hat: 0.0,
            min_u: 1.0,
            max_u: 1.0,
            sup_e: 1.0,
            sup_s_dev: 0.0,
        }
    }
}

/// Aubin's I-functional `I(φ) = ∫ φ (ω - ω_φ) = -∫ φ Δφ ω`; in dimension 1
/// this is the Dirichlet energy of φ, hence nonnegative.
pub fn aubin_i(phi: &PotentialField) -> Result<f64> {
    density(phi)?;
    let lap = laplacian(phi)?;
    let integrand: Vec<f64> = phi
        .values()
        .iter()
        .zip(lap.values())
        .map(|(p, l)| -p * l)
        .collect();
    Ok(integrate(phi.geometry(), &integrand, Measure::Omega))
}

/// The same functional through the gradient route `∫ |∂φ|²_ω ω` with
/// `|∂φ|²_ω = (φ_x² + φ_y²)/2`; an independent quadrature path used to check
/// the identity `I = ∫|∂φ|²`.
pub fn aubin_i_gradient_route(phi: &PotentialField) -> Result<f64> {
    phi.geometry().require_torus()?;
    let sp = phi.spectral();
    let dx = sp.derivative_x(phi.values());
    let dy = sp.derivative_y(phi.values());
    let integrand: Vec<f64> = dx
        .iter()
        .zip(dy.iter())
        .map(|(a, b)| 0.5 * (a * a + b * b))
        .collect();
    Ok(integrate(phi.geometry(), &integrand, Measure::Omega))
}

/// The energy `E(φ) = -∫ φ ω_φ`.
pub fn energy_e(phi: &PotentialField) -> Result<f64> {
    let u = density(phi)?;
    let neg: Vec<f64> = phi.values().iter().map(|p| -p).collect();
    Ok(integrate(phi.geometry(), &neg, Measure::OmegaPhi(&u)))
}

/// Average scalar curvature `Ŝ = ∫ S ω_φ / ∫ ω_φ`.
pub fn average_scalar(phi: &PotentialField) -> Result<f64> {
    let u = density(phi)?;
    let s = scalar_curvature_from_density(phi, &u)?;
    Ok(average_scalar_parts(phi, &u, &s))
}

fn average_scalar_parts(phi: &PotentialField, u: &MetricDensity, s: &[f64]) -> f64 {
    let total = integrate(phi.geometry(), s, Measure::OmegaPhi(u));
    let vol = integrate(phi.geometry(), &vec![1.0; s.len()], Measure::OmegaPhi(u));
    total / vol
}

/// Calabi energy `∫ (S - Ŝ)² ω_φ ≥ 0`.
pub fn calabi_energy(phi: &PotentialField) -> Result<f64> {
    let u = density(phi)?;
    let s = scalar_curvature_from_density(phi, &u)?;
    let s_hat = average_scalar_parts(phi, &u, &s);
    let integrand: Vec<f64> = s.iter().map(|v| (v - s_hat) * (v - s_hat)).collect();
    Ok(integrate(phi.geometry(), &integrand, Measure::OmegaPhi(&u)))
}

/// Mabuchi energy of an ordered path of potentials, by trapezoidal
/// quadrature of its variation `dM/dt = ∫ φ̇ (Ŝ - S) ω_φ`, normalized to
/// zero at the path start.
pub fn mabuchi_path(path: &[(f64, PotentialField)], threshold: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: path.len() });
    }
    let mut total = 0.0;
    let mut prev = mabuchi_node(&path[0].1)?;
    for window in path.windows(2) {
        let (_, ref a) = window[0];
        let (_, ref b) = window[1];
        let next = mabuchi_node(b)?;
        total += mabuchi_increment(a, b, &prev, &next, threshold)?;
        prev = next;
    }
    Ok(total)
}

pub(crate) struct MabuchiNode {
    pub u: MetricDensity,
    pub s: Vec<f64>,
    pub s_hat: f64,
}

pub(crate) fn mabuchi_node(phi: &PotentialField) -> Result<MabuchiNode> {
    let u = density(phi)?;
    let s = scalar_curvature_from_density(phi, &u)?;
    let s_hat = average_scalar_parts(phi, &u, &s);
    Ok(MabuchiNode { u, s, s_hat })
}

/// One trapezoidal increment of the Mabuchi variation between consecutive
/// path nodes; `φ̇ Δt` is the node difference.
pub(crate) fn mabuchi_increment(
    a: &PotentialField,
    b: &PotentialField,
    na: &MabuchiNode,
    nb: &MabuchiNode,
    threshold: f64,
) -> Result<f64> {
    let diff: Vec<f64> = b
        .values()
        .iter()
        .zip(a.values())
        .map(|(pb, pa)| pb - pa)
        .collect();
    let sup = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > threshold {
        return Err(Error::PathTooCoarse { sup_diff: sup, threshold });
    }
    let at_a: Vec<f64> = diff
        .iter()
        .zip(na.s.iter())
        .map(|(d, s)| d * (na.s_hat - s))
        .collect();
    let at_b: Vec<f64> = diff
        .iter()
        .zip(nb.s.iter())
        .map(|(d, s)| d * (nb.s_hat - s))
        .collect();
    let ia = integrate(a.geometry(), &at_a, Measure::OmegaPhi(&na.u));
    let ib = integrate(b.geometry(), &at_b, Measure::OmegaPhi(&nb.u));
    Ok(0.5 * (ia + ib))
}

/// Full functional report for a chart potential; `mabuchi` is supplied by
/// the caller (flow trajectories accumulate it, single-field reports use 0).
pub fn functional_report(phi: &PotentialField, mabuchi: f64) -> Result<FunctionalReport> {
    let u = density(phi)?;
    let s = scalar_curvature_from_density(phi, &u)?;
    let s_hat = average_scalar_parts(phi, &u, &s);
    let ca: Vec<f64> = s.iter().map(|v| (v - s_hat) * (v - s_hat)).collect();
    let sup_s_dev = s.iter().fold(0.0f64, |m, v| m.max((v - s_hat).abs()));
    let lap = laplacian(phi)?;
    let i_int: Vec<f64> = phi
        .values()
        .iter()
        .zip(lap.values())
        .map(|(p, l)| -p * l)
        .collect();
    let neg: Vec<f64> = phi.values().iter().map(|p| -p).collect();
    Ok(FunctionalReport {
        aubin_i: integrate(phi.geometry(), &i_int, Measure::Omega),
        energy_e: integrate(phi.geometry(), &neg, Measure::OmegaPhi(&u)),
        mabuchi,
        calabi_energy: integrate(phi.geometry(), &ca, Measure::OmegaPhi(&u)),
        s_hat,
        min_u: u.min_u(),
        max_u: u.max_u(),
        sup_e: u.max_u(),
        sup_s_dev,
    })
}

/// Functional report for a toric potential, relative to the canonical
/// reference metric.
pub fn functional_report_toric(u: &ToricPotential, mabuchi: f64) -> Result<FunctionalReport> {
    let a = toric::analyze(u)?;
    let (mut min_r, mut max_r) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in &a.ratio {
        min_r = min_r.min(r);
        max_r = max_r.max(r);
    }
    Ok(FunctionalReport {
        aubin_i: a.aubin_i,
        energy_e: a.energy_e,
        mabuchi,
        calabi_energy: a.calabi_energy,
        s_hat: a.s_hat,
        min_u: min_r,
        max_u: max_r,
        sup_e: max_r,
        sup_s_dev: a.sup_s_dev,
    })
}

/// Mabuchi energy of a toric path (same trapezoidal scheme; the chart-side
/// velocity of the potential is `-2 ḟ` at the corresponding complex point).
pub fn mabuchi_path_toric(path: &[(f64, ToricPotential)], threshold: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: path.len() });
    }
    let mut total = 0.0;
    let mut prev = toric_mabuchi_node(&path[0].1)?;
    for window in path.windows(2) {
        let next = toric_mabuchi_node(&window[1].1)?;
        total += mabuchi_increment_toric(&window[0].1, &window[1].1, &prev, &next, threshold)?;
        prev = next;
    }
    Ok(total)
}

pub(crate) struct ToricMabuchiNode {
    pub s: Vec<f64>,
    pub s_hat: f64,
}

pub(crate) fn toric_mabuchi_node(u: &ToricPotential) -> Result<ToricMabuchiNode> {
    let s = toric::abreu_scalar_curvature(u)?;
    let s_hat = s.iter().sum::<f64>() / s.len() as f64;
    Ok(ToricMabuchiNode { s, s_hat })
}

pub(crate) fn mabuchi_increment_toric(
    a: &ToricPotential,
    b: &ToricPotential,
    na: &ToricMabuchiNode,
    nb: &ToricMabuchiNode,
    threshold: f64,
) -> Result<f64> {
    let h = a.cell();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut sup = 0.0f64;
    let mut acc = 0.0;
    for i in 0..a.grid_n() {
        let df = b.smooth_part()[i] - a.smooth_part()[i];
        sup = sup.max(df.abs());
        let va = (na.s_hat - na.s[i]) * df;
        let vb = (nb.s_hat - nb.s[i]) * df;
        acc += 0.5 * (va + vb);
    }
    if sup > threshold {
        return Err(Error::PathTooCoarse { sup_diff: sup, threshold });
    }
    Ok(-2.0 * two_pi * h * acc)
}
