//! Discrete differential geometry of the flat torus chart and the toric
//! interval backend: Laplacian, metric density, scalar curvature, integrals.
//!
//! Conventions (used everywhere in the crate):
//! * complex dimension is 1, background form `ω = dx ∧ dy` on the chart;
//! * `Δ = (∂²x + ∂²y)/2`, the unique factor for which the energy density of
//!   the identity map is `e(φ) = Δφ + 1`;
//! * scalar curvature is the trace of the Ricci form against the metric
//!   itself, so the round sphere of volume 2π has `S ≡ 2` and the flat torus
//!   has `S ≡ 0`. On the chart `S(ω_φ) = -Δ log u / u` with `u = 1 + Δφ`.

pub mod toric;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Spectral;

/// Densities at or below this floor are treated as leaving the Kähler cone.
pub const KAHLER_FLOOR: f64 = 1e-8;

/// Complex dimension of the artifact; formulas are written for general n but
/// evaluated here.
pub const DIMENSION: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Torus,
    Toric,
}

fn default_period() -> f64 {
    2.0 * std::f64::consts::PI
}

fn default_polytope_length() -> f64 {
    1.0
}

/// Grid and backend description shared by all fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub backend: Backend,
    /// Samples per axis (torus) or interior cells (toric).
    pub grid_n: usize,
    /// Torus axis length.
    #[serde(default = "default_period")]
    pub period: f64,
    /// Toric moment interval length.
    #[serde(default = "default_polytope_length")]
    pub polytope_length: f64,
}

impl GeometryConfig {
    pub fn torus(grid_n: usize, period: f64) -> Result<Self> {
        let g = Self {
            backend: Backend::Torus,
            grid_n,
            period,
            polytope_length: default_polytope_length(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn toric(grid_n: usize, polytope_length: f64) -> Result<Self> {
        let g = Self {
            backend: Backend::Toric,
            grid_n,
            period: default_period(),
            polytope_length,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 8 || self.grid_n % 2 != 0 {
            return Err(Error::InvalidGeometry(format!(
                "grid_n must be even and at least 8, got {}",
                self.grid_n
            )));
        }
        if !(self.period > 0.0) || !(self.polytope_length > 0.0) {
            return Err(Error::InvalidGeometry(
                "period and polytope_length must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Grid spacing of this backend's grid.
    pub fn cell(&self) -> f64 {
        match self.backend {
            Backend::Torus => self.period / self.grid_n as f64,
            Backend::Toric => self.polytope_length / self.grid_n as f64,
        }
    }

    /// Total volume of the background form.
    pub fn volume(&self) -> f64 {
        match self.backend {
            Backend::Torus => self.period * self.period,
            Backend::Toric => 2.0 * std::f64::consts::PI * self.polytope_length,
        }
    }

    pub(crate) fn require_torus(&self) -> Result<()> {
        if self.backend != Backend::Torus {
            return Err(Error::BackendMismatch { expected: "torus" });
        }
        Ok(())
    }
}

/// Sampled Kähler potential on the periodic chart grid, row-major
/// (`values[iy * n + ix]`, node `x = ix h`, `y = iy h`).
#[derive(Clone, Debug)]
pub struct PotentialField {
    geometry: GeometryConfig,
    values: Vec<f64>,
}

impl PotentialField {
    pub fn new(geometry: GeometryConfig, values: Vec<f64>) -> Result<Self> {
        geometry.require_torus()?;
        geometry.validate()?;
        let want = geometry.grid_n * geometry.grid_n;
        if values.len() != want {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                want,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidField("non-finite entries".into()));
        }
        Ok(Self { geometry, values })
    }

    pub fn zero(geometry: GeometryConfig) -> Result<Self> {
        let n = geometry.grid_n;
        Self::new(geometry, vec![0.0; n * n])
    }

    /// Sample a function of the chart coordinates onto the grid.
    pub fn from_fn(geometry: GeometryConfig, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        geometry.require_torus()?;
        let n = geometry.grid_n;
        let h = geometry.cell();
        let mut values = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                values[iy * n + ix] = f(ix as f64 * h, iy as f64 * h);
            }
        }
        Self::new(geometry, values)
    }

    pub fn geometry(&self) -> &GeometryConfig {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_n(&self) -> usize {
        self.geometry.grid_n
    }

    /// Mean value against the background form.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Subtract the mean, fixing the gauge used by the flow engine.
    pub fn recentered(&self) -> Self {
        let m = self.mean();
        Self {
            geometry: self.geometry,
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    pub(crate) fn spectral(&self) -> Spectral {
        Spectral::new(self.geometry.grid_n, self.geometry.period)
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            geometry: self.geometry,
            values,
        }
    }
}

/// The positive density `u = ω_φ / ω` together with its cached extrema.
#[derive(Clone, Debug)]
pub struct MetricDensity {
    values: Vec<f64>,
    min_u: f64,
    max_u: f64,
}

impl MetricDensity {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_u(&self) -> f64 {
        self.min_u
    }

    pub fn max_u(&self) -> f64 {
        self.max_u
    }
}

/// `Δφ` by spectral transform; the output has exactly zero mean.
pub fn laplacian(phi: &PotentialField) -> Result<PotentialField> {
    phi.geometry.require_torus()?;
    let sp = phi.spectral();
    Ok(phi.with_values(sp.laplacian(phi.values())))
}

/// Metric density `u = 1 + Δφ` with the default Kähler floor.
pub fn density(phi: &PotentialField) -> Result<MetricDensity> {
    density_with_floor(phi, KAHLER_FLOOR)
}

/// Metric density with a caller-chosen positivity floor.
pub fn density_with_floor(phi: &PotentialField, floor: f64) -> Result<MetricDensity> {
    let lap = laplacian(phi)?;
    let values: Vec<f64> = lap.values().iter().map(|d| 1.0 + d).collect();
    let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &values {
        min_u = min_u.min(v);
        max_u = max_u.max(v);
    }
    if min_u <= floor {
        return Err(Error::NotKahler { min_u, floor });
    }
    Ok(MetricDensity { values, min_u, max_u })
}

/// Harmonic-map energy density `e(φ) = Δφ + n` (n = 1). Identical values to
/// `density`, kept as a named operation for the regularity probes; never
/// fails, so it can be evaluated outside the Kähler cone.
pub fn energy_density(phi: &PotentialField) -> Result<Vec<f64>> {
    let lap = laplacian(phi)?;
    Ok(lap.values().iter().map(|d| 1.0 + d).collect())
}

/// `F = log u`, the log of the volume-form ratio.
pub fn log_density(phi: &PotentialField) -> Result<Vec<f64>> {
    let u = density(phi)?;
    Ok(u.values().iter().map(|v| v.ln()).collect())
}

/// Scalar curvature of `ω_φ` on the chart: `S = -Δ log u / u`.
pub fn scalar_curvature_chart(phi: &PotentialField) -> Result<Vec<f64>> {
    let u = density(phi)?;
    scalar_curvature_from_density(phi, &u)
}

/// Same as [`scalar_curvature_chart`] when the density is already at hand.
pub fn scalar_curvature_from_density(
    phi: &PotentialField,
    u: &MetricDensity,
) -> Result<Vec<f64>> {
    let sp = phi.spectral();
    let log_u: Vec<f64> = u.values().iter().map(|v| v.ln()).collect();
    let lap_log_u = sp.laplacian(&log_u);
    Ok(lap_log_u
        .iter()
        .zip(u.values())
        .map(|(l, uu)| -l / uu)
        .collect())
}

/// Measure to integrate against: the background form or the deformed one.
#[derive(Clone, Copy)]
pub enum Measure<'a> {
    Omega,
    OmegaPhi(&'a MetricDensity),
}

/// Equal-weight quadrature (exact for band-limited integrands on the torus).
/// Against `ω_φ` the integrand is multiplied by the density. On the toric
/// backend the fixed symplectic measure integrates as `2π ∫ dx`.
pub fn integrate(geometry: &GeometryConfig, field: &[f64], measure: Measure<'_>) -> f64 {
    let weight = match geometry.backend {
        Backend::Torus => geometry.cell() * geometry.cell(),
        Backend::Toric => 2.0 * std::f64::consts::PI * geometry.cell(),
    };
    match measure {
        Measure::Omega => field.iter().sum::<f64>() * weight,
        Measure::OmegaPhi(u) => {
            debug_assert_eq!(field.len(), u.values().len());
            field
                .iter()
                .zip(u.values())
                .map(|(f, uu)| f * uu)
                .sum::<f64>()
                * weight
        }
    }
}
