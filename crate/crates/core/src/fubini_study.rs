//! Exact radial quadratures for the scaled round-metric family on the
//! sphere: the potential family `φ_λ`, its gradient density, L^p gradient
//! norms, the p < 2 majorant bound, the metric ratio at the origin, and a
//! curvature-uniformity check.
//!
//! Everything here is one-dimensional: improper integrals go through the
//! `r = tan θ` substitution onto a finite interval, integrated by composite
//! Gauss-Legendre panels geometrically graded into both endpoints, with
//! node doubling as the convergence control. For `λ > 10⁴` the small-radius
//! region is rescaled to `s = λ r` before substitution so the two integrand
//! scales stay resolvable at fixed panel budgets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of the node-doubling convergence control.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;

/// λ threshold above which the split-domain rescaling kicks in.
pub const SPLIT_LAMBDA: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Substitution {
    /// `r = tan θ` onto `[0, π/2)`; no tail truncation.
    Tan,
    /// Plain truncated integral over `[0, r_cut]`.
    None,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub substitution: Substitution,
    /// Initial Gauss-Legendre nodes per graded panel level.
    pub nodes: usize,
    /// Truncation radius for `Substitution::None`.
    pub r_cut: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { substitution: Substitution::Tan, nodes: 16, r_cut: 50.0 }
    }
}

/// Probe for one `(λ, p)` evaluation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FsProbe {
    pub lambda: f64,
    pub p: f64,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

impl FsProbe {
    pub fn new(lambda: f64, p: f64) -> Result<Self> {
        let probe = Self { lambda, p, quadrature: QuadratureSpec::default() };
        probe.validate()?;
        Ok(probe)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0) {
            return Err(Error::InvalidConfig("lambda must be >= 1".into()));
        }
        if !(self.p > 0.0 && self.p <= 2.0) {
            return Err(Error::InvalidConfig("p must lie in (0, 2]".into()));
        }
        Ok(())
    }
}

/// Radial value of the potential `φ_λ(r) = log(λ⁻² + r²) - log(1 + r²)`.
pub fn fs_potential(lambda: f64, r: f64) -> f64 {
    (lambda.powi(-2) + r * r).ln() - (1.0 + r * r).ln()
}

/// Radial gradient density `|∂φ_λ|²_ω = r²(1-λ⁻²)²/(λ⁻² + r²)²`.
pub fn grad_density(lambda: f64, r: f64) -> f64 {
    let il2 = lambda.powi(-2);
    let num = r * (1.0 - il2);
    let den = il2 + r * r;
    num * num / (den * den)
}

/// Radial integrand of `∫ |∂φ_λ|^p ω` (without the 2π angular factor).
pub fn lp_integrand(lambda: f64, p: f64, r: f64) -> f64 {
    let il2 = lambda.powi(-2);
    r.powf(p + 1.0) * (1.0 - il2).powf(p) / ((il2 + r * r).powf(p) * (1.0 + r * r).powi(2))
}

/// The λ-free majorant `r^{1-p}/(1+r²)²` that dominates `lp_integrand`
/// pointwise for λ ≥ 1.
pub fn majorant_integrand(p: f64, r: f64) -> f64 {
    r.powf(1.0 - p) / (1.0 + r * r).powi(2)
}

// ---------------------------------------------------------------------------
// Quadrature engine

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=m {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn panel_sum(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    splits: usize,
    gl: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let mut acc = 0.0;
    let w = (b - a) / splits as f64;
    for s in 0..splits {
        let (lo, hi) = (a + s as f64 * w, a + (s + 1) as f64 * w);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (x, wt) in gl.0.iter().zip(gl.1.iter()) {
            acc += wt * half * f(mid + half * x);
        }
    }
    acc
}

/// Composite Gauss-Legendre with panels geometrically graded into both
/// endpoints and per-panel node doubling until the relative change drops
/// below `rel_tol`.
fn integrate_graded(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    nodes: usize,
    rel_tol: f64,
) -> Result<f64> {
    const LEVELS: usize = 48;
    const MAX_SPLITS: usize = 1 << 9;
    let gl = gauss_legendre(nodes.clamp(4, 64));
    let mid = 0.5 * (lo + hi);
    let mut edges = Vec::with_capacity(2 * LEVELS + 2);
    for j in (1..=LEVELS).rev() {
        edges.push(lo + (mid - lo) * 0.5f64.powi(j as i32));
    }
    let left_inner: Vec<f64> = edges.clone();
    edges.clear();
    edges.push(lo);
    edges.extend_from_slice(&left_inner);
    edges.push(mid);
    for j in 1..=LEVELS {
        edges.push(hi - (hi - mid) * 0.5f64.powi(j as i32));
    }
    edges.push(hi);

    let eval = |splits: usize| -> f64 {
        edges
            .windows(2)
            .map(|w| panel_sum(&f, w[0], w[1], splits, &gl))
            .sum()
    };
    let mut splits = 1;
    let mut prev = eval(splits);
    loop {
        splits *= 2;
        let cur = eval(splits);
        let change = (cur - prev).abs();
        if change <= rel_tol * cur.abs() + 1e-300 {
            return Ok(cur);
        }
        if splits >= MAX_SPLITS {
            return Err(Error::QuadratureNotConverged {
                rel_change: change / (cur.abs() + 1e-300),
                nodes: edges.len() * splits * gl.0.len(),
            });
        }
        prev = cur;
    }
}

// ---------------------------------------------------------------------------
// Operations

/// `∫ |∂φ_λ|^p ω = 2π ∫₀^∞ lp_integrand dr` by the probe's quadrature.
pub fn lp_gradient_norm(probe: &FsProbe) -> Result<f64> {
    probe.validate()?;
    let (lambda, p) = (probe.lambda, probe.p);
    if lambda == 1.0 {
        return Ok(0.0);
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let nodes = probe.quadrature.nodes;
    match probe.quadrature.substitution {
        Substitution::None => {
            let f = |r: f64| lp_integrand(lambda, p, r);
            Ok(two_pi * integrate_graded(f, 0.0, probe.quadrature.r_cut, nodes, QUADRATURE_REL_TOL)?)
        }
        Substitution::Tan if lambda <= SPLIT_LAMBDA => {
            let f = |th: f64| {
                let c = th.cos();
                lp_integrand(lambda, p, th.tan()) / (c * c)
            };
            Ok(two_pi
                * integrate_graded(f, 0.0, std::f64::consts::FRAC_PI_2, nodes, QUADRATURE_REL_TOL)?)
        }
        Substitution::Tan => {
            // Split at r_c = λ^{-1/2}; the inner region in the rescaled
            // variable s = λ r carries the coefficient (1-λ⁻²)^p λ^{p-2}.
            let il2 = lambda.powi(-2);
            let coeff = (1.0 - il2).powf(p) * lambda.powf(p - 2.0);
            let s_max = lambda.sqrt();
            let inner = |psi: f64| {
                let c = psi.cos();
                let s = psi.tan();
                let g = s.powf(p + 1.0)
                    / ((1.0 + s * s).powf(p) * (1.0 + (s / lambda).powi(2)).powi(2));
                coeff * g / (c * c)
            };
            let i1 = integrate_graded(inner, 0.0, s_max.atan(), nodes, QUADRATURE_REL_TOL)?;
            let outer = |th: f64| {
                let c = th.cos();
                lp_integrand(lambda, p, th.tan()) / (c * c)
            };
            let r_c = 1.0 / s_max;
            let i2 = integrate_graded(
                outer,
                r_c.atan(),
                std::f64::consts::FRAC_PI_2,
                nodes,
                QUADRATURE_REL_TOL,
            )?;
            Ok(two_pi * (i1 + i2))
        }
    }
}

/// The majorant integral `2π ∫₀^∞ r^{1-p}/(1+r²)² dr`, finite for p < 2.
///
/// On `[0, 1]` the power map `r = v^{1/(2-p)}` flattens the endpoint
/// singularity exactly (the transformed integrand is `(1+r²)⁻²/(2-p)`);
/// the tail goes through the tan substitution as everywhere else.
pub fn lp_upper_bound(p: f64) -> Result<f64> {
    if p >= 2.0 {
        return Err(Error::DivergentBound { p });
    }
    if !(p > 0.0) {
        return Err(Error::InvalidConfig("p must be positive".into()));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let beta = 1.0 / (2.0 - p);
    let inner = |v: f64| {
        let r = v.powf(beta);
        beta / (1.0 + r * r).powi(2)
    };
    let i1 = integrate_graded(inner, 0.0, 1.0, 16, QUADRATURE_REL_TOL)?;
    let outer = |th: f64| {
        let t = th.tan();
        let c = th.cos();
        majorant_integrand(p, t) / (c * c)
    };
    let i2 = integrate_graded(
        outer,
        std::f64::consts::FRAC_PI_4,
        std::f64::consts::FRAC_PI_2,
        16,
        QUADRATURE_REL_TOL,
    )?;
    Ok(two_pi * (i1 + i2))
}

/// `ω_λ(0)/ω(0) = λ²`.
pub fn metric_ratio_at_zero(lambda: f64) -> f64 {
    lambda * lambda
}

/// Finite-difference cross-check of [`metric_ratio_at_zero`] through the
/// potential pipeline: Richardson-extrapolated second radial derivative of
/// `φ_λ` at the origin, shifted by the background density 1.
pub fn metric_ratio_fd_check(lambda: f64) -> f64 {
    let g = |h: f64| (fs_potential(lambda, h) - fs_potential(lambda, 0.0)) / (h * h);
    let h = 1e-3 / lambda;
    1.0 + (4.0 * g(0.5 * h) - g(h)) / 3.0
}

/// Default curvature sample radii in units of the metric scale `1/λ`.
pub const CURVATURE_SAMPLE_RADII: [f64; 5] = [0.2, 0.5, 1.0, 2.0, 5.0];

/// Fourth-order first derivative.
fn d1_5pt(f: &impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
    (f(r - 2.0 * h) - 8.0 * f(r - h) + 8.0 * f(r + h) - f(r + 2.0 * h)) / (12.0 * h)
}

/// Radial Laplacian in flux form `Δ₀F = (r F')'/r`. The flux `r F'` turns
/// the harmonic background `ln r` into an exact constant, which cancels in
/// the outer difference instead of swamping the small curvature residual.
fn radial_laplacian_flux(f: &impl Fn(f64) -> f64, r: f64, h: f64, lambda: f64) -> f64 {
    let flux = |rr: f64| {
        let hh = (1e-3 * rr.max(1.0 / lambda)).min(rr / 8.0);
        rr * d1_5pt(f, rr, hh)
    };
    (flux(r + h) - flux(r - h)) / (2.0 * h) / r
}

/// Curvature of `ω_λ` at the sample radii through the dimension-1 radial
/// pipeline `g = Δ₀Ψ/4`, `S = -Δ₀ log g / (4g)`; returns `max |S - 2|`.
///
/// Sample radii are chart radii; the geometrically meaningful probes sit at
/// multiples of the metric scale `1/λ` (the family is the pullback of the
/// λ = 1 metric under `z -> λz`), e.g. `CURVATURE_SAMPLE_RADII` over λ.
pub fn fs_curvature_check(lambda: f64, sample_rs: &[f64]) -> f64 {
    let psi = move |r: f64| (lambda.powi(-2) + r * r).ln();
    let metric = move |r: f64| {
        let scale = r.max(1.0 / lambda);
        let h = (2e-3 * scale).min(r / 8.0);
        0.25 * radial_laplacian_flux(&psi, r, h, lambda)
    };
    let mut worst = 0.0f64;
    for &r in sample_rs {
        let scale = r.max(1.0 / lambda);
        let h = (5e-3 * scale).min(r / 8.0);
        let log_g = |rr: f64| metric(rr).ln();
        let s = -0.25 * radial_laplacian_flux(&log_g, r, h, lambda) / metric(r);
        worst = worst.max((s - 2.0).abs());
    }
    worst
}

/// [`fs_curvature_check`] at the default metric-scale radii.
pub fn fs_curvature_check_scaled(lambda: f64) -> f64 {
    let rs: Vec<f64> = CURVATURE_SAMPLE_RADII.iter().map(|r| r / lambda).collect();
    fs_curvature_check(lambda, &rs)
}
