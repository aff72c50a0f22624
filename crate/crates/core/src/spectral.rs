//! FFT-based differential operators on the periodic square grid.
//!
//! Fields live on an n-by-n grid over a period-P square, row-major with
//! index `iy * n + ix` and nodes at `x = ix * P / n`. The Laplacian is the
//! half-Laplacian of the flat Kähler chart, `Δ = (∂²x + ∂²y) / 2`, so the
//! mode `exp(i(j x + k y))` on the period-2π torus is an eigenfunction with
//! eigenvalue `-(j² + k²)/2`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached FFT plans and wavenumbers for one grid size.
pub struct Spectral {
    n: usize,
    period: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Signed wavenumbers `2π j / P` in FFT ordering.
    k: Vec<f64>,
}

impl Spectral {
    pub fn new(n: usize, period: f64) -> Self {
        assert!(n >= 2 && n % 2 == 0, "spectral grid must be even");
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let dk = 2.0 * std::f64::consts::PI / period;
        let k = (0..n)
            .map(|j| {
                let signed = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                signed as f64 * dk
            })
            .collect();
        Self { n, period, fwd, inv, k }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Grid spacing.
    pub fn cell(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Forward 2-D transform of a real field (unnormalized).
    pub fn fft2(&self, field: &[f64]) -> Vec<Complex64> {
        assert_eq!(field.len(), self.n * self.n);
        let mut data: Vec<Complex64> =
            field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_rows_cols(&mut data, &self.fwd);
        data
    }

    /// Inverse 2-D transform, returning the real part with 1/n² applied.
    pub fn ifft2_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.transform_rows_cols(&mut spec, &self.inv);
        let scale = 1.0 / (self.n * self.n) as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    fn transform_rows_cols(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::default(); n];
        for ix in 0..n {
            for iy in 0..n {
                col[iy] = data[iy * n + ix];
            }
            plan.process(&mut col);
            for iy in 0..n {
                data[iy * n + ix] = col[iy];
            }
        }
    }

    /// Apply a real Fourier multiplier `sym(kx, ky)`.
    pub fn apply_symbol(&self, field: &[f64], sym: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut spec = self.fft2(field);
        let n = self.n;
        for iy in 0..n {
            let ky = self.k[iy];
            for ix in 0..n {
                spec[iy * n + ix] *= sym(self.k[ix], ky);
            }
        }
        self.ifft2_real(spec)
    }

    /// Half-Laplacian `Δ = (∂²x + ∂²y)/2`; the zero mode is annihilated, so
    /// the output has exactly zero mean.
    pub fn laplacian(&self, field: &[f64]) -> Vec<f64> {
        self.apply_symbol(field, |kx, ky| -0.5 * (kx * kx + ky * ky))
    }

    /// Biharmonic operator `Δ²`.
    pub fn biharmonic(&self, field: &[f64]) -> Vec<f64> {
        self.apply_symbol(field, |kx, ky| {
            let s = 0.5 * (kx * kx + ky * ky);
            s * s
        })
    }

    fn derivative(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let mut spec = self.fft2(field);
        let n = self.n;
        let nyquist = n / 2;
        for iy in 0..n {
            for ix in 0..n {
                let (j, kv) = if axis == 0 { (ix, self.k[ix]) } else { (iy, self.k[iy]) };
                // Zero the Nyquist mode: i*k has no real representative there.
                let mult = if j == nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, kv)
                };
                spec[iy * n + ix] *= mult;
            }
        }
        self.ifft2_real(spec)
    }

    pub fn derivative_x(&self, field: &[f64]) -> Vec<f64> {
        self.derivative(field, 0)
    }

    pub fn derivative_y(&self, field: &[f64]) -> Vec<f64> {
        self.derivative(field, 1)
    }

    /// Solve `(1 + a dt Δ²) out = rhs` in spectral space.
    pub fn solve_stabilized(&self, rhs: &[f64], a: f64, dt: f64) -> Vec<f64> {
        self.apply_symbol(rhs, |kx, ky| {
            let s = 0.5 * (kx * kx + ky * ky);
            1.0 / (1.0 + a * dt * s * s)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid_fn(n: usize, period: f64, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let h = period / n as f64;
        let mut out = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                out[iy * n + ix] = f(ix as f64 * h, iy as f64 * h);
            }
        }
        out
    }

    #[test]
    fn laplacian_eigenfunctions() {
        let n = 32;
        let sp = Spectral::new(n, 2.0 * std::f64::consts::PI);
        // cos x -> -cos(x)/2
        let f = grid_fn(n, sp.period(), |x, _| x.cos());
        let lap = sp.laplacian(&f);
        for (a, b) in lap.iter().zip(f.iter()) {
            assert_abs_diff_eq!(*a, -0.5 * b, epsilon = 1e-12);
        }
        // cos x + 2 cos 2y -> -cos(x)/2 - 4 cos 2y
        let g = grid_fn(n, sp.period(), |x, y| x.cos() + 2.0 * (2.0 * y).cos());
        let expect = grid_fn(n, sp.period(), |x, y| {
            -0.5 * x.cos() - 4.0 * (2.0 * y).cos()
        });
        let lap = sp.laplacian(&g);
        for (a, b) in lap.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let n = 16;
        let sp = Spectral::new(n, 2.0 * std::f64::consts::PI);
        let f = vec![3.7; n * n];
        for v in sp.laplacian(&f) {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn general_mode_eigenvalue() {
        let n = 64;
        let sp = Spectral::new(n, 2.0 * std::f64::consts::PI);
        for &(j, k) in &[(1i32, 0i32), (2, 3), (4, 4), (0, 5)] {
            let f = grid_fn(n, sp.period(), |x, y| (j as f64 * x + k as f64 * y).cos());
            let lap = sp.laplacian(&f);
            let lam = -0.5 * (j * j + k * k) as f64;
            let mut max_rel: f64 = 0.0;
            for (a, b) in lap.iter().zip(f.iter()) {
                max_rel = max_rel.max((a - lam * b).abs());
            }
            assert!(max_rel / lam.abs() < 1e-12, "mode ({j},{k}): {max_rel}");
        }
    }

    #[test]
    fn derivative_matches_analytic() {
        let n = 64;
        let sp = Spectral::new(n, 2.0 * std::f64::consts::PI);
        let f = grid_fn(n, sp.period(), |x, y| (2.0 * x).sin() + (3.0 * y).cos());
        let dx = sp.derivative_x(&f);
        let dy = sp.derivative_y(&f);
        let ex = grid_fn(n, sp.period(), |x, _| 2.0 * (2.0 * x).cos());
        let ey = grid_fn(n, sp.period(), |_, y| -3.0 * (3.0 * y).sin());
        for i in 0..n * n {
            assert_abs_diff_eq!(dx[i], ex[i], epsilon = 1e-11);
            assert_abs_diff_eq!(dy[i], ey[i], epsilon = 1e-11);
        }
    }

    #[test]
    fn nonsquare_period_scaling() {
        let n = 32;
        let period = 4.0;
        let sp = Spectral::new(n, period);
        let q = 2.0 * std::f64::consts::PI / period;
        let f = grid_fn(n, period, |x, _| (q * x).cos());
        let lap = sp.laplacian(&f);
        for (a, b) in lap.iter().zip(f.iter()) {
            assert_abs_diff_eq!(*a, -0.5 * q * q * b, epsilon = 1e-11);
        }
    }

    #[test]
    fn stabilized_solve_inverts_operator() {
        let n = 32;
        let sp = Spectral::new(n, 2.0 * std::f64::consts::PI);
        let f = grid_fn(n, sp.period(), |x, y| (x + 2.0 * y).cos() + 0.3 * (3.0 * x).sin());
        let a = 0.7;
        let dt = 0.05;
        let sol = sp.solve_stabilized(&f, a, dt);
        let back: Vec<f64> = {
            let b = sp.biharmonic(&sol);
            sol.iter().zip(b.iter()).map(|(s, bb)| s + a * dt * bb).collect()
        };
        for i in 0..n * n {
            assert_abs_diff_eq!(back[i], f[i], epsilon = 1e-11);
        }
    }
}
