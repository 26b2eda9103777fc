use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{FieldState, Grid1D};

/// Eigenvalues of the periodic stencils, indexed by mode `m = 0..n_sites`.
///
/// `laplacian[m] = -(2/dx²)(1 - cos(k_m dx))` and `biharmonic[m] =
/// laplacian[m]²`, so multiplying a transformed field by them reproduces the
/// real-space stencils up to round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMultipliers {
    pub laplacian: Vec<f64>,
    pub biharmonic: Vec<f64>,
}

pub fn spectral_multipliers(grid: &Grid1D) -> SpectralMultipliers {
    let dx = grid.dx();
    let laplacian: Vec<f64> = (0..grid.n_sites())
        .map(|m| -(2.0 / (dx * dx)) * (1.0 - (grid.wavenumber(m) * dx).cos()))
        .collect();
    let biharmonic = laplacian.iter().map(|l| l * l).collect();
    SpectralMultipliers {
        laplacian,
        biharmonic,
    }
}

/// Forward/inverse complex FFT pair for one lattice size.
///
/// Forward is unnormalised, `f̂_m = Σ_j f_j e^{-2πi jm/n}`; the inverse
/// carries the `1/n`.
#[derive(Clone)]
pub struct SpectralPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("n", &self.n).finish()
    }
}

impl SpectralPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward_into(&mut self, src: &[f64], dst: &mut [Complex64]) {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = Complex64::new(s, 0.0);
        }
        self.forward.process_with_scratch(dst, &mut self.scratch);
    }

    /// Inverse transform of `buf` (overwritten) keeping the real part.
    pub fn inverse_into(&mut self, buf: &mut [Complex64], dst: &mut [f64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let inv_n = 1.0 / self.n as f64;
        for (d, c) in dst.iter_mut().zip(buf.iter()) {
            *d = c.re * inv_n;
        }
    }

    pub fn forward(&mut self, f: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        self.forward_into(f, &mut out);
        out
    }

    pub fn inverse(&mut self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        let mut out = vec![0.0; self.n];
        self.inverse_into(&mut buf, &mut out);
        out
    }

    /// Applies a per-mode real multiplier in Fourier space.
    pub fn apply_multiplier(&mut self, f: &FieldState, multiplier: &[f64]) -> FieldState {
        let mut spec = self.forward(&f.values);
        for (c, m) in spec.iter_mut().zip(multiplier) {
            *c *= *m;
        }
        FieldState {
            grid: f.grid,
            values: self.inverse(&spec),
            time: f.time,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{biharmonic, laplacian};

    fn noisy(grid: Grid1D) -> FieldState {
        FieldState::from_fn(grid, |x| {
            (1.7 * x).sin() + 0.3 * (5.1 * x * x).cos() + 0.01 * x
        })
    }

    #[test]
    fn constant_and_nyquist_modes() {
        for &dx in &[1.0, 0.5] {
            let g = Grid1D::new(64, dx).unwrap();
            let m = spectral_multipliers(&g);
            assert_eq!((m.laplacian[0], m.biharmonic[0]), (0.0, 0.0));
            let lam = m.laplacian[32];
            assert!((lam + 4.0 / (dx * dx)).abs() < 1e-12);
            assert!((m.biharmonic[32] - 16.0 / dx.powi(4)).abs() < 1e-10);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for &n in &[8usize, 60, 80, 100, 127] {
            let g = Grid1D::periodic(n).unwrap();
            let f = noisy(g);
            let mut plan = SpectralPlan::new(n);
            let back = plan.inverse(&plan.clone().forward(&f.values));
            for (a, b) in back.iter().zip(&f.values) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectral_application_matches_stencils() {
        for &(n, dx) in &[(60usize, 1.0), (100, 0.7), (31, 1.9)] {
            let g = Grid1D::new(n, dx).unwrap();
            let f = noisy(g);
            let mult = spectral_multipliers(&g);
            let mut plan = SpectralPlan::new(n);
            for (spec, real) in [
                (plan.apply_multiplier(&f, &mult.laplacian), laplacian(&f)),
                (plan.apply_multiplier(&f, &mult.biharmonic), biharmonic(&f)),
            ] {
                let scale = real.max_abs();
                for (a, b) in spec.values.iter().zip(&real.values) {
                    assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
                }
            }
        }
    }
}
