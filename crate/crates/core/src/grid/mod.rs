//! One-dimensional lattices, stencil operators and spectral helpers.
//!
//! Production runs use periodic lattices. Open windows exist only for
//! identities that must be checked away from any wrap-around; stencil output
//! on an open window is meaningful on the interior and set to zero at the
//! edges.

mod spectral;

pub use spectral::{spectral_multipliers, SpectralMultipliers, SpectralPlan};

use serde::{Deserialize, Serialize};

use crate::stats::KahanSum;
use crate::{Error, Result};

/// Smallest lattice accepted by [`Grid1D::new`].
pub const MIN_SITES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_sites: usize,
    dx: f64,
    boundary: Boundary,
}

impl Grid1D {
    pub fn new(n_sites: usize, dx: f64) -> Result<Self> {
        Self::with_boundary(n_sites, dx, Boundary::Periodic)
    }

    /// Periodic lattice with unit spacing.
    pub fn periodic(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, 1.0)
    }

    /// Non-wrapped coordinate window `x_i = i·dx`.
    pub fn open_window(n_sites: usize, dx: f64) -> Result<Self> {
        Self::with_boundary(n_sites, dx, Boundary::Open)
    }

    pub fn with_boundary(n_sites: usize, dx: f64, boundary: Boundary) -> Result<Self> {
        if n_sites < MIN_SITES {
            return Err(Error::InvalidGrid(format!(
                "n_sites = {n_sites} is below the minimum of {MIN_SITES}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("dx = {dx} must be positive")));
        }
        Ok(Self {
            n_sites,
            dx,
            boundary,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Physical length `n_sites · dx`.
    pub fn length(&self) -> f64 {
        self.n_sites as f64 * self.dx
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// Discrete wavenumber `2πm / (n_sites·dx)` of mode `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.length()
    }
}

/// Real scalar field on a lattice at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    pub fn new(grid: Grid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_sites() {
            return Err(Error::InvalidField(format!(
                "{} values for {} sites",
                values.len(),
                grid.n_sites()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value {} at site {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_sites()],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: Grid1D, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = (0..grid.n_sites()).map(|i| f(grid.coordinate(i))).collect();
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            grid: self.grid,
            values,
            time: self.time,
        }
    }

    /// Lattice translation by `k` sites: `out[i] = f[i - k]` (periodic).
    pub fn shifted(&self, k: isize) -> Self {
        let n = self.len() as isize;
        let values = (0..n)
            .map(|i| self.values[(i - k).rem_euclid(n) as usize])
            .collect();
        self.with_values(values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Writes the 3-point Laplacian of `src` into `dst`.
pub fn laplacian_into(src: &[f64], dx: f64, boundary: Boundary, dst: &mut [f64]) {
    let n = src.len();
    debug_assert_eq!(n, dst.len());
    let inv = 1.0 / (dx * dx);
    match boundary {
        Boundary::Periodic => {
            dst[0] = (src[1] - 2.0 * src[0] + src[n - 1]) * inv;
            for i in 1..n - 1 {
                dst[i] = (src[i + 1] - 2.0 * src[i] + src[i - 1]) * inv;
            }
            dst[n - 1] = (src[0] - 2.0 * src[n - 1] + src[n - 2]) * inv;
        }
        Boundary::Open => {
            dst[0] = 0.0;
            for i in 1..n - 1 {
                dst[i] = (src[i + 1] - 2.0 * src[i] + src[i - 1]) * inv;
            }
            dst[n - 1] = 0.0;
        }
    }
}

/// Centered first difference `(f[i+1] - f[i-1]) / (2dx)`.
pub fn gradient_into(src: &[f64], dx: f64, boundary: Boundary, dst: &mut [f64]) {
    let n = src.len();
    let inv = 0.5 / dx;
    match boundary {
        Boundary::Periodic => {
            dst[0] = (src[1] - src[n - 1]) * inv;
            for i in 1..n - 1 {
                dst[i] = (src[i + 1] - src[i - 1]) * inv;
            }
            dst[n - 1] = (src[0] - src[n - 2]) * inv;
        }
        Boundary::Open => {
            dst[0] = 0.0;
            for i in 1..n - 1 {
                dst[i] = (src[i + 1] - src[i - 1]) * inv;
            }
            dst[n - 1] = 0.0;
        }
    }
}

pub fn laplacian(f: &FieldState) -> FieldState {
    let mut out = vec![0.0; f.len()];
    laplacian_into(&f.values, f.grid.dx(), f.grid.boundary(), &mut out);
    f.with_values(out)
}

/// Biharmonic operator as the Laplacian applied twice, i.e. the 5-point
/// stencil `(f[i+2] - 4f[i+1] + 6f[i] - 4f[i-1] + f[i-2]) / dx⁴`.
pub fn biharmonic(f: &FieldState) -> FieldState {
    laplacian(&laplacian(f))
}

pub fn gradient(f: &FieldState) -> FieldState {
    let mut out = vec![0.0; f.len()];
    gradient_into(&f.values, f.grid.dx(), f.grid.boundary(), &mut out);
    f.with_values(out)
}

pub fn spatial_mean(f: &FieldState) -> f64 {
    mean_of(&f.values)
}

pub(crate) fn mean_of(values: &[f64]) -> f64 {
    values.iter().copied().collect::<KahanSum>().value() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn random_field(grid: Grid1D, seed: u64) -> FieldState {
        // xorshift; keeps the tests independent of the crate's RNG plumbing
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        FieldState::from_fn(grid, |_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(Grid1D::new(7, 1.0).is_err());
        assert!(Grid1D::new(8, 0.0).is_err());
        assert!(Grid1D::new(8, f64::NAN).is_err());
        let g = Grid1D::new(8, 0.5).unwrap();
        assert_eq!(g.length(), 4.0);
    }

    #[test]
    fn field_rejects_bad_values() {
        let g = Grid1D::periodic(8).unwrap();
        assert!(FieldState::new(g, vec![0.0; 7], 0.0).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert!(FieldState::new(g, v, 0.0).is_err());
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = Grid1D::new(16, 0.7).unwrap();
        let f = FieldState::from_fn(g, |_| 3.25);
        assert!(laplacian(&f).values.iter().all(|&v| v == 0.0));
        assert!(biharmonic(&f).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cosine_is_laplacian_eigenfield() {
        for &(n, dx) in &[(16usize, 1.0), (60, 0.5), (33, 2.0)] {
            let g = Grid1D::new(n, dx).unwrap();
            let k = 2.0 * PI / (n as f64 * dx);
            let f = FieldState::from_fn(g, |x| (k * x).cos());
            let lam = -(2.0 / (dx * dx)) * (1.0 - (k * dx).cos());
            let lap = laplacian(&f);
            let bih = biharmonic(&f);
            for i in 0..n {
                assert!((lap.values[i] - lam * f.values[i]).abs() < 1e-12);
                assert!((bih.values[i] - lam * lam * f.values[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stencils_exact_on_quadratic_window() {
        let dx = 0.25;
        let g = Grid1D::open_window(32, dx).unwrap();
        let f = FieldState::from_fn(g, |x| x * x / 2.0);
        let lap = laplacian(&f);
        for i in 1..31 {
            assert!((lap.values[i] - 1.0).abs() < 1e-12, "site {i}");
        }
        let bih = biharmonic(&f);
        for i in 2..30 {
            assert!(bih.values[i].abs() < 1e-10, "site {i}");
        }
    }

    #[test]
    fn spatial_mean_examples() {
        let g = Grid1D::periodic(8).unwrap();
        let f = FieldState::new(g, vec![1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0], 0.0).unwrap();
        assert_eq!(spatial_mean(&f), 2.5);
        assert_eq!(spatial_mean(&FieldState::from_fn(g, |_| -1.5)), -1.5);
        let g = Grid1D::periodic(24).unwrap();
        let s = FieldState::from_fn(g, |x| (2.0 * PI * 3.0 * x / 24.0).sin());
        assert!(spatial_mean(&s).abs() < 1e-12);
    }

    #[test]
    fn biharmonic_is_laplacian_twice_exactly() {
        let g = Grid1D::new(40, 0.8).unwrap();
        let f = random_field(g, 11);
        assert_eq!(biharmonic(&f).values, laplacian(&laplacian(&f)).values);
    }

    proptest! {
        #[test]
        fn operators_commute_with_translations(seed in any::<u64>(), k in -20isize..20) {
            let g = Grid1D::new(24, 1.3).unwrap();
            let f = random_field(g, seed);
            prop_assert_eq!(laplacian(&f.shifted(k)).values, laplacian(&f).shifted(k).values);
            prop_assert_eq!(biharmonic(&f.shifted(k)).values, biharmonic(&f).shifted(k).values);
        }

        #[test]
        fn laplacian_has_zero_mean(seed in any::<u64>(), n in 8usize..80) {
            let g = Grid1D::periodic(n).unwrap();
            let f = random_field(g, seed);
            let scale = f.max_abs().max(1e-300);
            prop_assert!(spatial_mean(&laplacian(&f)).abs() <= 1e-12 * scale);
        }
    }
}
