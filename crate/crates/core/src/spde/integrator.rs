use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::equation::{nonlinear_into, rhs_into, stability_limit, EquationSpec, RhsWorkspace};
use super::noise::NoiseSampler;
use crate::grid::{spectral_multipliers, FieldState, Grid1D, SpectralPlan};
use crate::{Error, Result};

/// Any site beyond this magnitude aborts the realization.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Linear part implicit in Fourier space, nonlinearity and noise explicit.
    /// Periodic grids only.
    #[default]
    ImexSpectral,
    /// Forward Euler–Maruyama; needs `dt` below the stability limit.
    ExplicitEulerMaruyama,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default)]
    pub record_times: Vec<f64>,
}

impl IntegratorSpec {
    pub fn new(scheme: Scheme, dt: f64, t_max: f64, record_times: Vec<f64>) -> Self {
        Self {
            scheme,
            dt,
            t_max,
            record_times,
        }
    }

    pub fn validate(&self, eq: &EquationSpec, grid: &Grid1D) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidIntegrator(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive and finite", self.dt));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return bad(format!(
                "t_max = {} must be non-negative and finite",
                self.t_max
            ));
        }
        let mut prev = f64::NEG_INFINITY;
        for &t in &self.record_times {
            if !t.is_finite() || t < 0.0 || t > self.t_max + 0.5 * self.dt {
                return bad(format!("record time {t} outside [0, {}]", self.t_max));
            }
            if t < prev {
                return bad("record_times must be non-decreasing".into());
            }
            prev = t;
        }
        match self.scheme {
            Scheme::ExplicitEulerMaruyama => {
                let limit = stability_limit(eq, grid);
                if self.dt > limit * (1.0 + 1e-12) {
                    return bad(format!(
                        "dt = {} exceeds the explicit stability limit {limit}",
                        self.dt
                    ));
                }
            }
            Scheme::ImexSpectral => {
                if !grid.is_periodic() {
                    return bad("the imex scheme needs a periodic grid".into());
                }
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Step index of every record time.
    pub fn record_steps(&self) -> Vec<usize> {
        self.record_times
            .iter()
            .map(|t| (t / self.dt).round() as usize)
            .collect()
    }
}

/// Roughly `per_decade` log-spaced times in `[t_min, t_max]`, snapped to
/// multiples of `dt` and deduplicated.
pub fn geometric_schedule(t_min: f64, t_max: f64, per_decade: usize, dt: f64) -> Vec<f64> {
    let t_min = t_min.max(dt);
    if t_max < t_min {
        return Vec::new();
    }
    let decades = (t_max / t_min).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let mut steps: Vec<u64> = (0..=n)
        .map(|i| {
            let t = t_min * 10f64.powf(decades * i as f64 / n as f64);
            (t / dt).round().max(1.0) as u64
        })
        .collect();
    steps.dedup();
    steps.into_iter().map(|s| s as f64 * dt).collect()
}

/// Reusable integrator state for one equation on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    eq: EquationSpec,
    grid: Grid1D,
    scheme: Scheme,
    dt: f64,
    plan: Option<SpectralPlan>,
    implicit_factor: Vec<f64>,
    ws: RhsWorkspace,
    drift: Vec<f64>,
    noise: Vec<f64>,
    sampler: NoiseSampler,
    spectrum: Vec<Complex64>,
}

impl Stepper {
    pub fn new(eq: &EquationSpec, grid: &Grid1D, scheme: Scheme, dt: f64) -> Result<Self> {
        eq.validate()?;
        IntegratorSpec::new(scheme, dt, 0.0, Vec::new()).validate(eq, grid)?;
        let n = grid.n_sites();
        let (plan, implicit_factor) = match scheme {
            Scheme::ImexSpectral => {
                let m = spectral_multipliers(grid);
                let factor = m
                    .laplacian
                    .iter()
                    .zip(&m.biharmonic)
                    .map(|(&l2, &l4)| 1.0 / (1.0 - dt * eq.linear_rate(l2, l4)))
                    .collect();
                (Some(SpectralPlan::new(n)), factor)
            }
            Scheme::ExplicitEulerMaruyama => (None, Vec::new()),
        };
        Ok(Self {
            eq: *eq,
            grid: *grid,
            scheme,
            dt,
            plan,
            implicit_factor,
            ws: RhsWorkspace::new(n),
            drift: vec![0.0; n],
            noise: vec![0.0; n],
            sampler: NoiseSampler::new(n),
            spectrum: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Per-mode factor `1/(1 − dt·λ)` applied by the implicit solve.
    pub fn implicit_factor(&self) -> &[f64] {
        &self.implicit_factor
    }

    /// Advances `state` by one step and bumps its time by `dt`.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut FieldState, rng: &mut R) -> Result<()> {
        let dt = self.dt;
        self.sampler
            .sample_into(rng, &self.eq, &self.grid, dt, &mut self.noise);
        match self.scheme {
            Scheme::ExplicitEulerMaruyama => {
                rhs_into(
                    &self.eq,
                    &self.grid,
                    &state.values,
                    &mut self.ws,
                    &mut self.drift,
                );
                for ((f, &d), &xi) in state.values.iter_mut().zip(&self.drift).zip(&self.noise) {
                    *f += dt * (d + xi);
                }
            }
            Scheme::ImexSpectral => {
                nonlinear_into(
                    &self.eq,
                    &self.grid,
                    &state.values,
                    &mut self.ws,
                    &mut self.drift,
                );
                for ((f, &d), &xi) in state.values.iter_mut().zip(&self.drift).zip(&self.noise) {
                    *f += dt * (d + xi);
                }
                let plan = self.plan.as_mut().expect("imex stepper owns a plan");
                plan.forward_into(&state.values, &mut self.spectrum);
                for (a, &k) in self.spectrum.iter_mut().zip(&self.implicit_factor) {
                    *a *= k;
                }
                plan.inverse_into(&mut self.spectrum, &mut state.values);
            }
        }
        state.time += dt;
        let max_abs = state.values.iter().fold(0.0f64, |m, v| {
            if v.is_finite() {
                m.max(v.abs())
            } else {
                f64::INFINITY
            }
        });
        if max_abs > OVERFLOW_GUARD {
            return Err(Error::Divergence {
                time: state.time,
                max_abs,
            });
        }
        Ok(())
    }
}

/// Single step without a reusable [`Stepper`]; allocates an FFT plan.
pub fn step<R: Rng + ?Sized>(
    state: &FieldState,
    eq: &EquationSpec,
    integrator: &IntegratorSpec,
    rng: &mut R,
) -> Result<FieldState> {
    let mut stepper = Stepper::new(eq, &state.grid, integrator.scheme, integrator.dt)?;
    let mut next = state.clone();
    stepper.step(&mut next, rng)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cosine(n: usize, m: usize) -> FieldState {
        let g = Grid1D::periodic(n).unwrap();
        let k = 2.0 * PI * m as f64 / n as f64;
        FieldState::from_fn(g, |x| (k * x).cos())
    }

    #[test]
    fn single_mode_multipliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for eq in [
            EquationSpec::edwards_wilkinson(1.0, 0.0),
            EquationSpec::mullins_herring(1.0, 0.0),
            EquationSpec::dipole_deterministic(0.3, 1.0, 0.0),
        ] {
            let f = cosine(32, 3);
            let m = spectral_multipliers(&f.grid);
            let lambda = eq.linear_rate(m.laplacian[3], m.biharmonic[3]);
            let dt = 0.01;
            let ex = IntegratorSpec::new(Scheme::ExplicitEulerMaruyama, dt, dt, vec![]);
            let im = IntegratorSpec::new(Scheme::ImexSpectral, dt, dt, vec![]);
            let a = step(&f, &eq, &ex, &mut rng).unwrap();
            let b = step(&f, &eq, &im, &mut rng).unwrap();
            for i in 0..32 {
                assert!((a.values[i] - (1.0 + dt * lambda) * f.values[i]).abs() < 1e-13);
                assert!((b.values[i] - f.values[i] / (1.0 - dt * lambda)).abs() < 1e-13);
            }
            assert!((a.time - dt).abs() < 1e-15);
        }
    }

    #[test]
    fn explicit_rejects_unstable_dt() {
        let g = Grid1D::periodic(16).unwrap();
        let eq = EquationSpec::dipole_growth(0.0, 1.0, 0.5, 1.0);
        assert!(Stepper::new(&eq, &g, Scheme::ExplicitEulerMaruyama, 0.2).is_err());
        assert!(Stepper::new(&eq, &g, Scheme::ExplicitEulerMaruyama, 0.125).is_ok());
        assert!(Stepper::new(&eq, &g, Scheme::ImexSpectral, 0.2).is_ok());
    }

    #[test]
    fn imex_needs_periodic_grid() {
        let g = Grid1D::open_window(16, 1.0).unwrap();
        let eq = EquationSpec::edwards_wilkinson(1.0, 1.0);
        assert!(Stepper::new(&eq, &g, Scheme::ImexSpectral, 0.01).is_err());
        assert!(Stepper::new(&eq, &g, Scheme::ExplicitEulerMaruyama, 0.01).is_ok());
    }

    #[test]
    fn blow_up_is_reported() {
        let g = Grid1D::periodic(16).unwrap();
        let eq = EquationSpec::dipole_deterministic(0.0, 1.0, 1.0);
        let mut f = FieldState::from_fn(g, |x| 1e5 * (2.0 * PI * x / 16.0).cos());
        let mut st = Stepper::new(&eq, &g, Scheme::ImexSpectral, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut hit = None;
        for _ in 0..100 {
            if let Err(e) = st.step(&mut f, &mut rng) {
                hit = Some(e);
                break;
            }
        }
        assert!(matches!(hit, Some(Error::Divergence { .. })), "{hit:?}");
    }

    #[test]
    fn conserving_schemes_keep_the_mean() {
        let g = Grid1D::periodic(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for scheme in [Scheme::ImexSpectral, Scheme::ExplicitEulerMaruyama] {
            for eq in [
                EquationSpec::weak_charge(1.0, 1.0),
                EquationSpec::strong_charge(1.0, 1.0),
            ] {
                let mut st = Stepper::new(&eq, &g, scheme, 0.01).unwrap();
                let mut f = FieldState::from_fn(g, |x| (0.3 * x).sin() + 1.0);
                let m0 = crate::grid::spatial_mean(&f);
                for _ in 0..200 {
                    st.step(&mut f, &mut rng).unwrap();
                }
                assert!((crate::grid::spatial_mean(&f) - m0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn schedule_is_snapped_and_sorted() {
        let s = geometric_schedule(0.01, 100.0, 5, 0.01);
        assert_eq!(s[0], 0.01);
        assert!((s.last().unwrap() - 100.0).abs() < 1e-9);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }
}
