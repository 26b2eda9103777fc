use rand::Rng;
use rand_distr::StandardNormal;

use super::equation::EquationSpec;
use crate::grid::{gradient_into, laplacian_into, Grid1D};

/// Draws the discretized noise term for one time step.
///
/// Each site gets `sqrt(C/(dx·dt))·N(0,1)`, so that `dt` times the sample
/// has variance `C·dt/dx`. Conserving variants then take one (centered
/// difference) or two (Laplacian) derivatives of that white field.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    white: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(n: usize) -> Self {
        Self {
            white: vec![0.0; n],
        }
    }

    pub fn amplitude(eq: &EquationSpec, grid: &Grid1D, dt: f64) -> f64 {
        (eq.noise_strength / (grid.dx() * dt)).sqrt()
    }

    pub fn sample_into<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        eq: &EquationSpec,
        grid: &Grid1D,
        dt: f64,
        out: &mut [f64],
    ) {
        if eq.noise_strength == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let amp = Self::amplitude(eq, grid, dt);
        let target: &mut [f64] = if eq.noise_conservation_order == 0 {
            out
        } else {
            &mut self.white
        };
        for w in target.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *w = amp * z;
        }
        match eq.noise_conservation_order {
            0 => {}
            1 => gradient_into(&self.white, grid.dx(), grid.boundary(), out),
            _ => laplacian_into(&self.white, grid.dx(), grid.boundary(), out),
        }
    }
}

/// Allocating convenience wrapper around [`NoiseSampler`].
pub fn sample_noise<R: Rng + ?Sized>(
    rng: &mut R,
    eq: &EquationSpec,
    grid: &Grid1D,
    dt: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_sites()];
    NoiseSampler::new(grid.n_sites()).sample_into(rng, eq, grid, dt, &mut out);
    out
}
