use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::Jump;
use super::ops::{max_modulus, CMatrix, SparseOp};
use crate::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Allowed trace drift over a whole evolution.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: CMatrix,
    pub time: f64,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and (eigenvalue) positivity.
    pub fn new(rho: CMatrix, time: f64) -> Result<Self> {
        let dm = Self { rho, time };
        dm.check()?;
        Ok(dm)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            rho: CMatrix::identity(dim, dim).unscale(dim as f64),
            time: 0.0,
        }
    }

    /// `|ψ⟩⟨ψ|` for the normalized `psi`.
    pub fn pure(psi: &[Complex64]) -> Self {
        let v = DVector::from_column_slice(psi);
        let v = v.unscale(v.norm());
        Self {
            rho: &v * v.adjoint(),
            time: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_modulus(&(&self.rho - self.rho.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()).scale(0.5);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &e| m.min(e))
    }

    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::ToleranceViolation {
                time: self.time,
                what: "hermiticity",
                value: herm,
            });
        }
        let tr = (self.trace() - ONE).norm();
        if tr > TRACE_TOL {
            return Err(Error::ToleranceViolation {
                time: self.time,
                what: "trace",
                value: tr,
            });
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::ToleranceViolation {
                time: self.time,
                what: "min eigenvalue",
                value: min,
            });
        }
        Ok(())
    }
}

/// Lindblad generator `ℒρ = −i[H, ρ] + Σ_k γ_k (2 L_k ρ L_k† − {L_k†L_k, ρ})`.
#[derive(Debug, Clone)]
pub struct Generator {
    dim: usize,
    hamiltonian: SparseOp,
    jumps: Vec<(f64, SparseOp, SparseOp)>,
    /// `H − i Σ γ L†L`, so that the non-jump part is `−i(H_eff ρ − ρ H_eff†)`.
    h_eff: SparseOp,
    h_eff_adj: SparseOp,
}

impl Generator {
    pub fn new(hamiltonian: &SparseOp, jumps: &[Jump]) -> Self {
        let dim = hamiltonian.dim();
        let mut decay = SparseOp::zero(dim);
        let mut list = Vec::with_capacity(jumps.len());
        for j in jumps {
            let adj = j.op.adjoint();
            decay = decay.add(&adj.mul(&j.op).scale(Complex64::new(j.rate, 0.0)));
            list.push((j.rate, j.op.clone(), adj));
        }
        let h_eff = hamiltonian.sub(&decay.scale(I));
        Self {
            dim,
            hamiltonian: hamiltonian.clone(),
            jumps: list,
            h_eff_adj: h_eff.adjoint(),
            h_eff,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &SparseOp {
        &self.hamiltonian
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.h_eff.mul_dense_into(rho, -I, &mut out);
        self.h_eff_adj.dense_mul_into(rho, I, &mut out);
        let mut tmp = CMatrix::zeros(self.dim, self.dim);
        for (rate, op, adj) in &self.jumps {
            tmp.fill(Complex64::new(0.0, 0.0));
            op.mul_dense_into(rho, ONE, &mut tmp);
            adj.dense_mul_into(&tmp, Complex64::new(2.0 * rate, 0.0), &mut out);
        }
        out
    }

    /// Dense `dim² × dim²` matrix of the generator acting on column-stacked
    /// `vec(ρ)`.
    pub fn superoperator(&self) -> CMatrix {
        let d = self.dim;
        let mut m = CMatrix::zeros(d * d, d * d);
        let mut basis = CMatrix::zeros(d, d);
        for c in 0..d {
            for r in 0..d {
                basis[(r, c)] = ONE;
                let image = self.apply(&basis);
                m.column_mut(c * d + r).copy_from_slice(image.as_slice());
                basis[(r, c)] = Complex64::new(0.0, 0.0);
            }
        }
        m
    }
}

/// Dissipative part alone, `Σ γ (2LρL† − L†Lρ − ρL†L)`.
pub fn dissipator_apply(jumps: &[Jump], rho: &CMatrix) -> CMatrix {
    let dim = rho.nrows();
    Generator::new(&SparseOp::zero(dim), jumps).apply(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Checks positivity every this many steps (and at the end).
    pub positivity_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            positivity_every: 100,
        }
    }
}

fn rk4_step(gen: &Generator, rho: &CMatrix, dt: f64) -> CMatrix {
    let k1 = gen.apply(rho);
    let k2 = gen.apply(&(rho + k1.scale(0.5 * dt)));
    let k3 = gen.apply(&(rho + k2.scale(0.5 * dt)));
    let k4 = gen.apply(&(rho + k3.scale(dt)));
    rho + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0)
}

/// Integrates `∂tρ = ℒρ` from `rho0` over a duration `duration` with fixed-step RK4.
/// Each step checks the drift of Hermiticity and trace before restoring
/// Hermiticity; `visit` sees the state after every step.
pub fn evolve_with(
    gen: &Generator,
    rho0: &DensityMatrix,
    duration: f64,
    opts: &EvolveOptions,
    mut visit: impl FnMut(&DensityMatrix),
) -> Result<DensityMatrix> {
    if !(opts.dt > 0.0 && duration >= 0.0) {
        return Err(Error::InvalidRun(format!(
            "evolve needs dt > 0 and T ≥ 0, got dt = {}, T = {duration}",
            opts.dt
        )));
    }
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for a generator of dimension {}",
            rho0.dim(),
            gen.dim()
        )));
    }
    let steps = (duration / opts.dt).ceil() as usize;
    let dt = if steps > 0 {
        duration / steps as f64
    } else {
        0.0
    };
    let tr0 = rho0.trace();
    let mut state = rho0.clone();
    for k in 1..=steps {
        let next = rk4_step(gen, &state.rho, dt);
        state = DensityMatrix {
            rho: next,
            time: rho0.time + k as f64 * dt,
        };
        let herm = state.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::ToleranceViolation {
                time: state.time,
                what: "hermiticity",
                value: herm,
            });
        }
        let drift = (state.trace() - tr0).norm();
        if drift > TRACE_DRIFT_TOL {
            return Err(Error::ToleranceViolation {
                time: state.time,
                what: "trace drift",
                value: drift,
            });
        }
        state.rho = (&state.rho + state.rho.adjoint()).scale(0.5);
        if opts.positivity_every > 0 && (k % opts.positivity_every == 0 || k == steps) {
            let min = state.min_eigenvalue();
            if min < -POSITIVITY_TOL {
                return Err(Error::ToleranceViolation {
                    time: state.time,
                    what: "min eigenvalue",
                    value: min,
                });
            }
        }
        visit(&state);
    }
    Ok(state)
}

pub fn evolve(
    gen: &Generator,
    rho0: &DensityMatrix,
    duration: f64,
    opts: &EvolveOptions,
) -> Result<DensityMatrix> {
    evolve_with(gen, rho0, duration, opts, |_| {})
}

/// Frobenius norm of `ℒρ`.
pub fn stationarity_residual(gen: &Generator, rho: &CMatrix) -> f64 {
    gen.apply(rho).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateOptions {
    pub evolve: EvolveOptions,
    /// Evolution runs in chunks of this duration between residual checks.
    pub chunk: f64,
    pub t_max: f64,
    pub residual_tol: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            evolve: EvolveOptions::default(),
            chunk: 1.0,
            t_max: 500.0,
            residual_tol: 1e-10,
        }
    }
}

/// Long-time limit from `rho0`, by evolving until `‖ℒρ‖ ≤ residual_tol`.
pub fn steady_state_by_evolution(
    gen: &Generator,
    rho0: &DensityMatrix,
    opts: &SteadyStateOptions,
) -> Result<DensityMatrix> {
    let mut state = rho0.clone();
    loop {
        let residual = stationarity_residual(gen, &state.rho);
        if residual <= opts.residual_tol {
            return Ok(state);
        }
        if state.time - rho0.time >= opts.t_max {
            return Err(Error::NotConverged {
                time: state.time,
                residual,
            });
        }
        state = evolve(gen, &state, opts.chunk, &opts.evolve)?;
    }
}

/// Largest Hilbert-space dimension for the dense null-space route.
pub const NULLSPACE_DIM_CAP: usize = 32;

/// Long-time limit from `rho0` through the spectral projector onto the
/// kernel of the vectorized generator, `P₀ = R (Lᴴ R)⁻¹ Lᴴ`, with `R` and
/// `L` the right and left null vectors.
pub fn steady_state_by_kernel(gen: &Generator, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let d = gen.dim();
    if d > NULLSPACE_DIM_CAP {
        return Err(Error::DimensionCap {
            dim: d,
            cap: NULLSPACE_DIM_CAP,
        });
    }
    let m = gen.superoperator();
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let smax = svd.singular_values.max().max(1.0);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= 1e-9 * smax)
        .collect();
    if null.is_empty() {
        return Err(Error::NotConverged {
            time: f64::INFINITY,
            residual: svd.singular_values.min(),
        });
    }
    let k = null.len();
    let right = CMatrix::from_fn(d * d, k, |r, c| v_t[(null[c], r)].conj());
    let left = CMatrix::from_fn(d * d, k, |r, c| u[(r, null[c])]);
    let gram = left.adjoint() * &right;
    let gram_inv = gram.try_inverse().ok_or(Error::NotConverged {
        time: f64::INFINITY,
        residual: f64::NAN,
    })?;
    let x0 = DVector::from_column_slice(rho0.rho.as_slice());
    let x = &right * (gram_inv * (left.adjoint() * x0));
    let rho = CMatrix::from_column_slice(d, d, x.as_slice());
    let rho = (&rho + rho.adjoint()).scale(0.5);
    Ok(DensityMatrix {
        rho,
        time: f64::INFINITY,
    })
}

/// Trace norm `Σ|λ|` of a Hermitian difference.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    let h = (&diff + diff.adjoint()).scale(0.5);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .map(|e| e.abs())
        .sum()
}
