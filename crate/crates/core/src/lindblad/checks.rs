use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::master::{DensityMatrix, Generator};
use super::model::{Jump, Operators};
use super::ops::{max_modulus, CMatrix, SparseOp};

/// Largest entry of `[a, b]`.
pub fn commutator_norm(a: &SparseOp, b: &SparseOp) -> f64 {
    a.commutator(b).max_abs()
}

/// `[L, G]` for every jump, as `(label, max entry)`.
pub fn jump_commutators(jumps: &[Jump], g: &SparseOp) -> Vec<(String, f64)> {
    jumps
        .iter()
        .map(|j| (j.label.clone(), commutator_norm(&j.op, g)))
        .collect()
}

/// `tr(ρ O)`.
pub fn expectation(rho: &DensityMatrix, op: &SparseOp) -> Complex64 {
    op.entries()
        .iter()
        .map(|&(r, c, v)| v * rho.rho[(c, r)])
        .sum()
}

/// `tr(ρ s⁺_n s⁻_1)` for the 1-based site `n`.
pub fn spin_correlator(rho: &DensityMatrix, ops: &Operators, n: usize) -> Complex64 {
    let op = ops.s_plus[n - 1].mul(&ops.s_minus[0]);
    expectation(rho, &op)
}

/// `exp(−iβG)` for a Hermitian `G`.
pub fn symmetry_unitary(g: &SparseOp, beta: f64) -> CMatrix {
    if let Some(diag) = g.as_diagonal() {
        let mut u = CMatrix::zeros(g.dim(), g.dim());
        for (i, d) in diag.iter().enumerate() {
            u[(i, i)] = Complex64::from_polar(1.0, -beta * d);
        }
        return u;
    }
    let eig = SymmetricEigen::new(g.to_dense());
    let phases = CMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::from_polar(1.0, -beta * l)),
    );
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&a + a.adjoint()).scale(0.5)
}

/// Full-rank random density matrix supported on `states` (all states when
/// `None`), drawn as `AA†/tr` with Gaussian `A`.
pub fn random_density(dim: usize, states: Option<&[usize]>, rng: &mut impl Rng) -> DensityMatrix {
    let all: Vec<usize> = (0..dim).collect();
    let support = states.unwrap_or(&all);
    let k = support.len();
    let a = CMatrix::from_fn(k, k, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let small = &a * a.adjoint();
    let tr = small.trace().re;
    let mut rho = CMatrix::zeros(dim, dim);
    for (i, &si) in support.iter().enumerate() {
        for (j, &sj) in support.iter().enumerate() {
            rho[(si, sj)] = small[(i, j)] / tr;
        }
    }
    DensityMatrix { rho, time: 0.0 }
}

/// Basis states on which each diagonal operator takes the paired value.
pub fn sector_states(constraints: &[(&SparseOp, f64)]) -> Vec<usize> {
    let diags: Vec<Vec<f64>> = constraints
        .iter()
        .map(|(op, _)| op.as_diagonal().expect("sector operators are diagonal"))
        .collect();
    let dim = constraints.first().map_or(0, |c| c.0.dim());
    (0..dim)
        .filter(|&b| {
            constraints
                .iter()
                .zip(&diags)
                .all(|((_, target), d)| (d[b] - target).abs() < 1e-9)
        })
        .collect()
}

/// Number of random Hermitian probes in [`weak_symmetry_check`].
pub const SYMMETRY_PROBES: usize = 16;
pub const SYMMETRY_SEED: u64 = 0x5eed_d1b0;

/// `max ‖ℒ[UρU†] − Uℒ[ρ]U†‖` (largest entry) over [`SYMMETRY_PROBES`]
/// random Hermitian `ρ` drawn from a fixed seed, with `U = exp(−iβG)`.
pub fn weak_symmetry_check(gen: &Generator, g: &SparseOp, beta: f64) -> f64 {
    let u = symmetry_unitary(g, beta);
    let u_adj = u.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(SYMMETRY_SEED);
    (0..SYMMETRY_PROBES)
        .map(|_| {
            let rho = random_hermitian(gen.dim(), &mut rng);
            let lhs = gen.apply(&(&u * &rho * &u_adj));
            let rhs = &u * gen.apply(&rho) * &u_adj;
            max_modulus(&(lhs - rhs))
        })
        .fold(0.0, f64::max)
}

/// Largest coherence `|ρ_ij|` between basis states with different values
/// of the diagonal operator `g`.
pub fn sector_leak(rho: &DensityMatrix, g: &SparseOp) -> f64 {
    let d = g.as_diagonal().expect("sector operator is diagonal");
    let mut worst: f64 = 0.0;
    for i in 0..d.len() {
        for j in 0..d.len() {
            if (d[i] - d[j]).abs() > 1e-9 {
                worst = worst.max(rho.rho[(i, j)].norm());
            }
        }
    }
    worst
}

/// Zeroes every coherence between different eigenvalues of the diagonal
/// `g` and renormalizes.
pub fn block_diagonal_part(rho: &DensityMatrix, g: &SparseOp) -> DensityMatrix {
    let d = g.as_diagonal().expect("sector operator is diagonal");
    let mut out = rho.rho.clone();
    for i in 0..d.len() {
        for j in 0..d.len() {
            if (d[i] - d[j]).abs() > 1e-9 {
                out[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let tr = out.trace();
    DensityMatrix {
        rho: out / tr,
        time: rho.time,
    }
}
