use super::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn full_rates(mode: SymmetryMode) -> Rates {
    match mode {
        SymmetryMode::WeakDipole => Rates {
            big_gamma0: 1.0,
            gamma0: 0.8,
            big_gamma1: 0.3,
            gamma1: 0.2,
            gamma2: 0.15,
            tilde_gamma0: 0.0,
        },
        SymmetryMode::StrongDipole => Rates {
            tilde_gamma0: 0.9,
            gamma0: 0.8,
            gamma1: 0.2,
            gamma2: 0.15,
            ..Rates::default()
        },
    }
}

fn model(l: usize, mode: SymmetryMode) -> SpinModelSpec {
    SpinModelSpec {
        j: 1.0,
        t: 0.7,
        rates: full_rates(mode),
        ..SpinModelSpec::new(0.5, l, mode)
    }
}

fn eq3_model() -> SpinModelSpec {
    SpinModelSpec {
        rates: Rates {
            big_gamma0: 1.0,
            gamma0: 1.0,
            ..Rates::default()
        },
        ..SpinModelSpec::new(0.5, 2, SymmetryMode::WeakDipole)
    }
}

/// Generic state inside `Q = 0, Σ Δᶻ = 0`, the sector that reaches the
/// polarized state.
fn eq3_initial(ops: &Operators, seed: u64) -> DensityMatrix {
    let dz_sum = ops
        .d_z
        .iter()
        .fold(SparseOp::zero(ops.dim), |a, b| a.add(b));
    let states = sector_states(&[(&ops.charge, 0.0), (&dz_sum, 0.0)]);
    assert_eq!(states.len(), 4);
    random_density(ops.dim, Some(&states), &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn single_site_has_no_bonds() {
    let spec = SpinModelSpec {
        j: 1.0,
        t: 1.0,
        ..SpinModelSpec::new(0.5, 1, SymmetryMode::WeakDipole)
    };
    let ops = build_operators(&spec).unwrap();
    assert_eq!(ops.dim, 4);
    assert_eq!(ops.hamiltonian.nnz(), 0);
}

#[test]
fn dimension_cap_and_validation() {
    let big = SpinModelSpec::new(0.5, 7, SymmetryMode::WeakDipole);
    assert!(matches!(
        build_operators(&big),
        Err(crate::Error::DimensionCap {
            dim: 16384,
            cap: 4096
        })
    ));
    assert!(SpinModelSpec::new(0.3, 2, SymmetryMode::WeakDipole)
        .validate()
        .is_err());
    let mut neg = SpinModelSpec::new(0.5, 2, SymmetryMode::WeakDipole);
    neg.rates.gamma1 = -1.0;
    assert!(neg.validate().is_err());
    let mut mixed = SpinModelSpec::new(0.5, 2, SymmetryMode::StrongDipole);
    mixed.rates.big_gamma0 = 1.0;
    assert!(mixed.validate().is_err());
}

#[test]
fn ladder_algebra_on_every_site() {
    for spin in [0.5, 1.0] {
        let ops = build_operators(&SpinModelSpec::new(spin, 2, SymmetryMode::WeakDipole)).unwrap();
        for n in 0..2 {
            let lhs = ops.s_plus[n].commutator(&ops.s_minus[n]);
            assert!(lhs.sub(&ops.s_z[n].scale(c(2.0))).max_abs() < 1e-14);
            let lhs = ops.d_plus[n].commutator(&ops.d_minus[n]);
            assert!(lhs.sub(&ops.d_z[n].scale(c(2.0))).max_abs() < 1e-14);
        }
    }
}

#[test]
fn hamiltonian_conserves_charge_and_dipole() {
    for spin in [0.5, 1.0] {
        let mut spec = model(3, SymmetryMode::WeakDipole);
        spec.spin = spin;
        let ops = build_operators(&spec).unwrap();
        assert!(ops.hamiltonian.nnz() > 0);
        assert!(commutator_norm(&ops.hamiltonian, &ops.charge) < 1e-12);
        assert!(commutator_norm(&ops.hamiltonian, &ops.dipole) < 1e-12);
        let h = ops.hamiltonian.to_dense();
        assert!(max_modulus(&(&h - h.adjoint())) < 1e-15);
    }
}

#[test]
fn jump_algebra() {
    for mode in [SymmetryMode::WeakDipole, SymmetryMode::StrongDipole] {
        let spec = model(3, mode);
        let ops = build_operators(&spec).unwrap();
        let jumps = jump_operators(&spec, &ops);
        for (label, q) in jump_commutators(&jumps, &ops.charge) {
            assert!(q < 1e-12, "{mode:?} {label}: [L,Q] = {q}");
        }
        if mode == SymmetryMode::StrongDipole {
            assert_eq!(jumps.iter().filter(|j| j.label.contains("s+")).count(), 2);
            for (label, d) in jump_commutators(&jumps, &ops.dipole) {
                assert!(d < 1e-12, "{label}: [L,D] = {d}");
            }
        }
    }
    let spec = model(3, SymmetryMode::WeakDipole);
    let ops = build_operators(&spec).unwrap();
    // Odd sites 1, 3 pair with even site 2 in both orientations.
    for (o, e) in [(0usize, 1usize), (2, 1)] {
        let l = ops.s_minus[o].mul(&ops.s_plus[e]);
        let sign = if e > o { -1.0 } else { 1.0 };
        let dev = l.commutator(&ops.dipole).sub(&l.scale(c(sign))).max_abs();
        assert!(dev < 1e-12);
    }
    for n in 0..3 {
        let dev = ops.d_minus[n]
            .commutator(&ops.dipole)
            .sub(&ops.d_minus[n])
            .max_abs();
        assert!(dev < 1e-12);
    }
}

#[test]
fn dissipator_examples() {
    let (_, minus, z) = spin_matrices(1);
    let sz = Jump {
        label: "sz".into(),
        rate: 1.0,
        op: SparseOp::embed(&z, 0, 1),
    };
    let mixed = DensityMatrix::maximally_mixed(2);
    assert_eq!(max_modulus(&dissipator_apply(&[sz], &mixed.rho)), 0.0);

    let lower = Jump {
        label: "D-".into(),
        rate: 1.0,
        op: SparseOp::embed(&minus, 0, 1),
    };
    let up = DensityMatrix::pure(&[c(1.0), c(0.0)]);
    let out = dissipator_apply(&[lower], &up.rho);
    let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-2.0), c(2.0)]));
    assert!(max_modulus(&(out - expected)) < 1e-15);

    let spec = model(2, SymmetryMode::WeakDipole);
    let ops = build_operators(&spec).unwrap();
    let jumps = jump_operators(&spec, &ops);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let rho = random_density(ops.dim, None, &mut rng);
        assert!(dissipator_apply(&jumps, &rho.rho).trace().norm() < 1e-12);
    }
}

#[test]
fn zero_generator_freezes_everything() {
    let spec = SpinModelSpec::new(0.5, 2, SymmetryMode::WeakDipole);
    let ops = build_operators(&spec).unwrap();
    let gen = Generator::new(&ops.hamiltonian, &jump_operators(&spec, &ops));
    let rho0 = random_density(ops.dim, None, &mut ChaCha8Rng::seed_from_u64(2));
    let out = evolve(&gen, &rho0, 2.0, &EvolveOptions::default()).unwrap();
    assert_eq!(out.rho, rho0.rho);
    assert_eq!(stationarity_residual(&gen, &rho0.rho), 0.0);
}

#[test]
fn charge_and_dipole_conservation_along_evolution() {
    for mode in [SymmetryMode::WeakDipole, SymmetryMode::StrongDipole] {
        let spec = model(3, mode);
        let ops = build_operators(&spec).unwrap();
        let gen = Generator::new(&ops.hamiltonian, &jump_operators(&spec, &ops));
        let rho0 = random_density(ops.dim, None, &mut ChaCha8Rng::seed_from_u64(3));
        let q0 = expectation(&rho0, &ops.charge).re;
        let d0 = expectation(&rho0, &ops.dipole).re;
        let out = evolve(&gen, &rho0, 2.0, &EvolveOptions::default()).unwrap();
        assert!((expectation(&out, &ops.charge).re - q0).abs() < 1e-8);
        if mode == SymmetryMode::StrongDipole {
            assert!((expectation(&out, &ops.dipole).re - d0).abs() < 1e-8);
        } else {
            // Γ₁ pumps Δ down, so the weak model does not conserve ⟨D⟩.
            assert!((expectation(&out, &ops.dipole).re - d0).abs() > 1e-3);
        }
        out.check().unwrap();
    }
}

#[test]
fn polarized_steady_state() {
    let spec = eq3_model();
    let ops = build_operators(&spec).unwrap();
    let gen = Generator::new(&ops.hamiltonian, &jump_operators(&spec, &ops));
    let rho0 = eq3_initial(&ops, 4);
    let by_kernel = steady_state_by_kernel(&gen, &rho0).unwrap();
    let by_time = steady_state_by_evolution(&gen, &rho0, &SteadyStateOptions::default()).unwrap();
    assert!(trace_distance(&by_kernel.rho, &by_time.rho) < 1e-6);
    for ss in [&by_kernel, &by_time] {
        let sz = |n: usize| expectation(ss, &ops.s_z[n]).re;
        let dz = |n: usize| expectation(ss, &ops.d_z[n]).re;
        for (v, e) in [(sz(0), -0.5), (dz(0), -0.5), (sz(1), 0.5), (dz(1), 0.5)] {
            assert!((v - e).abs() < 1e-8, "{v} vs {e}");
        }
        assert!(expectation(ss, &ops.charge).norm() < 1e-8);
    }
    let mut relaxed = by_kernel.clone();
    relaxed.time = 0.0;
    let later = evolve(&gen, &relaxed, 5.0, &EvolveOptions::default()).unwrap();
    assert!(max_modulus(&(later.rho - &by_kernel.rho)) < 1e-8);
}

#[test]
fn weak_symmetry_and_its_controls() {
    let spec = model(3, SymmetryMode::WeakDipole);
    let ops = build_operators(&spec).unwrap();
    let jumps = jump_operators(&spec, &ops);
    let gen = Generator::new(&ops.hamiltonian, &jumps);
    for beta in [0.37, 1.1] {
        assert!(weak_symmetry_check(&gen, &ops.dipole, beta) < 1e-10);
        assert!(weak_symmetry_check(&gen, &ops.charge, beta) < 1e-10);
    }
    // A jump with definite dipole charge only picks up a phase under U_D
    // and cannot break the weak symmetry; a charge-mixing one does.
    let mut lowered = jumps.clone();
    lowered.push(Jump {
        label: "s-_2".into(),
        rate: 1.0,
        op: ops.s_minus[1].clone(),
    });
    let g = Generator::new(&ops.hamiltonian, &lowered);
    assert!(weak_symmetry_check(&g, &ops.dipole, 0.37) < 1e-10);
    assert!(commutator_norm(&ops.s_minus[1], &ops.charge) > 0.5);
    let mut mixing = jumps;
    mixing.push(Jump {
        label: "sx_2".into(),
        rate: 1.0,
        op: ops.s_x(1),
    });
    let g = Generator::new(&ops.hamiltonian, &mixing);
    assert!(weak_symmetry_check(&g, &ops.dipole, 0.37) > 1e-3);
}

#[test]
fn dipole_blocks_stay_closed() {
    let spec = model(3, SymmetryMode::WeakDipole);
    let ops = build_operators(&spec).unwrap();
    let gen = Generator::new(&ops.hamiltonian, &jump_operators(&spec, &ops));
    let rho0 = block_diagonal_part(
        &random_density(ops.dim, None, &mut ChaCha8Rng::seed_from_u64(5)),
        &ops.dipole,
    );
    assert_eq!(sector_leak(&rho0, &ops.dipole), 0.0);
    let mut worst: f64 = 0.0;
    evolve_with(&gen, &rho0, 3.0, &EvolveOptions::default(), |s| {
        worst = worst.max(sector_leak(s, &ops.dipole));
    })
    .unwrap();
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn expectation_examples() {
    let spec = eq3_model();
    let ops = build_operators(&spec).unwrap();
    let mixed = DensityMatrix::maximally_mixed(ops.dim);
    assert_eq!(expectation(&mixed, &ops.s_z[1]), c(0.0));
    let dz_sum = ops
        .d_z
        .iter()
        .fold(SparseOp::zero(ops.dim), |a, b| a.add(b));
    let target = sector_states(&[
        (&ops.s_z[0], -0.5),
        (&ops.s_z[1], 0.5),
        (&ops.d_z[0], -0.5),
        (&ops.d_z[1], 0.5),
        (&dz_sum, 0.0),
    ]);
    assert_eq!(target.len(), 1);
    let mut psi = vec![c(0.0); ops.dim];
    psi[target[0]] = c(1.0);
    let polarized = DensityMatrix::pure(&psi);
    assert_eq!(expectation(&polarized, &ops.charge), c(0.0));
    let rho = random_density(ops.dim, None, &mut ChaCha8Rng::seed_from_u64(6));
    assert!(expectation(&rho, &ops.dipole).im.abs() < 1e-12);
    assert!(spin_correlator(&rho, &ops, 2).norm() > 0.0);
}
