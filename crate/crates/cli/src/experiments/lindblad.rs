use dipolesim_core::lindblad::{
    block_diagonal_part, build_operators, evolve_with, expectation, jump_commutators,
    jump_operators, random_density, sector_leak, sector_states, steady_state_by_evolution,
    steady_state_by_kernel, weak_symmetry_check, EvolveOptions, Generator, Jump, Rates,
    SparseOp, SpinModelSpec, SteadyStateOptions, SymmetryMode, NULLSPACE_DIM_CAP,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, LindbladConfig};
use crate::error::CliError;
use crate::report::{Check, Report, Table};

pub const COMMUTATOR_TOL: f64 = 1e-12;
pub const WEAK_SYMMETRY_TOL: f64 = 1e-10;
pub const DRIFT_TOL: f64 = 1e-8;

fn sum(ops: &[SparseOp], dim: usize) -> SparseOp {
    ops.iter().fold(SparseOp::zero(dim), |a, b| a.add(b))
}

/// Rate that sets the dissipative time unit of the drift checks.
fn leading_rate(cfg: &LindbladConfig) -> f64 {
    let r = match cfg.symmetry_mode {
        SymmetryMode::WeakDipole => cfg.rates.big_gamma0,
        SymmetryMode::StrongDipole => cfg.rates.tilde_gamma0,
    };
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

/// Largest deviation of `⟨sᶻ_n⟩` and `⟨Δᶻ_n⟩` from `∓S` (odd/even sites,
/// counted from 1) in the `J = t = 0` steady state, reached from a random
/// state inside the sector of the polarized state.
fn polarized_deviation(cfg: &LindbladConfig) -> Result<f64, CliError> {
    let spec = SpinModelSpec {
        rates: Rates {
            big_gamma0: 1.0,
            gamma0: 1.0,
            ..Rates::default()
        },
        dimension_cap: cfg.dimension_cap,
        ..SpinModelSpec::new(cfg.spin, cfg.polarized_sites, SymmetryMode::WeakDipole)
    };
    let ops = build_operators(&spec)?;
    let s = cfg.spin;
    let target = |n: usize| if n % 2 == 0 { -s } else { s };
    let mut constraints: Vec<(&SparseOp, f64)> = Vec::new();
    for n in 0..spec.n_sites {
        constraints.push((&ops.s_z[n], target(n)));
        constraints.push((&ops.d_z[n], target(n)));
    }
    let polarized = sector_states(&constraints);
    let [index] = polarized[..] else {
        return Err(CliError::Config("lindblad: polarized state is not unique".into()));
    };
    let dz_sum = sum(&ops.d_z, ops.dim);
    let value = |op: &SparseOp| op.as_diagonal().expect("diagonal")[index];
    let sector = sector_states(&[(&ops.charge, value(&ops.charge)), (&dz_sum, value(&dz_sum))]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rho0 = random_density(ops.dim, Some(&sector), &mut rng);
    let gen = Generator::new(&ops.hamiltonian, &jump_operators(&spec, &ops));
    let steady = if ops.dim <= NULLSPACE_DIM_CAP {
        steady_state_by_kernel(&gen, &rho0)?
    } else {
        steady_state_by_evolution(&gen, &rho0, &SteadyStateOptions::default())?
    };
    let mut worst: f64 = 0.0;
    for n in 0..spec.n_sites {
        for op in [&ops.s_z[n], &ops.d_z[n]] {
            worst = worst.max((expectation(&steady, op).re - target(n)).abs());
        }
    }
    Ok(worst)
}

/// The exact-model battery: jump algebra, weak adjoint action, charge
/// drift, dipole-block preservation and the polarized steady state.
pub fn lindblad(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let lc = &cfg.lindblad;
    let spec = lc.spec();
    let ops = build_operators(&spec)?;
    let mut jumps = jump_operators(&spec, &ops);
    if lc.negative_control {
        let site = 1.min(spec.n_sites - 1);
        jumps.push(Jump {
            label: format!("s-_{}", site + 1),
            rate: 1.0,
            op: ops.s_minus[site].clone(),
        });
        jumps.push(Jump {
            label: format!("sx_{}", site + 1),
            rate: 1.0,
            op: ops.s_x(site),
        });
    }
    let gen = Generator::new(&ops.hamiltonian, &jumps);
    let mut report = Report::new("lindblad");

    let mut worst_q: f64 = 0.0;
    for (label, v) in jump_commutators(&jumps, &ops.charge) {
        worst_q = worst_q.max(v);
        report.checks.push(Check::at_most(format!("[L,Q] {label}"), v, COMMUTATOR_TOL));
    }
    report.metric("max_commutator_q", worst_q);
    if spec.symmetry_mode == SymmetryMode::StrongDipole {
        let mut worst_d: f64 = 0.0;
        for (label, v) in jump_commutators(&jumps, &ops.dipole) {
            worst_d = worst_d.max(v);
            report.checks.push(Check::at_most(format!("[L,D] {label}"), v, COMMUTATOR_TOL));
        }
        report.metric("max_commutator_d", worst_d);
    } else {
        let mut worst_w: f64 = 0.0;
        for &beta in &lc.betas {
            for (name, g) in [("D", &ops.dipole), ("Q", &ops.charge)] {
                let v = weak_symmetry_check(&gen, g, beta);
                worst_w = worst_w.max(v);
                report.checks.push(Check::at_most(
                    format!("weak {name} beta={beta}"),
                    v,
                    WEAK_SYMMETRY_TOL,
                ));
            }
        }
        report.metric("max_weak_deviation", worst_w);
    }

    let duration = lc.duration_rates / leading_rate(lc);
    let opts = EvolveOptions {
        dt: lc.dt,
        ..EvolveOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(lc.seed);
    let rho0 = random_density(ops.dim, None, &mut rng);
    let q0 = expectation(&rho0, &ops.charge).re;
    let mut drift: f64 = 0.0;
    evolve_with(&gen, &rho0, duration, &opts, |s| {
        drift = drift.max((expectation(s, &ops.charge).re - q0).abs());
    })?;
    report.metric("charge_drift", drift);
    report.checks.push(Check::at_most("charge drift", drift, DRIFT_TOL));

    if spec.symmetry_mode == SymmetryMode::WeakDipole {
        let blocks = block_diagonal_part(&random_density(ops.dim, None, &mut rng), &ops.dipole);
        let mut leak: f64 = 0.0;
        evolve_with(&gen, &blocks, duration, &opts, |s| {
            leak = leak.max(sector_leak(s, &ops.dipole));
        })?;
        report.metric("dipole_block_leak", leak);
        report.checks.push(Check::at_most("dipole block leak", leak, DRIFT_TOL));
    }

    if lc.polarized_sites > 0 {
        let dev = polarized_deviation(lc)?;
        report.metric("polarized_deviation", dev);
        report.checks.push(Check::at_most("polarized steady state", dev, DRIFT_TOL));
    }

    let mut table = Table::new("lindblad_checks", &["check", "value", "rule", "passed"]);
    for c in &report.checks {
        table.push(vec![
            c.name.clone().into(),
            c.value.into(),
            c.rule.clone().into(),
            (c.passed as usize).into(),
        ]);
    }
    report.tables.push(table);
    report.details = serde_json::json!({
        "dimension": ops.dim,
        "jumps": jumps.iter().map(|j| &j.label).collect::<Vec<_>>(),
        "duration": duration,
    });
    Ok(report)
}
