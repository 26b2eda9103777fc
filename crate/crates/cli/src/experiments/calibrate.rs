use dipolesim_core::grid::spectral_multipliers;
use dipolesim_core::spde::{InitialCondition, RunSpec, Scheme, Variant};

use super::{simulate, SizeRun};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{Check, Report, Table};

/// Exponents of the linear equations in one dimension with white noise:
/// `z` from the leading gradient order, `χ = (z − 1)/2`, `β = χ/z`.
fn linear_exponents(variant: Variant) -> Option<(f64, f64)> {
    let z = match variant {
        Variant::EdwardsWilkinson => 2.0,
        Variant::MullinsHerring => 4.0,
        _ => return None,
    };
    let chi = (z - 1.0) / 2.0;
    Some((chi, chi / z))
}

/// Ensemble `⟨W²⟩` of the discretized linear equation at every record time.
///
/// Each nonzero Fourier mode is an independent AR(1) process under either
/// scheme, so its variance follows a scalar recursion per step and the sum
/// over modes is exact for the simulated process, including the `dt` error.
pub fn oracle_w2(spec: &RunSpec) -> Vec<f64> {
    let grid = spec.grid;
    let n = grid.n_sites();
    let eq = &spec.equation;
    let dt = spec.integrator.dt;
    let mult = spectral_multipliers(&grid);
    // Per-mode variance of the noise increment dt·ξ̂: n·C·dt/dx.
    let kick = n as f64 * eq.noise_strength * dt / grid.dx();
    let start = match spec.initial_condition {
        InitialCondition::Zero => 0.0,
        InitialCondition::GaussianRandom { amplitude } => n as f64 * amplitude * amplitude,
    };
    let gains: Vec<f64> = (1..n)
        .map(|m| {
            let rate = eq.linear_rate(mult.laplacian[m], mult.biharmonic[m]);
            match spec.integrator.scheme {
                Scheme::ImexSpectral => 1.0 / (1.0 - dt * rate),
                Scheme::ExplicitEulerMaruyama => 1.0 + dt * rate,
            }
        })
        .collect();
    let mut var = vec![start; n - 1];
    let mut out = Vec::new();
    let mut step = 0usize;
    for k in spec.integrator.record_steps() {
        while step < k {
            for (v, g) in var.iter_mut().zip(&gains) {
                *v = match spec.integrator.scheme {
                    Scheme::ImexSpectral => g * g * (*v + kick),
                    Scheme::ExplicitEulerMaruyama => g * g * *v + kick,
                };
            }
            step += 1;
        }
        out.push(var.iter().sum::<f64>() / (n * n) as f64);
    }
    out
}

/// Runs the config's linear equation and checks it against the mode-sum
/// oracle and the linear-theory exponents.
pub fn calibrate(cfg: &ExperimentConfig, workers: usize) -> Result<Report, CliError> {
    let variant = cfg.equation.variant;
    let (chi_th, beta_th) = linear_exponents(variant).ok_or_else(|| {
        CliError::Config(format!(
            "equation.variant: calibrate needs edwards_wilkinson or mullins_herring, got {}",
            variant.name()
        ))
    })?;
    let a = &cfg.analysis;
    let (sim, runs) = simulate(cfg, workers)?;
    let mut report = Report::new("calibrate");
    report.metrics = sim.metrics;
    report.tables = sim.tables;
    report.metric("chi_theory", chi_th);
    report.metric("beta_theory", beta_th);
    let mut table = Table::new(
        "oracle",
        &["system_size", "time", "w2_oracle", "w2_mean", "w2_stderr", "z_score"],
    );
    for SizeRun { spec, w2, .. } in &runs {
        let l = spec.grid.n_sites();
        let exact = oracle_w2(spec);
        let mut worst: f64 = 0.0;
        for i in 0..exact.len() {
            let z = (w2.mean[i] - exact[i]) / w2.stderr[i];
            worst = worst.max(z.abs());
            table.push(vec![
                l.into(),
                w2.times[i].into(),
                exact[i].into(),
                w2.mean[i].into(),
                w2.stderr[i].into(),
                z.into(),
            ]);
        }
        report.metric(format!("oracle_max_z_L{l}"), worst);
        report
            .checks
            .push(Check::at_most(format!("oracle L={l}"), worst, a.oracle_sigma));
    }
    report.tables.push(table);
    let missing = f64::NAN;
    let chi = report.metrics.get("chi").copied().unwrap_or(missing);
    let beta = report.metrics.get("beta").copied().unwrap_or(missing);
    report.checks.push(Check::near("chi", chi, chi_th, a.chi_tolerance));
    report.checks.push(Check::near("beta", beta, beta_th, a.beta_tolerance));
    report.details = serde_json::json!({
        "variant": variant.name(),
        "oracle": "exact per-mode variance recursion of the discretized scheme",
    });
    Ok(report)
}
