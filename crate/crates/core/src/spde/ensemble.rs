use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::equation::EquationSpec;
use super::integrator::{IntegratorSpec, Stepper};
use crate::error::RealizationFailure;
use crate::grid::{FieldState, Grid1D};
use crate::stats::MeanAccumulator;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitialCondition {
    #[default]
    Zero,
    /// i.i.d. `amplitude·N(0,1)` per site, drawn from the realization's
    /// own stream before the first step.
    GaussianRandom { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub grid: Grid1D,
    pub equation: EquationSpec,
    pub integrator: IntegratorSpec,
    pub master_seed: u64,
    pub n_realizations: usize,
    #[serde(default)]
    pub initial_condition: InitialCondition,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        self.equation.validate()?;
        self.integrator.validate(&self.equation, &self.grid)?;
        if self.n_realizations == 0 {
            return Err(Error::InvalidRun("n_realizations must be positive".into()));
        }
        if let InitialCondition::GaussianRandom { amplitude } = self.initial_condition {
            if !(amplitude.is_finite() && amplitude >= 0.0) {
                return Err(Error::InvalidRun(format!(
                    "initial amplitude {amplitude} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of realization `index`: output number `index + 1` of a SplitMix64
/// generator started at `master_seed`.
pub fn derive_seed(master_seed: u64, index: usize) -> u64 {
    mix64(master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index as u64 + 1)))
}

fn initial_state(spec: &RunSpec, rng: &mut ChaCha8Rng) -> FieldState {
    match spec.initial_condition {
        InitialCondition::Zero => FieldState::zeros(spec.grid),
        InitialCondition::GaussianRandom { amplitude } => FieldState::from_fn(spec.grid, |_| {
            let z: f64 = rng.sample(StandardNormal);
            amplitude * z
        }),
    }
}

/// Integrates one realization, calling `visit(k, state)` at the `k`-th
/// record time.
pub fn run_trajectory_with(
    spec: &RunSpec,
    realization: usize,
    mut visit: impl FnMut(usize, &FieldState),
) -> Result<()> {
    spec.validate()?;
    let integ = &spec.integrator;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.master_seed, realization));
    let mut state = initial_state(spec, &mut rng);
    let mut stepper = Stepper::new(&spec.equation, &spec.grid, integ.scheme, integ.dt)?;
    let records = integ.record_steps();
    let last = records.last().copied().unwrap_or(0).max(integ.n_steps());
    let mut next = 0;
    for k in 0..=last {
        if k > 0 {
            stepper.step(&mut state, &mut rng)?;
            state.time = k as f64 * integ.dt;
        }
        while next < records.len() && records[next] == k {
            visit(next, &state);
            next += 1;
        }
    }
    Ok(())
}

/// Snapshots of one realization at every record time.
pub fn run_trajectory(spec: &RunSpec, realization: usize) -> Result<Vec<FieldState>> {
    let mut out = Vec::with_capacity(spec.integrator.record_times.len());
    run_trajectory_with(spec, realization, |_, s| out.push(s.clone()))?;
    Ok(out)
}

/// Evaluates `f(i)` for `i = 0..n` on `workers` threads and returns the
/// results in index order. `workers = 0` uses every available core.
pub fn map_realizations<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// Ensemble mean and standard error of a scalar observable per record time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
}

/// Runs every realization of `spec` and reduces `observable` over them.
///
/// Realizations are reduced in index order with compensated sums, so the
/// result is bit-identical for any worker count.
pub fn run_ensemble<F>(spec: &RunSpec, workers: usize, observable: F) -> Result<EnsembleSeries>
where
    F: Fn(&FieldState) -> f64 + Sync + Send,
{
    let mut out = run_ensemble_many(spec, workers, &[&observable])?;
    Ok(out.remove(0))
}

/// Scalar observable evaluated on every record.
pub type Observable<'a> = &'a (dyn Fn(&FieldState) -> f64 + Sync);

/// [`run_ensemble`] for several observables sharing one pass over the
/// realizations.
pub fn run_ensemble_many(
    spec: &RunSpec,
    workers: usize,
    observables: &[Observable<'_>],
) -> Result<Vec<EnsembleSeries>> {
    spec.validate()?;
    let n_rec = spec.integrator.record_times.len();
    let n_obs = observables.len();
    let per_realization = map_realizations(spec.n_realizations, workers, |r| {
        let mut values = vec![0.0; n_rec * n_obs];
        run_trajectory_with(spec, r, |k, s| {
            for (q, obs) in observables.iter().enumerate() {
                values[q * n_rec + k] = obs(s);
            }
        })
        .map(|_| values)
    });
    let values = collect_successes(spec, per_realization)?;
    let mut acc = vec![MeanAccumulator::new(); n_rec * n_obs];
    for v in values {
        acc.iter_mut().zip(v).for_each(|(a, x)| a.add(x));
    }
    let times = record_grid(spec);
    Ok(acc
        .chunks(n_rec.max(1))
        .take(n_obs)
        .map(|chunk| EnsembleSeries {
            times: times.clone(),
            mean: chunk.iter().map(|a| a.mean()).collect(),
            stderr: chunk.iter().map(|a| a.stderr()).collect(),
            n_realizations: spec.n_realizations,
        })
        .collect())
}

/// Full snapshot records of every realization, in index order.
pub fn collect_records(spec: &RunSpec, workers: usize) -> Result<Vec<Vec<FieldState>>> {
    spec.validate()?;
    let per_realization =
        map_realizations(spec.n_realizations, workers, |r| run_trajectory(spec, r));
    collect_successes(spec, per_realization)
}

fn record_grid(spec: &RunSpec) -> Vec<f64> {
    let dt = spec.integrator.dt;
    spec.integrator
        .record_steps()
        .iter()
        .map(|&k| k as f64 * dt)
        .collect()
}

fn collect_successes<T>(spec: &RunSpec, results: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (r, result) in results.into_iter().enumerate() {
        match result {
            Ok(v) => ok.push(v),
            Err(Error::Divergence { time, max_abs }) => failures.push(RealizationFailure {
                realization: r,
                time,
                max_abs,
            }),
            Err(e) => return Err(e),
        }
    }
    if !failures.is_empty() {
        return Err(Error::EnsembleDiverged {
            total: spec.n_realizations,
            failures,
        });
    }
    Ok(ok)
}
