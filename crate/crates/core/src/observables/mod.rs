//! Roughness, structure factors and correlators computed from trajectory
//! records.
//!
//! Ensemble quantities take either a flat list of snapshots (equal-time
//! observables) or one list of records per realization (two-time
//! observables). Every reduction runs through compensated sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::{FieldState, Grid1D, SpectralPlan};
use crate::spde::{EnsembleSeries, EquationSpec, Variant};
use crate::stats::{compensated_mean, KahanSum, MeanAccumulator};
use crate::{Error, Result};

/// `sqrt(mean((f − f̄)²))`.
pub fn roughness(f: &FieldState) -> f64 {
    roughness_sq(f).sqrt()
}

pub fn roughness_sq(f: &FieldState) -> f64 {
    let m = compensated_mean(&f.values);
    let sq: KahanSum = f.values.iter().map(|v| (v - m) * (v - m)).collect();
    sq.value() / f.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoughnessSeries {
    pub system_size: usize,
    pub times: Vec<f64>,
    pub w_mean: Vec<f64>,
    pub w_stderr: Vec<f64>,
}

impl RoughnessSeries {
    pub fn new(
        system_size: usize,
        times: Vec<f64>,
        w_mean: Vec<f64>,
        w_stderr: Vec<f64>,
    ) -> Result<Self> {
        if times.len() != w_mean.len() || times.len() != w_stderr.len() {
            return Err(Error::DimensionMismatch(format!(
                "roughness series lengths {} / {} / {}",
                times.len(),
                w_mean.len(),
                w_stderr.len()
            )));
        }
        if let Some(w) = w_mean.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidField(format!("negative roughness {w}")));
        }
        Ok(Self {
            system_size,
            times,
            w_mean,
            w_stderr,
        })
    }

    /// Wraps an ensemble run whose reducer was [`roughness`].
    pub fn from_ensemble(system_size: usize, e: EnsembleSeries) -> Result<Self> {
        Self::new(system_size, e.times, e.mean, e.stderr)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorKind {
    StructureFactor,
    TwoTimeK,
    HeightDifference,
    Phase,
    ReturnProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSeries {
    pub kind: CorrelatorKind,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl CorrelatorSeries {
    /// Reduces per-sample rows (one row per snapshot or realization) to a
    /// mean and standard error per abscissa point.
    fn reduce(kind: CorrelatorKind, abscissa: Vec<f64>, rows: &[Vec<f64>]) -> Self {
        let mut acc = vec![MeanAccumulator::new(); abscissa.len()];
        for row in rows {
            acc.iter_mut().zip(row).for_each(|(a, &v)| a.add(v));
        }
        Self {
            kind,
            abscissa,
            values: acc.iter().map(|a| a.mean()).collect(),
            stderr: acc.iter().map(|a| a.stderr()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Wavenumber of mode `m` folded into `(−π/dx, π/dx]`.
pub fn signed_wavenumber(grid: &Grid1D, m: usize) -> f64 {
    let n = grid.n_sites();
    if 2 * m > n {
        -grid.wavenumber(n - m)
    } else {
        grid.wavenumber(m)
    }
}

fn check_snapshots(snapshots: &[FieldState]) -> Result<Grid1D> {
    let first = snapshots.first().ok_or(Error::TooFewPoints {
        needed: 1,
        found: 0,
    })?;
    if snapshots.iter().any(|s| s.grid != first.grid) {
        return Err(Error::DimensionMismatch(
            "snapshots on different grids".into(),
        ));
    }
    Ok(first.grid)
}

/// `|f̂_m|²/n` for every mode `m = 0..n`.
pub fn mode_power(plan: &mut SpectralPlan, f: &FieldState) -> Vec<f64> {
    let n = f.len() as f64;
    plan.forward(&f.values)
        .iter()
        .map(|a| a.norm_sqr() / n)
        .collect()
}

/// Ensemble structure factor `S(k) = ⟨|f̂(k)|²⟩/n` over the nonzero modes,
/// with signed wavenumbers as abscissa. Normalized so that
/// `W² = (1/n)·Σ_{k≠0} S(k)` for each snapshot.
pub fn structure_factor(snapshots: &[FieldState]) -> Result<CorrelatorSeries> {
    let grid = check_snapshots(snapshots)?;
    let n = grid.n_sites();
    let mut plan = SpectralPlan::new(n);
    let rows: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| mode_power(&mut plan, s)[1..].to_vec())
        .collect();
    let abscissa = (1..n).map(|m| signed_wavenumber(&grid, m)).collect();
    Ok(CorrelatorSeries::reduce(
        CorrelatorKind::StructureFactor,
        abscissa,
        &rows,
    ))
}

/// `Re(a·conj(b))`, shared by the lag-zero and lagged terms so that the
/// normalized correlator is exactly one at zero lag.
#[inline]
fn re_product(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

fn lag_layout(records: &[Vec<FieldState>], max_origins: usize) -> Result<(usize, usize, Vec<f64>)> {
    let first = records.first().ok_or(Error::TooFewPoints {
        needed: 1,
        found: 0,
    })?;
    let t = first.len();
    if t == 0 || records.iter().any(|r| r.len() != t) {
        return Err(Error::DimensionMismatch(
            "every realization needs the same non-empty record list".into(),
        ));
    }
    let origins = max_origins.clamp(1, t);
    let lags = t - origins + 1;
    let abscissa = (0..lags).map(|j| first[j].time - first[0].time).collect();
    Ok((origins, lags, abscissa))
}

/// Normalized two-time correlator of each requested mode,
/// `C_m(t) = ⟨Re f̂_m(t₀+t) conj f̂_m(t₀)⟩ / ⟨|f̂_m(t₀)|²⟩`.
///
/// `records[r]` holds equally spaced snapshots of realization `r`; the
/// first `max_origins` of them serve as time origins (steady state makes
/// them equivalent), and lags run over what remains.
pub fn two_time_correlator(
    records: &[Vec<FieldState>],
    modes: &[usize],
    max_origins: usize,
) -> Result<Vec<CorrelatorSeries>> {
    let (origins, lags, abscissa) = lag_layout(records, max_origins)?;
    let n = records[0][0].len();
    if let Some(&m) = modes.iter().find(|&&m| m == 0 || m >= n) {
        return Err(Error::InvalidRun(format!("mode {m} outside 1..{n}")));
    }
    let mut plan = SpectralPlan::new(n);
    // num[mode][realization][lag], den[mode][realization]
    let mut num = vec![Vec::with_capacity(records.len()); modes.len()];
    let mut den = vec![Vec::with_capacity(records.len()); modes.len()];
    for rec in records {
        let spectra: Vec<Vec<Complex64>> = rec.iter().map(|s| plan.forward(&s.values)).collect();
        for (q, &m) in modes.iter().enumerate() {
            let d: KahanSum = (0..origins)
                .map(|o| re_product(spectra[o][m], spectra[o][m]))
                .collect();
            den[q].push(d.value() / origins as f64);
            let row: Vec<f64> = (0..lags)
                .map(|j| {
                    let s: KahanSum = (0..origins)
                        .map(|o| re_product(spectra[o + j][m], spectra[o][m]))
                        .collect();
                    s.value() / origins as f64
                })
                .collect();
            num[q].push(row);
        }
    }
    Ok(modes
        .iter()
        .enumerate()
        .map(|(q, _)| {
            let norm = compensated_mean(&den[q]);
            let rows: Vec<Vec<f64>> = num[q]
                .iter()
                .map(|row| row.iter().map(|v| v / norm).collect())
                .collect();
            CorrelatorSeries::reduce(CorrelatorKind::TwoTimeK, abscissa.clone(), &rows)
        })
        .collect())
}

/// Equal-position autocorrelation of the fluctuation `δρ = ρ − ρ̄`,
/// averaged over sites, time origins and realizations. Same record layout
/// as [`two_time_correlator`].
pub fn return_probability(
    records: &[Vec<FieldState>],
    max_origins: usize,
) -> Result<CorrelatorSeries> {
    let (origins, lags, abscissa) = lag_layout(records, max_origins)?;
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|rec| {
            let fluct: Vec<Vec<f64>> = rec
                .iter()
                .map(|s| {
                    let m = compensated_mean(&s.values);
                    s.values.iter().map(|v| v - m).collect()
                })
                .collect();
            let n = fluct[0].len();
            (0..lags)
                .map(|j| {
                    let mut s = KahanSum::new();
                    for o in 0..origins {
                        for i in 0..n {
                            s.add(fluct[o + j][i] * fluct[o][i]);
                        }
                    }
                    s.value() / (origins * n) as f64
                })
                .collect()
        })
        .collect();
    Ok(CorrelatorSeries::reduce(
        CorrelatorKind::ReturnProbability,
        abscissa,
        &rows,
    ))
}

fn pair_average(
    snapshots: &[FieldState],
    separations: &[usize],
    kind: CorrelatorKind,
    pair: impl Fn(f64, f64) -> f64,
) -> Result<CorrelatorSeries> {
    let grid = check_snapshots(snapshots)?;
    let n = grid.n_sites();
    let rows: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| {
            separations
                .iter()
                .map(|&x| {
                    let acc: KahanSum = (0..n)
                        .map(|i| pair(s.values[(i + x) % n], s.values[i]))
                        .collect();
                    acc.value() / n as f64
                })
                .collect()
        })
        .collect();
    let abscissa = separations.iter().map(|&x| x as f64 * grid.dx()).collect();
    Ok(CorrelatorSeries::reduce(kind, abscissa, &rows))
}

/// `G(x) = ⟨(f(r+x) − f(r))²⟩` over reference sites `r` (periodic) and
/// snapshots. Separations are in sites.
pub fn height_difference(
    snapshots: &[FieldState],
    separations: &[usize],
) -> Result<CorrelatorSeries> {
    pair_average(
        snapshots,
        separations,
        CorrelatorKind::HeightDifference,
        |a, b| (a - b) * (a - b),
    )
}

/// `⟨cos(f(r+x) − f(r))⟩` over reference sites and snapshots.
pub fn phase_correlator(
    snapshots: &[FieldState],
    separations: &[usize],
) -> Result<CorrelatorSeries> {
    pair_average(snapshots, separations, CorrelatorKind::Phase, |a, b| {
        (a - b).cos()
    })
}

/// Linear-theory guess of the dynamic exponent: 2 when a `∇²` term sets
/// the long-wavelength relaxation, 4 otherwise.
pub fn linear_dynamic_exponent(eq: &EquationSpec) -> f64 {
    match eq.variant {
        Variant::StrongCharge | Variant::MullinsHerring => 4.0,
        Variant::WeakCharge | Variant::EdwardsWilkinson | Variant::KpzReference => 2.0,
        _ if eq.d2 != 0.0 => 2.0,
        _ => 4.0,
    }
}

/// Steady-state onset heuristic `t₀ = 3·L^z·start_factor`, with `z` from
/// [`linear_dynamic_exponent`].
pub fn equilibration_time(eq: &EquationSpec, grid: &Grid1D, start_factor: f64) -> f64 {
    3.0 * grid.length().powf(linear_dynamic_exponent(eq)) * start_factor
}

#[cfg(test)]
mod tests;
