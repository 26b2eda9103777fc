mod calibrate;
mod lindblad;
mod tilt;

pub use calibrate::{calibrate, oracle_w2};
pub use lindblad::lindblad;
pub use tilt::tilt_test;

use dipolesim_core::grid::FieldState;
use dipolesim_core::observables::{
    height_difference, phase_correlator, return_probability, roughness, roughness_sq,
    signed_wavenumber, structure_factor, two_time_correlator, CorrelatorKind, CorrelatorSeries,
    RoughnessSeries,
};
use dipolesim_core::scaling::{
    collapse_residual, fit_decay_rate, fit_power_law, growth_exponent, optimize_collapse,
    saturated_roughness, saturation_exponent, PowerLawFit,
};
use dipolesim_core::spde::{collect_records, run_ensemble_many, EnsembleSeries, RunSpec};
use dipolesim_core::stats::MeanAccumulator;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{Cell, Report, Table, ROUGHNESS_COLUMNS};

/// Roughness of one size as both `W` and `W²` ensembles.
#[derive(Debug, Clone)]
pub struct SizeRun {
    pub spec: RunSpec,
    pub w: EnsembleSeries,
    pub w2: EnsembleSeries,
}

impl SizeRun {
    pub fn series(&self) -> RoughnessSeries {
        RoughnessSeries {
            system_size: self.spec.grid.n_sites(),
            times: self.w.times.clone(),
            w_mean: self.w.mean.clone(),
            w_stderr: self.w.stderr.clone(),
        }
    }
}

/// Reduces per-realization records the same way the ensemble runner does.
fn reduce_records(
    records: &[Vec<FieldState>],
    f: impl Fn(&FieldState) -> f64,
    times: &[f64],
) -> EnsembleSeries {
    let mut acc = vec![MeanAccumulator::new(); times.len()];
    for rec in records {
        acc.iter_mut().zip(rec).for_each(|(a, s)| a.add(f(s)));
    }
    EnsembleSeries {
        times: times.to_vec(),
        mean: acc.iter().map(|a| a.mean()).collect(),
        stderr: acc.iter().map(|a| a.stderr()).collect(),
        n_realizations: records.len(),
    }
}

/// Runs every size of the config. The roughness tables and growth and
/// saturation metrics are always produced; correlators on request.
pub fn simulate(cfg: &ExperimentConfig, workers: usize) -> Result<(Report, Vec<SizeRun>), CliError> {
    let mut report = Report::new("simulate");
    let mut runs = Vec::new();
    let mut table = Table::new("roughness", &ROUGHNESS_COLUMNS);
    let wants_records = !cfg.analysis.correlators.is_empty();
    for &l in &cfg.grid.sizes {
        let spec = cfg.run_spec(l)?;
        let (w, w2) = if wants_records {
            let records = collect_records(&spec, workers)?;
            let times: Vec<f64> = records[0].iter().map(|s| s.time).collect();
            correlators(cfg, &spec, &records, &mut report)?;
            (
                reduce_records(&records, roughness, &times),
                reduce_records(&records, roughness_sq, &times),
            )
        } else {
            let mut out = run_ensemble_many(&spec, workers, &[&roughness, &roughness_sq])?;
            let w2 = out.pop().expect("two observables");
            (out.pop().expect("two observables"), w2)
        };
        for i in 0..w.times.len() {
            table.push(vec![
                l.into(),
                w.times[i].into(),
                w.mean[i].into(),
                w.stderr[i].into(),
                w2.mean[i].into(),
                w2.stderr[i].into(),
                w.n_realizations.into(),
            ]);
        }
        runs.push(SizeRun { spec, w, w2 });
    }
    report.tables.insert(0, table);
    growth_metrics(cfg, &runs, &mut report);
    report.details = serde_json::json!({ "sizes": cfg.grid.sizes });
    Ok((report, runs))
}

fn record_fit(report: &mut Report, name: &str, fit: &PowerLawFit) {
    report.metric(name, fit.exponent);
    report.metric(format!("{name}_stderr"), fit.stderr);
}

/// β for the growth size, `W_sat` per saturated size and χ when at least
/// three sizes saturate. Missing fits are left out of the metric map.
fn growth_metrics(cfg: &ExperimentConfig, runs: &[SizeRun], report: &mut Report) {
    let a = &cfg.analysis;
    let series: Vec<RoughnessSeries> = runs.iter().map(SizeRun::series).collect();
    let largest = series.iter().map(|s| s.system_size).max().unwrap_or(0);
    let growth_size = a.growth_size.unwrap_or(largest);
    for rs in &series {
        let l = rs.system_size;
        let beta = match a.growth_window {
            Some([t0, t1]) => fit_power_law(&rs.times, &rs.w_mean, Some(&rs.w_stderr), (t0, t1)),
            None => growth_exponent(rs, &a.growth_options()),
        };
        if let Ok(fit) = beta {
            record_fit(report, &format!("beta_L{l}"), &fit);
            if l == growth_size {
                record_fit(report, "beta", &fit);
            }
        }
    }
    let saturated: Vec<RoughnessSeries> = series
        .iter()
        .filter_map(|rs| {
            let (w, e) = saturated_roughness(rs, a.plateau_slope).ok()?;
            report.metric(format!("w_sat_L{}", rs.system_size), w);
            report.metric(format!("w_sat_stderr_L{}", rs.system_size), e);
            Some(rs.clone())
        })
        .collect();
    report.metric("n_saturated", saturated.len() as f64);
    if let Ok(fit) = saturation_exponent(&saturated, a.plateau_slope) {
        record_fit(report, "chi", &fit);
    }
}

/// Fit window ending at the first lag where `values` drops below `floor`.
fn decay_window(c: &CorrelatorSeries, floor: f64) -> (f64, f64) {
    let end = c
        .values
        .iter()
        .position(|&v| v < floor)
        .map(|i| c.abscissa[i.saturating_sub(1)])
        .unwrap_or(c.abscissa[c.len() - 1]);
    (c.abscissa[0], end)
}

fn correlators(
    cfg: &ExperimentConfig,
    spec: &RunSpec,
    records: &[Vec<FieldState>],
    report: &mut Report,
) -> Result<(), CliError> {
    let a = &cfg.analysis;
    let grid = spec.grid;
    let l = grid.n_sites();
    let largest = cfg.grid.sizes.iter().copied().max().unwrap_or(l);
    let metric = |report: &mut Report, name: &str, fit: &PowerLawFit| {
        record_fit(report, &format!("{name}_L{l}"), fit);
        if l == largest {
            record_fit(report, name, fit);
        }
    };
    let snapshots: Vec<FieldState> = records.iter().flatten().cloned().collect();
    let separations = a
        .separations
        .clone()
        .unwrap_or_else(|| (1..=l / 2).collect());
    for kind in &a.correlators {
        match kind {
            CorrelatorKind::TwoTimeK => {
                let series = two_time_correlator(records, &a.modes, a.max_origins)?;
                let mut table = Table::new(&format!("two_time_L{l}"), &["mode", "k", "lag", "value", "stderr"]);
                let mut ks = Vec::new();
                let mut rates = Vec::new();
                let mut rate_errs = Vec::new();
                for (&m, c) in a.modes.iter().zip(&series) {
                    let k = signed_wavenumber(&grid, m).abs();
                    for i in 0..c.len() {
                        table.push(vec![m.into(), k.into(), c.abscissa[i].into(), c.values[i].into(), c.stderr[i].into()]);
                    }
                    let fit = fit_decay_rate(&c.abscissa, &c.values, decay_window(c, a.decay_floor))?;
                    report.metric(format!("rate_m{m}_L{l}"), fit.exponent);
                    ks.push(k);
                    rates.push(fit.exponent);
                    rate_errs.push(fit.stderr);
                }
                report.tables.push(table);
                let window = (0.0, f64::INFINITY);
                let z = fit_power_law(&ks, &rates, Some(&rate_errs), window)
                    .or_else(|_| fit_rate_pairs(&ks, &rates))?;
                metric(report, "z_two_time", &z);
            }
            CorrelatorKind::ReturnProbability => {
                let c = return_probability(records, a.max_origins)?;
                report.tables.push(series_table(&format!("return_probability_L{l}"), "lag", &c));
                let window = a.return_window.map(|[x, y]| (x, y)).unwrap_or((1.0, f64::INFINITY));
                let fit = fit_power_law(&c.abscissa, &c.values, Some(&c.stderr), window)?;
                metric(report, "return_slope", &fit);
            }
            CorrelatorKind::HeightDifference => {
                let c = height_difference(&snapshots, &separations)?;
                report.tables.push(series_table(&format!("height_difference_L{l}"), "x", &c));
                let dx = grid.dx();
                let window = a
                    .height_window
                    .map(|[x, y]| (x, y))
                    .unwrap_or((2.0 * dx, (l / 8) as f64 * dx));
                let fit = fit_power_law(&c.abscissa, &c.values, Some(&c.stderr), window)?;
                metric(report, "height_slope", &fit);
            }
            CorrelatorKind::Phase => {
                let c = phase_correlator(&snapshots, &separations)?;
                report.tables.push(series_table(&format!("phase_L{l}"), "x", &c));
            }
            CorrelatorKind::StructureFactor => {
                let c = structure_factor(&snapshots)?;
                report.tables.push(series_table(&format!("structure_factor_L{l}"), "k", &c));
            }
        }
    }
    Ok(())
}

/// Two modes are too few for the weighted fit; fall back to the slope
/// between the end points.
fn fit_rate_pairs(ks: &[f64], rates: &[f64]) -> Result<PowerLawFit, CliError> {
    if ks.len() < 2 || rates.iter().any(|r| !(*r > 0.0)) {
        return Err(CliError::Config(
            "analysis.modes: need at least two modes with positive decay rates".into(),
        ));
    }
    let n = ks.len() - 1;
    let slope = (rates[n] / rates[0]).ln() / (ks[n] / ks[0]).ln();
    Ok(PowerLawFit {
        exponent: slope,
        stderr: f64::NAN,
        window: (ks[0], ks[n]),
        r_squared: 1.0,
        prefactor: rates[0] / ks[0].powf(slope),
        n_points: 2,
    })
}

fn series_table(name: &str, abscissa: &str, c: &CorrelatorSeries) -> Table {
    let mut t = Table::new(name, &[abscissa, "value", "stderr"]);
    for i in 0..c.len() {
        t.push(vec![c.abscissa[i].into(), c.values[i].into(), c.stderr[i].into()]);
    }
    t
}

/// Residuals at the configured `(chi, z)` pairs, the optimized collapse and
/// rescaled curves for plotting.
pub fn collapse(cfg: &ExperimentConfig, series: &[RoughnessSeries]) -> Result<Report, CliError> {
    let a = &cfg.analysis;
    let window = a.collapse_window();
    let mut report = Report::new("collapse");
    let mut residuals = Table::new("collapse_residuals", &["chi", "z", "residual"]);
    let mut values = Vec::new();
    for &[chi, z] in &a.collapse_pairs {
        let r = collapse_residual(series, chi, z, &window)?;
        residuals.push(vec![chi.into(), z.into(), r.into()]);
        report.metric(format!("residual_{chi}_{z}"), r);
        values.push(r);
    }
    if values.len() >= 2 {
        report.metric("residual_ratio", values[1] / values[0]);
    }
    let best = optimize_collapse(series, &a.collapse_bounds(), &window)?;
    report.metric("collapse_chi", best.chi);
    report.metric("collapse_z", best.z);
    report.metric("residual_opt", best.residual);
    report.metric("boundary_suspect", if best.boundary_suspect { 1.0 } else { 0.0 });
    residuals.push(vec![best.chi.into(), best.z.into(), best.residual.into()]);

    let mut landscape = Table::new("collapse_landscape", &["chi", "z", "residual"]);
    for &(chi, z, r) in &best.landscape {
        landscape.push(vec![chi.into(), z.into(), r.into()]);
    }
    let mut rescaled = Table::new("collapse_rescaled", &["label", "system_size", "u", "w_rescaled"]);
    let mut labelled: Vec<(String, f64, f64)> = a
        .collapse_pairs
        .iter()
        .map(|&[chi, z]| (format!("pinned_{chi}_{z}"), chi, z))
        .collect();
    labelled.push(("optimum".into(), best.chi, best.z));
    for (label, chi, z) in labelled {
        for rs in series {
            let l = rs.system_size as f64;
            for (t, w) in rs.times.iter().zip(&rs.w_mean) {
                rescaled.push(vec![
                    Cell::Text(label.clone()),
                    rs.system_size.into(),
                    (t / l.powf(z)).into(),
                    (w / l.powf(chi)).into(),
                ]);
            }
        }
    }
    report.tables.extend([residuals, landscape, rescaled]);
    report.details = serde_json::json!({
        "window": { "u_min": window.u_min, "u_max": a.collapse_u_max },
        "boundary_suspect": best.boundary_suspect,
    });
    Ok(report)
}

/// `simulate` followed by `collapse` on its output, in one bundle.
pub fn simulate_and_collapse(cfg: &ExperimentConfig, workers: usize) -> Result<Report, CliError> {
    let (sim, runs) = simulate(cfg, workers)?;
    let series: Vec<RoughnessSeries> = runs.iter().map(SizeRun::series).collect();
    let mut report = collapse(cfg, &series)?;
    for (k, v) in sim.metrics {
        report.metrics.entry(k).or_insert(v);
    }
    let mut tables = sim.tables;
    tables.append(&mut report.tables);
    report.tables = tables;
    Ok(report)
}
