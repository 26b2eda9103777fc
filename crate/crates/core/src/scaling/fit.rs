use serde::{Deserialize, Serialize};

use crate::observables::RoughnessSeries;
use crate::stats::KahanSum;
use crate::{Error, Result};

/// Log-log regression result `y ≈ A·x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub stderr: f64,
    /// Smallest and largest abscissa that entered the fit.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub prefactor: f64,
    pub n_points: usize,
}

pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Weighted least squares for `y = a + b·x`. The slope error is scaled by
/// the reduced chi-square, so uniform weights give the textbook OLS error.
pub(crate) fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    let sum =
        |f: &dyn Fn(usize) -> f64| -> f64 { (0..x.len()).map(f).collect::<KahanSum>().value() };
    let sw = sum(&|i| w[i]);
    let mx = sum(&|i| w[i] * x[i]) / sw;
    let my = sum(&|i| w[i] * y[i]) / sw;
    let sxx = sum(&|i| w[i] * (x[i] - mx) * (x[i] - mx));
    let sxy = sum(&|i| w[i] * (x[i] - mx) * (y[i] - my));
    let syy = sum(&|i| w[i] * (y[i] - my) * (y[i] - my));
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res = sum(&|i| {
        let r = y[i] - intercept - slope * x[i];
        w[i] * r * r
    });
    let dof = x.len().saturating_sub(2);
    let slope_stderr = if dof > 0 && sxx > 0.0 {
        (ss_res / dof as f64 / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    }
}

fn select(
    x: &[f64],
    y: &[f64],
    stderr: Option<&[f64]>,
    window: (f64, f64),
) -> Result<Vec<(f64, f64, f64)>> {
    if x.len() != y.len() || stderr.is_some_and(|s| s.len() != x.len()) {
        return Err(Error::DimensionMismatch(format!(
            "fit input lengths {} / {}",
            x.len(),
            y.len()
        )));
    }
    Ok((0..x.len())
        .filter(|&i| x[i] >= window.0 && x[i] <= window.1)
        .map(|i| (x[i], y[i], stderr.map_or(0.0, |s| s[i])))
        .collect())
}

fn fit_log_log(
    x: &[f64],
    y: &[f64],
    stderr: Option<&[f64]>,
    window: (f64, f64),
    min_points: usize,
) -> Result<PowerLawFit> {
    let pts = select(x, y, stderr, window)?;
    if pts.len() < min_points {
        return Err(Error::TooFewPoints {
            needed: min_points,
            found: pts.len(),
        });
    }
    if let Some(&(x, value, _)) = pts.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(Error::NonPositiveValue { x, value });
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    // Relative errors become absolute errors in log space. Fall back to
    // uniform weights unless every point carries a usable error.
    let weights: Vec<f64> = if pts.iter().all(|p| p.2 > 0.0 && p.2.is_finite()) {
        pts.iter().map(|p| (p.1 / p.2).powi(2)).collect()
    } else {
        vec![1.0; pts.len()]
    };
    let line = weighted_line(&lx, &ly, &weights);
    Ok(PowerLawFit {
        exponent: line.slope,
        stderr: line.slope_stderr,
        window: (pts[0].0, pts[pts.len() - 1].0),
        r_squared: line.r_squared,
        prefactor: line.intercept.exp(),
        n_points: pts.len(),
    })
}

/// Weighted log-log least squares over the points with `x` in `window`
/// (inclusive). Needs at least four points.
pub fn fit_power_law(
    x: &[f64],
    y: &[f64],
    stderr: Option<&[f64]>,
    window: (f64, f64),
) -> Result<PowerLawFit> {
    fit_log_log(x, y, stderr, window, 4)
}

/// Rate `r` of `y ≈ A·e^{−r x}` from a semi-log fit; returned in the
/// `exponent` slot with its standard error.
pub fn fit_decay_rate(x: &[f64], y: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    let pts = select(x, y, None, window)?;
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: pts.len(),
        });
    }
    if let Some(&(x, value, _)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::NonPositiveValue { x, value });
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let line = weighted_line(&xs, &ly, &vec![1.0; xs.len()]);
    Ok(PowerLawFit {
        exponent: -line.slope,
        stderr: line.slope_stderr,
        window: (xs[0], xs[xs.len() - 1]),
        r_squared: line.r_squared,
        prefactor: line.intercept.exp(),
        n_points: xs.len(),
    })
}

/// Knobs for reading growth and saturation off a roughness series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthOptions {
    /// Earliest time used in the growth fit; excludes the lattice transient.
    pub t_min: f64,
    /// The growth window ends at this fraction of the saturation onset.
    pub onset_fraction: f64,
    /// A trailing log-slope below this marks the plateau.
    pub plateau_slope: f64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self {
            t_min: 1.0,
            onset_fraction: 0.1,
            plateau_slope: 0.05,
        }
    }
}

/// Index of the first record from which the log-log slope of `W(t)` over
/// all remaining records (at least three) stays below `plateau_slope`.
pub fn saturation_onset(rs: &RoughnessSeries, plateau_slope: f64) -> Option<usize> {
    let n = rs.len();
    let usable: Vec<usize> = (0..n)
        .filter(|&i| rs.times[i] > 0.0 && rs.w_mean[i] > 0.0)
        .collect();
    if usable.len() < 3 {
        return None;
    }
    let lx: Vec<f64> = usable.iter().map(|&i| rs.times[i].ln()).collect();
    let ly: Vec<f64> = usable.iter().map(|&i| rs.w_mean[i].ln()).collect();
    (0..=usable.len() - 3)
        .find(|&s| {
            let w = vec![1.0; usable.len() - s];
            weighted_line(&lx[s..], &ly[s..], &w).slope.abs() < plateau_slope
        })
        .map(|s| usable[s])
}

/// Growth exponent `β` from `W ∼ t^β` before saturation.
pub fn growth_exponent(rs: &RoughnessSeries, opts: &GrowthOptions) -> Result<PowerLawFit> {
    let end = match saturation_onset(rs, opts.plateau_slope) {
        Some(i) => rs.times[i] * opts.onset_fraction,
        None => f64::INFINITY,
    };
    if end <= opts.t_min {
        return Err(Error::NoGrowthWindow);
    }
    match fit_power_law(&rs.times, &rs.w_mean, Some(&rs.w_stderr), (opts.t_min, end)) {
        Err(Error::TooFewPoints { .. }) => Err(Error::NoGrowthWindow),
        other => other,
    }
}

/// Plateau roughness: mean of `W` over the later half of the records past
/// the saturation onset, with the mean of their standard errors. Skipping
/// the first half keeps the tail of the approach out of the average.
pub fn saturated_roughness(rs: &RoughnessSeries, plateau_slope: f64) -> Result<(f64, f64)> {
    let onset = saturation_onset(rs, plateau_slope).ok_or(Error::Unsaturated(rs.system_size))?;
    let start = onset + (rs.len() - onset) / 2;
    let w: KahanSum = rs.w_mean[start..].iter().copied().collect();
    let e: KahanSum = rs.w_stderr[start..].iter().copied().collect();
    let m = (rs.len() - start) as f64;
    Ok((w.value() / m, e.value() / m))
}

/// Roughness exponent `χ` from `W_sat ∼ L^χ` over at least three sizes.
pub fn saturation_exponent(series: &[RoughnessSeries], plateau_slope: f64) -> Result<PowerLawFit> {
    if series.len() < 3 {
        return Err(Error::TooFewSizes {
            needed: 3,
            found: series.len(),
        });
    }
    let mut rows: Vec<(f64, f64, f64)> = series
        .iter()
        .map(|rs| {
            saturated_roughness(rs, plateau_slope).map(|(w, e)| (rs.system_size as f64, w, e))
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let l: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let w: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.2).collect();
    fit_log_log(&l, &w, Some(&e), (0.0, f64::INFINITY), 3)
}
