use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::observables::RoughnessSeries;
use crate::stats::KahanSum;
use crate::{Error, Result};

/// Restriction of the collapse to rescaled times `u = t/L^z` in
/// `[u_min, u_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseWindow {
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for CollapseWindow {
    fn default() -> Self {
        Self {
            u_min: 0.0,
            u_max: f64::INFINITY,
        }
    }
}

/// Number of log-spaced points on which rescaled curves are compared.
const SUPPORT_POINTS: usize = 64;

struct Curve {
    lx: Vec<f64>,
    ly: Vec<f64>,
}

impl Curve {
    fn interpolate(&self, x: f64) -> f64 {
        let j = self.lx.partition_point(|&v| v <= x);
        if j == 0 {
            return self.ly[0];
        }
        if j >= self.lx.len() {
            return self.ly[self.lx.len() - 1];
        }
        let (x0, x1) = (self.lx[j - 1], self.lx[j]);
        let s = (x - x0) / (x1 - x0);
        self.ly[j - 1] + s * (self.ly[j] - self.ly[j - 1])
    }
}

fn sorted_curves(curves: &[RoughnessSeries]) -> Vec<&RoughnessSeries> {
    let mut sorted: Vec<&RoughnessSeries> = curves.iter().collect();
    sorted.sort_by(|a, b| {
        a.system_size.cmp(&b.system_size).then_with(|| {
            let key =
                |c: &RoughnessSeries| c.w_mean.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            key(a).cmp(&key(b))
        })
    });
    sorted
}

/// Mean squared pairwise deviation of the curves after rescaling to
/// `(log(t/L^z), log(W/L^chi))`, compared on the common support inside
/// `window`. The size list is sorted first so the result does not depend
/// on its order.
pub fn collapse_residual(
    curves: &[RoughnessSeries],
    chi: f64,
    z: f64,
    window: &CollapseWindow,
) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::TooFewSizes {
            needed: 2,
            found: curves.len(),
        });
    }
    let (lo_u, hi_u) = (window.u_min.max(0.0), window.u_max);
    let rescaled: Vec<Curve> = sorted_curves(curves)
        .into_iter()
        .map(|c| {
            let l = c.system_size as f64;
            let (tz, wc) = (l.powf(z), l.powf(chi));
            let (lx, ly) = c
                .times
                .iter()
                .zip(&c.w_mean)
                .filter(|(t, w)| **t > 0.0 && **w > 0.0)
                .map(|(t, w)| (t / tz, w / wc))
                .filter(|(u, _)| *u >= lo_u && *u <= hi_u)
                .map(|(u, v)| (u.ln(), v.ln()))
                .unzip();
            Curve { lx, ly }
        })
        .collect();
    if rescaled.iter().any(|c| c.lx.len() < 2) {
        return Err(Error::EmptyCommonSupport);
    }
    let lo = rescaled
        .iter()
        .map(|c| c.lx[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = rescaled
        .iter()
        .map(|c| c.lx[c.lx.len() - 1])
        .fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::EmptyCommonSupport);
    }
    let mut acc = KahanSum::new();
    let mut count = 0usize;
    for p in 0..SUPPORT_POINTS {
        let x = lo + (hi - lo) * p as f64 / (SUPPORT_POINTS - 1) as f64;
        let ys: Vec<f64> = rescaled.iter().map(|c| c.interpolate(x)).collect();
        for i in 0..ys.len() {
            for j in i + 1..ys.len() {
                acc.add((ys[i] - ys[j]).powi(2));
                count += 1;
            }
        }
    }
    Ok(acc.value() / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseBounds {
    pub chi: (f64, f64),
    pub z: (f64, f64),
    /// Grid samples along `chi` and `z` for the coarse scan.
    pub samples: (usize, usize),
}

impl Default for CollapseBounds {
    fn default() -> Self {
        Self {
            chi: (0.0, 3.0),
            z: (1.0, 5.0),
            samples: (31, 41),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub chi: f64,
    pub z: f64,
    pub residual: f64,
    /// Every finite grid sample as `(chi, z, residual)`.
    pub landscape: Vec<(f64, f64, f64)>,
    /// The optimum sits within half a grid step of a bound.
    pub boundary_suspect: bool,
}

struct Objective<'a> {
    curves: &'a [RoughnessSeries],
    window: CollapseWindow,
    bounds: CollapseBounds,
}

impl Objective<'_> {
    fn eval(&self, chi: f64, z: f64) -> f64 {
        let (c, zb) = (self.bounds.chi, self.bounds.z);
        if chi < c.0 || chi > c.1 || z < zb.0 || z > zb.1 {
            return f64::INFINITY;
        }
        collapse_residual(self.curves, chi, z, &self.window).unwrap_or(f64::INFINITY)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(p[0], p[1]))
    }
}

fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![range.0];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Grid scan over `bounds` followed by a Nelder–Mead refinement from the
/// best sample. Exact ties on the grid go to the smallest `(chi, z)`.
pub fn optimize_collapse(
    curves: &[RoughnessSeries],
    bounds: &CollapseBounds,
    window: &CollapseWindow,
) -> Result<CollapseResult> {
    if curves.len() < 2 {
        return Err(Error::TooFewSizes {
            needed: 2,
            found: curves.len(),
        });
    }
    let obj = Objective {
        curves,
        window: *window,
        bounds: *bounds,
    };
    let chis = axis(bounds.chi, bounds.samples.0);
    let zs = axis(bounds.z, bounds.samples.1);
    let mut landscape = Vec::with_capacity(chis.len() * zs.len());
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for &chi in &chis {
        for &z in &zs {
            let r = obj.eval(chi, z);
            if r.is_finite() {
                landscape.push((chi, z, r));
                if r < best.2 {
                    best = (chi, z, r);
                }
            }
        }
    }
    if !best.2.is_finite() {
        return Err(Error::EmptyCommonSupport);
    }
    let step = |r: (f64, f64), n: usize| (r.1 - r.0) / (n.max(2) - 1) as f64;
    let (hc, hz) = (
        step(bounds.chi, bounds.samples.0),
        step(bounds.z, bounds.samples.1),
    );
    let simplex = vec![
        vec![best.0, best.1],
        vec![best.0 + 0.5 * hc, best.1],
        vec![best.0, best.1 + 0.5 * hz],
    ];
    let refined = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .ok()
        .and_then(|solver| {
            Executor::new(
                Objective {
                    curves,
                    window: *window,
                    bounds: *bounds,
                },
                solver,
            )
            .configure(|s| s.max_iters(400))
            .run()
            .ok()
        })
        .and_then(|res| {
            let p = res.state.best_param.clone()?;
            Some((p[0], p[1], res.state.best_cost))
        });
    let (chi, z, residual) = match refined {
        Some(r) if r.2 <= best.2 => r,
        _ => best,
    };
    let near = |v: f64, r: (f64, f64), h: f64| v - r.0 < 0.5 * h || r.1 - v < 0.5 * h;
    Ok(CollapseResult {
        chi,
        z,
        residual,
        landscape,
        boundary_suspect: near(chi, bounds.chi, hc) || near(z, bounds.z, hz),
    })
}
