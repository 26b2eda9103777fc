use serde::{Deserialize, Serialize};

use crate::grid::{gradient_into, laplacian_into, FieldState, Grid1D};
use crate::{Error, Result};

/// Registry of the equations the engine integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `∂t α = d2 ∇²α − d4 ∇⁴α + g (∇²α)² + ξ`
    DipoleGrowth,
    /// Same right-hand side with the noise switched off.
    DipoleDeterministic,
    /// `∂t α = d2 ∇²α + ξ`
    EdwardsWilkinson,
    /// `∂t α = −d4 ∇⁴α + ξ`
    MullinsHerring,
    /// `∂t α = d2 ∇²α + g (∇α)² + ξ`, kept for harness calibration.
    KpzReference,
    /// Diffusing density with divergence-form noise.
    WeakCharge,
    /// Dipole-constrained density: `∂t ρ = −d4 ∇⁴ρ + ∇²η`.
    StrongCharge,
}

impl Variant {
    pub fn noise_conservation_order(self) -> u8 {
        match self {
            Variant::WeakCharge => 1,
            Variant::StrongCharge => 2,
            _ => 0,
        }
    }

    /// Variants whose right-hand side is `d2∇² − d4∇⁴ + g(∇²·)²`.
    pub fn is_growth(self) -> bool {
        matches!(
            self,
            Variant::DipoleGrowth
                | Variant::DipoleDeterministic
                | Variant::EdwardsWilkinson
                | Variant::MullinsHerring
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::DipoleGrowth => "dipole_growth",
            Variant::DipoleDeterministic => "dipole_deterministic",
            Variant::EdwardsWilkinson => "edwards_wilkinson",
            Variant::MullinsHerring => "mullins_herring",
            Variant::KpzReference => "kpz_reference",
            Variant::WeakCharge => "weak_charge",
            Variant::StrongCharge => "strong_charge",
        }
    }
}

/// Coefficients of one registry entry.
///
/// `saturation` (`c ≥ 0`) optionally replaces the quadratic nonlinearity
/// `u²` by `(1 − e^{−c u²})/c`. With `c = 0` the equation is used exactly as
/// written; a positive `c` bounds the nonlinear growth rate by `g/c` so that
/// lattice blow-up of the bare quadratic term cannot occur.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub variant: Variant,
    pub d2: f64,
    pub d4: f64,
    pub g: f64,
    pub noise_strength: f64,
    pub noise_conservation_order: u8,
    #[serde(default)]
    pub saturation: f64,
}

impl EquationSpec {
    fn base(variant: Variant, d2: f64, d4: f64, g: f64, noise_strength: f64) -> Self {
        Self {
            variant,
            d2,
            d4,
            g,
            noise_strength,
            noise_conservation_order: variant.noise_conservation_order(),
            saturation: 0.0,
        }
    }

    pub fn dipole_growth(d2: f64, d4: f64, g: f64, noise_strength: f64) -> Self {
        Self::base(Variant::DipoleGrowth, d2, d4, g, noise_strength)
    }

    pub fn dipole_deterministic(d2: f64, d4: f64, g: f64) -> Self {
        Self::base(Variant::DipoleDeterministic, d2, d4, g, 0.0)
    }

    pub fn edwards_wilkinson(d2: f64, noise_strength: f64) -> Self {
        Self::base(Variant::EdwardsWilkinson, d2, 0.0, 0.0, noise_strength)
    }

    pub fn mullins_herring(d4: f64, noise_strength: f64) -> Self {
        Self::base(Variant::MullinsHerring, 0.0, d4, 0.0, noise_strength)
    }

    pub fn kpz_reference(d2: f64, g: f64, noise_strength: f64) -> Self {
        Self::base(Variant::KpzReference, d2, 0.0, g, noise_strength)
    }

    pub fn weak_charge(diffusion: f64, noise_strength: f64) -> Self {
        Self::base(Variant::WeakCharge, diffusion, 0.0, 0.0, noise_strength)
    }

    pub fn strong_charge(diffusion: f64, noise_strength: f64) -> Self {
        Self::base(Variant::StrongCharge, 0.0, diffusion, 0.0, noise_strength)
    }

    pub fn with_saturation(mut self, c: f64) -> Self {
        self.saturation = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidEquation(msg));
        for (name, v) in [
            ("d2", self.d2),
            ("d4", self.d4),
            ("g", self.g),
            ("noise_strength", self.noise_strength),
            ("saturation", self.saturation),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} = {v} is not finite"));
            }
        }
        if self.d4 < 0.0 {
            return bad(format!("d4 = {} must be non-negative", self.d4));
        }
        if self.noise_strength < 0.0 {
            return bad(format!(
                "noise_strength = {} must be non-negative",
                self.noise_strength
            ));
        }
        if self.saturation < 0.0 {
            return bad(format!(
                "saturation = {} must be non-negative",
                self.saturation
            ));
        }
        if self.variant == Variant::DipoleDeterministic && self.noise_strength != 0.0 {
            return bad("dipole_deterministic requires noise_strength = 0".into());
        }
        let expected = self.variant.noise_conservation_order();
        if self.noise_conservation_order != expected {
            return bad(format!(
                "{} requires noise_conservation_order = {expected}, got {}",
                self.variant.name(),
                self.noise_conservation_order
            ));
        }
        Ok(())
    }

    /// `u²`, or its saturated form when `saturation > 0`.
    #[inline]
    pub fn nonlinearity(&self, u: f64) -> f64 {
        let q = u * u;
        if self.saturation > 0.0 {
            -(-self.saturation * q).exp_m1() / self.saturation
        } else {
            q
        }
    }

    /// Per-mode rate of the linear part, `d2λ₂ − d4λ₄` restricted to the
    /// terms the variant carries.
    pub fn linear_rate(&self, lap: f64, bih: f64) -> f64 {
        match self.variant {
            Variant::WeakCharge => self.d2 * lap,
            Variant::StrongCharge => -self.d4 * bih,
            _ => self.d2 * lap - self.d4 * bih,
        }
    }

    pub fn has_nonlinearity(&self) -> bool {
        self.g != 0.0 && (self.variant.is_growth() || self.variant == Variant::KpzReference)
    }
}

/// Scratch buffers for evaluating right-hand sides without allocating.
#[derive(Debug, Clone)]
pub(crate) struct RhsWorkspace {
    pub lap: Vec<f64>,
    pub aux: Vec<f64>,
}

impl RhsWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            lap: vec![0.0; n],
            aux: vec![0.0; n],
        }
    }
}

/// Nonlinear part only, written into `out`. Leaves `ws.lap = ∇²f` for the
/// growth variants.
pub(crate) fn nonlinear_into(
    eq: &EquationSpec,
    grid: &Grid1D,
    f: &[f64],
    ws: &mut RhsWorkspace,
    out: &mut [f64],
) {
    let (dx, bc) = (grid.dx(), grid.boundary());
    if !eq.has_nonlinearity() {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    if eq.variant == Variant::KpzReference {
        gradient_into(f, dx, bc, &mut ws.aux);
        for (o, &u) in out.iter_mut().zip(&ws.aux) {
            *o = eq.g * eq.nonlinearity(u);
        }
    } else {
        laplacian_into(f, dx, bc, &mut ws.lap);
        for (o, &u) in out.iter_mut().zip(&ws.lap) {
            *o = eq.g * eq.nonlinearity(u);
        }
    }
}

/// Full deterministic right-hand side, written into `out`.
pub(crate) fn rhs_into(
    eq: &EquationSpec,
    grid: &Grid1D,
    f: &[f64],
    ws: &mut RhsWorkspace,
    out: &mut [f64],
) {
    let (dx, bc) = (grid.dx(), grid.boundary());
    laplacian_into(f, dx, bc, &mut ws.lap);
    laplacian_into(&ws.lap, dx, bc, &mut ws.aux);
    let (d2, d4) = match eq.variant {
        Variant::WeakCharge => (eq.d2, 0.0),
        Variant::StrongCharge => (0.0, eq.d4),
        _ => (eq.d2, eq.d4),
    };
    for i in 0..f.len() {
        out[i] = d2 * ws.lap[i] - d4 * ws.aux[i];
    }
    if eq.has_nonlinearity() {
        if eq.variant == Variant::KpzReference {
            gradient_into(f, dx, bc, &mut ws.aux);
            for (o, &u) in out.iter_mut().zip(&ws.aux) {
                *o += eq.g * eq.nonlinearity(u);
            }
        } else {
            for (o, &u) in out.iter_mut().zip(&ws.lap) {
                *o += eq.g * eq.nonlinearity(u);
            }
        }
    }
}

/// Deterministic drift of `eq` evaluated on `f`.
pub fn rhs_deterministic(eq: &EquationSpec, f: &FieldState) -> Result<FieldState> {
    eq.validate()?;
    let mut ws = RhsWorkspace::new(f.len());
    let mut out = vec![0.0; f.len()];
    rhs_into(eq, &f.grid, &f.values, &mut ws, &mut out);
    Ok(FieldState {
        grid: f.grid,
        values: out,
        time: f.time,
    })
}

/// Largest stable explicit Euler step: `min(dx²/(2|d2|), dx⁴/(8 d4))` over
/// the linear terms the variant carries; `+∞` when there are none.
pub fn stability_limit(eq: &EquationSpec, grid: &Grid1D) -> f64 {
    let dx = grid.dx();
    let (d2, d4) = match eq.variant {
        Variant::WeakCharge => (eq.d2, 0.0),
        Variant::StrongCharge => (0.0, eq.d4),
        _ => (eq.d2, eq.d4),
    };
    let mut limit = f64::INFINITY;
    if d2 != 0.0 {
        limit = limit.min(dx * dx / (2.0 * d2.abs()));
    }
    if d4 != 0.0 {
        limit = limit.min(dx.powi(4) / (8.0 * d4));
    }
    limit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::spectral_multipliers;
    use std::f64::consts::PI;

    fn all_variants() -> Vec<EquationSpec> {
        vec![
            EquationSpec::dipole_growth(0.3, 1.0, 0.5, 1.0),
            EquationSpec::dipole_deterministic(0.0, 1.0, 0.5),
            EquationSpec::edwards_wilkinson(1.0, 1.0),
            EquationSpec::mullins_herring(1.0, 1.0),
            EquationSpec::kpz_reference(1.0, 0.5, 1.0),
            EquationSpec::weak_charge(1.0, 1.0),
            EquationSpec::strong_charge(1.0, 1.0),
        ]
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = Grid1D::periodic(16).unwrap();
        let f = FieldState::from_fn(g, |_| 2.5);
        for eq in all_variants() {
            let r = rhs_deterministic(&eq, &f).unwrap();
            assert!(r.values.iter().all(|&v| v == 0.0), "{:?}", eq.variant);
        }
    }

    #[test]
    fn dipole_growth_on_cosine_mode() {
        let eq = EquationSpec::dipole_growth(0.0, 1.0, 0.5, 1.0);
        for &n in &[16usize, 60] {
            let g = Grid1D::periodic(n).unwrap();
            let k = 2.0 * PI / n as f64;
            let f = FieldState::from_fn(g, |x| (k * x).cos());
            let m = spectral_multipliers(&g);
            let (l2, l4) = (m.laplacian[1], m.biharmonic[1]);
            let r = rhs_deterministic(&eq, &f).unwrap();
            for (i, &v) in r.values.iter().enumerate() {
                let fi = f.values[i];
                let expected = -l4 * fi + 0.5 * (l2 * fi) * (l2 * fi);
                assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
            }
        }
    }

    #[test]
    fn reference_growth_parameters_are_accepted() {
        let eq = EquationSpec::dipole_growth(0.0, 1.0, 0.5, 1.0);
        eq.validate().unwrap();
        assert_eq!(
            (eq.d2, eq.d4, eq.g, eq.noise_strength),
            (0.0, 1.0, 0.5, 1.0)
        );
    }

    #[test]
    fn invalid_coefficients_are_rejected() {
        let g = Grid1D::periodic(16).unwrap();
        let f = FieldState::zeros(g);
        let mut eq = EquationSpec::dipole_growth(0.0, -1.0, 0.5, 1.0);
        assert!(rhs_deterministic(&eq, &f).is_err());
        eq.d4 = 1.0;
        eq.noise_conservation_order = 2;
        assert!(eq.validate().is_err());
        let mut det = EquationSpec::dipole_deterministic(0.0, 1.0, 0.5);
        det.noise_strength = 0.1;
        assert!(det.validate().is_err());
        assert!(EquationSpec::edwards_wilkinson(1.0, -1.0)
            .validate()
            .is_err());
        assert!(EquationSpec::dipole_growth(0.0, 1.0, 0.5, 1.0)
            .with_saturation(-0.1)
            .validate()
            .is_err());
    }

    #[test]
    fn linear_variants_pick_their_terms() {
        let g = Grid1D::periodic(32).unwrap();
        let f = FieldState::from_fn(g, |x| (0.4 * x).sin() + 0.1 * x.cos());
        let lap = crate::grid::laplacian(&f);
        let bih = crate::grid::biharmonic(&f);
        let weak = rhs_deterministic(&EquationSpec::weak_charge(0.7, 1.0), &f).unwrap();
        let strong = rhs_deterministic(&EquationSpec::strong_charge(0.7, 1.0), &f).unwrap();
        for i in 0..32 {
            assert!((weak.values[i] - 0.7 * lap.values[i]).abs() < 1e-14);
            assert!((strong.values[i] + 0.7 * bih.values[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn saturated_nonlinearity_is_bounded_and_consistent() {
        let eq = EquationSpec::dipole_growth(0.0, 1.0, 0.5, 1.0).with_saturation(0.1);
        assert!(eq.nonlinearity(1e6) <= 10.0 + 1e-12);
        let u: f64 = 1e-4;
        assert!((eq.nonlinearity(u) - u * u).abs() < 1e-16);
    }

    #[test]
    fn stability_limits() {
        let g = Grid1D::periodic(16).unwrap();
        let l = |eq: EquationSpec| stability_limit(&eq, &g);
        assert_eq!(l(EquationSpec::dipole_growth(0.0, 1.0, 0.5, 1.0)), 0.125);
        assert_eq!(l(EquationSpec::edwards_wilkinson(1.0, 1.0)), 0.5);
        assert_eq!(
            l(EquationSpec::dipole_growth(0.0, 0.0, 0.5, 1.0)),
            f64::INFINITY
        );
        let g2 = Grid1D::new(16, 2.0).unwrap();
        assert_eq!(
            stability_limit(&EquationSpec::mullins_herring(1.0, 1.0), &g2),
            2.0
        );
    }
}
