use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ops::{spin_matrices, CMatrix, SparseOp};
use crate::{Error, Result};

pub const DEFAULT_DIMENSION_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryMode {
    WeakDipole,
    StrongDipole,
}

/// Dissipation rates. The weak set uses `big_gamma0, gamma0, big_gamma1,
/// gamma1, gamma2`; the strong set uses `tilde_gamma0, gamma0, gamma1,
/// gamma2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub big_gamma0: f64,
    pub gamma0: f64,
    pub big_gamma1: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub tilde_gamma0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinModelSpec {
    /// Spin magnitude `S`, a positive half-integer.
    pub spin: f64,
    pub n_sites: usize,
    pub j: f64,
    pub t: f64,
    pub rates: Rates,
    pub symmetry_mode: SymmetryMode,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

impl SpinModelSpec {
    pub fn new(spin: f64, n_sites: usize, symmetry_mode: SymmetryMode) -> Self {
        Self {
            spin,
            n_sites,
            j: 0.0,
            t: 0.0,
            rates: Rates::default(),
            symmetry_mode,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }

    pub fn two_s(&self) -> u32 {
        (2.0 * self.spin).round() as u32
    }

    pub fn local_dim(&self) -> usize {
        self.two_s() as usize + 1
    }

    /// `(2S+1)^(2L)`, saturating on overflow.
    pub fn dimension(&self) -> usize {
        let d = self.local_dim();
        (0..2 * self.n_sites).fold(1usize, |acc, _| acc.saturating_mul(d))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpinModel(m));
        let two_s = 2.0 * self.spin;
        if !(self.spin > 0.0 && (two_s - two_s.round()).abs() < 1e-12) {
            return bad(format!("spin {} is not a positive half-integer", self.spin));
        }
        if self.n_sites == 0 {
            return bad("n_sites must be positive".into());
        }
        let r = &self.rates;
        let all = [
            ("big_gamma0", r.big_gamma0),
            ("gamma0", r.gamma0),
            ("big_gamma1", r.big_gamma1),
            ("gamma1", r.gamma1),
            ("gamma2", r.gamma2),
            ("tilde_gamma0", r.tilde_gamma0),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("rate {name} = {v} must be finite and non-negative"));
            }
        }
        if !(self.j.is_finite() && self.t.is_finite()) {
            return bad("couplings must be finite".into());
        }
        match self.symmetry_mode {
            SymmetryMode::WeakDipole if r.tilde_gamma0 != 0.0 => {
                return bad("tilde_gamma0 belongs to the strong set".into())
            }
            SymmetryMode::StrongDipole if r.big_gamma0 != 0.0 || r.big_gamma1 != 0.0 => {
                return bad("big_gamma0 and big_gamma1 belong to the weak set".into())
            }
            _ => {}
        }
        let dim = self.dimension();
        if dim > self.dimension_cap {
            return Err(Error::DimensionCap {
                dim,
                cap: self.dimension_cap,
            });
        }
        Ok(())
    }
}

/// Local and collective operators of the chain. Sites are numbered from 1
/// in the physics; the vectors here are indexed from 0.
#[derive(Debug, Clone)]
pub struct Operators {
    pub dim: usize,
    pub s_plus: Vec<SparseOp>,
    pub s_minus: Vec<SparseOp>,
    pub s_z: Vec<SparseOp>,
    pub d_plus: Vec<SparseOp>,
    pub d_minus: Vec<SparseOp>,
    pub d_z: Vec<SparseOp>,
    pub charge: SparseOp,
    pub dipole: SparseOp,
    pub hamiltonian: SparseOp,
}

impl Operators {
    pub fn n_sites(&self) -> usize {
        self.s_z.len()
    }

    /// `(S⁺ + S⁻)/2` on spin `n` (0-based).
    pub fn s_x(&self, n: usize) -> SparseOp {
        self.s_plus[n]
            .add(&self.s_minus[n])
            .scale(Complex64::new(0.5, 0.0))
    }
}

/// Builds every site operator in tensor order `(s₁, Δ₁, s₂, Δ₂, …)`, the
/// charge `Q = Σ sᶻ_n`, the dipole moment `D = Σ (n·sᶻ_n + Δᶻ_n)` and the
/// open-chain Hamiltonian.
pub fn build_operators(spec: &SpinModelSpec) -> Result<Operators> {
    spec.validate()?;
    let l = spec.n_sites;
    let slots = 2 * l;
    let (p, m, z) = spin_matrices(spec.two_s());
    let on = |mat: &CMatrix, slot: usize| SparseOp::embed(mat, slot, slots);
    let s_plus: Vec<_> = (0..l).map(|n| on(&p, 2 * n)).collect();
    let s_minus: Vec<_> = (0..l).map(|n| on(&m, 2 * n)).collect();
    let s_z: Vec<_> = (0..l).map(|n| on(&z, 2 * n)).collect();
    let d_plus: Vec<_> = (0..l).map(|n| on(&p, 2 * n + 1)).collect();
    let d_minus: Vec<_> = (0..l).map(|n| on(&m, 2 * n + 1)).collect();
    let d_z: Vec<_> = (0..l).map(|n| on(&z, 2 * n + 1)).collect();
    let dim = s_z[0].dim();

    let re = |x: f64| Complex64::new(x, 0.0);
    let mut charge = SparseOp::zero(dim);
    let mut dipole = SparseOp::zero(dim);
    for n in 0..l {
        charge = charge.add(&s_z[n]);
        dipole = dipole.add(&s_z[n].scale(re((n + 1) as f64))).add(&d_z[n]);
    }
    let mut hop = SparseOp::zero(dim);
    for n in 0..l.saturating_sub(1) {
        let pair = s_plus[n + 1]
            .mul(&s_minus[n])
            .mul(&d_minus[n])
            .scale(re(spec.j));
        let link = d_plus[n + 1].mul(&d_minus[n]).scale(re(spec.t));
        hop = hop.add(&pair).add(&link);
    }
    let hamiltonian = hop.add(&hop.adjoint());
    Ok(Operators {
        dim,
        s_plus,
        s_minus,
        s_z,
        d_plus,
        d_minus,
        d_z,
        charge,
        dipole,
        hamiltonian,
    })
}

#[derive(Debug, Clone)]
pub struct Jump {
    pub label: String,
    pub rate: f64,
    pub op: SparseOp,
}

/// 1-based parity of a 0-based site index.
fn is_odd_site(n: usize) -> bool {
    n % 2 == 0
}

/// Nearest-neighbour pairs `(m, n)` with `m` odd and `n` even, both
/// orientations, 0-based.
fn odd_even_pairs(l: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for m in (0..l).filter(|&m| is_odd_site(m)) {
        if m >= 1 {
            out.push((m, m - 1));
        }
        if m + 1 < l {
            out.push((m, m + 1));
        }
    }
    out
}

/// Jump operators of the selected set. Terms with zero rate are dropped.
pub fn jump_operators(spec: &SpinModelSpec, ops: &Operators) -> Vec<Jump> {
    let l = ops.n_sites();
    let r = &spec.rates;
    let mut jumps = Vec::new();
    let mut push = |label: String, rate: f64, op: SparseOp| {
        if rate > 0.0 {
            jumps.push(Jump { label, rate, op });
        }
    };
    let pairs = odd_even_pairs(l);
    match spec.symmetry_mode {
        SymmetryMode::WeakDipole => {
            for &(o, e) in &pairs {
                push(
                    format!("s-_{} s+_{}", o + 1, e + 1),
                    r.big_gamma0,
                    ops.s_minus[o].mul(&ops.s_plus[e]),
                );
            }
            for &(o, e) in &pairs {
                push(
                    format!("D-_{} D+_{}", o + 1, e + 1),
                    r.gamma0,
                    ops.d_minus[o].mul(&ops.d_plus[e]),
                );
            }
            for n in 0..l {
                push(
                    format!("D-_{}", n + 1),
                    r.big_gamma1,
                    ops.d_minus[n].clone(),
                );
            }
        }
        SymmetryMode::StrongDipole => {
            // Sites 2l−1 and 2l (1-based) are 0-based 2l−2 and 2l−1.
            for a in (0..l).step_by(2) {
                if a + 1 < l {
                    push(
                        format!("D-_{0} s-_{0} s+_{1}", a + 1, a + 2),
                        r.tilde_gamma0,
                        ops.d_minus[a].mul(&ops.s_minus[a]).mul(&ops.s_plus[a + 1]),
                    );
                }
                if a + 2 < l {
                    push(
                        format!("D+_{0} s-_{1} s+_{0}", a + 2, a + 3),
                        r.tilde_gamma0,
                        ops.d_plus[a + 1]
                            .mul(&ops.s_minus[a + 2])
                            .mul(&ops.s_plus[a + 1]),
                    );
                }
            }
            for &(o, e) in &pairs {
                push(
                    format!("D-_{} D+_{}", o + 1, e + 1),
                    r.gamma0,
                    ops.d_minus[o].mul(&ops.d_plus[e]),
                );
            }
        }
    }
    for n in 0..l {
        push(format!("sz_{}", n + 1), r.gamma1, ops.s_z[n].clone());
    }
    for n in 0..l {
        push(format!("Dz_{}", n + 1), r.gamma2, ops.d_z[n].clone());
    }
    jumps
}
