use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest entry modulus of a dense matrix.
pub fn max_modulus(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Sparse square operator stored as row-sorted `(row, col, value)`
/// triplets. Jump operators and Hamiltonian terms are products of local
/// ladder and diagonal matrices, so they stay very sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    fn from_map(dim: usize, map: BTreeMap<(usize, usize), Complex64>) -> Self {
        let entries = map
            .into_iter()
            .filter(|(_, v)| *v != ZERO)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self { dim, entries }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect(),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let map = values
            .iter()
            .enumerate()
            .map(|(i, &v)| ((i, i), Complex64::new(v, 0.0)))
            .collect();
        Self::from_map(values.len(), map)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    /// Embeds the `d×d` matrix `local` on tensor slot `slot` of `n_slots`,
    /// with slot 0 the most significant factor.
    pub fn embed(local: &CMatrix, slot: usize, n_slots: usize) -> Self {
        let d = local.nrows();
        let dim = d.pow(n_slots as u32);
        let stride = d.pow((n_slots - 1 - slot) as u32);
        let mut entries = Vec::new();
        for b in 0..dim {
            let digit = (b / stride) % d;
            let base = b - digit * stride;
            for r in 0..d {
                let v = local[(r, digit)];
                if v != ZERO {
                    entries.push((base + r * stride, b, v));
                }
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        Self { dim, entries }
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        entries.sort_by_key(|e| (e.0, e.1));
        Self {
            dim: self.dim,
            entries,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let map = self
            .entries
            .iter()
            .map(|&(r, c, v)| ((r, c), v * s))
            .collect();
        Self::from_map(self.dim, map)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(r, c, v) in self.entries.iter().chain(&other.entries) {
            *map.entry((r, c)).or_insert(ZERO) += v;
        }
        Self::from_map(self.dim, map)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        // Column lists of `other` keyed by its row.
        let mut by_row: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.dim];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(i, k, a) in &self.entries {
            for &(j, b) in &by_row[k] {
                *map.entry((i, j)).or_insert(ZERO) += a * b;
            }
        }
        Self::from_map(self.dim, map)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Largest entry magnitude; zero for the empty operator.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `out += s·A·X`.
    pub fn mul_dense_into(&self, x: &CMatrix, s: Complex64, out: &mut CMatrix) {
        let n = x.ncols();
        for &(r, k, v) in &self.entries {
            let a = v * s;
            for j in 0..n {
                out[(r, j)] += a * x[(k, j)];
            }
        }
    }

    /// `out += s·X·A`.
    pub fn dense_mul_into(&self, x: &CMatrix, s: Complex64, out: &mut CMatrix) {
        let m = x.nrows();
        for &(k, c, v) in &self.entries {
            let a = v * s;
            for i in 0..m {
                out[(i, c)] += a * x[(i, k)];
            }
        }
    }

    /// Diagonal, if the operator has no off-diagonal entries.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        let mut d = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            if r != c || v.im != 0.0 {
                return None;
            }
            d[r] = v.re;
        }
        Some(d)
    }
}

/// Spin-`S` matrices `(S⁺, S⁻, Sᶻ)` in the basis `m = S, S−1, …, −S`.
pub fn spin_matrices(two_s: u32) -> (CMatrix, CMatrix, CMatrix) {
    let d = two_s as usize + 1;
    let s = two_s as f64 / 2.0;
    let mut plus = CMatrix::zeros(d, d);
    let mut z = CMatrix::zeros(d, d);
    for j in 0..d {
        let m = s - j as f64;
        z[(j, j)] = Complex64::new(m, 0.0);
        if j > 0 {
            plus[(j - 1, j)] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let minus = plus.adjoint();
    (plus, minus, z)
}
