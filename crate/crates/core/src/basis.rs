//! The pair basis `B = {|ii⟩} ∪ {|φ⁺_ij⟩} ∪ {|φ⁻_ij⟩}` of `H ⊗ H` and the
//! canonical operators built from it.
//!
//! Ordering is frozen: every `Diag(i)` ascending, then `Sym(i, j)` in
//! lexicographic `(i, j)` order with `i > j`, then `Anti(i, j)` in the same
//! order. Two-copy product states are indexed `|ij⟩ ↦ i·d + j`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Dim, Operator, C64};
use crate::math;

/// Index of one element of the pair basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairBasisIndex {
    /// `|ii⟩`
    Diag(usize),
    /// `(|ij⟩ + |ji⟩)/√2`, `i > j`
    Sym(usize, usize),
    /// `(|ij⟩ - |ji⟩)/√2`, `i > j`
    Anti(usize, usize),
}

/// Position of the pair `(i, j)`, `i > j`, in lexicographic order.
#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

/// All pairs `(i, j)` with `i > j`, lexicographic.
pub fn pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d.saturating_sub(1)) / 2);
    for i in 1..d {
        for j in 0..i {
            out.push((i, j));
        }
    }
    out
}

impl PairBasisIndex {
    /// Position in the frozen basis order.
    pub fn position(self, d: usize) -> usize {
        let m = d * (d - 1) / 2;
        match self {
            PairBasisIndex::Diag(i) => i,
            PairBasisIndex::Sym(i, j) => d + pair_index(i, j),
            PairBasisIndex::Anti(i, j) => d + m + pair_index(i, j),
        }
    }

    /// Inverse of [`position`](Self::position).
    pub fn from_position(d: usize, pos: usize) -> Self {
        let m = d * (d - 1) / 2;
        if pos < d {
            return PairBasisIndex::Diag(pos);
        }
        let (sym, rest) = if pos < d + m {
            (true, pos - d)
        } else {
            (false, pos - d - m)
        };
        // Invert i(i-1)/2 + j.
        let mut i = 1;
        while (i + 1) * i / 2 <= rest {
            i += 1;
        }
        let j = rest - i * (i - 1) / 2;
        if sym {
            PairBasisIndex::Sym(i, j)
        } else {
            PairBasisIndex::Anti(i, j)
        }
    }

    /// Sparse components `(product index, amplitude)`.
    pub fn components(self, d: usize) -> ([(usize, f64); 2], usize) {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        match self {
            PairBasisIndex::Diag(i) => ([(i * d + i, 1.0), (0, 0.0)], 1),
            PairBasisIndex::Sym(i, j) => ([(i * d + j, h), (j * d + i, h)], 2),
            PairBasisIndex::Anti(i, j) => ([(i * d + j, h), (j * d + i, -h)], 2),
        }
    }

    /// Dense state vector on `H ⊗ H`.
    pub fn vector(self, d: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); d * d];
        let (comps, n) = self.components(d);
        for &(idx, amp) in &comps[..n] {
            v[idx] = C64::new(amp, 0.0);
        }
        v
    }
}

/// The `d²` pair-basis states in frozen order.
pub fn pair_basis(dim: Dim) -> Vec<(PairBasisIndex, Vec<C64>)> {
    let d = dim.d();
    (0..dim.pair_dim())
        .map(|pos| {
            let idx = PairBasisIndex::from_position(d, pos);
            (idx, idx.vector(d))
        })
        .collect()
}

/// `⟨p| X |q⟩` for pair-basis elements `p`, `q`.
pub fn pair_matrix_element(x: &Operator, d: usize, p: PairBasisIndex, q: PairBasisIndex) -> C64 {
    let (pc, pn) = p.components(d);
    let (qc, qn) = q.components(d);
    let mut acc = C64::new(0.0, 0.0);
    for &(r, a) in &pc[..pn] {
        for &(c, b) in &qc[..qn] {
            acc += x[(r, c)] * (a * b);
        }
    }
    acc
}

/// `B† X B`: the operator's matrix in the pair basis.
pub fn to_pair_basis(x: &Operator, dim: Dim) -> Operator {
    let d = dim.d();
    let idx: Vec<PairBasisIndex> = (0..dim.pair_dim())
        .map(|pos| PairBasisIndex::from_position(d, pos))
        .collect();
    Operator::from_fn(dim.pair_dim(), |r, c| pair_matrix_element(x, d, idx[r], idx[c]))
}

/// `|p⟩⟨q|` as an operator in the product basis.
pub fn pair_unit(dim: Dim, p: PairBasisIndex, q: PairBasisIndex) -> Operator {
    let d = dim.d();
    let mut op = Operator::zeros(dim.pair_dim());
    let (pc, pn) = p.components(d);
    let (qc, qn) = q.components(d);
    for &(r, a) in &pc[..pn] {
        for &(c, b) in &qc[..qn] {
            op[(r, c)] += C64::new(a * b, 0.0);
        }
    }
    op
}

/// Diagonal expectation values `⟨p|X|p⟩` grouped by kind.
#[derive(Debug, Clone, PartialEq)]
pub struct PairWeights {
    pub diag: Vec<C64>,
    pub sym: Vec<C64>,
    pub anti: Vec<C64>,
}

impl PairWeights {
    pub fn zeros(dim: Dim) -> Self {
        PairWeights {
            diag: vec![C64::new(0.0, 0.0); dim.d()],
            sym: vec![C64::new(0.0, 0.0); dim.n_pairs()],
            anti: vec![C64::new(0.0, 0.0); dim.n_pairs()],
        }
    }

    /// Reads `⟨p|X|p⟩` for every `p ∈ B`.
    pub fn of(x: &Operator, dim: Dim) -> Self {
        let d = dim.d();
        let mut w = PairWeights::zeros(dim);
        for i in 0..d {
            w.diag[i] = x[(i * d + i, i * d + i)];
        }
        for (pos, &(i, j)) in pairs(d).iter().enumerate() {
            let ij = i * d + j;
            let ji = j * d + i;
            let same = x[(ij, ij)] + x[(ji, ji)];
            let cross = x[(ij, ji)] + x[(ji, ij)];
            w.sym[pos] = (same + cross) * 0.5;
            w.anti[pos] = (same - cross) * 0.5;
        }
        w
    }

    /// `tr(X 𝕃⁽⁰⁾)`, `tr(X 𝕃⁽¹⁾)`, `tr(X P^anti)`.
    pub fn traces(&self) -> (C64, C64, C64) {
        (self.diag.iter().sum(), self.sym.iter().sum(), self.anti.iter().sum())
    }

    /// `Σ_i diag_i |ii⟩⟨ii| + Σ sym_p |φ⁺_p⟩⟨φ⁺_p| + Σ anti_p |φ⁻_p⟩⟨φ⁻_p|`.
    pub fn to_operator(&self, dim: Dim) -> Operator {
        let d = dim.d();
        let mut op = Operator::zeros(dim.pair_dim());
        for i in 0..d {
            op[(i * d + i, i * d + i)] = self.diag[i];
        }
        for (pos, &(i, j)) in pairs(d).iter().enumerate() {
            let ij = i * d + j;
            let ji = j * d + i;
            let s = self.sym[pos];
            let a = self.anti[pos];
            let same = (s + a) * 0.5;
            let cross = (s - a) * 0.5;
            op[(ij, ij)] = same;
            op[(ji, ji)] = same;
            op[(ij, ji)] = cross;
            op[(ji, ij)] = cross;
        }
        op
    }
}

/// The named operators on `H ⊗ H`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalOps {
    /// `𝕀`
    pub identity2: Operator,
    /// `𝔽 = Σ |ij⟩⟨ji|`
    pub swap: Operator,
    /// `𝕃⁽⁰⁾ = Σ |ii⟩⟨ii|`
    pub l0: Operator,
    /// `𝕃⁽¹⁾ = Σ_{i>j} |φ⁺_ij⟩⟨φ⁺_ij|`
    pub l1: Operator,
    /// `(𝕀 + 𝔽)/2`
    pub p_sym: Operator,
    /// `(𝕀 - 𝔽)/2`
    pub p_anti: Operator,
    /// `2 P^sym / d(d+1)`
    pub pi_sym: Operator,
    /// `2 P^anti / d(d-1)`
    pub pi_anti: Operator,
    /// `𝕃⁽⁰⁾ / d`
    pub lam0: Operator,
    /// `𝕃⁽¹⁾ / d`
    pub lam1: Operator,
}

pub fn canonical_ops(dim: Dim) -> CanonicalOps {
    let d = dim.d();
    let dd = dim.pair_dim();
    let df = d as f64;
    let one = C64::new(1.0, 0.0);

    let identity2 = Operator::identity(dd);
    let mut swap = Operator::zeros(dd);
    let mut l0 = Operator::zeros(dd);
    for i in 0..d {
        for j in 0..d {
            swap[(i * d + j, j * d + i)] = one;
        }
        l0[(i * d + i, i * d + i)] = one;
    }
    let mut l1 = Operator::zeros(dd);
    for &(i, j) in &pairs(d) {
        let v = PairBasisIndex::Sym(i, j).vector(d);
        l1.add_scaled(one, &Operator::outer(&v, &v).expect("equal lengths"));
    }
    let p_sym = (&identity2 + &swap).scale_real(0.5);
    let p_anti = (&identity2 - &swap).scale_real(0.5);
    let pi_sym = p_sym.scale_real(2.0 / (df * (df + 1.0)));
    let pi_anti = p_anti.scale_real(2.0 / (df * (df - 1.0)));
    let lam0 = l0.scale_real(1.0 / df);
    let lam1 = l1.scale_real(1.0 / df);
    CanonicalOps {
        identity2,
        swap,
        l0,
        l1,
        p_sym,
        p_anti,
        pi_sym,
        pi_anti,
        lam0,
        lam1,
    }
}

/// `|Φ⟩ = Σ_a |aa⟩ / √n` on a space of dimension `n²`.
pub fn max_entangled(n: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n * n];
    let amp = 1.0 / math::sqrt(n as f64);
    for a in 0..n {
        v[a * n + a] = C64::new(amp, 0.0);
    }
    v
}
