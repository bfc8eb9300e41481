//! Dense complex linear algebra over `H` (dimension `d = 2^N`) and `H ⊗ H`.
//!
//! Operators are square, row-major and owned. Everything here is a pure
//! function of its inputs.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::math;

pub type C64 = Complex<f64>;

/// Largest matrix side length [`tensor_product`] will build.
pub const MAX_OPERATOR_DIM: usize = 1 << 16;

/// Largest supported qubit count.
pub const MAX_QUBITS: u32 = 16;

/// Qubit count `N` together with the Hilbert-space dimension `d = 2^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dim {
    n_qubits: u32,
}

impl Dim {
    pub fn new(n_qubits: u32) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::domain("at least one qubit is required"));
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::size("qubit count", n_qubits, MAX_QUBITS));
        }
        Ok(Dim { n_qubits })
    }

    /// Dimension from `d`, which must be a power of two `≥ 2`.
    pub fn from_d(d: usize) -> Result<Self> {
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::domain("dimension must be a power of two >= 2"));
        }
        Dim::new(d.trailing_zeros())
    }

    pub fn n_qubits(self) -> u32 {
        self.n_qubits
    }

    /// `d = 2^N`.
    pub fn d(self) -> usize {
        1usize << self.n_qubits
    }

    /// Side length of operators on `H ⊗ H`, i.e. `d²`.
    pub fn pair_dim(self) -> usize {
        self.d() * self.d()
    }

    /// Number of unordered index pairs `i > j`, i.e. `d(d-1)/2`.
    pub fn n_pairs(self) -> usize {
        self.d() * (self.d() - 1) / 2
    }
}

/// Dense square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Operator {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Operator::zeros(dim);
        for i in 0..dim {
            op.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        op
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Operator { dim, data }
    }

    /// Builds an operator from row-major entries.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Operator { dim, data })
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut op = Operator::zeros(diag.len());
        for (i, &z) in diag.iter().enumerate() {
            op.data[i * diag.len() + i] = z;
        }
        op
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Result<Self> {
        if ket.len() != bra.len() {
            return Err(Error::DimensionMismatch {
                expected: ket.len(),
                found: bra.len(),
            });
        }
        Ok(Operator::from_fn(ket.len(), |r, c| ket[r] * bra[c].conj()))
    }

    /// The matrix unit `|row⟩⟨col|`.
    pub fn unit(dim: usize, row: usize, col: usize) -> Self {
        let mut op = Operator::zeros(dim);
        op.data[row * dim + col] = C64::new(1.0, 0.0);
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn dagger(&self) -> Operator {
        Operator::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Operator {
        Operator::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Operator {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: C64, other: &Operator) {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for r in 0..n {
            let out_row = &mut out.data[r * n..(r + 1) * n];
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row_k = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(row_k) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `U X U†`.
    pub fn conjugate_by(&self, u: &Operator) -> Operator {
        u.matmul(self).matmul(&u.dagger())
    }

    /// Hilbert–Schmidt inner product `tr(self† other)`.
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A - A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.dagger().matmul(self).max_abs_diff(&Operator::identity(self.dim))
    }

    /// Traces out the first tensor factor of a `(a·b) × (a·b)` operator,
    /// returning the `b × b` reduced operator.
    pub fn partial_trace_first(&self, a: usize, b: usize) -> Result<Operator> {
        if a * b != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a * b,
            });
        }
        Ok(Operator::from_fn(b, |r, c| {
            (0..a).map(|k| self[(k * b + r, k * b + c)]).sum()
        }))
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product: entry `(i·b+k, j·b+l)` is `a[i,j]·b[k,l]`.
pub fn tensor_product(a: &Operator, b: &Operator) -> Result<Operator> {
    let n = a.dim.saturating_mul(b.dim);
    if n > MAX_OPERATOR_DIM {
        return Err(Error::size(
            "tensor product dimension",
            n as u128,
            MAX_OPERATOR_DIM as u128,
        ));
    }
    let bd = b.dim;
    let mut out = Operator::zeros(n);
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..bd {
                for l in 0..bd {
                    out[(i * bd + k, j * bd + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// `H^{⊗N}`: entries `(-1)^{popcount(i & α)} / √d`.
pub fn walsh_hadamard(dim: Dim) -> Operator {
    let d = dim.d();
    let norm = 1.0 / math::sqrt(d as f64);
    Operator::from_fn(d, |i, a| {
        let sign = if (i & a).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        C64::new(sign * norm, 0.0)
    })
}

/// In-place unnormalised fast Walsh–Hadamard transform on a strided vector.
fn fwht_strided(data: &mut [C64], offset: usize, stride: usize, len: usize) {
    let mut h = 1;
    while h < len {
        let mut start = 0;
        while start < len {
            for k in start..start + h {
                let x = data[offset + k * stride];
                let y = data[offset + (k + h) * stride];
                data[offset + k * stride] = x + y;
                data[offset + (k + h) * stride] = x - y;
            }
            start += 2 * h;
        }
        h *= 2;
    }
}

/// `W X W` with `W = H^{⊗n}` and `n = log2(dim)`, via fast transforms on
/// rows and columns. For an operator on `H ⊗ H` this is conjugation by
/// `H^{⊗N} ⊗ H^{⊗N}`.
pub fn walsh_conjugate(x: &Operator) -> Operator {
    let n = x.dim;
    assert!(n.is_power_of_two(), "walsh_conjugate needs a power-of-two dimension");
    let mut data = x.data.clone();
    for c in 0..n {
        fwht_strided(&mut data, c, n, n);
    }
    for r in 0..n {
        fwht_strided(&mut data, r * n, 1, n);
    }
    let norm = 1.0 / n as f64;
    for z in data.iter_mut() {
        *z *= norm;
    }
    Operator { dim: n, data }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Only the Hermitian part `(A + A†)/2` is used.
pub fn hermitian_eigenvalues(a: &Operator) -> Result<Vec<f64>> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.dim;
    let mut m = Operator::from_fn(n, |r, c| (a[(r, c)] + a[(c, r)].conj()) * 0.5);
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let scale = m.frobenius_sq();
    let threshold = scale * 1e-32;

    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].norm_sqr())
            .sum();
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

/// One Jacobi rotation zeroing `m[p,q]`.
fn rotate(m: &mut Operator, p: usize, q: usize) {
    let z = m[(p, q)];
    let r = z.norm();
    if r == 0.0 {
        return;
    }
    let n = m.dim;
    let u = z / r;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + math::sqrt(theta * theta + 1.0))
    } else {
        -1.0 / (-theta + math::sqrt(theta * theta + 1.0))
    };
    let c = 1.0 / math::sqrt(t * t + 1.0);
    let s = t * c;
    // Q = diag(1, ū) · [[c, s], [-s, c]] restricted to the (p, q) plane.
    let q_pp = C64::new(c, 0.0);
    let q_pq = C64::new(s, 0.0);
    let q_qp = -u.conj() * s;
    let q_qq = u.conj() * c;
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * q_pp + akq * q_qp;
        m[(k, q)] = akp * q_pq + akq * q_qq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = q_pp.conj() * apk + q_qp.conj() * aqk;
        m[(q, k)] = q_pq.conj() * apk + q_qq.conj() * aqk;
    }
    m[(p, q)] = C64::new(0.0, 0.0);
    m[(q, p)] = C64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
}

/// Tolerance on `max |A - A†|` below which [`trace_norm`] treats its input
/// as Hermitian.
pub const HERMITIAN_PATH_TOL: f64 = 1e-10;

/// Sum of singular values. Hermitian inputs use `Σ|λ|`; anything else goes
/// through the eigenvalues of `A†A`.
pub fn trace_norm(a: &Operator) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if a.hermiticity_defect() <= HERMITIAN_PATH_TOL {
        Ok(hermitian_eigenvalues(a)?.iter().map(|l| l.abs()).sum())
    } else {
        let gram = a.dagger().matmul(a);
        Ok(hermitian_eigenvalues(&gram)?
            .iter()
            .map(|&l| math::sqrt(l.max(0.0)))
            .sum())
    }
}
