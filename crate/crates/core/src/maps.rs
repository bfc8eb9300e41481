//! Second-moment (two-copy twirl) superoperators.
//!
//! A [`MomentMap`] is a linear map on operators over `H ⊗ H`, stored as a
//! closure over precomputed constants so application works well beyond the
//! sizes where its `d⁴ × d⁴` matrix could be materialised.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::basis::{pair_unit, to_pair_basis, PairBasisIndex, PairWeights};
use crate::coeffs::{f_coeff, inverse_power, p_ell_exact, q_ell_exact, to_f64};
use crate::error::{Error, Result};
use crate::linalg::{walsh_conjugate, Dim, Operator, C64};
use crate::math;

type ApplyFn = dyn Fn(&Operator) -> Operator + Send + Sync;

/// A labelled linear map `X ↦ apply(X)` on `d² × d²` operators.
#[derive(Clone)]
pub struct MomentMap {
    dim: Dim,
    label: String,
    apply: Arc<ApplyFn>,
}

impl fmt::Debug for MomentMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentMap")
            .field("d", &self.dim.d())
            .field("label", &self.label)
            .finish()
    }
}

impl MomentMap {
    pub fn new(
        dim: Dim,
        label: impl Into<String>,
        apply: impl Fn(&Operator) -> Operator + Send + Sync + 'static,
    ) -> Self {
        MomentMap {
            dim,
            label: label.into(),
            apply: Arc::new(apply),
        }
    }

    pub fn identity(dim: Dim) -> Self {
        MomentMap::new(dim, "id", |x| x.clone())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        let expected = self.dim.pair_dim();
        if x.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: x.dim(),
            });
        }
        Ok((self.apply)(x))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MomentMap) -> MomentMap {
        assert_eq!(self.dim, inner.dim, "composing maps of different dimension");
        let outer = self.apply.clone();
        let first = inner.apply.clone();
        MomentMap {
            dim: self.dim,
            label: format!("{}∘{}", self.label, inner.label),
            apply: Arc::new(move |x| outer(&first(x))),
        }
    }

    /// `self` composed with itself `times` times (`times = 0` is the identity).
    pub fn power(&self, times: u32) -> MomentMap {
        let inner = self.apply.clone();
        MomentMap {
            dim: self.dim,
            label: format!("({})^{}", self.label, times),
            apply: Arc::new(move |x| {
                let mut y = x.clone();
                for _ in 0..times {
                    y = inner(&y);
                }
                y
            }),
        }
    }

    /// `Σ_k w_k · map_k`.
    pub fn linear_combination(dim: Dim, label: impl Into<String>, terms: Vec<(f64, MomentMap)>) -> Self {
        assert!(
            terms.iter().all(|(_, m)| m.dim == dim),
            "dimension mismatch in combination"
        );
        MomentMap::new(dim, label, move |x| {
            let mut out = Operator::zeros(x.dim());
            for (w, m) in &terms {
                out.add_scaled(C64::new(*w, 0.0), &(m.apply)(x));
            }
            out
        })
    }

    /// `X ↦ (U ⊗ U) X (U ⊗ U)†` for a fixed `d × d` unitary `U`.
    pub fn unitary_conjugation(dim: Dim, label: impl Into<String>, u: &Operator) -> Result<Self> {
        if u.dim() != dim.d() {
            return Err(Error::DimensionMismatch {
                expected: dim.d(),
                found: u.dim(),
            });
        }
        let uu = crate::linalg::tensor_product(u, u)?;
        let uu_dag = uu.dagger();
        Ok(MomentMap::new(dim, label, move |x| uu.matmul(x).matmul(&uu_dag)))
    }

    /// Conjugation by `H^{⊗N} ⊗ H^{⊗N}`.
    pub fn hadamard_conjugation(dim: Dim) -> Self {
        MomentMap::new(dim, "W", walsh_conjugate)
    }

    /// Entrywise (Schur) multiplication by a fixed `d² × d²` tensor, which is
    /// the two-copy twirl of any ensemble of diagonal unitaries.
    pub fn schur_multiplier(dim: Dim, label: impl Into<String>, tensor: Vec<C64>) -> Result<Self> {
        let n = dim.pair_dim() * dim.pair_dim();
        if tensor.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: tensor.len(),
            });
        }
        Ok(MomentMap::new(dim, label, move |x| {
            let data = x.as_slice().iter().zip(&tensor).map(|(a, t)| a * t).collect();
            Operator::from_row_major(x.dim(), data).expect("same size")
        }))
    }
}

/// True when the multisets `{i, j}` and `{k, l}` coincide.
#[inline]
pub fn same_multiset(i: usize, j: usize, k: usize, l: usize) -> bool {
    (i == k && j == l) || (i == l && j == k)
}

/// Twirl by a uniformly random Z-diagonal unitary: `|ij⟩⟨kl|` survives iff
/// `{i, j} = {k, l}`.
pub fn g_z_exact(dim: Dim) -> MomentMap {
    let d = dim.d();
    MomentMap::new(dim, "G_Z", move |x| {
        let mut out = Operator::zeros(x.dim());
        for i in 0..d {
            for j in 0..d {
                let r = i * d + j;
                out[(r, r)] = x[(r, r)];
                if i != j {
                    let c = j * d + i;
                    out[(r, c)] = x[(r, c)];
                }
            }
        }
        out
    })
}

/// Twirl by a random X-diagonal unitary: `G_Z` conjugated by Hadamards.
pub fn g_x_exact(dim: Dim) -> MomentMap {
    let gz = g_z_exact(dim);
    MomentMap::new(dim, "G_X", move |x| walsh_conjugate(&(gz.apply)(&walsh_conjugate(x))))
}

/// Haar twirl: `tr(P^sym X) Π^sym + tr(P^anti X) Π^anti`.
pub fn g_haar(dim: Dim) -> MomentMap {
    let d = dim.d();
    let df = d as f64;
    MomentMap::new(dim, "G_Haar", move |x| {
        let tr = x.trace();
        let mut tr_swap = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                tr_swap += x[(j * d + i, i * d + j)];
            }
        }
        let sym = (tr + tr_swap) * 0.5;
        let anti = (tr - tr_swap) * 0.5;
        // Π^sym = (𝕀+𝔽)/d(d+1), Π^anti = (𝕀-𝔽)/d(d-1)
        let s = sym / (df * (df + 1.0));
        let a = anti / (df * (df - 1.0));
        identity_swap_combination(dim, s + a, s - a)
    })
}

/// `α 𝕀 + β 𝔽` on `H ⊗ H`.
fn identity_swap_combination(dim: Dim, alpha: C64, beta: C64) -> Operator {
    let d = dim.d();
    let mut out = Operator::zeros(dim.pair_dim());
    for i in 0..d {
        for j in 0..d {
            out[(i * d + j, i * d + j)] += alpha;
            out[(i * d + j, j * d + i)] += beta;
        }
    }
    out
}

/// `R = G_Z ∘ G_X ∘ G_Z`.
pub fn r_map(dim: Dim) -> MomentMap {
    let r = g_z_exact(dim).compose(&g_x_exact(dim)).compose(&g_z_exact(dim));
    MomentMap { label: "R".into(), ..r }
}

/// Sparse `f` table in the form the kernels consume: for each row, the
/// supporting columns. All nonzero values equal `2/d`.
#[derive(Debug, Clone)]
struct FKernel {
    supports: Vec<Vec<usize>>,
    value: f64,
}

impl FKernel {
    fn new(dim: Dim) -> Result<Self> {
        let table = f_coeff(dim)?;
        let supports = table.supports();
        // Every nonzero entry is 2/d; keep the literal value as a guard.
        let value = supports
            .iter()
            .enumerate()
            .find_map(|(r, s)| s.first().map(|&c| table.get_f64(r, c)))
            .unwrap_or(0.0);
        Ok(FKernel { supports, value })
    }

    /// `out_kl += scale · Σ_{ij} f^{ij}_{kl} w_ij`.
    fn spread(&self, weights: &[C64], scale: f64, out: &mut [C64]) {
        for (row, support) in self.supports.iter().enumerate() {
            let w = weights[row] * (scale * self.value);
            for &col in support {
                out[col] += w;
            }
        }
    }
}

/// Scalars that define `R^ℓ` on pair-basis projectors.
#[derive(Debug, Clone, Copy)]
struct RPowCoeffs {
    inv_d_l: f64,
    inv_d_2l: f64,
    p: f64,
    q: f64,
}

impl RPowCoeffs {
    fn new(dim: Dim, ell: u32) -> Result<Self> {
        Ok(RPowCoeffs {
            inv_d_l: to_f64(&inverse_power(dim, ell)?),
            inv_d_2l: to_f64(&inverse_power(dim, 2 * ell)?),
            p: to_f64(&p_ell_exact(dim, ell)?),
            q: to_f64(&q_ell_exact(dim, ell)?),
        })
    }
}

/// Closed form of `R^ℓ`.
///
/// The input is expanded in pair-basis matrix units. Off-diagonal units are
/// annihilated; diagonal units map as
///
/// - `|ii⟩⟨ii| ↦ (1 - d^{-2ℓ}) Π^sym + d^{-2ℓ} Λ⁽⁰⁾`
/// - `|φ⁺_ij⟩⟨φ⁺_ij| ↦ (1 - p_ℓ) Π^sym + q_ℓ Λ⁽⁰⁾ + d^{-ℓ} Σ f^{ij}_{kl} |φ⁺_kl⟩⟨φ⁺_kl|`
/// - `|φ⁻_ij⟩⟨φ⁻_ij| ↦ (1 - d^{-ℓ}) Π^anti + d^{-ℓ} Σ f^{ij}_{kl} |φ⁻_kl⟩⟨φ⁻_kl|`
pub fn r_pow_closed(dim: Dim, ell: u32) -> Result<MomentMap> {
    let k = RPowCoeffs::new(dim, ell)?;
    let f = FKernel::new(dim)?;
    let df = dim.d() as f64;
    let pi_sym_w = 2.0 / (df * (df + 1.0));
    let pi_anti_w = 2.0 / (df * (df - 1.0));
    Ok(MomentMap::new(dim, format!("R^{ell}"), move |x| {
        let w = PairWeights::of(x, dim);
        let mut out = PairWeights::zeros(dim);
        let mut c_sym = C64::new(0.0, 0.0);
        let mut c_lam = C64::new(0.0, 0.0);
        let mut c_anti = C64::new(0.0, 0.0);
        for &z in &w.diag {
            c_sym += z * (1.0 - k.inv_d_2l);
            c_lam += z * k.inv_d_2l;
        }
        for &z in &w.sym {
            c_sym += z * (1.0 - k.p);
            c_lam += z * k.q;
        }
        for &z in &w.anti {
            c_anti += z * (1.0 - k.inv_d_l);
        }
        f.spread(&w.sym, k.inv_d_l, &mut out.sym);
        f.spread(&w.anti, k.inv_d_l, &mut out.anti);
        // Π^sym has weight 2/d(d+1) on every |ii⟩ and |φ⁺⟩; Λ⁽⁰⁾ has 1/d on |ii⟩.
        for z in out.diag.iter_mut() {
            *z += c_sym * pi_sym_w + c_lam / df;
        }
        for z in out.sym.iter_mut() {
            *z += c_sym * pi_sym_w;
        }
        for z in out.anti.iter_mut() {
            *z += c_anti * pi_anti_w;
        }
        out.to_operator(dim)
    }))
}

/// The remainder channel `C^(ℓ)` in `R^ℓ = (1 - p_ℓ) G_Haar + p_ℓ C^(ℓ)`.
///
/// With `D = d^{ℓ+1} + d^ℓ - 2`, `ρ₀ = tr ρ𝕃⁽⁰⁾`, `ρ₁ = tr ρ𝕃⁽¹⁾`,
/// `ρ₂ = tr ρP^anti`:
///
/// `D · C(ρ) = ((2d^ℓ+d-3)ρ₀ + 2(d^ℓ-1)ρ₁) Λ⁽⁰⁾ + (d-1)(d^ℓ-1)ρ₀ Λ̂⁽¹⁾
///            + 2(d^ℓ-1)ρ₂ Π^anti + d^ℓ(d-1) Σ f^{ij}_{kl} Σ_± ⟨φ^±_ij|ρ|φ^±_ij⟩ |φ^±_kl⟩⟨φ^±_kl|`
///
/// where `Λ̂⁽¹⁾ = 2𝕃⁽¹⁾/d(d-1)` is the unit-trace symmetric off-diagonal
/// state. (`Λ̂⁽¹⁾` differs from `Λ⁽¹⁾ = 𝕃⁽¹⁾/d` by the factor `2/(d-1)`;
/// only the unit-trace normalisation makes the map trace preserving.)
pub fn c_ell_map(dim: Dim, ell: u32) -> Result<MomentMap> {
    if ell == 0 {
        return Err(Error::domain("repetition count ell must be at least 1"));
    }
    let f = FKernel::new(dim)?;
    let df = dim.d() as f64;
    let dl = math::powi(df, ell);
    let denom = dl * df + dl - 2.0;
    let lam0_rho0 = (2.0 * dl + df - 3.0) / denom;
    let lam0_rho1 = 2.0 * (dl - 1.0) / denom;
    let lam1_rho0 = (df - 1.0) * (dl - 1.0) / denom;
    let anti_rho2 = 2.0 * (dl - 1.0) / denom;
    let f_weight = dl * (df - 1.0) / denom;
    let lam1_hat_w = 2.0 / (df * (df - 1.0));
    let pi_anti_w = 2.0 / (df * (df - 1.0));
    Ok(MomentMap::new(dim, format!("C^({ell})"), move |x| {
        let w = PairWeights::of(x, dim);
        let (rho0, rho1, rho2) = w.traces();
        let mut out = PairWeights::zeros(dim);
        f.spread(&w.sym, f_weight, &mut out.sym);
        f.spread(&w.anti, f_weight, &mut out.anti);
        let lam0 = (rho0 * lam0_rho0 + rho1 * lam0_rho1) / df;
        for z in out.diag.iter_mut() {
            *z += lam0;
        }
        let lam1 = rho0 * (lam1_rho0 * lam1_hat_w);
        for z in out.sym.iter_mut() {
            *z += lam1;
        }
        let anti = rho2 * (anti_rho2 * pi_anti_w);
        for z in out.anti.iter_mut() {
            *z += anti;
        }
        out.to_operator(dim)
    }))
}

/// Largest `D = d²` accepted by [`choi`].
pub const CHOI_MAX_PAIR_DIM: usize = 64;

/// `(Φ ⊗ id)(|Φ⟩⟨Φ|)` with `|Φ⟩ = Σ_a |aa⟩/√D` on `(H⊗H) ⊗ (H⊗H)`. The
/// first factor is the map's output.
pub fn choi(map: &MomentMap) -> Result<Operator> {
    let dd = map.dim().pair_dim();
    if dd > CHOI_MAX_PAIR_DIM {
        return Err(Error::size(
            "Choi input dimension d²",
            dd as u128,
            CHOI_MAX_PAIR_DIM as u128,
        ));
    }
    let n = dd * dd;
    let mut j = Operator::zeros(n);
    let norm = 1.0 / dd as f64;
    for a in 0..dd {
        for b in 0..dd {
            let y = map.apply(&Operator::unit(dd, a, b))?;
            for r in 0..dd {
                for c in 0..dd {
                    j[(r * dd + a, c * dd + b)] = y[(r, c)] * norm;
                }
            }
        }
    }
    Ok(j)
}

/// `max |tr_out J - 𝕀/D|` for a Choi matrix from [`choi`].
pub fn choi_tp_deviation(j: &Operator, pair_dim: usize) -> Result<f64> {
    let reduced = j.partial_trace_first(pair_dim, pair_dim)?;
    let target = Operator::identity(pair_dim).scale_real(1.0 / pair_dim as f64);
    Ok(reduced.max_abs_diff(&target))
}

/// `max |tr map(|a⟩⟨b|) - δ_ab|` over product matrix units; the same
/// quantity as the partial-trace test on the Choi matrix (up to the factor
/// `1/d²`), but streamed so it runs without forming the Choi matrix.
pub fn trace_preservation_deviation(map: &MomentMap) -> Result<f64> {
    let dd = map.dim().pair_dim();
    let mut worst: f64 = 0.0;
    for a in 0..dd {
        for b in 0..dd {
            let t = map.apply(&Operator::unit(dd, a, b))?.trace();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((t - C64::new(target, 0.0)).norm());
        }
    }
    Ok(worst)
}

/// Largest `D = d²` for which [`choi_min_eigenvalue`] runs a dense eigensolve.
pub const CHOI_EIGEN_MAX_PAIR_DIM: usize = 16;

/// Smallest eigenvalue of the Choi matrix (dense Hermitian eigensolve).
pub fn choi_min_eigenvalue(map: &MomentMap) -> Result<f64> {
    let dd = map.dim().pair_dim();
    if dd > CHOI_EIGEN_MAX_PAIR_DIM {
        return Err(Error::size(
            "Choi eigensolve dimension d²",
            dd as u128,
            CHOI_EIGEN_MAX_PAIR_DIM as u128,
        ));
    }
    let j = choi(map)?;
    let eig = crate::linalg::hermitian_eigenvalues(&j)?;
    Ok(eig[0])
}

/// Gershgorin lower bound on the smallest Choi eigenvalue, evaluated with the
/// Choi matrix expressed in the product of pair bases (where Choi matrices of
/// pair-diagonal maps are diagonal, making the bound tight). Streams over
/// pair-basis matrix units, so it also runs at `D = 64`.
pub fn choi_gershgorin_bound(map: &MomentMap) -> Result<f64> {
    let dim = map.dim();
    let dd = dim.pair_dim();
    if dd > CHOI_MAX_PAIR_DIM {
        return Err(Error::size(
            "Choi input dimension d²",
            dd as u128,
            CHOI_MAX_PAIR_DIM as u128,
        ));
    }
    let d = dim.d();
    let norm = 1.0 / dd as f64;
    // Row (p, q) of J in the B⊗B basis collects ⟨p|map(|q⟩⟨q'|)|p'⟩ / D.
    let mut diag = alloc::vec![0.0f64; dd * dd];
    let mut off = alloc::vec![0.0f64; dd * dd];
    for q in 0..dd {
        let qi = PairBasisIndex::from_position(d, q);
        for q2 in 0..dd {
            let q2i = PairBasisIndex::from_position(d, q2);
            let y = to_pair_basis(&map.apply(&pair_unit(dim, qi, q2i))?, dim);
            for p in 0..dd {
                for p2 in 0..dd {
                    let v = y[(p, p2)] * norm;
                    if p == p2 && q == q2 {
                        diag[p * dd + q] = v.re;
                    } else {
                        off[p * dd + q] += v.norm();
                    }
                }
            }
        }
    }
    Ok(diag.iter().zip(&off).map(|(a, r)| a - r).fold(f64::INFINITY, f64::min))
}

/// Matrix-unit basis used to write a map as a `d⁴ × d⁴` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitBasis {
    /// `|ij⟩⟨kl|` in the two-copy product basis.
    Product,
    /// `|p⟩⟨q|` with `p, q` in the pair basis (frozen order).
    Pair,
}

/// Largest `d` for which [`moment_matrix`] is materialised.
pub const MOMENT_MATRIX_MAX_D: usize = 8;

fn check_moment_envelope(dim: Dim) -> Result<()> {
    if dim.d() > MOMENT_MATRIX_MAX_D {
        return Err(Error::size(
            "moment matrix d",
            dim.d() as u128,
            MOMENT_MATRIX_MAX_D as u128,
        ));
    }
    Ok(())
}

/// Column `col = p·d² + q` of the superoperator matrix: the vectorised image
/// of the matrix unit `|p⟩⟨q|`, written in the same basis.
pub fn moment_matrix_column(map: &MomentMap, basis: UnitBasis, col: usize) -> Result<Vec<C64>> {
    let dim = map.dim();
    let dd = dim.pair_dim();
    let (p, q) = (col / dd, col % dd);
    match basis {
        UnitBasis::Product => Ok(map.apply(&Operator::unit(dd, p, q))?.into_vec()),
        UnitBasis::Pair => {
            let d = dim.d();
            let unit = pair_unit(
                dim,
                PairBasisIndex::from_position(d, p),
                PairBasisIndex::from_position(d, q),
            );
            Ok(to_pair_basis(&map.apply(&unit)?, dim).into_vec())
        }
    }
}

/// Superoperator matrix in the given matrix-unit basis.
pub fn moment_matrix_in(map: &MomentMap, basis: UnitBasis) -> Result<Operator> {
    check_moment_envelope(map.dim())?;
    let n = map.dim().pair_dim() * map.dim().pair_dim();
    let mut m = Operator::zeros(n);
    for col in 0..n {
        for (row, z) in moment_matrix_column(map, basis, col)?.into_iter().enumerate() {
            m[(row, col)] = z;
        }
    }
    Ok(m)
}

/// Superoperator matrix in the pair-basis matrix-unit basis.
pub fn moment_matrix(map: &MomentMap) -> Result<Operator> {
    moment_matrix_in(map, UnitBasis::Pair)
}

/// `max |M_a - M_b|` over all matrix entries, streamed column by column.
pub fn max_map_difference(a: &MomentMap, b: &MomentMap, basis: UnitBasis) -> Result<f64> {
    check_moment_envelope(a.dim())?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim().d(),
            found: b.dim().d(),
        });
    }
    let n = a.dim().pair_dim() * a.dim().pair_dim();
    let mut worst: f64 = 0.0;
    for col in 0..n {
        worst = worst.max(column_difference(a, b, basis, col)?);
    }
    Ok(worst)
}

/// Largest entry difference in one column of two superoperator matrices.
pub fn column_difference(a: &MomentMap, b: &MomentMap, basis: UnitBasis, col: usize) -> Result<f64> {
    let ca = moment_matrix_column(a, basis, col)?;
    let cb = moment_matrix_column(b, basis, col)?;
    Ok(ca.iter().zip(&cb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

/// `X ↦ R(X)` for every off-diagonal pair-basis unit `|p⟩⟨q|`, `p ≠ q`:
/// returns the largest output entry.
pub fn off_diagonal_leakage(map: &MomentMap) -> Result<f64> {
    let dim = map.dim();
    let d = dim.d();
    let dd = dim.pair_dim();
    let mut worst: f64 = 0.0;
    for p in 0..dd {
        for q in 0..dd {
            if p == q {
                continue;
            }
            let unit = pair_unit(
                dim,
                PairBasisIndex::from_position(d, p),
                PairBasisIndex::from_position(d, q),
            );
            worst = worst.max(map.apply(&unit)?.max_abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{canonical_ops, pair_index};
    use crate::linalg::walsh_hadamard;

    fn dim(n: u32) -> Dim {
        Dim::new(n).unwrap()
    }

    fn ket(d: usize, i: usize, j: usize) -> usize {
        i * d + j
    }

    #[test]
    fn g_z_matrix_units() {
        let dm = dim(2);
        let gz = g_z_exact(dm);
        // |01⟩⟨10| survives
        let u = Operator::unit(16, ket(4, 0, 1), ket(4, 1, 0));
        assert_eq!(gz.apply(&u).unwrap(), u);
        // |01⟩⟨02| is killed
        let u = Operator::unit(16, ket(4, 0, 1), ket(4, 0, 2));
        assert_eq!(gz.apply(&u).unwrap().max_abs(), 0.0);
        let id = Operator::identity(16);
        assert_eq!(gz.apply(&id).unwrap(), id);
    }

    #[test]
    fn dimension_is_checked() {
        let err = g_z_exact(dim(2)).apply(&Operator::identity(4)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 16, found: 4 });
    }

    #[test]
    fn g_x_on_diagonal_state() {
        // G_X(|ii⟩⟨ii|) = (𝕀 + 𝔽 - 𝕃_X)/d², 𝕃_X = Σ_α |αα⟩⟨αα|.
        let dm = dim(2);
        let d = 4;
        let ops = canonical_ops(dm);
        let w = walsh_hadamard(dm);
        let mut lx = Operator::zeros(16);
        for a in 0..d {
            let col: Vec<C64> = (0..d).map(|i| w[(i, a)]).collect();
            let mut aa = alloc::vec![C64::new(0.0, 0.0); 16];
            for i in 0..d {
                for j in 0..d {
                    aa[i * d + j] = col[i] * col[j];
                }
            }
            lx.add_scaled(C64::new(1.0, 0.0), &Operator::outer(&aa, &aa).unwrap());
        }
        let expect = (&(&ops.identity2 + &ops.swap) - &lx).scale_real(1.0 / 16.0);
        for i in 0..d {
            let x = Operator::unit(16, ket(d, i, i), ket(d, i, i));
            assert!(g_x_exact(dm).apply(&x).unwrap().max_abs_diff(&expect) < 1e-14);
        }
    }

    #[test]
    fn g_haar_examples() {
        let dm = dim(2);
        let ops = canonical_ops(dm);
        let h = g_haar(dm);
        let x = Operator::unit(16, 0, 0);
        assert!(h.apply(&x).unwrap().max_abs_diff(&ops.pi_sym) < 1e-15);
        assert!(h.apply(&ops.pi_anti).unwrap().max_abs_diff(&ops.pi_anti) < 1e-15);
        let mixed = Operator::identity(16).scale_real(1.0 / 16.0);
        assert!(h.apply(&mixed).unwrap().max_abs_diff(&mixed) < 1e-15);
    }

    #[test]
    fn r_on_diagonal_units() {
        // R(|ii⟩⟨kk|) = δ_ik (1/d²)[(1 - 1/d)(𝕀 + 𝔽) + (1/d) 𝕃⁽⁰⁾]
        for n in 1..=3 {
            let dm = dim(n);
            let d = dm.d();
            let df = d as f64;
            let ops = canonical_ops(dm);
            let mut expect = (&ops.identity2 + &ops.swap).scale_real(1.0 - 1.0 / df);
            expect.add_scaled(C64::new(1.0 / df, 0.0), &ops.l0);
            let expect = expect.scale_real(1.0 / (df * df));
            let r = r_map(dm);
            for i in 0..d {
                for k in 0..d {
                    let x = Operator::unit(d * d, ket(d, i, i), ket(d, k, k));
                    let y = r.apply(&x).unwrap();
                    if i == k {
                        assert!(y.max_abs_diff(&expect) < 1e-13);
                    } else {
                        assert!(y.max_abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn r_kills_sym_anti_coherence() {
        let dm = dim(2);
        let u = pair_unit(dm, PairBasisIndex::Sym(1, 0), PairBasisIndex::Anti(1, 0));
        assert!(r_map(dm).apply(&u).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn closed_form_anti_example_d4() {
        let dm = dim(2);
        let ops = canonical_ops(dm);
        let x = pair_unit(dm, PairBasisIndex::Anti(1, 0), PairBasisIndex::Anti(1, 0));
        let mut expect = ops.pi_anti.scale_real(0.75);
        for (i, j) in [(1, 0), (3, 2)] {
            expect.add_scaled(
                C64::new(0.125, 0.0),
                &pair_unit(dm, PairBasisIndex::Anti(i, j), PairBasisIndex::Anti(i, j)),
            );
        }
        let closed = r_pow_closed(dm, 1).unwrap().apply(&x).unwrap();
        assert!(closed.max_abs_diff(&expect) < 1e-15);
        let brute = r_map(dm).apply(&x).unwrap();
        assert!(brute.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn closed_form_r2_diag_d2() {
        let dm = dim(1);
        let ops = canonical_ops(dm);
        let eps = 1.0 / 16.0;
        let mut expect = ops.pi_sym.scale_real(1.0 - eps);
        expect.add_scaled(C64::new(eps, 0.0), &ops.lam0);
        for i in 0..2 {
            let x = Operator::unit(4, ket(2, i, i), ket(2, i, i));
            let closed = r_pow_closed(dm, 2).unwrap().apply(&x).unwrap();
            let brute = r_map(dm).power(2).apply(&x).unwrap();
            assert!(closed.max_abs_diff(&expect) < 1e-15);
            assert!(brute.max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn alternative_lambda_reading_fails() {
        // Replacing Λ by Λ⁽⁰⁾ + Λ⁽¹⁾ in the |ii⟩⟨ii| image breaks agreement
        // with the brute-force composition.
        let dm = dim(2);
        let ops = canonical_ops(dm);
        let x = Operator::unit(16, 0, 0);
        let brute = r_map(dm).apply(&x).unwrap();
        let mut alt = ops.pi_sym.scale_real(1.0 - 1.0 / 16.0);
        alt.add_scaled(C64::new(1.0 / 16.0, 0.0), &(&ops.lam0 + &ops.lam1));
        assert!(brute.max_abs_diff(&alt) > 1e-3);
    }

    #[test]
    fn closed_form_tp_on_diagonal_inputs() {
        let dm = dim(2);
        for ell in 1..=4 {
            let m = r_pow_closed(dm, ell).unwrap();
            for pos in 0..16 {
                let p = PairBasisIndex::from_position(4, pos);
                let y = m.apply(&pair_unit(dm, p, p)).unwrap();
                assert!((y.trace() - C64::new(1.0, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn decomposition_identity_d4() {
        let dm = dim(2);
        for ell in 1..=3 {
            let p = crate::coeffs::p_ell(dm, ell).unwrap();
            let mix = MomentMap::linear_combination(
                dm,
                "mix",
                alloc::vec![(1.0 - p, g_haar(dm)), (p, c_ell_map(dm, ell).unwrap())],
            );
            let diff = max_map_difference(&r_pow_closed(dm, ell).unwrap(), &mix, UnitBasis::Product).unwrap();
            assert!(diff < 1e-12, "ell={ell}: {diff}");
        }
    }

    #[test]
    fn c_ell_unital_and_tp() {
        for n in 1..=3 {
            let dm = dim(n);
            let id = Operator::identity(dm.pair_dim());
            for ell in 1..=3 {
                let c = c_ell_map(dm, ell).unwrap();
                assert!(c.apply(&id).unwrap().max_abs_diff(&id) < 1e-12);
            }
        }
        assert!(matches!(c_ell_map(dim(2), 0), Err(Error::Domain(_))));
        assert!(matches!(r_pow_closed(dim(2), 0), Err(Error::Domain(_))));
    }

    #[test]
    fn choi_of_identity_is_max_entangled() {
        let dm = dim(1);
        let j = choi(&MomentMap::identity(dm)).unwrap();
        let phi = crate::basis::max_entangled(4);
        assert!(j.max_abs_diff(&Operator::outer(&phi, &phi).unwrap()) < 1e-15);
        assert!((j.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_preservation_streamed() {
        let dm = dim(2);
        assert!(trace_preservation_deviation(&c_ell_map(dm, 2).unwrap()).unwrap() < 1e-13);
        let doubled = MomentMap::new(dm, "2id", |x| x.scale_real(2.0));
        assert!((trace_preservation_deviation(&doubled).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn choi_envelope() {
        assert!(choi(&MomentMap::identity(dim(4))).unwrap_err().is_size_error());
        assert!(choi_min_eigenvalue(&MomentMap::identity(dim(3)))
            .unwrap_err()
            .is_size_error());
    }

    #[test]
    fn gershgorin_matches_eigensolve_for_c_ell() {
        let dm = dim(2);
        let c = c_ell_map(dm, 1).unwrap();
        let exact = choi_min_eigenvalue(&c).unwrap();
        let bound = choi_gershgorin_bound(&c).unwrap();
        assert!(bound <= exact + 1e-12);
        assert!((bound - exact).abs() < 1e-12, "{bound} vs {exact}");
    }

    #[test]
    fn moment_matrix_of_identity() {
        let m = moment_matrix(&MomentMap::identity(dim(1))).unwrap();
        assert!(m.max_abs_diff(&Operator::identity(16)) < 1e-15);
    }

    #[test]
    fn g_z_matrix_is_zero_one_diagonal() {
        let dm = dim(2);
        for basis in [UnitBasis::Product, UnitBasis::Pair] {
            let m = moment_matrix_in(&g_z_exact(dm), basis).unwrap();
            for r in 0..256 {
                for c in 0..256 {
                    let z = m[(r, c)];
                    if r == c {
                        assert!(z.norm() < 1e-15 || (z - C64::new(1.0, 0.0)).norm() < 1e-15);
                    } else {
                        assert!(z.norm() < 1e-15, "{basis:?} ({r},{c})");
                    }
                }
            }
        }
    }

    #[test]
    fn moment_matrix_power_matches_closed_form() {
        let dm = dim(2);
        let m = moment_matrix(&r_map(dm)).unwrap();
        let m3 = m.matmul(&m).matmul(&m);
        let closed = moment_matrix(&r_pow_closed(dm, 3).unwrap()).unwrap();
        assert!(m3.max_abs_diff(&closed) < 1e-10);
    }

    #[test]
    fn moment_matrix_envelope() {
        assert!(moment_matrix(&MomentMap::identity(dim(4))).unwrap_err().is_size_error());
    }

    #[test]
    fn pair_index_is_consistent_with_weights() {
        let dm = dim(2);
        let x = pair_unit(dm, PairBasisIndex::Sym(3, 1), PairBasisIndex::Sym(3, 1));
        let w = PairWeights::of(&x, dm);
        assert!((w.sym[pair_index(3, 1)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
