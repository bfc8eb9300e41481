//! Exact rational coefficient algebra.
//!
//! The overlap table `f^{ij}_{kl} = (2/d³)(Σ_α α_i α_j α_k α_l)²`, the
//! repetition coefficients `p_ℓ`, `q_ℓ`, and the coefficients of `R^ℓ` on
//! the symmetric and antisymmetric sectors are all finite rationals. They
//! are computed exactly and only converted to `f64` at the operator level.

use alloc::vec::Vec;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, ToPrimitive, Zero};

use crate::basis::pairs;
use crate::error::{Error, Result};
use crate::linalg::{walsh_hadamard, Dim};
use crate::math;

/// Exact rational used for `p_ℓ`, `q_ℓ` and the recurrences.
pub type Rational = Ratio<i128>;

/// Largest qubit count for which the `f` table is materialised.
pub const F_TABLE_MAX_QUBITS: u32 = 6;

/// `f^{ij}_{kl}` for all pairs `i > j`, `k > l`, indexed by
/// [`pair_index`](crate::basis::pair_index).
#[derive(Debug, Clone, PartialEq)]
pub struct FCoefficientTable {
    d: usize,
    n_pairs: usize,
    values: Vec<Ratio<i64>>,
}

impl FCoefficientTable {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    /// Entry by pair positions.
    pub fn get(&self, row: usize, col: usize) -> Ratio<i64> {
        self.values[row * self.n_pairs + col]
    }

    /// Entry `f^{ij}_{kl}` by indices (requires `i > j`, `k > l`).
    pub fn get_ijkl(&self, i: usize, j: usize, k: usize, l: usize) -> Ratio<i64> {
        use crate::basis::pair_index;
        self.get(pair_index(i, j), pair_index(k, l))
    }

    pub fn get_f64(&self, row: usize, col: usize) -> f64 {
        let v = self.get(row, col);
        *v.numer() as f64 / *v.denom() as f64
    }

    pub fn row(&self, row: usize) -> &[Ratio<i64>] {
        &self.values[row * self.n_pairs..(row + 1) * self.n_pairs]
    }

    /// Pair positions with a nonzero entry in `row` (the class `Ξ_ij`).
    pub fn support(&self, row: usize) -> Vec<usize> {
        self.row(row)
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(k, _)| k)
            .collect()
    }

    /// Supports of every row, used by the map kernels.
    pub fn supports(&self) -> Vec<Vec<usize>> {
        (0..self.n_pairs).map(|r| self.support(r)).collect()
    }

    /// Builds the table from the XOR classification: `f^{ij}_{kl} = 2/d`
    /// iff `i ⊕ j = k ⊕ l`, else 0.
    pub fn from_xor_classes(dim: Dim) -> Result<Self> {
        check_envelope(dim)?;
        let d = dim.d();
        let ps = pairs(d);
        let two_over_d = Ratio::new(2, d as i64);
        let mut values = Vec::with_capacity(ps.len() * ps.len());
        for &(i, j) in &ps {
            for &(k, l) in &ps {
                values.push(if i ^ j == k ^ l { two_over_d } else { Ratio::zero() });
            }
        }
        Ok(FCoefficientTable {
            d,
            n_pairs: ps.len(),
            values,
        })
    }
}

fn check_envelope(dim: Dim) -> Result<()> {
    if dim.n_qubits() > F_TABLE_MAX_QUBITS {
        return Err(Error::size("f-table qubit count", dim.n_qubits(), F_TABLE_MAX_QUBITS));
    }
    Ok(())
}

/// The `f` table by the literal sum over the X basis, with signs
/// `α_i = √d ⟨i|α⟩` read off [`walsh_hadamard`].
pub fn f_coeff(dim: Dim) -> Result<FCoefficientTable> {
    check_envelope(dim)?;
    let d = dim.d();
    let w = walsh_hadamard(dim);
    let sd = math::sqrt(d as f64);
    // signs[i][α]
    let signs: Vec<Vec<i64>> = (0..d)
        .map(|i| (0..d).map(|a| if w[(i, a)].re * sd > 0.0 { 1 } else { -1 }).collect())
        .collect();
    let ps = pairs(d);
    let m = ps.len();
    let products: Vec<Vec<i64>> = ps
        .iter()
        .map(|&(i, j)| (0..d).map(|a| signs[i][a] * signs[j][a]).collect())
        .collect();
    let d3 = (d as i64).pow(3);
    let mut values = alloc::vec![Ratio::zero(); m * m];
    for r in 0..m {
        for c in r..m {
            let s: i64 = products[r].iter().zip(&products[c]).map(|(x, y)| x * y).sum();
            let v = Ratio::new(2 * s * s, d3);
            values[r * m + c] = v;
            values[c * m + r] = v;
        }
    }
    Ok(FCoefficientTable { d, n_pairs: m, values })
}

/// Outcome of the exact checks on an `f` table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FTableReport {
    /// Every entry is 0 or `2/d`.
    pub values_in_set: bool,
    /// `f^{ij}_{kl} = f^{kl}_{ij}`.
    pub symmetric: bool,
    /// `Σ_{k>l} f^{ij}_{kl} = 1` for every row.
    pub row_sums_one: bool,
    /// `Σ_{s>t} f^{ij}_{st} f^{st}_{kl} = f^{ij}_{kl}`.
    pub idempotent: bool,
    /// Every row has exactly `d/2` nonzero entries.
    pub support_size_half_d: bool,
}

impl FTableReport {
    pub fn all_pass(&self) -> bool {
        self.values_in_set && self.symmetric && self.row_sums_one && self.idempotent && self.support_size_half_d
    }
}

/// Runs the exact property checks on `table`.
pub fn f_table_check(table: &FCoefficientTable) -> FTableReport {
    let m = table.n_pairs();
    let two_over_d = Ratio::new(2, table.d() as i64);
    let values_in_set = (0..m)
        .flat_map(|r| table.row(r).iter())
        .all(|v| v.is_zero() || *v == two_over_d);
    let symmetric = (0..m).all(|r| (0..m).all(|c| table.get(r, c) == table.get(c, r)));
    let one = Ratio::new(1, 1);
    let row_sums_one = (0..m).all(|r| table.row(r).iter().fold(Ratio::zero(), |acc, v| acc + v) == one);
    let supports = table.supports();
    let support_size_half_d = supports.iter().all(|s| s.len() == table.d() / 2);
    let idempotent = (0..m).all(|r| {
        (0..m).all(|c| {
            let conv = supports[r]
                .iter()
                .fold(Ratio::zero(), |acc, &s| acc + table.get(r, s) * table.get(s, c));
            conv == table.get(r, c)
        })
    });
    FTableReport {
        values_in_set,
        symmetric,
        row_sums_one,
        idempotent,
        support_size_half_d,
    }
}

fn require_ell(ell: u32) -> Result<()> {
    if ell == 0 {
        return Err(Error::domain("repetition count ell must be at least 1"));
    }
    Ok(())
}

/// Checked-arithmetic helpers; every failure is reported as overflow of `ctx`.
struct Exact {
    ctx: &'static str,
}

impl Exact {
    fn pow(&self, base: i128, exp: u32) -> Result<i128> {
        base.checked_pow(exp).ok_or(Error::Overflow(self.ctx))
    }

    fn mul_i(&self, a: i128, b: i128) -> Result<i128> {
        a.checked_mul(b).ok_or(Error::Overflow(self.ctx))
    }

    fn ratio(&self, numer: i128, denom: i128) -> Rational {
        Ratio::new(numer, denom)
    }

    fn add(&self, a: &Rational, b: &Rational) -> Result<Rational> {
        a.checked_add(b).ok_or(Error::Overflow(self.ctx))
    }

    fn sub(&self, a: &Rational, b: &Rational) -> Result<Rational> {
        a.checked_sub(b).ok_or(Error::Overflow(self.ctx))
    }

    fn mul(&self, a: &Rational, b: &Rational) -> Result<Rational> {
        a.checked_mul(b).ok_or(Error::Overflow(self.ctx))
    }

    fn div(&self, a: &Rational, b: &Rational) -> Result<Rational> {
        a.checked_div(b).ok_or(Error::Overflow(self.ctx))
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    // Both parts fit comfortably for the envelopes used here; the quotient
    // is formed in f64 to avoid i128 → f64 precision surprises on huge
    // numerators with huge denominators.
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// `d^{-k}` exactly.
pub fn inverse_power(dim: Dim, k: u32) -> Result<Rational> {
    let ex = Exact { ctx: "d^-k" };
    Ok(ex.ratio(1, ex.pow(dim.d() as i128, k)?))
}

/// `p_ℓ = (d^{ℓ+1} + d^ℓ - 2) / (d^{2ℓ}(d-1))`, exactly.
pub fn p_ell_exact(dim: Dim, ell: u32) -> Result<Rational> {
    require_ell(ell)?;
    let ex = Exact { ctx: "p_ell" };
    let d = dim.d() as i128;
    let dl = ex.pow(d, ell)?;
    let num = ex.mul_i(dl, d)?.checked_add(dl - 2).ok_or(Error::Overflow("p_ell"))?;
    let den = ex.mul_i(ex.pow(d, 2 * ell)?, d - 1)?;
    Ok(ex.ratio(num, den))
}

/// `q_ℓ = 2(d^ℓ - 1) / (d^{2ℓ}(d-1))`, exactly.
pub fn q_ell_exact(dim: Dim, ell: u32) -> Result<Rational> {
    require_ell(ell)?;
    let ex = Exact { ctx: "q_ell" };
    let d = dim.d() as i128;
    let dl = ex.pow(d, ell)?;
    let den = ex.mul_i(ex.pow(d, 2 * ell)?, d - 1)?;
    Ok(ex.ratio(2 * (dl - 1), den))
}

pub fn p_ell(dim: Dim, ell: u32) -> Result<f64> {
    p_ell_exact(dim, ell).map(|q| to_f64(&q))
}

pub fn q_ell(dim: Dim, ell: u32) -> Result<f64> {
    q_ell_exact(dim, ell).map(|q| to_f64(&q))
}

/// Coefficients of `R^ℓ` on a single sector:
///
/// `R^ℓ(|φ⁺⟩⟨φ⁺|) = a⁺(𝕀+𝔽) + b⁺ 𝕃⁽⁰⁾ + c⁺ Σ f |φ⁺⟩⟨φ⁺|`,
/// `R^ℓ(|φ⁻⟩⟨φ⁻|) = a⁻(𝕀-𝔽) + c⁻ Σ f |φ⁻⟩⟨φ⁻|`.
///
/// `b⁺` multiplies `𝕃⁽⁰⁾`, so `q_ℓ = d · b⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRecurrence {
    pub a_plus: Rational,
    pub b_plus: Rational,
    pub c_plus: Rational,
    pub a_minus: Rational,
    pub c_minus: Rational,
}

/// Float view of [`ExactRecurrence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceCoeffs {
    pub a_plus: f64,
    pub b_plus: f64,
    pub c_plus: f64,
    pub a_minus: f64,
    pub c_minus: f64,
}

impl ExactRecurrence {
    pub fn to_f64(&self) -> RecurrenceCoeffs {
        RecurrenceCoeffs {
            a_plus: to_f64(&self.a_plus),
            b_plus: to_f64(&self.b_plus),
            c_plus: to_f64(&self.c_plus),
            a_minus: to_f64(&self.a_minus),
            c_minus: to_f64(&self.c_minus),
        }
    }
}

/// Iterates the one-step recurrences from the `ℓ = 1` coefficients.
pub fn recurrence_iterated(dim: Dim, ell: u32) -> Result<ExactRecurrence> {
    require_ell(ell)?;
    let ex = Exact { ctx: "recurrence" };
    let d = dim.d() as i128;
    let inv_d = ex.ratio(1, d);
    let inv_d2 = ex.ratio(1, d * d);
    let inv_d3 = ex.ratio(1, d * d * d);
    let one = ex.ratio(1, 1);
    let two = ex.ratio(2, 1);

    let mut cur = ExactRecurrence {
        a_plus: ex.mul(&inv_d2, &ex.sub(&one, &ex.mul(&two, &inv_d)?)?)?,
        b_plus: ex.mul(&two, &inv_d3)?,
        c_plus: inv_d,
        a_minus: inv_d2,
        c_minus: inv_d,
    };
    // (1/d)(1 - 1/d) and (1/d²)(1 - 2/d)
    let k_ab = ex.mul(&inv_d, &ex.sub(&one, &inv_d)?)?;
    let k_ac = ex.mul(&inv_d2, &ex.sub(&one, &ex.mul(&two, &inv_d)?)?)?;
    for _ in 1..ell {
        let a_plus = ex.add(
            &ex.add(&cur.a_plus, &ex.mul(&k_ab, &cur.b_plus)?)?,
            &ex.mul(&k_ac, &cur.c_plus)?,
        )?;
        let b_plus = ex.add(
            &ex.mul(&cur.b_plus, &inv_d2)?,
            &ex.mul(&ex.mul(&two, &cur.c_plus)?, &inv_d3)?,
        )?;
        let c_plus = ex.mul(&cur.c_plus, &inv_d)?;
        let a_minus = ex.add(&cur.a_minus, &ex.mul(&cur.c_minus, &inv_d2)?)?;
        let c_minus = ex.mul(&cur.c_minus, &inv_d)?;
        cur = ExactRecurrence {
            a_plus,
            b_plus,
            c_plus,
            a_minus,
            c_minus,
        };
    }
    Ok(cur)
}

/// Closed-form solution of the recurrences.
pub fn recurrence_closed(dim: Dim, ell: u32) -> Result<ExactRecurrence> {
    require_ell(ell)?;
    let ex = Exact {
        ctx: "recurrence closed form",
    };
    let d = dim.d() as i128;
    let dl = ex.pow(d, ell)?;
    let d2l = ex.pow(d, 2 * ell)?;
    let d2l1 = ex.mul_i(d2l, d)?;

    let first = ex.ratio(1, d * (d + 1));
    let numer = ex
        .mul_i(dl, d)?
        .checked_add(dl - 2)
        .ok_or(Error::Overflow("recurrence closed form"))?;
    let second = ex.ratio(numer, ex.mul_i(d2l1, d * d - 1)?);
    let a_plus = ex.sub(&first, &second)?;
    let b_plus = ex.ratio(2 * (dl - 1), ex.mul_i(d2l1, d - 1)?);
    let c_plus = ex.ratio(1, dl);
    let a_minus = ex.div(&ex.sub(&ex.ratio(1, 1), &c_plus)?, &ex.ratio(d * (d - 1), 1))?;
    Ok(ExactRecurrence {
        a_plus,
        b_plus,
        c_plus,
        a_minus,
        c_minus: c_plus,
    })
}

/// Agreement required between the iterated and closed-form coefficients.
pub const RECURRENCE_TOL: f64 = 1e-13;

/// Closed-form coefficients, after asserting that the iterated recurrence
/// reproduces them.
pub fn recurrence_coeffs(dim: Dim, ell: u32) -> Result<RecurrenceCoeffs> {
    let closed = recurrence_closed(dim, ell)?.to_f64();
    let iter = recurrence_iterated(dim, ell)?.to_f64();
    let dev = recurrence_deviation(&closed, &iter);
    if dev > RECURRENCE_TOL {
        return Err(Error::Consistency {
            what: "recurrence coefficients",
            deviation: dev,
        });
    }
    Ok(closed)
}

/// Largest absolute difference between two coefficient sets.
pub fn recurrence_deviation(a: &RecurrenceCoeffs, b: &RecurrenceCoeffs) -> f64 {
    [
        a.a_plus - b.a_plus,
        a.b_plus - b.b_plus,
        a.c_plus - b.c_plus,
        a.a_minus - b.a_minus,
        a.c_minus - b.c_minus,
    ]
    .iter()
    .fold(0.0, |m, x| f64::max(m, libm::fabs(*x)))
}
