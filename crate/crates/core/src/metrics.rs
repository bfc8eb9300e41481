//! Design-error brackets, the trace-norm certificate and frame potentials.

use alloc::vec::Vec;

use crate::basis::{pair_unit, PairBasisIndex};
use crate::error::{Error, Result};
use crate::linalg::{trace_norm, Dim, Operator};
use crate::maps::{g_haar, r_pow_closed, MomentMap, MOMENT_MATRIX_MAX_D};
use crate::math;

/// `(2/d^ℓ)(1 - 1/(d-1))` and `(2/d^ℓ)(1 + 2/(d-1))`, evaluated literally.
/// At `d = 2` the lower value is exactly 0.
pub fn theorem1_bounds(dim: Dim, ell: u32) -> Result<(f64, f64)> {
    check_ell(ell)?;
    let d = dim.d() as f64;
    let scale = 2.0 / math::powi(d, ell);
    Ok((scale * (1.0 - 1.0 / (d - 1.0)), scale * (1.0 + 2.0 / (d - 1.0))))
}

fn check_ell(ell: u32) -> Result<()> {
    if ell == 0 {
        return Err(Error::domain("repetition count ell must be at least 1"));
    }
    Ok(())
}

/// Analytic bounds on the distance of `R^ℓ` from the Haar twirl.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignErrorBracket {
    pub d: usize,
    pub ell: u32,
    pub lower_theorem: f64,
    pub upper_theorem: f64,
    /// Trace norm of `R^ℓ(ρ) - G_Haar(ρ)` at a symmetric pair probe.
    pub lower_exact: f64,
    /// `2 p_ℓ`.
    pub upper_proof: f64,
}

impl DesignErrorBracket {
    /// `lower_theorem ≤ lower_exact ≤ upper_proof ≤ upper_theorem`, with a
    /// relative slack for rounding.
    pub fn chain_holds(&self) -> bool {
        let le = |a: f64, b: f64| a <= b + 1e-12 * b.abs().max(1e-300);
        le(self.lower_theorem, self.lower_exact)
            && le(self.lower_exact, self.upper_proof)
            && le(self.upper_proof, self.upper_theorem)
    }
}

/// Fills the bracket from closed forms, in floating point so it stays
/// finite for any `ℓ`:
///
/// - `lower_exact = 2/d^ℓ - 2(d^{ℓ+1} + d^ℓ - 2)/(d^{2ℓ}(d² - 1))`
/// - `upper_proof = 2(d^{ℓ+1} + d^ℓ - 2)/(d^{2ℓ}(d - 1))`
pub fn proof_bracket(dim: Dim, ell: u32) -> Result<DesignErrorBracket> {
    let (lower_theorem, upper_theorem) = theorem1_bounds(dim, ell)?;
    let d = dim.d() as f64;
    let x = 1.0 / math::powi(d, ell);
    // (d^{ℓ+1} + d^ℓ - 2)/d^{2ℓ} without forming d^{2ℓ}
    let mix = (d + 1.0) * x - 2.0 * x * x;
    Ok(DesignErrorBracket {
        d: dim.d(),
        ell,
        lower_theorem,
        upper_theorem,
        lower_exact: 2.0 * x - 2.0 * mix / (d * d - 1.0),
        upper_proof: 2.0 * mix / (d - 1.0),
    })
}

/// Largest tolerated drift of `tr map(ρ)` from 1 at the probe.
pub const CERTIFICATE_TP_TOL: f64 = 1e-10;

/// `‖map(ρ) - G_Haar(ρ)‖₁` at `ρ = |φ⁺_10⟩⟨φ⁺_10|`.
pub fn lower_certificate(map: &MomentMap) -> Result<f64> {
    lower_certificate_at(map, 1, 0)
}

/// [`lower_certificate`] at the probe `|φ⁺_{i0 j0}⟩`, `i0 > j0`.
pub fn lower_certificate_at(map: &MomentMap, i0: usize, j0: usize) -> Result<f64> {
    let dim = map.dim();
    if !(j0 < i0 && i0 < dim.d()) {
        return Err(Error::domain("certificate probe needs d > i0 > j0"));
    }
    let probe = PairBasisIndex::Sym(i0, j0);
    let rho = pair_unit(dim, probe, probe);
    let out = map.apply(&rho)?;
    let drift = (out.trace().re - 1.0).abs().max(out.trace().im.abs());
    if drift > CERTIFICATE_TP_TOL {
        return Err(Error::Contract {
            what: "trace preservation at the certificate probe",
            deviation: drift,
        });
    }
    let delta = &out - &g_haar(dim).apply(&rho)?;
    trace_norm(&delta)
}

/// `tr(M†M)` for the superoperator matrix `M` of `map`: the sum of squared
/// Frobenius norms of the images of all product matrix units. Equals 2 for
/// an exact 2-design twirl. Limited to `d ≤ 8`.
pub fn frame_potential(map: &MomentMap) -> Result<f64> {
    let dim = map.dim();
    check_frame_envelope(dim)?;
    let dd = dim.pair_dim();
    let mut total = 0.0;
    for a in 0..dd {
        total += frame_potential_row(map, a)?;
    }
    Ok(total)
}

/// Contribution of the matrix units `|a⟩⟨b|`, `b = 0..d²`, to
/// [`frame_potential`]. Rows are independent so callers may evaluate them
/// in parallel and add them in row order.
pub fn frame_potential_row(map: &MomentMap, a: usize) -> Result<f64> {
    let dd = map.dim().pair_dim();
    let mut s = 0.0;
    for b in 0..dd {
        s += map.apply(&Operator::unit(dd, a, b))?.frobenius_sq();
    }
    Ok(s)
}

fn check_frame_envelope(dim: Dim) -> Result<()> {
    if dim.d() > MOMENT_MATRIX_MAX_D {
        return Err(Error::size(
            "frame potential d",
            dim.d() as u128,
            MOMENT_MATRIX_MAX_D as u128,
        ));
    }
    Ok(())
}

/// One row of [`convergence_table`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub ell: u32,
    pub lower_theorem: f64,
    pub lower_exact: f64,
    pub upper_proof: f64,
    pub upper_theorem: f64,
    /// `frame_potential(R^ℓ) - 2`; `None` above the frame-potential envelope.
    pub frame_potential_excess: Option<f64>,
}

pub fn convergence_row(dim: Dim, ell: u32) -> Result<ConvergenceRow> {
    let b = proof_bracket(dim, ell)?;
    let frame_potential_excess = if dim.d() <= MOMENT_MATRIX_MAX_D {
        Some(frame_potential(&r_pow_closed(dim, ell)?)? - 2.0)
    } else {
        None
    };
    Ok(ConvergenceRow {
        ell,
        lower_theorem: b.lower_theorem,
        lower_exact: b.lower_exact,
        upper_proof: b.upper_proof,
        upper_theorem: b.upper_theorem,
        frame_potential_excess,
    })
}

/// Rows for `ℓ = 1..=ell_max`.
pub fn convergence_table(n_qubits: u32, ell_max: u32) -> Result<Vec<ConvergenceRow>> {
    let dim = Dim::new(n_qubits)?;
    check_ell(ell_max)?;
    (1..=ell_max).map(|ell| convergence_row(dim, ell)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::p_ell;

    fn dim(n: u32) -> Dim {
        Dim::new(n).unwrap()
    }

    #[test]
    fn theorem_bounds_examples() {
        let (lo, hi) = theorem1_bounds(dim(2), 1).unwrap();
        assert!((lo - 1.0 / 3.0).abs() < 1e-15 && (hi - 5.0 / 6.0).abs() < 1e-15);
        let (lo, hi) = theorem1_bounds(dim(2), 2).unwrap();
        assert!((lo - 1.0 / 12.0).abs() < 1e-15 && (hi - 5.0 / 24.0).abs() < 1e-15);
        for ell in 1..5 {
            assert_eq!(theorem1_bounds(dim(1), ell).unwrap().0, 0.0);
        }
        assert!(theorem1_bounds(dim(1), 0).is_err());
    }

    #[test]
    fn bracket_examples() {
        let b = proof_bracket(dim(2), 1).unwrap();
        assert!((b.lower_exact - 0.35).abs() < 1e-15);
        assert!((b.upper_proof - 0.75).abs() < 1e-15);
        assert!(b.chain_holds());
        let b = proof_bracket(dim(3), 1).unwrap();
        assert!((b.lower_exact - (0.25 - 140.0 / (64.0 * 63.0))).abs() < 1e-15);
    }

    #[test]
    fn upper_is_twice_p() {
        for n in 1..=4 {
            for ell in 1..=5 {
                let b = proof_bracket(dim(n), ell).unwrap();
                let p = p_ell(dim(n), ell).unwrap();
                assert!((b.upper_proof - 2.0 * p).abs() < 1e-15 * p.max(1.0));
            }
        }
    }

    #[test]
    fn certificate_examples() {
        let dm = dim(2);
        let c = lower_certificate(&r_pow_closed(dm, 1).unwrap()).unwrap();
        assert!((c - 0.35).abs() < 1e-12, "{c}");
        assert!(lower_certificate(&g_haar(dm)).unwrap() < 1e-14);
        assert!(lower_certificate_at(&g_haar(dm), 0, 1).is_err());
    }

    #[test]
    fn certificate_rejects_non_tp_map() {
        let dm = dim(1);
        let doubled = MomentMap::new(dm, "2id", |x| x.scale_real(2.0));
        assert!(matches!(lower_certificate(&doubled), Err(Error::Contract { .. })));
    }

    #[test]
    fn frame_potential_examples() {
        for n in 1..=3 {
            assert!((frame_potential(&g_haar(dim(n))).unwrap() - 2.0).abs() < 1e-12);
        }
        assert!((frame_potential(&MomentMap::identity(dim(1))).unwrap() - 16.0).abs() < 1e-12);
        assert!(frame_potential(&g_haar(dim(4))).unwrap_err().is_size_error());
    }

    #[test]
    fn table_rows() {
        let rows = convergence_table(2, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[0].lower_exact - 0.35).abs() < 1e-15);
        for w in rows.windows(2) {
            let ratio = w[1].lower_exact / w[0].lower_exact;
            assert!((ratio - 0.25).abs() < 0.05, "{ratio}");
            assert!(w[1].frame_potential_excess.unwrap() < w[0].frame_potential_excess.unwrap());
        }
        assert_eq!(convergence_table(1, 2).unwrap()[1].lower_theorem, 0.0);
        assert!(convergence_table(4, 1).unwrap()[0].frame_potential_excess.is_none());
        assert!(convergence_table(2, 0).is_err());
    }
}
