//! Exact second-moment superoperators for alternating random Z- and
//! X-diagonal unitaries.
//!
//! The crate is `no_std` (with `alloc`). It covers:
//!
//! - dense complex operators on `H` and `H ⊗ H` ([`linalg`]) plus the
//!   symmetric/antisymmetric pair basis and the canonical projectors
//!   ([`basis`]);
//! - exact rational coefficient algebra: the `f` table, `p_ℓ`, `q_ℓ` and
//!   the repetition recurrences ([`coeffs`]);
//! - the twirl maps `G_Z`, `G_X`, `G_Haar`, `R = G_Z ∘ G_X ∘ G_Z`, the
//!   closed form of `R^ℓ`, the remainder channel `C^(ℓ)`, Choi matrices and
//!   superoperator matrices ([`maps`]);
//! - the finite phase-gate circuit ensemble and the piecewise-constant
//!   Ising Hamiltonian realisation, exactly enumerated or sampled
//!   ([`ensembles`]);
//! - design-error brackets, trace-norm certificates and frame potentials
//!   ([`metrics`]).
//!
//! IO, report formats, parallel drivers and the command-line front end live
//! in the `diagdesign-cli` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod basis;
pub mod coeffs;
pub mod ensembles;
mod error;
pub mod linalg;
pub mod maps;
mod math;
pub mod metrics;

pub use basis::{canonical_ops, pair_basis, CanonicalOps, PairBasisIndex};
pub use coeffs::{f_coeff, p_ell, q_ell, recurrence_coeffs, FCoefficientTable, RecurrenceCoeffs};
pub use error::{Error, Result};
pub use linalg::{tensor_product, trace_norm, walsh_hadamard, Dim, Operator, C64};
pub use maps::{c_ell_map, choi, g_haar, g_x_exact, g_z_exact, moment_matrix, r_map, r_pow_closed, MomentMap};
pub use metrics::{
    convergence_table, frame_potential, lower_certificate, proof_bracket, theorem1_bounds, DesignErrorBracket,
};
