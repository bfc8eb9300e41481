//! Cross-checks against independently coded references.

use diagdesign::basis::{canonical_ops, pair_unit, PairBasisIndex};
use diagdesign::coeffs::{f_table_check, recurrence_closed, recurrence_iterated, FCoefficientTable};
use diagdesign::ensembles::{draw_rng, ensemble_moment_mc, EnsembleKind, EnsembleSpec};
use diagdesign::linalg::hermitian_eigenvalues;
use diagdesign::maps::{
    choi_gershgorin_bound, choi_min_eigenvalue, choi_tp_deviation, max_map_difference, off_diagonal_leakage,
    same_multiset, UnitBasis,
};
use diagdesign::*;
use nalgebra::DMatrix;
use rand::Rng;

fn dim(n: u32) -> Dim {
    Dim::new(n).unwrap()
}

fn to_na(x: &Operator) -> DMatrix<C64> {
    let n = x.dim();
    DMatrix::from_fn(n, n, |r, c| x[(r, c)])
}

fn random_operator(n: usize, seed: u64) -> Operator {
    let mut rng = draw_rng(seed, 0);
    Operator::from_fn(n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

fn random_hermitian(n: usize, seed: u64) -> Operator {
    let a = random_operator(n, seed);
    (&a + &a.dagger()).scale_real(0.5)
}

#[test]
fn eigenvalues_match_nalgebra() {
    for (n, seed) in [(3, 1), (8, 2), (16, 3), (37, 4)] {
        let h = random_hermitian(n, seed);
        let ours = hermitian_eigenvalues(&h).unwrap();
        let mut theirs: Vec<f64> = to_na(&h).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-11, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn trace_norm_matches_singular_values() {
    for (n, seed) in [(4, 5), (9, 6), (16, 7)] {
        let a = random_operator(n, seed);
        let theirs: f64 = to_na(&a).singular_values().iter().sum();
        assert!((trace_norm(&a).unwrap() - theirs).abs() < 1e-10);
        let h = random_hermitian(n, seed + 100);
        let theirs: f64 = to_na(&h).singular_values().iter().sum();
        assert!((trace_norm(&h).unwrap() - theirs).abs() < 1e-10);
    }
}

#[test]
fn g_z_matches_literal_rule() {
    for n in 1..=2 {
        let dm = dim(n);
        let d = dm.d();
        let x = random_operator(d * d, 11 + n as u64);
        let y = g_z_exact(dm).apply(&x).unwrap();
        for (i, j, k, l) in itertools(d) {
            let expect = if same_multiset(i, j, k, l) {
                x[(i * d + j, k * d + l)]
            } else {
                C64::new(0.0, 0.0)
            };
            assert_eq!(y[(i * d + j, k * d + l)], expect);
        }
    }
}

fn itertools(d: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..d).flat_map(move |i| (0..d).flat_map(move |j| (0..d).flat_map(move |k| (0..d).map(move |l| (i, j, k, l)))))
}

#[test]
fn g_z_agrees_with_continuous_phase_sampling() {
    let m = 100_000;
    let spec = EnsembleSpec::new(2, 1, EnsembleKind::Continuous, 2024, m);
    let est = ensemble_moment_mc(&spec).unwrap();
    let diff = max_map_difference(&est.map, &g_z_exact(dim(2)), UnitBasis::Product).unwrap();
    assert!(diff <= 5.0 / (m as f64).sqrt(), "{diff}");
}

#[test]
fn g_x_matches_dense_conjugation() {
    // The fast transform path against explicit (H⊗H) G_Z((H⊗H) X (H⊗H)) (H⊗H).
    let dm = dim(2);
    let h = walsh_hadamard(dm);
    let hh = tensor_product(&h, &h).unwrap();
    let x = random_operator(16, 21);
    let inner = g_z_exact(dm).apply(&x.conjugate_by(&hh)).unwrap();
    let expect = inner.conjugate_by(&hh);
    assert!(g_x_exact(dm).apply(&x).unwrap().max_abs_diff(&expect) < 1e-13);
}

#[test]
fn g_haar_matches_projector_formula() {
    for n in 1..=3 {
        let dm = dim(n);
        let ops = canonical_ops(dm);
        let x = random_operator(dm.pair_dim(), 30 + n as u64);
        let mut expect = ops.pi_sym.scale(ops.p_sym.hs_inner(&x));
        expect.add_scaled(ops.p_anti.hs_inner(&x), &ops.pi_anti);
        assert!(g_haar(dm).apply(&x).unwrap().max_abs_diff(&expect) < 1e-13);
    }
}

#[test]
fn closed_form_matches_composition() {
    for n in 1..=2 {
        let dm = dim(n);
        let r = r_map(dm);
        for ell in 1..=3 {
            let diff = max_map_difference(&r.power(ell), &r_pow_closed(dm, ell).unwrap(), UnitBasis::Pair).unwrap();
            assert!(diff < 1e-10, "N={n} ell={ell}: {diff}");
        }
    }
}

#[test]
fn composition_annihilates_off_diagonal_pair_units() {
    for n in 1..=2 {
        assert!(off_diagonal_leakage(&r_map(dim(n))).unwrap() < 1e-13);
        assert!(off_diagonal_leakage(&r_pow_closed(dim(n), 2).unwrap()).unwrap() < 1e-15);
    }
}

#[test]
fn remainder_channel_is_cptp() {
    for n in 1..=2 {
        let dm = dim(n);
        for ell in 1..=2 {
            let c = c_ell_map(dm, ell).unwrap();
            assert!(choi_min_eigenvalue(&c).unwrap() >= -1e-10);
            let j = choi(&c).unwrap();
            assert!(choi_tp_deviation(&j, dm.pair_dim()).unwrap() < 1e-12);
        }
    }
    let c = c_ell_map(dim(3), 1).unwrap();
    assert!(choi_gershgorin_bound(&c).unwrap() >= -1e-10);
}

#[test]
fn haar_decomposition() {
    for n in 1..=3 {
        let dm = dim(n);
        for ell in 1..=3 {
            let p = p_ell(dm, ell).unwrap();
            let x = random_operator(dm.pair_dim(), 40 + ell as u64);
            let mut mix = g_haar(dm).apply(&x).unwrap().scale_real(1.0 - p);
            mix.add_scaled(C64::new(p, 0.0), &c_ell_map(dm, ell).unwrap().apply(&x).unwrap());
            assert!(r_pow_closed(dm, ell).unwrap().apply(&x).unwrap().max_abs_diff(&mix) < 1e-12);
        }
    }
}

#[test]
fn f_table_and_recurrences() {
    for n in 1..=3 {
        let t = f_coeff(dim(n)).unwrap();
        assert!(f_table_check(&t).all_pass());
        assert_eq!(t, FCoefficientTable::from_xor_classes(dim(n)).unwrap());
        for ell in 1..=6 {
            assert_eq!(
                recurrence_iterated(dim(n), ell).unwrap(),
                recurrence_closed(dim(n), ell).unwrap()
            );
        }
    }
}

#[test]
fn certificate_probe_sweep() {
    let dm = dim(2);
    let m = r_pow_closed(dm, 1).unwrap();
    for i in 1..4 {
        for j in 0..i {
            let c = metrics::lower_certificate_at(&m, i, j).unwrap();
            assert!((c - 0.35).abs() < 1e-12, "({i},{j}): {c}");
        }
    }
}

#[test]
fn certificate_by_direct_eigensolve() {
    // Build the difference operator by hand and take |eigenvalues| via nalgebra.
    let dm = dim(2);
    let probe = PairBasisIndex::Sym(1, 0);
    let rho = pair_unit(dm, probe, probe);
    let delta = &r_pow_closed(dm, 1).unwrap().apply(&rho).unwrap() - &g_haar(dm).apply(&rho).unwrap();
    let norm: f64 = to_na(&delta).symmetric_eigenvalues().iter().map(|e| e.abs()).sum();
    assert!((norm - 0.35).abs() < 1e-12);
}
