use diagdesign::ensembles::{ell_for_epsilon, gate_count};
use diagdesign::maps::{choi_gershgorin_bound, off_diagonal_leakage};
use diagdesign::metrics::{frame_potential, proof_bracket};
use diagdesign::*;
use proptest::prelude::*;

fn operator(n: usize) -> impl Strategy<Value = Operator> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| Operator::from_row_major(n, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
}

/// Random density matrix `A A† / tr(A A†)`.
fn state(n: usize) -> impl Strategy<Value = Operator> {
    operator(n).prop_filter_map("nonzero", |a| {
        let rho = a.matmul(&a.dagger());
        let t = rho.trace().re;
        (t > 1e-6).then(|| rho.scale_real(1.0 / t))
    })
}

fn maps(dm: Dim, ell: u32) -> Vec<MomentMap> {
    vec![
        g_z_exact(dm),
        g_x_exact(dm),
        g_haar(dm),
        r_map(dm),
        r_pow_closed(dm, ell).unwrap(),
        c_ell_map(dm, ell).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn maps_are_linear(x in operator(16), y in operator(16), a in -2.0f64..2.0, ell in 1u32..4) {
        let dm = Dim::new(2).unwrap();
        let mut xy = x.clone();
        xy.add_scaled(C64::new(a, 0.0), &y);
        for m in maps(dm, ell) {
            let mut lhs = m.apply(&x).unwrap();
            lhs.add_scaled(C64::new(a, 0.0), &m.apply(&y).unwrap());
            prop_assert!(m.apply(&xy).unwrap().max_abs_diff(&lhs) < 1e-12, "{}", m.label());
        }
    }

    #[test]
    fn maps_preserve_trace_and_hermiticity(rho in state(16), ell in 1u32..5) {
        let dm = Dim::new(2).unwrap();
        for m in maps(dm, ell) {
            let y = m.apply(&rho).unwrap();
            prop_assert!((y.trace() - C64::new(1.0, 0.0)).norm() < 1e-12, "{}", m.label());
            prop_assert!(y.hermiticity_defect() < 1e-12, "{}", m.label());
        }
    }

    #[test]
    fn maps_are_unital(n in 1u32..4, ell in 1u32..4) {
        let dm = Dim::new(n).unwrap();
        let id = Operator::identity(dm.pair_dim());
        for m in maps(dm, ell) {
            prop_assert!(m.apply(&id).unwrap().max_abs_diff(&id) < 1e-12, "{}", m.label());
        }
    }

    #[test]
    fn haar_twirl_is_idempotent_and_absorbing(x in operator(16), ell in 1u32..4) {
        let dm = Dim::new(2).unwrap();
        let h = g_haar(dm);
        let hx = h.apply(&x).unwrap();
        prop_assert!(h.apply(&hx).unwrap().max_abs_diff(&hx) < 1e-13);
        prop_assert!(r_pow_closed(dm, ell).unwrap().apply(&hx).unwrap().max_abs_diff(&hx) < 1e-13);
    }

    #[test]
    fn outputs_are_states(rho in state(16), ell in 1u32..4) {
        let dm = Dim::new(2).unwrap();
        for m in [r_pow_closed(dm, ell).unwrap(), c_ell_map(dm, ell).unwrap()] {
            let eig = diagdesign::linalg::hermitian_eigenvalues(&m.apply(&rho).unwrap()).unwrap();
            prop_assert!(eig[0] > -1e-12);
        }
    }

    #[test]
    fn trace_norm_bounds(x in operator(8), y in operator(8)) {
        let nx = trace_norm(&x).unwrap();
        prop_assert!(nx + 1e-12 >= x.trace().norm());
        prop_assert!(nx + 1e-12 >= x.frobenius_sq().sqrt());
        prop_assert!(trace_norm(&(&x + &y)).unwrap() <= nx + trace_norm(&y).unwrap() + 1e-10);
        prop_assert!((trace_norm(&x.dagger()).unwrap() - nx).abs() < 1e-10);
    }

    #[test]
    fn bracket_chain(n in 1u32..6, ell in 1u32..8) {
        let b = proof_bracket(Dim::new(n).unwrap(), ell).unwrap();
        prop_assert!(b.chain_holds(), "{b:?}");
        prop_assert!(b.lower_theorem >= 0.0 && b.lower_exact >= 0.0);
    }

    #[test]
    fn mixing_weight_decreases(n in 1u32..6, ell in 1u32..6) {
        let dm = Dim::new(n).unwrap();
        let p = p_ell(dm, ell).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert!(p_ell(dm, ell + 1).unwrap() <= p);
    }

    #[test]
    fn ell_is_monotone_in_epsilon(n in 1u32..12, e1 in 1e-12f64..1.9, e2 in 1e-12f64..1.9) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let a = ell_for_epsilon(n, lo).unwrap();
        let b = ell_for_epsilon(n, hi).unwrap();
        prop_assert!(a >= b);
        prop_assert!(gate_count(n, a) >= gate_count(n, b));
    }
}

#[test]
fn frame_potential_at_least_two_for_twirls() {
    let dm = Dim::new(2).unwrap();
    for m in [
        g_z_exact(dm),
        g_x_exact(dm),
        r_map(dm),
        r_pow_closed(dm, 2).unwrap(),
        g_haar(dm),
    ] {
        assert!(frame_potential(&m).unwrap() >= 2.0 - 1e-12, "{}", m.label());
    }
}

#[test]
fn closed_forms_stay_pair_diagonal() {
    for n in 1..=3 {
        let dm = Dim::new(n).unwrap();
        assert!(off_diagonal_leakage(&c_ell_map(dm, 1).unwrap()).unwrap() < 1e-15);
        assert!(choi_gershgorin_bound(&r_pow_closed(dm, 1).unwrap()).unwrap() >= -1e-12);
    }
}
