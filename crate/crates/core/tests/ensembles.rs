use diagdesign::ensembles::*;
use diagdesign::maps::{max_map_difference, moment_matrix, UnitBasis};
use diagdesign::{g_haar, g_z_exact, r_pow_closed, Dim, MomentMap, Operator};

fn dim(n: u32) -> Dim {
    Dim::new(n).unwrap()
}

#[test]
fn marginals_are_uniform() {
    // Chi-square per phase slot; 3σ of a chi-square with k-1 dof is ~ (k-1) + 3·sqrt(2(k-1)).
    let draws = 100_000u64;
    let mut single = [[0u64; 3]; 3];
    let mut pair = [[0u64; 2]; 3];
    for i in 0..draws {
        let a = sample_z_layer(3, &mut draw_rng(99, i));
        for (k, &s) in a.single_indices().iter().enumerate() {
            single[k][s as usize] += 1;
        }
        for (k, &b) in a.pair_indices().iter().enumerate() {
            pair[k][b as usize] += 1;
        }
    }
    let chi = |counts: &[u64]| {
        let e = draws as f64 / counts.len() as f64;
        counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum::<f64>()
    };
    for c in &single {
        assert!(chi(c) < 2.0 + 3.0 * 2.0, "{c:?}");
    }
    for c in &pair {
        assert!(chi(c) < 1.0 + 3.0 * 2f64.sqrt(), "{c:?}");
    }
}

#[test]
fn sampled_circuit_twirl_is_close_to_exact() {
    let m = 100_000;
    let spec = EnsembleSpec::new(2, 1, EnsembleKind::Circuit, 7, m);
    let est = ensemble_moment_mc(&spec).unwrap();
    let diff = max_map_difference(&est.map, &ensemble_moment_exact(2).unwrap(), UnitBasis::Product).unwrap();
    assert!(diff <= 5.0 / (m as f64).sqrt(), "{diff}");
    assert!(est.std_error > 0.0 && est.std_error <= 1.001 / (m as f64).sqrt());
}

#[test]
fn standard_error_shrinks_like_inverse_root() {
    let small = ensemble_moment_mc(&EnsembleSpec::new(1, 1, EnsembleKind::Continuous, 1, 1_000)).unwrap();
    let large = ensemble_moment_mc(&EnsembleSpec::new(1, 1, EnsembleKind::Continuous, 1, 100_000)).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio - 10.0).abs() < 1.5, "{ratio}");
}

#[test]
fn whole_circuit_factorises_over_layers() {
    let m = 100_000;
    let spec = EnsembleSpec::new(2, 1, EnsembleKind::Circuit, 17, m);
    let probes = [(0, 0), (1, 4), (5, 5), (6, 9), (3, 12)];
    let est = construction_twirl_mc(&spec, &probes).unwrap();
    let exact = construction_moment_exact(&spec).unwrap();
    for (img, &(a, b)) in est.images.iter().zip(&probes) {
        let expect = exact.apply(&Operator::unit(16, a, b)).unwrap();
        let diff = img.max_abs_diff(&expect);
        assert!(diff <= 5.0 / (m as f64).sqrt(), "probe ({a},{b}): {diff}");
    }
}

#[test]
fn hamiltonian_construction_matches_circuit_twirl() {
    let dm = dim(2);
    let mut spec = EnsembleSpec::new(2, 2, EnsembleKind::Hamiltonian, 0, 1);
    let ham = construction_moment_exact(&spec).unwrap();
    spec.kind = EnsembleKind::Continuous;
    let ideal = construction_moment_exact(&spec).unwrap();
    assert!(max_map_difference(&ham, &ideal, UnitBasis::Product).unwrap() < 1e-12);
    assert!(max_map_difference(&ideal, &r_pow_closed(dm, 2).unwrap(), UnitBasis::Product).unwrap() < 1e-12);
}

#[test]
fn trailing_layer_leaves_design_error_unchanged() {
    let dm = dim(2);
    let spec = EnsembleSpec::new(2, 1, EnsembleKind::Circuit, 0, 1);
    let with_trailing = construction_moment_exact(&spec).unwrap();
    let without = MomentMap::hadamard_conjugation(dm).compose(&with_trailing);
    let haar = moment_matrix(&g_haar(dm)).unwrap();
    let err = |m: &MomentMap| (&moment_matrix(m).unwrap() - &haar).frobenius_sq().sqrt();
    let (a, b) = (err(&with_trailing), err(&without));
    assert!(a > 1e-3);
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn constructed_unitaries_are_unitary() {
    for kind in [
        EnsembleKind::Circuit,
        EnsembleKind::Hamiltonian,
        EnsembleKind::Continuous,
    ] {
        let spec = EnsembleSpec::new(3, 2, kind, 5, 1);
        for i in 0..20 {
            let u = construction_unitary(&spec, &mut draw_rng(5, i)).unwrap();
            assert!(u.unitarity_defect() < 1e-13, "{kind:?}");
        }
    }
}

#[test]
fn continuous_sampling_approaches_ideal_twirl() {
    let m = 100_000;
    let spec = EnsembleSpec::new(2, 1, EnsembleKind::Continuous, 3, m);
    let est = ensemble_moment_mc(&spec).unwrap();
    let diff = max_map_difference(&est.map, &g_z_exact(dim(2)), UnitBasis::Product).unwrap();
    assert!(diff <= 5.0 / (m as f64).sqrt());
}
