//! Subcommand bodies. Each returns a [`Report`]; the caller decides where it
//! goes and maps its status to an exit code.

use diagdesign::coeffs::{f_table_check, recurrence_closed, recurrence_deviation, recurrence_iterated};
use diagdesign::ensembles::{
    self, construction_moment_exact, default_probes, diagonal_design_tensor, ell_for_epsilon, gate_count,
    layer_moment_tensor, segment_moment_tensor, segment_schedule, tensor_deviation, EnsembleKind, EnsembleSpec,
    CONSTRUCTION_MC_MAX_QUBITS, MC_MIN_SAMPLES,
};
use diagdesign::maps::{
    choi, choi_gershgorin_bound, choi_min_eigenvalue, choi_tp_deviation, off_diagonal_leakage,
    trace_preservation_deviation, UnitBasis, CHOI_EIGEN_MAX_PAIR_DIM, MOMENT_MATRIX_MAX_D,
};
use diagdesign::metrics::{lower_certificate, proof_bracket, theorem1_bounds};
use diagdesign::{
    c_ell_map, f_coeff, g_haar, p_ell, r_map, r_pow_closed, Dim, Error, FCoefficientTable, MomentMap, Operator,
};

use crate::config::{Kind, RunConfig};
use crate::error::{usage, CliResult};
use crate::parallel;
use crate::report::{Cell, Report, Status};

/// Tolerances of the verification suites.
pub mod tol {
    pub const CLOSED_FORM: f64 = 1e-10;
    pub const ANNIHILATION: f64 = 1e-12;
    pub const RECURRENCE: f64 = 1e-13;
    pub const DECOMPOSITION: f64 = 1e-12;
    pub const CHOI_NEGATIVITY: f64 = 1e-10;
    pub const TRACE_PRESERVATION: f64 = 1e-12;
    pub const EXACT_ENSEMBLE: f64 = 1e-12;
    pub const CERTIFICATE: f64 = 1e-12;
    pub const HAAR_FRAME_POTENTIAL: f64 = 1e-12;
    /// Monte-Carlo checks accept `MC_SIGMAS / sqrt(M)`.
    pub const MC_SIGMAS: f64 = 5.0;
}

/// The coupling value written in the original Hamiltonian; a mismatch
/// there is reported as a diagnostic.
pub const LITERAL_J_STAR: f64 = 0.5;

fn dim_of(n: u32) -> CliResult<Dim> {
    Dim::new(n).map_err(|_| usage(format!("--qubits must be between 1 and 16, got {n}")))
}

fn matrix_envelope(dim: Dim) -> CliResult<()> {
    if dim.d() > MOMENT_MATRIX_MAX_D {
        return Err(Error::SizeLimit {
            what: "dimension d for full-matrix checks",
            requested: dim.d() as u128,
            limit: MOMENT_MATRIX_MAX_D as u128,
        }
        .into());
    }
    Ok(())
}

fn ell_max_of(config: &RunConfig) -> CliResult<u32> {
    match config.ell_max {
        Some(0) | None => Err(usage("--ell-max must be at least 1")),
        Some(l) => Ok(l),
    }
}

pub fn run(config: &RunConfig) -> CliResult<Report> {
    use crate::config::CommandKind::*;
    match config.command {
        VerifyLemmas => verify_lemmas(config),
        Bracket => bracket(config),
        Ensemble => ensemble(config),
        EllForEpsilon => ell_for_eps(config),
        FramePotential => frame_potential(config),
    }
}

struct CheckTable {
    report: Report,
    override_tol: Option<f64>,
}

impl CheckTable {
    fn new(config: &RunConfig, extra: &[&'static str]) -> Self {
        let mut columns = vec!["check", "ell", "deviation", "tolerance", "pass"];
        columns.extend_from_slice(extra);
        columns.push("note");
        CheckTable {
            report: Report::new(config.clone(), columns),
            override_tol: config.tolerance_override,
        }
    }

    /// Records one check and returns whether it passed.
    fn check(
        &mut self,
        name: &str,
        ell: Option<u32>,
        deviation: f64,
        tolerance: f64,
        extra: Vec<Cell>,
        note: &str,
    ) -> bool {
        let tolerance = self.override_tol.unwrap_or(tolerance);
        let pass = deviation <= tolerance;
        let mut row = vec![name.into(), ell.into(), deviation.into(), tolerance.into(), pass.into()];
        row.extend(extra);
        row.push(if note.is_empty() { Cell::Null } else { note.into() });
        self.report.push_row(row);
        let key = match ell {
            Some(l) => format!("{name}[ell={l}]"),
            None => name.to_string(),
        };
        self.report.deviation(key, deviation);
        if !pass {
            self.report.mark(Status::Fail);
        }
        pass
    }
}

fn exact_flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

fn verify_lemmas(config: &RunConfig) -> CliResult<Report> {
    let dim = dim_of(config.n_qubits)?;
    let ell_max = ell_max_of(config)?;
    matrix_envelope(dim)?;
    let mut t = CheckTable::new(config, &[]);

    let table = f_coeff(dim)?;
    let props = f_table_check(&table);
    let exact = "exact rational arithmetic";
    t.check(
        "f.values_in_0_or_2_over_d",
        None,
        exact_flag(props.values_in_set),
        0.0,
        vec![],
        exact,
    );
    t.check("f.symmetric", None, exact_flag(props.symmetric), 0.0, vec![], exact);
    t.check(
        "f.row_sums_one",
        None,
        exact_flag(props.row_sums_one),
        0.0,
        vec![],
        exact,
    );
    t.check(
        "f.convolution_idempotent",
        None,
        exact_flag(props.idempotent),
        0.0,
        vec![],
        exact,
    );
    t.check(
        "f.support_size_half_d",
        None,
        exact_flag(props.support_size_half_d),
        0.0,
        vec![],
        exact,
    );
    let xor = FCoefficientTable::from_xor_classes(dim)?;
    t.check(
        "f.sign_sum_equals_xor_classes",
        None,
        exact_flag(xor == table),
        0.0,
        vec![],
        exact,
    );

    let r = r_map(dim);
    t.check(
        "r.annihilates_off_diagonal_pair_units",
        None,
        off_diagonal_leakage(&r)?,
        tol::ANNIHILATION,
        vec![],
        "",
    );

    for ell in 1..=ell_max {
        let closed = r_pow_closed(dim, ell)?;
        let dev = parallel::max_map_difference(&r.power(ell), &closed, UnitBasis::Pair)?;
        t.check(
            "r_pow.closed_form_vs_composition",
            Some(ell),
            dev,
            tol::CLOSED_FORM,
            vec![],
            "pair-basis moment matrices",
        );

        let iterated = recurrence_iterated(dim, ell)?;
        let closed_coeffs = recurrence_closed(dim, ell)?;
        let dev = recurrence_deviation(&iterated.to_f64(), &closed_coeffs.to_f64());
        let note = if iterated == closed_coeffs {
            "exact rationals agree"
        } else {
            "exact rationals differ"
        };
        t.check(
            "recurrence.closed_form_vs_iteration",
            Some(ell),
            dev,
            tol::RECURRENCE,
            vec![],
            note,
        );

        let p = p_ell(dim, ell)?;
        let c = c_ell_map(dim, ell)?;
        let mix = MomentMap::linear_combination(dim, "mix", vec![(1.0 - p, g_haar(dim)), (p, c.clone())]);
        let dev = parallel::max_map_difference(&closed, &mix, UnitBasis::Product)?;
        t.check(
            "r_pow.haar_plus_remainder_decomposition",
            Some(ell),
            dev,
            tol::DECOMPOSITION,
            vec![],
            "",
        );

        let (min_eig, how) = if dim.pair_dim() <= CHOI_EIGEN_MAX_PAIR_DIM {
            (choi_min_eigenvalue(&c)?, "dense Choi eigensolve")
        } else {
            (choi_gershgorin_bound(&c)?, "Gershgorin bound in the pair basis")
        };
        t.check(
            "remainder.choi_negativity",
            Some(ell),
            (-min_eig).max(0.0),
            tol::CHOI_NEGATIVITY,
            vec![],
            how,
        );

        let (tp, how) = if dim.pair_dim() <= CHOI_EIGEN_MAX_PAIR_DIM {
            (
                choi_tp_deviation(&choi(&c)?, dim.pair_dim())?,
                "Choi partial trace vs identity/d^2",
            )
        } else {
            (trace_preservation_deviation(&c)?, "streamed traces of matrix units")
        };
        t.check(
            "remainder.trace_preservation",
            Some(ell),
            tp,
            tol::TRACE_PRESERVATION,
            vec![],
            how,
        );
    }
    Ok(t.report)
}

fn bracket(config: &RunConfig) -> CliResult<Report> {
    let dim = dim_of(config.n_qubits)?;
    let ell_max = ell_max_of(config)?;
    let full = dim.d() <= MOMENT_MATRIX_MAX_D;
    let mut report = Report::new(
        config.clone(),
        vec![
            "ell",
            "lower_theorem",
            "lower_exact",
            "upper_proof",
            "upper_theorem",
            "certificate",
            "frame_potential_excess",
            "chain_holds",
        ],
    );
    let mut chain_violation: f64 = 0.0;
    let mut cert_dev: f64 = 0.0;
    for ell in 1..=ell_max {
        let b = proof_bracket(dim, ell)?;
        let (cert, fp) = if full {
            let m = r_pow_closed(dim, ell)?;
            (Some(lower_certificate(&m)?), Some(parallel::frame_potential(&m)? - 2.0))
        } else {
            (None, None)
        };
        let violation = (b.lower_theorem - b.lower_exact)
            .max(b.lower_exact - b.upper_proof)
            .max(b.upper_proof - b.upper_theorem)
            .max(0.0);
        chain_violation = chain_violation.max(violation);
        if let Some(c) = cert {
            cert_dev = cert_dev.max((c - b.lower_exact).abs());
        }
        let holds = b.chain_holds();
        if !holds {
            report.mark(Status::Fail);
        }
        report.push_row(vec![
            ell.into(),
            b.lower_theorem.into(),
            b.lower_exact.into(),
            b.upper_proof.into(),
            b.upper_theorem.into(),
            cert.into(),
            fp.into(),
            holds.into(),
        ]);
    }
    report.deviation("chain_violation", chain_violation);
    if full {
        report.deviation("certificate_vs_closed_form", cert_dev);
        if cert_dev > tol::CERTIFICATE {
            report.mark(Status::Fail);
        }
    }
    Ok(report)
}

fn frame_potential(config: &RunConfig) -> CliResult<Report> {
    let dim = dim_of(config.n_qubits)?;
    let ell_max = ell_max_of(config)?;
    matrix_envelope(dim)?;
    let mut report = Report::new(config.clone(), vec!["map", "ell", "frame_potential", "excess"]);
    let haar = parallel::frame_potential(&g_haar(dim))?;
    report.push_row(vec!["haar".into(), Cell::Null, haar.into(), (haar - 2.0).into()]);
    let haar_dev = (haar - 2.0).abs();
    report.deviation("haar_vs_two", haar_dev);
    if haar_dev > tol::HAAR_FRAME_POTENTIAL {
        report.mark(Status::Fail);
    }
    let mut values = Vec::with_capacity(ell_max as usize);
    for ell in 1..=ell_max {
        let fp = parallel::frame_potential(&r_pow_closed(dim, ell)?)?;
        report.push_row(vec!["r_pow".into(), ell.into(), fp.into(), (fp - 2.0).into()]);
        values.push(fp);
    }
    // Strict decrease is only asserted while the excess is above rounding.
    let worst_step = values
        .windows(2)
        .filter(|w| w[0] - 2.0 > tol::HAAR_FRAME_POTENTIAL)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let shortfall = values.iter().map(|v| 2.0 - v).fold(0.0, f64::max);
    if worst_step.is_finite() {
        report.deviation("largest_step_change", worst_step);
    }
    report.deviation("largest_shortfall_below_two", shortfall);
    if worst_step >= 0.0 || shortfall > tol::HAAR_FRAME_POTENTIAL {
        report.mark(Status::Fail);
    }
    Ok(report)
}

fn ell_for_eps(config: &RunConfig) -> CliResult<Report> {
    let dim = dim_of(config.n_qubits)?;
    let eps = config.epsilon.ok_or_else(|| usage("--epsilon is required"))?;
    if !(eps > 0.0 && eps < 2.0) {
        return Err(usage(format!("--epsilon must satisfy 0 < epsilon < 2, got {eps}")));
    }
    let ell = ell_for_epsilon(config.n_qubits, eps)?;
    let upper = theorem1_bounds(dim, ell)?.1;
    let previous = if ell > 1 {
        Some(theorem1_bounds(dim, ell - 1)?.1)
    } else {
        None
    };
    let schedule = segment_schedule(ell);
    let mut report = Report::new(
        config.clone(),
        vec![
            "ell",
            "gate_count",
            "z_segments",
            "x_segments",
            "duration_over_pi",
            "upper_bound",
            "upper_bound_previous_ell",
        ],
    );
    report.push_row(vec![
        ell.into(),
        gate_count(config.n_qubits, ell).into(),
        schedule.z_segments.into(),
        schedule.x_segments.into(),
        schedule.duration_pi.into(),
        upper.into(),
        previous.into(),
    ]);
    report.deviation("epsilon_minus_bound", eps - upper);
    if let Some(p) = previous {
        report.deviation("previous_bound_minus_epsilon", p - eps);
    }
    if upper > eps || previous.is_some_and(|p| p <= eps) {
        report.mark(Status::Fail);
    }
    Ok(report)
}

fn ensemble(config: &RunConfig) -> CliResult<Report> {
    let dim = dim_of(config.n_qubits)?;
    let kind = config.kind.unwrap_or(Kind::Circuit);
    let samples = config.samples.unwrap_or(0);
    if samples < MC_MIN_SAMPLES {
        return Err(usage(format!("--samples must be at least {MC_MIN_SAMPLES}")));
    }
    let ell = config.ell.unwrap_or(1);
    if ell == 0 {
        return Err(usage("--ell must be at least 1"));
    }
    let j_star = config.j_star.unwrap_or(ensembles::DEFAULT_J_STAR);
    if !j_star.is_finite() {
        return Err(usage("--j-star must be finite"));
    }
    let spec = EnsembleSpec {
        n_qubits: config.n_qubits,
        ell,
        kind: EnsembleKind::from(kind),
        seed: config.seed.unwrap_or(0),
        samples,
        j_star,
    };
    let mc_tol = tol::MC_SIGMAS / (samples as f64).sqrt();
    let mut t = CheckTable::new(config, &["std_error"]);
    let ideal = diagonal_design_tensor(dim);

    let exact = match kind {
        Kind::Circuit => Some(layer_moment_tensor(config.n_qubits)?),
        Kind::Hamiltonian => Some(segment_moment_tensor(config.n_qubits, j_star)?),
        Kind::Continuous => None,
    };

    match kind {
        Kind::Circuit => {
            let dev = tensor_deviation(exact.as_ref().expect("computed"), &ideal);
            t.check(
                "layer_exact_vs_diagonal_design",
                None,
                dev,
                tol::EXACT_ENSEMBLE,
                vec![Cell::Null],
                "exhaustive enumeration",
            );
        }
        Kind::Hamiltonian => {
            let seg = exact.as_ref().expect("computed");
            let layer = layer_moment_tensor(config.n_qubits)?;
            let literal = j_star == LITERAL_J_STAR;
            let note = if literal {
                "literal coupling 1/2, see docs/reports.md"
            } else {
                "exhaustive enumeration"
            };
            for (name, dev) in [
                ("segment_exact_vs_circuit_layer", tensor_deviation(seg, &layer)),
                ("segment_exact_vs_diagonal_design", tensor_deviation(seg, &ideal)),
            ] {
                let tolerance = t.override_tol.unwrap_or(tol::EXACT_ENSEMBLE);
                if literal && dev > tolerance {
                    // Expected mismatch: record it without failing the run.
                    t.report.push_row(vec![
                        name.into(),
                        Cell::Null,
                        dev.into(),
                        tolerance.into(),
                        false.into(),
                        Cell::Null,
                        note.into(),
                    ]);
                    t.report.deviation(name, dev);
                    t.report.mark(Status::Diagnostic);
                } else {
                    t.check(name, None, dev, tol::EXACT_ENSEMBLE, vec![Cell::Null], note);
                }
            }
        }
        Kind::Continuous => {}
    }

    let sampled = parallel::ensemble_moment_mc(&spec)?;
    let (name, reference, what) = match &exact {
        Some(e) => ("layer_sampled_vs_exact", e, "exact single-layer tensor"),
        None => ("layer_sampled_vs_diagonal_design", &ideal, "ideal diagonal twirl"),
    };
    let dev = tensor_deviation(&sampled.tensor, reference);
    t.check(
        name,
        None,
        dev,
        mc_tol,
        vec![sampled.std_error.into()],
        &format!("tolerance 5/sqrt(M) against the {what}"),
    );
    t.report.deviation("layer_std_error", sampled.std_error);

    if config.n_qubits <= CONSTRUCTION_MC_MAX_QUBITS {
        let probes = default_probes(dim);
        let composed = construction_moment_exact(&spec)?;
        let est = parallel::construction_twirl_mc(&spec, &probes)?;
        let dd = dim.pair_dim();
        let mut dev: f64 = 0.0;
        for (img, &(a, b)) in est.images.iter().zip(&probes) {
            dev = dev.max(img.max_abs_diff(&composed.apply(&Operator::unit(dd, a, b))?));
        }
        t.check(
            "construction_sampled_vs_layerwise_composition",
            Some(ell),
            dev,
            mc_tol,
            vec![est.std_error.into()],
            "full construction on matrix-unit probes",
        );
        t.report.deviation("construction_std_error", est.std_error);
    }
    Ok(t.report)
}
