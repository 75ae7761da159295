//! Acceptance gate: twelve end-to-end criteria, one test and one printed
//! pass line each (run with --nocapture to see them). Tolerances are
//! pinned here on purpose; loosening one is a contract change, not a
//! cleanup.

use std::time::Instant;

use rand::Rng;
use steinlab_core::bayes::{bayes_r, minimaxity_certificate, BayesPriorSpec, RwTable};
use steinlab_core::config::ExperimentConfig;
use steinlab_core::estimator::{
    minimax_a_bound, minimax_a_bound_mc, EstimatorKind, EstimatorSpec, OrthantFamily,
};
use steinlab_core::f_independence::verify_f_independence;
use steinlab_core::field::{divergence_fd, VectorField};
use steinlab_core::identities::{
    orthant_domination_check, q_identity_check, sphere_ball_check, stein_identity_check,
    unknown_scale_cross_term_check,
};
use steinlab_core::model::{sample_joint, Atom, Family, MixingLaw, ModelSpec};
use steinlab_core::risk::{mc_risk, mc_risk_difference, unbiased_risk_difference};
use steinlab_core::rng::replicate_stream;
use steinlab_core::shrink::ShrinkFn;

const SEED: u64 = 20260816;

fn normal(theta: Vec<f64>, k: usize) -> ModelSpec {
    ModelSpec::new(Family::Normal, theta, 1.0, k)
}

fn student5(theta: Vec<f64>, k: usize) -> ModelSpec {
    ModelSpec::new(Family::StudentT { df: 5.0 }, theta, 1.0, k)
}

fn mixture(theta: Vec<f64>, k: usize) -> ModelSpec {
    let mixing = MixingLaw::Atoms {
        atoms: vec![Atom { v: 1.0, w: 0.5 }, Atom { v: 2.0, w: 0.5 }],
    };
    ModelSpec::new(Family::ScaleMixture { mixing }, theta, 1.0, k)
}

fn three_families(theta: Vec<f64>, k: usize) -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("normal", normal(theta.clone(), k)),
        ("student_t(5)", student5(theta.clone(), k)),
        ("two-point mixture", mixture(theta, k)),
    ]
}

fn est(kind: EstimatorKind) -> EstimatorSpec {
    EstimatorSpec::new(kind)
}

fn finish(label: &str, budget_s: f64, start: Instant, detail: String) {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < budget_s,
        "[{label}] exceeded its {budget_s} s budget: {elapsed:.2} s"
    );
    println!("[{label}] pass in {elapsed:.2} s: {detail}");
}

#[test]
fn criterion_01_james_stein_risk_at_origin() {
    let start = Instant::now();
    let model = normal(vec![0.0; 5], 0);
    let r = mc_risk(
        &model,
        &est(EstimatorKind::JsKnown { a: 3.0 }),
        100_000,
        SEED,
    )
    .unwrap();
    let gap = (r.mean_loss - 2.0).abs();
    assert!(
        gap <= 3.0 * r.std_error,
        "risk {} vs exact 2.0 (3 se = {})",
        r.mean_loss,
        3.0 * r.std_error
    );
    finish(
        "criterion 01",
        5.0,
        start,
        format!("risk {:.4} vs exact 2.0, se {:.4}", r.mean_loss, r.std_error),
    );
}

#[test]
fn criterion_02_identity_risk_matches_closed_form_per_family() {
    let start = Instant::now();
    let p = 6;
    let mut detail = String::new();
    for (name, model) in three_families(vec![0.0; p], 0) {
        let exact = p as f64 * model.coordinate_variance().unwrap();
        let r = mc_risk(&model, &est(EstimatorKind::Identity), 100_000, SEED).unwrap();
        assert!(
            (r.mean_loss - exact).abs() <= 3.0 * r.std_error,
            "{name}: {} vs exact {exact}",
            r.mean_loss
        );
        detail.push_str(&format!("{name} {:.3}/{exact:.3} ", r.mean_loss));
    }
    finish("criterion 02", 10.0, start, detail);
}

#[test]
fn criterion_03_unknown_scale_shrinkage_beats_identity_per_family() {
    let start = Instant::now();
    let mut detail = String::new();
    for (name, model) in three_families(vec![0.0; 6], 4) {
        let d = mc_risk_difference(
            &model,
            &est(EstimatorKind::JsUnknown { a: 4.0 }),
            &est(EstimatorKind::Identity),
            100_000,
            SEED,
        )
        .unwrap();
        assert!(
            d.mean_difference < -3.0 * d.std_error,
            "{name}: difference {} not significantly negative (se {})",
            d.mean_difference,
            d.std_error
        );
        detail.push_str(&format!("{name} {:.3}({:.3}) ", d.mean_difference, d.std_error));
    }
    finish("criterion 03", 30.0, start, detail);
}

#[test]
fn criterion_04_unbiased_difference_statistic_matches_paired_monte_carlo() {
    let start = Instant::now();
    let p = 6;
    let dir: Vec<f64> = vec![1.0 / (p as f64).sqrt(); p];
    let field = VectorField::js(4.0);
    let mut cells = 0;
    for norm in [0.0, 2.0, 10.0] {
        let theta: Vec<f64> = dir.iter().map(|d| d * norm).collect();
        for (name, model) in three_families(theta, 4) {
            let batch = sample_joint(&model, 100_000, SEED ^ 0xa5a5).unwrap();
            let stat = unbiased_risk_difference(&batch, &field).unwrap();
            let mc = mc_risk_difference(
                &model,
                &est(EstimatorKind::JsUnknown { a: 4.0 }),
                &est(EstimatorKind::Identity),
                100_000,
                SEED ^ 0x5a5a,
            )
            .unwrap();
            let tol = 3.0 * stat.se.hypot(mc.std_error);
            assert!(
                (stat.mean - mc.mean_difference).abs() <= tol,
                "{name} at norm {norm}: statistic {} vs paired {} (tol {tol})",
                stat.mean,
                mc.mean_difference
            );
            cells += 1;
        }
    }
    finish(
        "criterion 04",
        120.0,
        start,
        format!("{cells} family-by-norm cells agree within 3 combined se"),
    );
}

#[test]
fn criterion_05_all_identity_checks_pass_at_a_million_replicates() {
    let start = Instant::now();
    let n = 1_000_000;
    let theta = vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.2];
    let fields = [
        ("js", VectorField::js(4.0)),
        (
            "baranchik",
            VectorField::baranchik(ShrinkFn::Rational { bound: 1.0 }),
        ),
    ];
    let mut passed = 0;
    for (fname, field) in &fields {
        let stein = stein_identity_check(&normal(theta.clone(), 0), field, n, SEED).unwrap();
        assert!(stein.pass, "{fname}: stein identity off: {stein:?}");
        passed += 1;

        for model in [normal(theta.clone(), 0), student5(theta.clone(), 0)] {
            let q = q_identity_check(&model, field, n, SEED).unwrap();
            assert!(q.pass, "{fname}: radial-Q identity off: {q:?}");
            passed += 1;
        }

        let sb = sphere_ball_check(&theta, 2.0, field, n, SEED).unwrap();
        assert!(sb.pass, "{fname}: sphere/ball identity off: {sb:?}");
        passed += 1;

        for model in [normal(theta.clone(), 4), student5(theta.clone(), 4)] {
            let rep = unknown_scale_cross_term_check(&model, field, n, SEED).unwrap();
            assert!(
                rep.pass && rep.cross_term.pass && rep.squared_norm.pass,
                "{fname}: unknown-scale identity off: {rep:?}"
            );
            passed += 1;
        }
    }
    finish(
        "criterion 05",
        300.0,
        start,
        format!("{passed} identity checks at n = 1e6"),
    );
}

#[test]
fn criterion_06_analytic_divergence_matches_finite_differences() {
    let start = Instant::now();
    let p = 6;
    let fields = [
        VectorField::constant(vec![0.4, -1.0, 2.0, 0.0, 0.7, -0.3]),
        VectorField::linear(
            (0..p)
                .map(|i| (0..p).map(|j| ((i * p + j) as f64).sin()).collect())
                .collect(),
        ),
        VectorField::js(2.5),
        VectorField::baranchik(ShrinkFn::Rational { bound: 1.3 }),
        VectorField::residual_baranchik(ShrinkFn::Rational { bound: 0.8 }, 4),
    ];
    let mut checked = 0;
    for (fi, field) in fields.iter().enumerate() {
        let mut rng = replicate_stream(SEED, fi as u64);
        let mut i = 0;
        while i < 100 {
            let x: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            if x.iter().map(|v| v * v).sum::<f64>() < 0.25 {
                continue;
            }
            let usq = Some(rng.random_range(0.5..4.0));
            let exact = field.divergence_x(&x, usq).unwrap();
            let fd = divergence_fd(field, &x, usq, 1e-5).unwrap();
            let tol = 1e-6f64.max(1e-4 * exact.abs());
            assert!(
                (exact - fd).abs() <= tol,
                "field {fi}: divergence {exact} vs fd {fd} at {x:?}"
            );
            i += 1;
            checked += 1;
        }
    }
    finish(
        "criterion 06",
        1.0,
        start,
        format!("{checked} random points across {} fields", fields.len()),
    );
}

#[test]
fn criterion_07_random_priors_give_monotone_bounded_convergent_factors() {
    let start = Instant::now();
    let mut rng = replicate_stream(SEED, 7);
    let grid = RwTable::log_grid(1e-3, 1e6, 200);
    for trial in 0..20 {
        let p = rng.random_range(4usize..10);
        let k = rng.random_range(1usize..6);
        let b = 0.3 + rng.random_range(0.0..1.0) * (p as f64 - 2.3);
        let a = -0.5 * k as f64 - 0.25 + rng.random_range(0.0..1.0) * 3.0;
        let prior = BayesPriorSpec::new(a, b, p, k).unwrap();
        let bound = prior.shrink_bound().unwrap();
        let table = RwTable::build(&prior, &grid).unwrap();
        assert!(
            table.monotone_violation() <= 1e-10,
            "trial {trial} ({a}, {b}, {p}, {k}): violation {}",
            table.monotone_violation()
        );
        assert!(
            table.max_r() <= bound + 1e-8,
            "trial {trial}: max r {} above bound {bound}",
            table.max_r()
        );
        let tail = bayes_r(&prior, 1e8).unwrap();
        assert!(
            (tail - bound).abs() <= 1e-3,
            "trial {trial} ({a}, {b}, {p}, {k}): r(1e8) = {tail} vs limit {bound}"
        );
    }
    finish(
        "criterion 07",
        30.0,
        start,
        "20 random priors: monotone, bounded, converged at w = 1e8".into(),
    );
}

#[test]
fn criterion_08_posterior_mean_is_family_independent() {
    let start = Instant::now();
    let prior = BayesPriorSpec::new(0.0, 0.5, 1, 1).unwrap();
    let families = [Family::Normal, Family::StudentT { df: 5.0 }];
    let mut worst_cross = 0.0f64;
    let mut worst_closed = 0.0f64;
    for (x, u) in [(0.5, 1.0), (1.5, 0.8), (3.0, 1.2)] {
        let rep = verify_f_independence(&prior, &[x], &[u], &families).unwrap();
        assert!(
            rep.max_cross_family <= 1e-4 && rep.max_vs_closed_form <= 1e-4 && rep.pass,
            "at ({x}, {u}): cross {} closed {}",
            rep.max_cross_family,
            rep.max_vs_closed_form
        );
        worst_cross = worst_cross.max(rep.max_cross_family);
        worst_closed = worst_closed.max(rep.max_vs_closed_form);
    }
    finish(
        "criterion 08",
        60.0,
        start,
        format!("worst cross-family gap {worst_cross:.2e}, vs closed form {worst_closed:.2e}"),
    );
}

#[test]
fn criterion_09_minimaxity_certificate_accepts_and_rejects_correctly() {
    let start = Instant::now();
    let good = minimaxity_certificate(&BayesPriorSpec::new(0.0, 4.0, 6, 4).unwrap()).unwrap();
    assert!(good.certified, "valid prior rejected: {good:?}");

    let bad = minimaxity_certificate(&BayesPriorSpec::new(0.0, 5.0, 6, 4).unwrap()).unwrap();
    assert!(!bad.certified, "b = p - 1 prior was certified");
    let clause = bad.clause("prior_power_range").unwrap();
    assert!(
        !clause.satisfied,
        "the b <= p - 2 clause should be the one flagged: {bad:?}"
    );
    finish(
        "criterion 09",
        1.0,
        start,
        "certified (6, 4, b = 4, a = 0); rejected b = 5 via the prior power clause".into(),
    );
}

#[test]
fn criterion_10_orthant_shrinkage_dominates_projection_on_the_grid() {
    let start = Instant::now();
    let p = 6;
    let grid: Vec<Vec<f64>> = [0.0, 0.5, 2.0, 10.0]
        .iter()
        .map(|m| vec![*m; p])
        .collect();
    let model = normal(vec![0.0; p], 4);
    let rep = orthant_domination_check(
        &model,
        &OrthantFamily::ScaledJs { factor: 1.0 },
        100_000,
        SEED,
        &grid,
    )
    .unwrap();
    for row in &rep.rows {
        assert!(
            row.pass,
            "difference significantly positive at norm {}: {} (se {})",
            row.theta_norm, row.mean_difference, row.std_error
        );
    }
    let origin = &rep.rows[0];
    assert!(
        origin.mean_difference < -3.0 * origin.std_error,
        "no strict improvement at the origin: {} (se {})",
        origin.mean_difference,
        origin.std_error
    );
    finish(
        "criterion 10",
        60.0,
        start,
        format!(
            "4 grid points never worse; origin gain {:.3} ({:.1} se)",
            -origin.mean_difference,
            -origin.mean_difference / origin.std_error
        ),
    );
}

#[test]
fn criterion_11_minimax_shrinkage_bound_analytic_and_monte_carlo() {
    let start = Instant::now();
    let model = normal(vec![0.0; 4], 0);
    let exact = minimax_a_bound(&model, 10, SEED).unwrap();
    assert!(exact.analytic);
    assert_eq!(exact.value, 0.5, "closed form should be exactly (p - 2)/p");

    let mc = minimax_a_bound_mc(&model, 1_000_000, SEED).unwrap();
    let se = mc.se.expect("monte carlo path reports a standard error");
    assert!(
        (mc.value - 0.5).abs() <= 3.0 * se,
        "monte carlo bound {} vs 0.5 (se {se})",
        mc.value
    );
    finish(
        "criterion 11",
        60.0,
        start,
        format!("analytic 0.5 exactly; monte carlo {:.5} (se {:.1e})", mc.value, se),
    );
}

#[test]
fn criterion_12_result_tables_are_byte_identical_across_thread_counts() {
    let start = Instant::now();
    let base = r#"
        n = 100000
        seed = 20260816

        [[models]]
        name = "normal5"
        theta = [0.0, 0.0, 0.0, 0.0, 0.0]
        p = 5
        family = { type = "normal" }

        [[models]]
        name = "normal64"
        theta = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        p = 6
        k = 4
        family = { type = "normal" }

        [[models]]
        name = "student64"
        theta = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        p = 6
        k = 4
        family = { type = "student_t", df = 5.0 }

        [[models]]
        name = "mixture64"
        theta = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        p = 6
        k = 4
        [models.family]
        type = "scale_mixture"
        [models.family.mixing]
        type = "atoms"
        atoms = [ { v = 1.0, w = 0.5 }, { v = 2.0, w = 0.5 } ]

        [[estimators]]
        name = "identity"
        type = "identity"

        [[estimators]]
        name = "js3"
        type = "js_known"
        a = 3.0

        [[estimators]]
        name = "jsu4"
        type = "js_unknown"
        a = 4.0

        [[checks]]
        operation = "mc_risk"
        model = "normal5"
        estimator = "js3"

        [[checks]]
        operation = "mc_risk_difference"
        model = "normal64"
        estimator_a = "jsu4"
        estimator_b = "identity"

        [[checks]]
        operation = "mc_risk_difference"
        model = "student64"
        estimator_a = "jsu4"
        estimator_b = "identity"

        [[checks]]
        operation = "mc_risk_difference"
        model = "mixture64"
        estimator_a = "jsu4"
        estimator_b = "identity"
    "#;
    let mut outputs = Vec::new();
    for threads in [Some(1), Some(3)] {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::from_toml_str(base).unwrap();
        cfg.threads = threads;
        cfg.output.dir = tmp.path().join("out").to_string_lossy().into_owned();
        let manifest = steinlab_core::config::run(&cfg).unwrap();
        assert!(manifest.pass);
        let csv = std::fs::read(tmp.path().join("out/results.csv")).unwrap();
        let json = std::fs::read(tmp.path().join("out/results.json")).unwrap();
        outputs.push((csv, json));
    }
    assert_eq!(
        outputs[0].0, outputs[1].0,
        "results.csv differs between 1 and 3 worker threads"
    );
    assert_eq!(
        outputs[0].1, outputs[1].1,
        "results.json differs between 1 and 3 worker threads"
    );
    finish(
        "criterion 12",
        120.0,
        start,
        "results.csv and results.json byte-identical at 1 and 3 threads".into(),
    );
}
