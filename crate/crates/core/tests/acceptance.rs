//! Acceptance criteria 1 to 12. Each test prints one `criterion N: PASS|FAIL` line.
//! Tests hold a shared lock so the wall-clock budgets are measured without
//! interference from the other criteria.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use mgale::davenport::{gram_matrix, gram_quadrature, smoothness_estimate, zeta, DavenportSpec};
use mgale::dilated_series::{contraction_audit, gaposhkin_example, oscillation_diagnostic, Freq, SeriesSpec, Verdict};
use mgale::ergodic_transfer::{transfer_apply, transfer_norm};
use mgale::experiment::{list_suites, run, ExperimentConfig};
use mgale::par::Exec;
use mgale::randomized::{
    case_rng, contraction_batch, doob_batch, dyadic_approx_batch, failures, parseval_batch, random_trig_poly,
    rio_batch, transfer_batch, DEFAULT_SEED,
};
use mgale::report::AuditReport;
use mgale::riesz_symbolic::{
    cylinder_weights, decreasing_criterion_symbolic, equilibrium_state, est_pn_audit, pn_apply, riesz_cosine_family,
    riesz_fourier_coeff, riesz_partial_density, riesz_potentials, torus_cylinder_weights, RieszProductSpec,
};
use mgale::tail::{fit, TailModel, TailSpec};
use mgale::torus_fn::FourierFunction;
use num_complex::Complex64;
use serde_json::{json, Value};

const PARSEVAL_BUDGET_S: f64 = 10.0;
const RIO_DOOB_BUDGET_S: f64 = 60.0;
const GRAM_BUDGET_S: f64 = 120.0;
const GAPOSHKIN_BUDGET_S: f64 = 300.0;
const GRAM_TOL: f64 = 1e-6;
const GRAM_RESOLUTION: u32 = 22;
const GRAM_TRUNCATION: u64 = 4096;
const EIGEN_STABILITY: f64 = 0.05;
const SLOPE_TOL: f64 = 0.05;
const TRANSFER_CASES: usize = 100;
const OMEGA_RESIDUAL: f64 = 0.1;
const RIESZ_COEFF_TOL: f64 = 1e-10;
const RIESZ_MEAN_TOL: f64 = 1e-12;
const CYLINDER_TOL: f64 = 1e-6;
const EST_PN_MARGIN: f64 = 0.2;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: &str, pass: bool, detail: String) {
    println!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn first_failure(reports: &[AuditReport]) -> String {
    reports
        .iter()
        .find(|r| !r.passed)
        .map(|r| format!("{} lhs={:e} rhs={:e}", r.context, r.lhs, r.rhs))
        .unwrap_or_default()
}

#[test]
fn criterion_01_telescoping_parseval() {
    let _g = serial();
    let t = Instant::now();
    let reports = parseval_batch(1000, 12, DEFAULT_SEED, Exec::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let bad = failures(&reports);
    let pass = reports.len() == 1000 && bad == 0 && secs < PARSEVAL_BUDGET_S;
    verdict("1", pass, format!("{} cases, {bad} failures, {secs:.2}s {}", reports.len(), first_failure(&reports)));
}

#[test]
fn criterion_02_rio_and_doob() {
    let _g = serial();
    let ps = [1.5, 2.0, 3.0, 4.0, 8.0];
    let t = Instant::now();
    let rio = rio_batch(10_000, &ps, 8, DEFAULT_SEED, Exec::default()).unwrap();
    let doob = doob_batch(10_000, &ps, 8, DEFAULT_SEED, Exec::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let (br, bd) = (failures(&rio), failures(&doob));
    let pass = rio.len() == 10_000 && doob.len() == 10_000 && br + bd == 0 && secs < RIO_DOOB_BUDGET_S;
    verdict(
        "2",
        pass,
        format!(
            "rio {br}/{} doob {bd}/{} failures, {secs:.2}s {}{}",
            rio.len(),
            doob.len(),
            first_failure(&rio),
            first_failure(&doob)
        ),
    );
}

#[test]
fn criterion_03_lemme_dyadic_factor_two() {
    let _g = serial();
    let ps = [1.5, 2.0, 4.0, f64::INFINITY];
    let reports = dyadic_approx_batch(500, &ps, 12, DEFAULT_SEED, Exec::default()).unwrap();
    let bad = failures(&reports);
    // every case is checked at each exponent and each level 0..=12
    let pass = reports.len() == 500 * ps.len() * 13 && bad == 0;
    verdict("3", pass, format!("{} level checks, {bad} failures {}", reports.len(), first_failure(&reports)));
}

#[test]
fn criterion_04_contraction_and_remark() {
    let _g = serial();
    let mixed = contraction_batch(500, &[1.5, 2.0, 4.0, f64::INFINITY], 12, DEFAULT_SEED, Exec::default()).unwrap();
    let l2 = contraction_batch(500, &[2.0], 12, DEFAULT_SEED + 1, Exec::default()).unwrap();
    let remarks = l2.iter().filter(|r| r.context.contains("remark")).count();
    let bad = failures(&mixed) + failures(&l2);
    let f = random_trig_poly(&mut case_rng(DEFAULT_SEED, 0), 64, 12).unwrap();
    let zero = contraction_audit(&f, 3 << 5, 5, 2.0, 12).unwrap();
    let zero_lhs = zero.iter().all(|r| r.lhs == 0.0 && r.passed);
    let pass = bad == 0 && remarks == 500 && zero_lhs;
    verdict(
        "4",
        pass,
        format!(
            "{} + {} checks, {bad} failures, {remarks} remark checks, l=0 lhs exactly 0: {zero_lhs} {}{}",
            mixed.len(),
            l2.len(),
            first_failure(&mixed),
            first_failure(&l2)
        ),
    );
}

fn gram_freqs() -> Vec<u64> {
    let mut f: Vec<u64> = (1..=8).collect();
    f.extend((4..=8).map(|k| 1u64 << k));
    f
}

#[test]
fn criterion_05_gram_oracle() {
    let _g = serial();
    let freqs = gram_freqs();
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut diag = f64::NAN;
    for lambda in [0.75, 1.0, 1.5] {
        let exact = gram_matrix(&freqs, lambda).unwrap();
        let quad = gram_quadrature(&freqs, lambda, GRAM_TRUNCATION, GRAM_RESOLUTION).unwrap();
        for (a, b) in exact.entries.iter().flatten().zip(quad.entries.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
        if lambda == 1.0 {
            diag = exact.entries.iter().enumerate().map(|(i, r)| (r[i] - PI * PI / 12.0).abs()).fold(0.0, f64::max);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = worst < GRAM_TOL && diag < GRAM_TOL && secs < GRAM_BUDGET_S;
    verdict("5", pass, format!("max |closed - quadrature| = {worst:.3e}, diagonal error {diag:.3e}, {secs:.2}s"));
}

#[test]
fn criterion_06_riesz_sequence_evidence() {
    let _g = serial();
    let bound = 0.1 * zeta(1.5).unwrap() / 2.0;
    let eig = |k: u32| gram_matrix(&(0..=k).map(|i| 1u64 << i).collect::<Vec<_>>(), 0.75).unwrap().eigen_bounds.0;
    let (e8, e16) = (eig(8), eig(16));
    let drift = (e16 - e8).abs() / e8;
    let pass = e8 > bound && e16 > bound && drift <= EIGEN_STABILITY;
    verdict("6", pass, format!("min eigenvalue K=8 {e8:.6}, K=16 {e16:.6}, bound {bound:.6}, drift {drift:.4}"));
}

#[test]
fn criterion_07_smoothness_exponents() {
    let _g = serial();
    let mut rows = Vec::new();
    let mut pass = true;
    for (lambda, want) in [(0.75, 0.25), (0.9, 0.4), (1.0, 0.5)] {
        let slope = smoothness_estimate(&DavenportSpec::for_resolution(lambda, 16).unwrap(), 2.0, 16).unwrap();
        pass &= (slope - want).abs() <= SLOPE_TOL;
        rows.push(format!("lambda={lambda}: {slope:.4} (want {want})"));
    }
    verdict("7", pass, rows.join(", "));
}

#[test]
fn criterion_08_transfer_operator() {
    let _g = serial();
    let reports = transfer_batch(TRANSFER_CASES, 12, DEFAULT_SEED, Exec::default()).unwrap();
    let bad = failures(&reports);
    let sine = FourierFunction::sine(1, 1.0).unwrap();
    let kills_sine = transfer_apply(&sine).is_empty();
    let mut tests: Vec<FourierFunction> =
        (0..TRANSFER_CASES).map(|i| random_trig_poly(&mut case_rng(DEFAULT_SEED + 8, i), 256, 16).unwrap()).collect();
    for lambda in [0.75, 1.0, 1.5] {
        tests.push(DavenportSpec::new(lambda, 1024).unwrap().fourier().unwrap());
    }
    tests.push(gaposhkin_example(1, 60).unwrap().generator);
    tests.push(sine);
    let monotone = tests.iter().all(|f| {
        let norms: Vec<f64> = (0..=24).map(|n| transfer_norm(f, n)).collect();
        norms.windows(2).all(|w| w[1] <= w[0])
    });
    let pass = bad == 0 && reports.len() >= TRANSFER_CASES && kills_sine && monotone;
    verdict(
        "8",
        pass,
        format!(
            "{} form/duality checks, {bad} failures, L(sin)=0: {kills_sine}, non-increasing on {} functions: {monotone} {}",
            reports.len(),
            tests.len(),
            first_failure(&reports)
        ),
    );
}

/// `||tau_h f - f||_2` at `h = r / d`, computed from the Fourier coefficients with
/// exact modular phases.
fn shift_l2(terms: &[(u64, f64)], r: u64, d: u64) -> f64 {
    terms
        .iter()
        .map(|&(phase_unit, w)| {
            let ph = ((phase_unit as u128 * r as u128) % d as u128) as f64 / d as f64;
            4.0 * w * (PI * ph).sin().powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// `omega_2(2^{-n}, f)` for a real `f` with positive frequencies `m`, as the sup of
/// [`shift_l2`] over `h = r / (2^n q)`, `r = 1..=q`, for odd `q`.
fn omega2_fourier(f: &FourierFunction, n: u32, q: u64) -> f64 {
    let d = (1u64 << n) * q;
    let terms: Vec<(u64, f64)> =
        f.iter().filter(|(m, _)| *m > 0).map(|(m, c)| ((m as u64) % d, 2.0 * c.norm_sqr())).collect();
    (1..=q).map(|r| shift_l2(&terms, r, d)).fold(0.0, f64::max)
}

#[test]
fn criterion_09_gaposhkin_exhibits() {
    let _g = serial();
    let t = Instant::now();
    let ns: Vec<u32> = (6..=12).collect();
    let generator = gaposhkin_example(1, 60).unwrap().generator;
    let omegas: Vec<f64> = ns.iter().map(|n| omega2_fourier(&generator, *n, 3u64.pow(9))).collect();
    let xs: Vec<f64> = ns.iter().map(|n| *n as f64).collect();
    let model = TailModel::PowerLog { exponent: 0.5, log_exponent: 1.0, scale: 1.0 };
    let tail = fit(TailSpec::Declared(model), &xs, &omegas).unwrap();
    let a_pass = tail.max_log_residual < OMEGA_RESIDUAL;

    let checkpoints: Vec<usize> = (4..=12).map(|k| 1usize << k).collect();
    let k = 2 * checkpoints[checkpoints.len() - 1] + 1;
    let gap = gaposhkin_example(1, k).unwrap();
    let b = oscillation_diagnostic(&gap, &checkpoints, 200, DEFAULT_SEED).unwrap();
    let b_pass = b.verdict == Verdict::Diverging;

    let geometric: Vec<f64> = (1..=k).map(|i| 0.5f64.powi(i as i32)).collect();
    let freqs: Vec<Freq> = (1..=k as u32).map(Freq::pow2).collect();
    let c_spec = SeriesSpec::real(&geometric, freqs, gap.generator.clone()).unwrap();
    let c = oscillation_diagnostic(&c_spec, &checkpoints, 200, DEFAULT_SEED).unwrap();
    let c_pass = c.verdict == Verdict::Converging;
    let secs = t.elapsed().as_secs_f64();

    let shown: Vec<String> = omegas.iter().map(|w| format!("{w:.4}")).collect();
    let medians: Vec<String> = b.median.iter().map(|m| format!("{m:.3}")).collect();
    let detail = format!(
        "(a) omega_2 n=6..12 [{}] residual vs 1/(sqrt(n) ln n) {:.3} (limit {OMEGA_RESIDUAL}): {}; \
         (b) verdict {} medians [{}]: {}; (c) verdict {}: {}; {secs:.1}s",
        shown.join(", "),
        tail.max_log_residual,
        if a_pass { "ok" } else { "FAIL" },
        b.verdict,
        medians.join(", "),
        if b_pass { "ok" } else { "FAIL" },
        c.verdict,
        if c_pass { "ok" } else { "FAIL" },
    );
    verdict("9", a_pass && b_pass && c_pass && secs < GAPOSHKIN_BUDGET_S, detail);
}

fn riesz_spec(depth: usize, active: usize) -> RieszProductSpec {
    let lambdas: Vec<u64> = (0..=depth as u32).map(|n| 3u64.pow(n)).collect();
    let cs = (0..=depth)
        .map(|n| if n < active { Complex64::from_polar(0.8, 0.7 * n as f64 + 0.3) } else { Complex64::new(0.0, 0.0) })
        .collect();
    RieszProductSpec::new(lambdas, cs, true).unwrap()
}

#[test]
fn criterion_10_riesz_products() {
    let _g = serial();
    let spec = riesz_spec(12, 6);
    let n = 5;
    let j = 12;
    let density = riesz_partial_density(&spec, n, j).unwrap();
    let len = density.len() as f64;
    let lambda0 = spec.lambdas[0] as i64;
    let quad: Complex64 = density
        .samples()
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (lambda0 as f64) * i as f64 / len))
        .sum::<Complex64>()
        / len;
    let exact = riesz_fourier_coeff(&spec, n, lambda0).unwrap();
    let half_c0 = spec.cs[0] / 2.0;
    let coeff_err = (exact - quad).norm().max((exact - half_c0).norm());
    let mean_err = (density.mean() - 1.0).norm();
    let floor: f64 = spec.cs[..=n].iter().map(|c| 1.0 - c.norm()).product();
    let min_density = density.real_parts().into_iter().fold(f64::INFINITY, f64::min);

    let (space, pot) = riesz_potentials(&spec, 12).unwrap();
    let one = vec![1.0; space.words()];
    let exact_one = (0..=12).all(|m| pn_apply(&space, &pot, &one, m).unwrap().iter().all(|v| *v == 1.0));
    let mu = equilibrium_state(&space, &pot).unwrap();
    let mut cyl_err = 0.0f64;
    for level in 1..=6 {
        let sym = cylinder_weights(&space, &mu, level).unwrap();
        let tor = torus_cylinder_weights(&spec, n, level).unwrap();
        cyl_err = sym.iter().zip(&tor).map(|(a, b)| (a - b).abs()).fold(cyl_err, f64::max);
    }
    let pass = coeff_err < RIESZ_COEFF_TOL
        && mean_err < RIESZ_MEAN_TOL
        && min_density >= floor - 1e-12
        && exact_one
        && cyl_err < CYLINDER_TOL;
    verdict(
        "10",
        pass,
        format!(
            "coefficient error {coeff_err:.2e}, mean error {mean_err:.2e}, min density {min_density:.5} >= {floor:.5}, \
             P_n 1 = 1 exactly: {exact_one}, cylinder error {cyl_err:.2e}"
        ),
    );
}

#[test]
fn criterion_11_est_pn_decay() {
    let _g = serial();
    let depth = 8;
    let spec = riesz_spec(depth, depth + 1);
    let (space, pot) = riesz_potentials(&spec, depth).unwrap();
    let mu = equilibrium_state(&space, &pot).unwrap();
    let fs = riesz_cosine_family(&spec, &space, &mu).unwrap();
    let alpha = 1.0;
    let est = est_pn_audit(&space, &pot, &fs, alpha, 10.0).unwrap();
    let slope_ok = est.slope <= -alpha + EST_PN_MARGIN;
    let a = [1.0, 0.5, 0.25];
    let finite = decreasing_criterion_symbolic(est.fitted_c, &a, 1.0).unwrap();
    let infinite = decreasing_criterion_symbolic(est.fitted_c, &a, 0.4).unwrap();
    let pass = slope_ok && est.report.passed && finite.is_finite() && infinite == f64::INFINITY;
    let gaps: Vec<String> = est.by_gap.iter().map(|(g, v)| format!("{g}:{v:.2e}")).collect();
    verdict(
        "11",
        pass,
        format!(
            "slope {} (limit {}), sup by gap [{}], criterion alpha=1 {finite:.4}, alpha=0.4 {infinite}",
            est.slope,
            -alpha + EST_PN_MARGIN,
            gaps.join(" ")
        ),
    );
}

fn suite_configs() -> Vec<Value> {
    let riesz = json!({"lambdas": [1, 3, 9, 27, 81], "cs": [[0.5, 0.1], [0.5, 0.1], [0.5, 0.1], [0.5, 0.1], [0.5, 0.1]], "strict": true});
    let series = json!({"terms": 40, "coeffs": "geometric:0.5", "freqs": "pow:2", "generator": "sine"});
    let divergent = json!({"terms": 40, "coeffs": "power:0.5", "freqs": "pow:2", "generator": "sine"});
    vec![
        json!({"kind": "audit", "suite": "parseval", "cases": 20, "seed": 11}),
        json!({"kind": "audit", "suite": "rio", "cases": 20, "seed": 11}),
        json!({"kind": "audit", "suite": "doob", "cases": 20, "seed": 11}),
        json!({"kind": "audit", "suite": "lemme-dyadic", "cases": 8, "resolution": 10, "seed": 11}),
        json!({"kind": "audit", "suite": "contraction", "cases": 8, "resolution": 10, "seed": 11}),
        json!({"kind": "audit", "suite": "theo-gen", "cases": 8, "seed": 11}),
        json!({"kind": "audit", "suite": "theo-dilated", "cases": 4, "resolution": 10, "seed": 11}),
        json!({"kind": "audit", "suite": "transfer", "cases": 8, "seed": 11}),
        json!({"kind": "dilated", "suite": "oscillation", "series": series, "checkpoints": [2, 4, 8], "samples": 100, "seed": 11}),
        json!({"kind": "dilated", "suite": "gaposhkin", "checkpoints": [4, 8, 16], "samples": 100, "seed": 11}),
        json!({"kind": "dilated", "suite": "nsc-probe", "series": divergent, "p": 4.0, "riesz_lower": 0.5, "checkpoints": [4, 8], "samples": 100, "seed": 11}),
        json!({"kind": "dilated", "suite": "dilated-criteria", "series": series, "resolution": 10}),
        json!({"kind": "davenport", "suite": "gram", "lambda": 0.75, "freqs": "pow:2:6", "quadrature": {"truncation": 64, "resolution": 14}}),
        json!({"kind": "davenport", "suite": "smoothness", "lambda": 0.75, "resolution": 12}),
        json!({"kind": "ergodic", "suite": "transfer-decay", "generator": "sine", "steps": 8}),
        json!({"kind": "ergodic", "suite": "ergodic-series", "generator": "sine", "coeffs": "geometric:0.5", "terms": 20, "checkpoints": [2, 4], "samples": 100, "seed": 11}),
        json!({"kind": "ergodic", "suite": "decreasing", "generator": "sine", "coeffs": "power:1", "terms": 6}),
        json!({"kind": "riesz", "suite": "riesz-coeff", "spec": riesz, "freqs": [0, 1, -1, 4]}),
        json!({"kind": "riesz", "suite": "riesz-sample", "spec": riesz, "count": 20, "seed": 11}),
        json!({"kind": "riesz", "suite": "riesz-series", "spec": riesz, "generator": [[1, 1.0, 0.0]], "coeffs": "geometric:0.5", "checkpoints": [1, 2], "samples": 100, "seed": 11}),
        json!({"kind": "symbolic", "suite": "cond-gn", "riesz": riesz, "depth": 4, "bound": 10.0}),
        json!({"kind": "symbolic", "suite": "est-pn", "riesz": riesz, "depth": 4}),
        json!({"kind": "symbolic", "suite": "equilibrium", "riesz": riesz, "depth": 4}),
        json!({"kind": "symbolic", "suite": "symbolic-criterion", "riesz": riesz, "depth": 4, "coeffs": [1.0, 0.5]}),
    ]
}

#[test]
fn criterion_12_determinism() {
    let _g = serial();
    let configs = suite_configs();
    let mut covered = Vec::new();
    let mut mismatched = Vec::new();
    for v in &configs {
        let cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
        let name = cfg.suite().unwrap().name;
        let first = run(&cfg).unwrap().render().unwrap();
        let second = run(&cfg).unwrap().render().unwrap();
        if first != second {
            mismatched.push(name);
        }
        covered.push(name);
    }
    let missing: Vec<&str> = list_suites().iter().map(|s| s.name).filter(|n| !covered.contains(n)).collect();
    let pass = mismatched.is_empty() && missing.is_empty();
    verdict("12", pass, format!("{} suites rerun, mismatched {mismatched:?}, not covered {missing:?}", covered.len()));
}
