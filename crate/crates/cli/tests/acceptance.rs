//! Acceptance run: one PASS/FAIL line per criterion, sub-checks indented below.
//!
//! Criterion 9a is a known failure: the measured tail ratio has the opposite sign
//! to `Φ` (see the README). The run exits non-zero only when a check other than a
//! listed known failure fails, or when a known failure unexpectedly passes.

use std::f64::consts::PI;
use std::process::ExitCode;

use gch_cli::fields::{compact_bump, rng, smooth_field};
use gch_cli::{parse_config, run_experiment, selftest};
use gch_core::analyticity::{operator_bound_checks, radius_track, EsNormParams};
use gch_core::asymptotics::{
    averaged_source, bracketing_check, bracketing_holds, log_remainder_rate_synthetic, moment_series,
    saturating_density, tail_ratio, ProfileVariant, PsiConvention,
};
use gch_core::dynamics::form_residual;
use gch_core::integrator::{measure_order, simulate, simulate_with, SimulationOptions};
use gch_core::nonlocal::{green_convolve_direct, helmholtz_forward, helmholtz_inverse};
use gch_core::persistence::{persistence_ledger, two_tier_check};
use gch_core::weights::{admissibility_report, weighted_young_check, WeightSpec};
use gch_core::{make_grid, sample, spectral_derivative, Field, RhsForm};

const KNOWN_FAILURES: &[&str] = &["9a"];

struct Check {
    label: String,
    pass: bool,
    detail: String,
}

fn check(label: &str, pass: bool, detail: String) -> Check {
    Check { label: label.to_string(), pass, detail }
}

struct Criterion {
    id: u32,
    title: &'static str,
    checks: Vec<Check>,
}

impl Criterion {
    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

fn small_bump(n: usize, l: f64) -> Field {
    sample(&make_grid(n, l).unwrap(), |x| 0.05 * sech(x).powi(2)).unwrap()
}

fn c1_formulation_equivalence() -> Vec<Check> {
    let g = make_grid(1024, 40.0).unwrap();
    let mut r = rng(1);
    let forms = RhsForm::EQUIVALENT;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = smooth_field(&g, &mut r);
        for i in 0..forms.len() {
            for j in i + 1..forms.len() {
                worst = worst.max(form_residual(&u, forms[i], forms[j]).unwrap());
            }
        }
    }
    vec![check("1", worst <= 1e-8, format!("max pairwise residual {worst:.3e} over 20 fields (tol 1e-8)"))]
}

fn c2_sqrt3_ledger() -> Vec<Check> {
    let g = make_grid(1024, 40.0).unwrap();
    let a = 0.05;
    let u = sample(&g, |x| a * sech(x).powi(2)).unwrap();
    // closed-form u_x, pointwise products and quadrature convolutions
    let u2 = sample(&g, |x| (a * sech(x).powi(2)).powi(2)).unwrap();
    let ux2 = sample(&g, |x| (-2.0 * a * sech(x).powi(2) * x.tanh()).powi(2)).unwrap();
    let s3 = 3f64.sqrt();
    let g_u2 = green_convolve_direct(&u2);
    let g_ux2 = green_convolve_direct(&ux2);
    let oracle = (&(&(&u2 * -s3) + &(&g_u2 * (3.0 * s3))) - &(&g_ux2 * 2.0)).sup();
    let measured = form_residual(&u, RhsForm::FormB, RhsForm::Sqrt3).unwrap();
    let diff = (measured - oracle).abs();
    vec![check(
        "2",
        diff <= 1e-8,
        format!("residual {measured:.10e} vs quadrature {oracle:.10e}, difference {diff:.2e} (tol 1e-8)"),
    )]
}

fn c3_operator_identities() -> Vec<Check> {
    let g = make_grid(1024, 40.0).unwrap();
    let f = sample(&g, |x| sech(x).powi(2)).unwrap();
    let round = (&helmholtz_forward(&helmholtz_inverse(&f)) - &f).sup() / f.sup();
    let conv = (&green_convolve_direct(&f) - &helmholtz_inverse(&f)).sup();
    let fxx = sample(&g, |x| 4.0 * sech(x).powi(2) - 6.0 * sech(x).powi(4)).unwrap();
    let direct = (&green_convolve_direct(&fxx) - &(&green_convolve_direct(&f) - &f)).sup();
    let spectral = (&helmholtz_inverse(&spectral_derivative(&f, 2)) - &(&helmholtz_inverse(&f) - &f)).sup();
    let identity = direct.max(spectral);
    vec![
        check("3a", round <= 1e-10, format!("Helmholtz round trip {round:.2e} relative (tol 1e-10)")),
        check("3b", conv <= 1e-6, format!("spectral vs quadrature convolution {conv:.2e} (tol 1e-6)")),
        check(
            "3c",
            identity <= 1e-9,
            format!("G*f'' = G*f - f: quadrature {direct:.2e}, spectral {spectral:.2e} (tol 1e-9)"),
        ),
    ]
}

fn c4_integrator_order() -> Vec<Check> {
    let order = measure_order(&small_bump(256, 20.0), 1.0, RhsForm::FormB, 0.1).unwrap();
    vec![check("4", (3.8..=4.2).contains(&order), format!("observed order {order:.4} (range [3.8, 4.2])"))]
}

fn c5_persistence() -> Vec<Check> {
    // n = 1024 under-resolves the far field for the explosive weight, see the README
    let coarse = simulate(&small_bump(2048, 40.0), 1.0, RhsForm::FormB, 10).unwrap();
    let fine = simulate(&small_bump(4096, 40.0), 1.0, RhsForm::FormB, 20).unwrap();
    let mut out = Vec::new();
    for (label, phi) in [("5a", WeightSpec::new(0.0, 0.0, 2.0, 0.0)), ("5b", WeightSpec::new(0.5, 1.0, 0.5, 1.0))] {
        let l = persistence_ledger(&coarse, phi, f64::INFINITY, None).unwrap();
        let lf = persistence_ledger(&fine, phi, f64::INFINITY, None).unwrap();
        let (c, cf) = (l.c_fit.unwrap_or(f64::NAN), lf.c_fit.unwrap_or(f64::NAN));
        let gap = l.binding_gap().unwrap_or(f64::NAN);
        let drift = (cf - c).abs() / c;
        let pass = l.is_finite() && c < 50.0 && l.envelope_holds() && gap <= 1e-12 && drift < 0.05;
        out.push(check(
            label,
            pass,
            format!(
                "phi {phi}, n = 2048: M = {:.4}, C_fit = {c:.4} (< 50), envelope holds = {}, binding gap {gap:.1e}, \
                 C_fit at n = 4096 {cf:.4}, drift {:.2}% (< 5%)",
                l.m,
                l.envelope_holds(),
                100.0 * drift
            ),
        ));
    }
    out
}

fn c6_two_tier() -> Vec<Check> {
    let phi = WeightSpec::new(1.0, 1.0, 0.0, 0.0);
    let report = admissibility_report(phi, phi.canonical_moderator(), 2000, 30.0, f64::INFINITY).unwrap();
    let traj = simulate(&small_bump(1024, 40.0), 0.5, RhsForm::FormB, 5).unwrap();
    let tiers = two_tier_check(&traj, phi, f64::INFINITY).unwrap();
    vec![
        check(
            "6a",
            !report.kernel_condition && report.lp_infinity_condition,
            format!(
                "e^|x|: kernel integral condition {} (expected false), sup condition {} (expected true)",
                report.kernel_condition, report.lp_infinity_condition
            ),
        ),
        check(
            "6b",
            tiers.all_finite(),
            format!(
                "ledgers finite to T = 0.5: (phi, inf) C_fit {:?}, (phi^1/2, 2) C_fit {:?}",
                tiers.full.c_fit, tiers.half.c_fit
            ),
        ),
    ]
}

fn c7_weighted_young() -> Vec<Check> {
    let g = make_grid(512, 20.0).unwrap();
    let w = WeightSpec::new(0.0, 0.0, 1.0, 0.0);
    let c0 = admissibility_report(w, w, 2000, 20.0, 2.0).unwrap().c0;
    let mut r = rng(7);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let f1 = compact_bump(&g, &mut r);
        let f2 = compact_bump(&g, &mut r);
        for p in [1.0, 2.0, f64::INFINITY] {
            worst = worst.min(weighted_young_check(&f1, &f2, &w, &w, p, c0).unwrap());
        }
    }
    vec![check("7", worst >= -1e-10, format!("min slack {worst:.3e} over 50 pairs, C0 = {c0:.6} (tol -1e-10)"))]
}

fn c8_admissibility() -> Vec<Check> {
    let one = admissibility_report(WeightSpec::identity(), WeightSpec::identity(), 1000, 40.0, 2.0).unwrap();
    let lin = WeightSpec::new(0.0, 0.0, 1.0, 0.0);
    let linear = admissibility_report(lin, lin, 1000, 40.0, 2.0).unwrap();
    let (a, b) = (one.kernel_integral, linear.kernel_integral);
    vec![
        check("8a", (a - 2.0).abs() <= 1e-6, format!("v = 1: {a:.10} (expected 2, tol 1e-6)")),
        check("8b", (b - 4.0).abs() <= 1e-6, format!("v = 1+|x|: {b:.10} (expected 4, tol 1e-6)")),
    ]
}

fn c9_asymptotic_profile() -> Vec<Check> {
    let u0 = small_bump(4096, 40.0);
    let traj = simulate(&u0, 0.25, RhsForm::FormB, 1).unwrap();
    let i = traj.index_near(0.25);
    let window = (10.0, 20.0);
    let tr = tail_ratio(&traj, i, window, ProfileVariant::Averaged, PsiConvention::Mirrored).unwrap();
    let dt = traj.metadata().dt_initial;
    let finer = simulate_with(&u0, 0.25, RhsForm::FormB, 1, SimulationOptions { dt: Some(0.5 * dt), dealias: true })
        .unwrap();
    let phi = moment_series(&traj, ProfileVariant::Averaged, PsiConvention::Mirrored).unwrap();
    let phi_fine = moment_series(&finer, ProfileVariant::Averaged, PsiConvention::Mirrored).unwrap();
    let (p, pf) = (phi.phi[i], *phi_fine.phi.last().unwrap());
    let refine = (p - pf).abs() / pf;
    let (c1, c2) = phi.phi_bounds();
    let h = averaged_source(&traj, i, ProfileVariant::Averaged).unwrap();
    let samples = bracketing_check(&h, window);
    vec![
        check(
            "9a",
            tr.deviation_right <= 0.25,
            format!(
                "median tail ratio {:.6} vs Phi {:.6}: deviation {:.1}% (tol 25%)",
                tr.median_right,
                tr.phi,
                100.0 * tr.deviation_right
            ),
        ),
        check(
            "9b",
            refine <= 0.05,
            format!("Phi(0.25) = {p:.8}, with dt halved {pf:.8}: change {:.2e} (tol 5%)", refine),
        ),
        check(
            "9c",
            c1 > 0.0 && (c1..=c2).contains(&p),
            format!("Phi(0.25) in [c1, c2] = [{c1:.6}, {c2:.6}], c1 > 0"),
        ),
        check(
            "9d",
            !samples.is_empty() && bracketing_holds(&samples),
            format!("bracketing holds at all {} sampled x in [10, 20]", samples.len()),
        ),
        check(
            "9e",
            tr.far_field_deviation_right < 1e-3,
            format!(
                "diagnostic: median ratio matches the far-field coefficient {:.6} to {:.1e}",
                tr.far_field_right, tr.far_field_deviation_right
            ),
        ),
    ]
}

fn c10_log_remainder() -> Vec<Check> {
    let fit = log_remainder_rate_synthetic(saturating_density(1.0), 1.0, (10.0, 1e4), 40).unwrap();
    let slope = fit.slope().unwrap_or(f64::NAN);
    let err = (slope - (1.0 - 2.0)).abs();
    vec![check("10", err <= 0.15, format!("fitted exponent {slope:.4} vs 1 - 2d = -1, error {err:.4} (tol 0.15)"))]
}

fn c11_analyticity() -> Vec<Check> {
    let g = make_grid(1024, 40.0).unwrap();
    let u0 = sample(&g, |x| 0.05 * sech(x)).unwrap();
    let traj = simulate(&u0, 0.25, RhsForm::FormB, 5).unwrap();
    let series = radius_track(&traj, &EsNormParams::default()).unwrap();
    let sigma: Vec<f64> = series.sigma().into_iter().map(|s| s.unwrap_or(f64::NAN)).collect();
    let s0 = sigma[0];
    let lowest = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let rel = (s0 - PI / 2.0).abs() / (PI / 2.0);

    let sweep = make_grid(1024, 40.0).unwrap();
    let mut r = rng(11);
    let values = [0.2, 0.4, 0.6, 0.8];
    let (mut worst_slack, mut worst_drift, mut cases) = (f64::INFINITY, 0.0f64, 0);
    for _ in 0..10 {
        let f = smooth_field(&sweep, &mut r);
        for &s in &values {
            for &sp in values.iter().filter(|&&sp| sp < s) {
                let rep = operator_bound_checks(&f, s, sp, 12).unwrap();
                worst_slack = worst_slack.min(rep.p1_slack).min(rep.p2_slack);
                worst_drift = worst_drift.max(rep.c_meas_drift().unwrap_or(f64::INFINITY));
                cases += 1;
            }
        }
    }
    vec![
        check("11a", rel <= 0.05, format!("sigma(0) = {s0:.4} vs pi/2, error {:.2}% (tol 5%)", 100.0 * rel)),
        check(
            "11b",
            lowest >= 0.5 * s0,
            format!("min sigma(t) over [0, 0.25] = {lowest:.4} >= 0.5 sigma(0) = {:.4}", 0.5 * s0),
        ),
        check(
            "11c",
            worst_slack >= 0.0,
            format!("derivative and nonlocal bound slack min {worst_slack:.3e} over {cases} cases (>= 0)"),
        ),
        check(
            "11d",
            worst_drift < 0.1,
            format!("algebra constant change under K doubling max {:.2}% (tol 10%)", 100.0 * worst_drift),
        ),
    ]
}

fn c12_reproducibility() -> Vec<Check> {
    let a = selftest(20240501);
    let b = selftest(20240501);
    let mut checks = vec![check(
        "12a",
        a.all_passed() && a == b,
        format!("selftest all passed = {}, identical on rerun = {}", a.all_passed(), a == b),
    )];
    let dir = tempfile::TempDir::new().unwrap();
    let configs = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (label, name) in [("12b", "showcase.conf"), ("12c", "zero.conf")] {
        let mut config = parse_config(&std::fs::read_to_string(configs.join(name)).unwrap()).unwrap();
        let mut bytes = Vec::new();
        for run in ["first", "second"] {
            config.output.dir = dir.path().join(format!("{name}-{run}"));
            let summary = run_experiment(&config).unwrap();
            bytes.push(std::fs::read(summary.out_dir.join("summary.json")).unwrap());
        }
        checks.push(check(
            label,
            bytes[0] == bytes[1],
            format!("{name}: summary.json byte-identical across repeated runs ({} bytes)", bytes[0].len()),
        ));
    }
    checks
}

fn main() -> ExitCode {
    let runs: [(u32, &'static str, fn() -> Vec<Check>); 12] = [
        (1, "formulation equivalence", c1_formulation_equivalence),
        (2, "Sqrt3 discrepancy ledger", c2_sqrt3_ledger),
        (3, "operator identities", c3_operator_identities),
        (4, "integrator order", c4_integrator_order),
        (5, "weighted persistence", c5_persistence),
        (6, "two-tier check", c6_two_tier),
        (7, "weighted Young inequality", c7_weighted_young),
        (8, "admissibility closed forms", c8_admissibility),
        (9, "asymptotic profile", c9_asymptotic_profile),
        (10, "log remainder rate", c10_log_remainder),
        (11, "analyticity", c11_analyticity),
        (12, "reproducibility", c12_reproducibility),
    ];
    let mut criteria = Vec::new();
    for (id, title, run) in runs {
        let c = Criterion { id, title, checks: run() };
        if c.checks.len() == 1 {
            let only = &c.checks[0];
            println!("criterion {:>2} {} {}: {}", c.id, status(c.pass()), c.title, only.detail);
        } else {
            println!("criterion {:>2} {} {}", c.id, status(c.pass()), c.title);
            for s in &c.checks {
                println!("    {:<4} {} {}", s.label, status(s.pass), s.detail);
            }
        }
        criteria.push(c);
    }

    let passed = criteria.iter().filter(|c| c.pass()).count();
    let all_checks: Vec<&Check> = criteria.iter().flat_map(|c| &c.checks).collect();
    let unexpected: Vec<&str> = all_checks
        .iter()
        .filter(|c| !c.pass && !KNOWN_FAILURES.contains(&c.label.as_str()))
        .map(|c| c.label.as_str())
        .collect();
    let stale: Vec<&str> = all_checks
        .iter()
        .filter(|c| c.pass && KNOWN_FAILURES.contains(&c.label.as_str()))
        .map(|c| c.label.as_str())
        .collect();
    println!("acceptance: {passed}/{} criteria PASS; known failures: {}", criteria.len(), KNOWN_FAILURES.join(", "));
    if !unexpected.is_empty() {
        println!("unexpected failures: {}", unexpected.join(", "));
    }
    if !stale.is_empty() {
        println!("known failures now passing, update KNOWN_FAILURES: {}", stale.join(", "));
    }
    if unexpected.is_empty() && stale.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
