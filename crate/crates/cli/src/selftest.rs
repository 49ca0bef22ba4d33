//! Fixed-seed self-checks of the numerical core, printed as a table.

use std::fmt;

use gch_core::analyticity::operator_bound_checks;
use gch_core::dynamics::rhs;
use gch_core::integrator::measure_order;
use gch_core::nonlocal::{green_convolve_direct, helmholtz_inverse};
use gch_core::weights::{admissibility_report, weighted_young_check, WeightSpec};
use gch_core::{dealiased_product, make_grid, sample, spectral_derivative, Field, RhsForm};

use crate::fields::{compact_bump, rng, smooth_field};

pub const CONVOLUTION_TOL: f64 = 1e-6;
pub const FORM_RESIDUAL_TOL: f64 = 1e-8;
pub const ORDER_RANGE: (f64, f64) = (3.8, 4.2);
pub const YOUNG_TOL: f64 = -1e-10;
/// `(s', s)` pairs drawn from this set with `s' < s`.
pub const SWEEP_S: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

/// Deliberate corruptions used to confirm that checks can fail.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Evaluate FormB with `+u_x²` in place of `-u_x²`.
    pub flip_formb_ux2_sign: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub criterion: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>12}  {:<16} {:<6} detail", "check", "value", "criterion", "status")?;
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{:<24} {:>12.4e}  {:<16} {:<6} {}", c.name, c.value, c.criterion, status, c.detail)?;
        }
        let verdict = if self.all_passed() { "all checks passed" } else { "some checks FAILED" };
        write!(f, "seed {}: {verdict}", self.seed)
    }
}

fn rhs_under_test(u: &Field, form: RhsForm, faults: Faults) -> gch_core::Result<Field> {
    let r = rhs(u, form)?;
    if faults.flip_formb_ux2_sign && form == RhsForm::FormB {
        let ux = spectral_derivative(u, 1);
        return Ok(&r + &(&dealiased_product(&ux, &ux)? * 2.0));
    }
    Ok(r)
}

fn convolution_check(seed: u64) -> gch_core::Result<CheckResult> {
    let g = make_grid(1024, 40.0)?;
    let mut r = rng(seed);
    let mut fields = vec![sample(&g, |x| 1.0 / x.cosh().powi(2))?];
    fields.extend((0..3).map(|_| smooth_field(&g, &mut r)));
    let worst = fields
        .iter()
        .map(|f| (&green_convolve_direct(f) - &helmholtz_inverse(f)).sup())
        .fold(0.0, f64::max);
    Ok(CheckResult {
        name: "convolution oracle",
        value: worst,
        criterion: format!("<= {CONVOLUTION_TOL:e}"),
        passed: worst <= CONVOLUTION_TOL,
        detail: format!("quadrature vs spectral, {} fields on grid(1024, 40)", fields.len()),
    })
}

fn form_residual_check(seed: u64, faults: Faults) -> gch_core::Result<CheckResult> {
    let g = make_grid(1024, 40.0)?;
    let mut r = rng(seed.wrapping_add(1));
    let forms = RhsForm::EQUIVALENT;
    let mut worst = (0.0, forms[0], forms[1]);
    for _ in 0..20 {
        let u = smooth_field(&g, &mut r);
        let values: Vec<Field> = forms.iter().map(|&f| rhs_under_test(&u, f, faults)).collect::<Result<_, _>>()?;
        for i in 0..forms.len() {
            for j in i + 1..forms.len() {
                let d = (&values[i] - &values[j]).sup();
                if d > worst.0 {
                    worst = (d, forms[i], forms[j]);
                }
            }
        }
    }
    Ok(CheckResult {
        name: "form residual matrix",
        value: worst.0,
        criterion: format!("<= {FORM_RESIDUAL_TOL:e}"),
        passed: worst.0 <= FORM_RESIDUAL_TOL,
        detail: format!("20 fields, worst pair {} vs {}", worst.1, worst.2),
    })
}

fn order_check() -> gch_core::Result<CheckResult> {
    let g = make_grid(256, 20.0)?;
    let u0 = sample(&g, |x| 0.05 / x.cosh().powi(2))?;
    let order = measure_order(&u0, 1.0, RhsForm::FormB, 0.1)?;
    let (lo, hi) = ORDER_RANGE;
    Ok(CheckResult {
        name: "rk4 order",
        value: order,
        criterion: format!("in [{lo}, {hi}]"),
        passed: (lo..=hi).contains(&order),
        detail: "FormB, 0.05 sech^2, dt = 0.1, 0.05, 0.025".into(),
    })
}

fn young_check(seed: u64) -> gch_core::Result<CheckResult> {
    let g = make_grid(512, 20.0)?;
    let w = WeightSpec::new(0.0, 0.0, 1.0, 0.0);
    let c0 = admissibility_report(w, w, 2000, 20.0, 2.0)?.c0;
    let mut r = rng(seed.wrapping_add(2));
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let f1 = compact_bump(&g, &mut r);
        let f2 = compact_bump(&g, &mut r);
        for p in [1.0, 2.0, f64::INFINITY] {
            worst = worst.min(weighted_young_check(&f1, &f2, &w, &w, p, c0)?);
        }
    }
    Ok(CheckResult {
        name: "weighted young sweep",
        value: worst,
        criterion: format!(">= {YOUNG_TOL:e}"),
        passed: worst >= YOUNG_TOL,
        detail: format!("50 pairs, phi = v = 1+|x|, C0 = {c0:.6}, p in {{1, 2, inf}}"),
    })
}

fn operator_bound_check(seed: u64) -> gch_core::Result<CheckResult> {
    let g = make_grid(1024, 40.0)?;
    let mut r = rng(seed.wrapping_add(3));
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for _ in 0..10 {
        let f = smooth_field(&g, &mut r);
        for &s in &SWEEP_S {
            for &sp in SWEEP_S.iter().filter(|&&sp| sp < s) {
                let rep = operator_bound_checks(&f, s, sp, 12)?;
                worst = worst.min(rep.p1_slack).min(rep.p2_slack).min(rep.monotone_slack);
                count += 1;
            }
        }
    }
    Ok(CheckResult {
        name: "operator bound sweep",
        value: worst,
        criterion: ">= 0".into(),
        passed: worst >= 0.0,
        detail: format!("{count} (field, s', s) cases, K = 12"),
    })
}

fn errored(name: &'static str, e: gch_core::Error) -> CheckResult {
    CheckResult { name, value: f64::NAN, criterion: "no error".into(), passed: false, detail: e.to_string() }
}

/// Runs every check; a check that errors is reported as failed.
pub fn selftest_with(seed: u64, faults: Faults) -> SelftestReport {
    let checks = vec![
        convolution_check(seed).unwrap_or_else(|e| errored("convolution oracle", e)),
        form_residual_check(seed, faults).unwrap_or_else(|e| errored("form residual matrix", e)),
        order_check().unwrap_or_else(|e| errored("rk4 order", e)),
        young_check(seed).unwrap_or_else(|e| errored("weighted young sweep", e)),
        operator_bound_check(seed).unwrap_or_else(|e| errored("operator bound sweep", e)),
    ];
    SelftestReport { seed, checks }
}

pub fn selftest(seed: u64) -> SelftestReport {
    selftest_with(seed, Faults::default())
}
