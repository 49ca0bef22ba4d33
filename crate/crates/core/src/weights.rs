//! The weight family `φ(x) = e^{a|x|^b}(1+|x|)^c·log(e+|x|)^d`, its truncations,
//! sampled admissibility constants, weighted norms and the weighted Young inequality.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{lp_of_values, Field};
use crate::quadrature::integrate_adaptive;

/// Sentinel returned when a weight overflows.
pub const HUGE: f64 = 1e300;

/// Anything that can be evaluated pointwise as a positive weight.
pub trait Weight {
    fn value(&self, x: f64) -> f64;

    fn ln_value(&self, x: f64) -> f64 {
        self.value(x).ln()
    }
}

impl<F: Fn(f64) -> f64> Weight for F {
    fn value(&self, x: f64) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl WeightSpec {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        WeightSpec { a, b, c, d }
    }

    pub const fn identity() -> Self {
        WeightSpec::new(0.0, 0.0, 0.0, 0.0)
    }

    /// `ln φ(x)`, finite for every finite `x`.
    pub fn ln_eval(&self, x: f64) -> f64 {
        let r = x.abs();
        let mut s = 0.0;
        if self.a != 0.0 {
            s += self.a * r.powf(self.b);
        }
        if self.c != 0.0 {
            s += self.c * r.ln_1p();
        }
        if self.d != 0.0 {
            s += self.d * (std::f64::consts::E + r).ln().ln();
        }
        s
    }

    /// `φ(x)` and whether it was clamped to [`HUGE`].
    pub fn eval_checked(&self, x: f64) -> (f64, bool) {
        let l = self.ln_eval(x);
        if l > HUGE.ln() {
            (HUGE, true)
        } else {
            (l.exp(), false)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_checked(x).0
    }

    /// `a, c, d ≥ 0` and `0 ≤ b ≤ 1`.
    pub fn is_submultiplicative(&self) -> bool {
        self.a >= 0.0 && self.c >= 0.0 && self.d >= 0.0 && (0.0..=1.0).contains(&self.b)
    }

    /// Parameters of `φ^{1/2}`.
    pub fn sqrt(&self) -> WeightSpec {
        WeightSpec::new(0.5 * self.a, self.b, 0.5 * self.c, 0.5 * self.d)
    }

    /// The comparison weight `(|a|, b, |c|, |d|)` against which `self` is moderate.
    pub fn canonical_moderator(&self) -> WeightSpec {
        WeightSpec::new(self.a.abs(), self.b, self.c.abs(), self.d.abs())
    }

    pub fn truncate(&self, n: f64) -> Result<TruncatedWeight> {
        truncate_weight(*self, n)
    }
}

impl Weight for WeightSpec {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn ln_value(&self, x: f64) -> f64 {
        self.ln_eval(x)
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    /// Parses `a,b,c,d`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("weight {s:?}: {e}")))?;
        match parts.as_slice() {
            &[a, b, c, d] if parts.iter().all(|v| v.is_finite()) => Ok(WeightSpec::new(a, b, c, d)),
            _ => Err(Error::InvalidArgument(format!("weight {s:?}: expected four finite numbers a,b,c,d"))),
        }
    }
}

/// `φ_N = min(φ, N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedWeight {
    pub spec: WeightSpec,
    pub level: f64,
}

impl Weight for TruncatedWeight {
    fn value(&self, x: f64) -> f64 {
        self.spec.eval(x).min(self.level)
    }

    fn ln_value(&self, x: f64) -> f64 {
        self.spec.ln_eval(x).min(self.level.ln())
    }
}

pub fn truncate_weight(spec: WeightSpec, n: f64) -> Result<TruncatedWeight> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("truncation level must be positive and finite, got {n}")));
    }
    Ok(TruncatedWeight { spec, level: n })
}

/// Radical inverse of `index` in `base`, the Halton coordinate in `[0, 1)`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn serialize_order<S: Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if p.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*p)
    }
}

/// Sampled constants and condition checks for a pair `(φ, v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub phi: WeightSpec,
    pub v: WeightSpec,
    pub sample_count: usize,
    pub domain_bound: f64,
    /// Sampled max of `φ(x+y)/(v(x)φ(y))`.
    pub c0: f64,
    /// Sampled max of `|φ'|/φ`.
    pub derivative_constant: f64,
    pub submult_max_violation: f64,
    pub inf_v: f64,
    /// `∫ v(x)e^{-|x|} dx` over `[-B, B]`.
    pub kernel_integral: f64,
    /// The same integral over `[-2B, 2B]`.
    pub kernel_integral_doubled: f64,
    #[serde(serialize_with = "serialize_order")]
    pub p: f64,
    /// `v e^{-|x|}` appears to lie in `L^p`.
    pub lp_condition: bool,
    /// `v e^{-|x|}` appears to be bounded.
    pub lp_infinity_condition: bool,
    pub kernel_condition: bool,
    pub moderate: bool,
    pub submultiplicative: bool,
    pub derivative_bounded: bool,
    /// `a ≠ 0` and `0 < b < 1`: `|φ'|/φ` blows up at the origin.
    pub derivative_singular_at_origin: bool,
    pub note: String,
}

const STABILITY_TOL: f64 = 1e-6;

/// `∫_{-B}^{B} w(x)^p e^{-p|x|} dx` by adaptive quadrature in log space.
fn decay_integral(v: &WeightSpec, p: f64, bound: f64) -> f64 {
    let g = |x: f64| (p * (v.ln_eval(x) - x.abs())).exp();
    let (left, _) = integrate_adaptive(g, -bound, 0.0, 1e-12);
    let (right, _) = integrate_adaptive(g, 0.0, bound, 1e-12);
    left + right
}

fn stable(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && (b - a).abs() <= STABILITY_TOL * a.abs().max(b.abs()).max(1e-300)
}

/// Whether `v e^{-|x|} ∈ L^p`, judged by stability under doubling of the domain.
pub fn lp_condition(v: &WeightSpec, p: f64, bound: f64) -> bool {
    if p.is_infinite() {
        let sup = |b: f64| {
            (0..=4000)
                .map(|i| {
                    let x = b * i as f64 / 4000.0;
                    (v.ln_eval(x) - x).max(v.ln_eval(-x) + (-x))
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let (s1, s2) = (sup(bound), sup(2.0 * bound));
        s2 - s1 <= STABILITY_TOL
    } else {
        stable(decay_integral(v, p, bound), decay_integral(v, p, 2.0 * bound))
    }
}

/// Sampled admissibility constants for `(φ, v)` on `[-B, B]`, with the `L^p` check at `p`.
pub fn admissibility_report(
    phi: WeightSpec,
    v: WeightSpec,
    sample_count: usize,
    domain_bound: f64,
    p: f64,
) -> Result<AdmissibilityReport> {
    if !(domain_bound > 0.0) || !domain_bound.is_finite() {
        return Err(Error::InvalidArgument(format!("domain bound must be positive, got {domain_bound}")));
    }
    if sample_count < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 samples, got {sample_count}")));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm order must be at least 1, got {p}")));
    }
    let b = domain_bound;
    let scale = |u: f64| -b + 2.0 * b * u;
    let mut pairs: Vec<(f64, f64)> = (1..=sample_count as u64)
        .map(|i| (scale(halton(i, 2)), scale(halton(i, 3))))
        .collect();
    for &x in &[-b, 0.0, b] {
        for &y in &[-b, 0.0, b] {
            pairs.push((x, y));
        }
    }
    let mut c0 = f64::NEG_INFINITY;
    let mut submult = f64::NEG_INFINITY;
    for &(x, y) in &pairs {
        c0 = c0.max((phi.ln_eval(x + y) - v.ln_eval(x) - phi.ln_eval(y)).exp());
        submult = submult.max((v.ln_eval(x + y) - v.ln_eval(x) - v.ln_eval(y)).exp());
    }
    let submult_max_violation = (submult - 1.0).max(0.0);

    let xs: Vec<f64> = (0..sample_count).map(|i| scale(i as f64 / (sample_count - 1) as f64)).collect();
    let mut derivative_constant: f64 = 0.0;
    let mut inf_v = f64::INFINITY;
    for &x in xs.iter().chain(std::iter::once(&0.0)) {
        derivative_constant = derivative_constant.max(log_derivative(&phi, x).abs());
        inf_v = inf_v.min(v.eval(x));
    }
    let derivative_singular_at_origin = phi.a != 0.0 && phi.b > 0.0 && phi.b < 1.0;

    let kernel_integral = decay_integral(&v, 1.0, b);
    let kernel_integral_doubled = decay_integral(&v, 1.0, 2.0 * b);
    Ok(AdmissibilityReport {
        phi,
        v,
        sample_count,
        domain_bound,
        c0,
        derivative_constant,
        submult_max_violation,
        inf_v,
        kernel_integral,
        kernel_integral_doubled,
        p,
        lp_condition: lp_condition(&v, p, b),
        lp_infinity_condition: lp_condition(&v, f64::INFINITY, b),
        kernel_condition: stable(kernel_integral, kernel_integral_doubled),
        moderate: c0.is_finite(),
        submultiplicative: submult_max_violation <= 1e-12,
        derivative_bounded: derivative_constant.is_finite() && !derivative_singular_at_origin,
        derivative_singular_at_origin,
        note: "C0 and the derivative constant are maxima over samples, hence lower bounds of the true suprema".into(),
    })
}

/// `(ln w)'(x)` by central differences, one-sided within a step of the origin.
pub fn log_derivative<W: Weight + ?Sized>(w: &W, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1.0);
    if x.abs() < h {
        if x >= 0.0 {
            (w.ln_value(x + h) - w.ln_value(x)) / h
        } else {
            (w.ln_value(x) - w.ln_value(x - h)) / h
        }
    } else {
        (w.ln_value(x + h) - w.ln_value(x - h)) / (2.0 * h)
    }
}

/// Samples of a weight on the grid nodes of `f`.
pub fn weight_on_grid<W: Weight + ?Sized>(f: &Field, w: &W) -> Vec<f64> {
    f.grid().x().iter().map(|&x| w.value(x)).collect()
}

/// `‖f·w‖_p` with the rectangle rule.
pub fn weighted_lp_norm<W: Weight + ?Sized>(f: &Field, w: &W, p: f64) -> f64 {
    let prod: Vec<f64> = f
        .values()
        .iter()
        .zip(weight_on_grid(f, w))
        .map(|(a, b)| a * b)
        .collect();
    lp_of_values(&prod, f.grid().dx(), p)
}

/// Direct periodic convolution `(f1 ∗ f2)(x_i) = Σ_k f1(x_k) f2(x_i - x_k) dx`.
pub fn periodic_convolution(f1: &Field, f2: &Field) -> Result<Field> {
    if f1.grid() != f2.grid() {
        return Err(Error::GridMismatch);
    }
    let n = f1.grid().n();
    let dx = f1.grid().dx();
    let (a, b) = (f1.values(), f2.values());
    // x_i - x_k = (i - k)·dx sits at node i - k + n/2
    let out = (0..n)
        .map(|i| (0..n).map(|k| a[k] * b[(i + n + n / 2 - k) % n]).sum::<f64>() * dx)
        .collect();
    Field::new(f1.grid(), out)
}

/// `C0·‖f1 v‖₁·‖f2 φ‖_p - ‖(f1∗f2)φ‖_p`; non-negative when the inequality holds.
pub fn weighted_young_check<P: Weight + ?Sized, V: Weight + ?Sized>(
    f1: &Field,
    f2: &Field,
    phi: &P,
    v: &V,
    p: f64,
    c0: f64,
) -> Result<f64> {
    let conv = periodic_convolution(f1, f2)?;
    let rhs = c0 * weighted_lp_norm(f1, v, 1.0) * weighted_lp_norm(f2, phi, p);
    Ok(rhs - weighted_lp_norm(&conv, phi, p))
}
