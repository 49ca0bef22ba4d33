//! Spatial tail profiles: the time-averaged source `h`, its exponential moments
//! `Φ` and `Ψ`, the tail ratio `e^{x}(u - u0)/t`, and the logarithmic decay rate
//! of `∫_x^∞ e^y h dy`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, Field};
use crate::integrator::Trajectory;
use crate::quadrature::integrate_adaptive;

/// Largest admissible boundary value of `e^{|y|}h(y)`.
pub const BOUNDARY_INTEGRAND_TOL: f64 = 1e-10;
/// `|u - u0|` below this everywhere in a tail window carries no signal.
pub const TAIL_FLOOR: f64 = 1e-14;
/// Fewer stored snapshots than this up to `t` make the time average coarse.
pub const MIN_TIME_SAMPLES: usize = 8;

/// How the source `h` is formed from the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileVariant {
    /// `h = (1/t)∫_0^t (6u² + 2u_x²) ds`.
    Averaged,
    /// `h = t^{-1/2}[∫_0^t (√2u_x + √6u)² ds]^{1/2}`.
    RootMeanSquare,
}

impl ProfileVariant {
    pub fn name(self) -> &'static str {
        match self {
            ProfileVariant::Averaged => "averaged",
            ProfileVariant::RootMeanSquare => "rms",
        }
    }
}

impl fmt::Display for ProfileVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "averaged" | "thm41" => Ok(ProfileVariant::Averaged),
            "rms" | "thm43" => Ok(ProfileVariant::RootMeanSquare),
            _ => Err(Error::InvalidArgument(format!(
                "unknown profile variant {s:?} (expected averaged|rms or thm41|thm43)"
            ))),
        }
    }
}

fn square(f: &Field) -> Field {
    f.map(|v| v * v)
}

/// Pointwise source integrand for one snapshot.
fn integrand(u: &Field, variant: ProfileVariant) -> Result<Field> {
    let ux = derivative(u, 1)?;
    Ok(match variant {
        ProfileVariant::Averaged => &(&square(u) * 6.0) + &(&square(&ux) * 2.0),
        ProfileVariant::RootMeanSquare => {
            let s = &(&ux * 2f64.sqrt()) + &(u * 6f64.sqrt());
            square(&s)
        }
    })
}

fn check_index(traj: &Trajectory, t_index: usize) -> Result<f64> {
    if t_index == 0 {
        return Err(Error::ProfileAtTimeZero);
    }
    if t_index >= traj.len() {
        return Err(Error::InvalidArgument(format!(
            "time index {t_index} out of range for {} snapshots",
            traj.len()
        )));
    }
    Ok(traj.times()[t_index])
}

/// Trapezoid in time of `f(u(s))` over the stored snapshots up to `t_index`.
fn time_integral(traj: &Trajectory, t_index: usize, f: impl Fn(&Field) -> Result<Field>) -> Result<Field> {
    let times = traj.times();
    let snaps = traj.snapshots();
    let mut acc = vec![0.0; traj.grid().n()];
    let mut prev = f(&snaps[0])?;
    for i in 1..=t_index {
        let cur = f(&snaps[i])?;
        let w = 0.5 * (times[i] - times[i - 1]);
        for (a, (p, c)) in acc.iter_mut().zip(prev.values().iter().zip(cur.values())) {
            *a += w * (p + c);
        }
        prev = cur;
    }
    Field::new(traj.grid(), acc)
}

/// The source `h(·, t)` at `t = times[t_index]`.
pub fn averaged_source(traj: &Trajectory, t_index: usize, variant: ProfileVariant) -> Result<Field> {
    let t = check_index(traj, t_index)?;
    let integral = time_integral(traj, t_index, |u| integrand(u, variant))?;
    Ok(match variant {
        ProfileVariant::Averaged => &integral * (1.0 / t),
        ProfileVariant::RootMeanSquare => integral.map(|v| (v.max(0.0) / t).sqrt()),
    })
}

/// Fewer than [`MIN_TIME_SAMPLES`] snapshots cover `[0, t]`.
pub fn is_time_sampling_sparse(t_index: usize) -> bool {
    t_index + 1 < MIN_TIME_SAMPLES
}

/// Which exponential weights `Φ` and `Ψ` use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PsiConvention {
    /// `Ψ = ½∫e^{-y}h`, the left-tail counterpart of `Φ`.
    #[default]
    Mirrored,
    /// `Ψ = ½∫e^{y}h`, identical to `Φ`.
    Literal,
}

fn check_decay(h: &Field) -> Result<()> {
    let x = h.grid().x();
    let v = h.values();
    let n = v.len();
    let value = (x[0].abs().exp() * v[0].abs()).max(x[n - 1].abs().exp() * v[n - 1].abs());
    if value.is_finite() && value < BOUNDARY_INTEGRAND_TOL {
        Ok(())
    } else {
        Err(Error::InsufficientDecay { value })
    }
}

/// `½∫e^{sign·y} h dy` by the rectangle rule.
fn exp_moment(h: &Field, sign: f64) -> f64 {
    let dx = h.grid().dx();
    0.5 * h.grid().x().iter().zip(h.values()).map(|(x, v)| (sign * x).exp() * v).sum::<f64>() * dx
}

/// `(Φ, Ψ)` from a source field.
pub fn phi_psi(h: &Field, convention: PsiConvention) -> Result<(f64, f64)> {
    check_decay(h)?;
    let phi = exp_moment(h, 1.0);
    let psi = match convention {
        PsiConvention::Mirrored => exp_moment(h, -1.0),
        PsiConvention::Literal => phi,
    };
    Ok((phi, psi))
}

/// `(Φ(0), Ψ(0))` from the initial data.
///
/// Averaged: the moments of `6u0² + 2u0'²`. RootMeanSquare: `½[∫e^{±y}(√2u0' + √6u0)²]^{1/2}`.
pub fn initial_phi_psi(u0: &Field, variant: ProfileVariant, convention: PsiConvention) -> Result<(f64, f64)> {
    let f = integrand(u0, variant)?;
    check_decay(&f)?;
    let moment = |sign: f64| match variant {
        ProfileVariant::Averaged => exp_moment(&f, sign),
        ProfileVariant::RootMeanSquare => 0.5 * (2.0 * exp_moment(&f, sign)).sqrt(),
    };
    let phi = moment(1.0);
    let psi = match convention {
        PsiConvention::Mirrored => moment(-1.0),
        PsiConvention::Literal => phi,
    };
    Ok((phi, psi))
}

/// `Φ(t_i)` and `Ψ(t_i)` at every stored time, using the initial-data formula at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl MomentSeries {
    /// `(min, max)` of `Φ` over the series.
    pub fn phi_bounds(&self) -> (f64, f64) {
        bounds(&self.phi)
    }

    pub fn psi_bounds(&self) -> (f64, f64) {
        bounds(&self.psi)
    }

    /// `|Φ(t_1) - Φ(0)|/Φ(0)`.
    pub fn initial_jump(&self) -> Option<f64> {
        (self.phi.len() > 1 && self.phi[0] > 0.0).then(|| (self.phi[1] - self.phi[0]).abs() / self.phi[0])
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

pub fn moment_series(traj: &Trajectory, variant: ProfileVariant, convention: PsiConvention) -> Result<MomentSeries> {
    let (p0, s0) = initial_phi_psi(traj.initial(), variant, convention)?;
    let mut phi = vec![p0];
    let mut psi = vec![s0];
    for i in 1..traj.len() {
        let (p, s) = phi_psi(&averaged_source(traj, i, variant)?, convention)?;
        phi.push(p);
        psi.push(s);
    }
    Ok(MomentSeries { times: traj.times().to_vec(), phi, psi })
}

/// Leading tail coefficients implied by the evolution itself.
///
/// Far from the bump only the convolution terms survive, giving
/// `u - u0 ≈ -e^{-x}·t·½∫e^{y}⟨6u² + u_x²⟩` on the right and
/// `u - u0 ≈ e^{x}·t·½∫e^{-y}⟨6u² + 3u_x²⟩` on the left, where `⟨·⟩` is the time
/// average. Returned as the values the ratios of [`tail_ratio`] should approach.
pub fn far_field_coefficients(traj: &Trajectory, t_index: usize) -> Result<(f64, f64)> {
    let t = check_index(traj, t_index)?;
    let u2 = &time_integral(traj, t_index, |u| Ok(square(u)))? * (1.0 / t);
    let ux2 = &time_integral(traj, t_index, |u| Ok(square(&derivative(u, 1)?)))? * (1.0 / t);
    let right = &(&u2 * 6.0) + &ux2;
    let left = &(&u2 * 6.0) + &(&ux2 * 3.0);
    Ok((-exp_moment(&right, 1.0), -exp_moment(&left, -1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRatio {
    pub t: f64,
    pub variant: ProfileVariant,
    /// `(x, e^{x}(u - u0)/t)` on the right window.
    pub right: Vec<(f64, f64)>,
    /// `(x, -e^{-x}(u - u0)/t)` on the mirrored left window.
    pub left: Vec<(f64, f64)>,
    pub median_right: f64,
    pub median_left: f64,
    pub phi: f64,
    pub psi: f64,
    /// `|median_right - Φ|/Φ`.
    pub deviation_right: f64,
    /// `|median_left - Ψ|/Ψ`.
    pub deviation_left: f64,
    /// Right and left coefficients from [`far_field_coefficients`].
    pub far_field_right: f64,
    pub far_field_left: f64,
    pub far_field_deviation_right: f64,
    pub far_field_deviation_left: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Tail ratios on `window` (right) and its mirror image (left) at `times[t_index]`.
pub fn tail_ratio(
    traj: &Trajectory,
    t_index: usize,
    window: (f64, f64),
    variant: ProfileVariant,
    convention: PsiConvention,
) -> Result<TailRatio> {
    let t = check_index(traj, t_index)?;
    let l = traj.grid().half_width();
    let (lo, hi) = window;
    if !(lo < hi && lo > 0.2 * l && hi < 0.8 * l) {
        return Err(Error::InvalidArgument(format!(
            "tail window [{lo}, {hi}] must lie inside (0.2L, 0.8L) = ({}, {})",
            0.2 * l,
            0.8 * l
        )));
    }
    let x = traj.grid().x();
    let u = traj.snapshots()[t_index].values();
    let u0 = traj.initial().values();
    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut signal: f64 = 0.0;
    for j in 0..x.len() {
        let du = u[j] - u0[j];
        if x[j] >= lo && x[j] <= hi {
            signal = signal.max(du.abs());
            right.push((x[j], x[j].exp() * du / t));
        } else if x[j] <= -lo && x[j] >= -hi {
            signal = signal.max(du.abs());
            left.push((x[j], -(-x[j]).exp() * du / t));
        }
    }
    if right.is_empty() || left.is_empty() {
        return Err(Error::InvalidArgument("tail window contains no grid nodes".into()));
    }
    if signal < TAIL_FLOOR {
        return Err(Error::TailSignalBelowFloor);
    }
    let median_right = median(&mut right.iter().map(|p| p.1).collect::<Vec<_>>());
    let median_left = median(&mut left.iter().map(|p| p.1).collect::<Vec<_>>());
    let (phi, psi) = phi_psi(&averaged_source(traj, t_index, variant)?, convention)?;
    let (far_right, far_left) = far_field_coefficients(traj, t_index)?;
    Ok(TailRatio {
        t,
        variant,
        right,
        left,
        median_right,
        median_left,
        phi,
        psi,
        deviation_right: relative(median_right, phi),
        deviation_left: relative(median_left, psi),
        far_field_right: far_right,
        far_field_left: far_left,
        far_field_deviation_right: relative(median_right, far_right),
        far_field_deviation_left: relative(median_left, far_left),
    })
}

/// Result of fitting `ln ∫_x^∞ e^y h dy` against `ln ln(1+x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LogRateFit {
    Fitted {
        slope: f64,
        /// `1 - 2d`.
        predicted: f64,
        window: (f64, f64),
        points: usize,
        /// Points were dropped because the tail integral underflowed.
        shrunk: bool,
    },
    /// The tail integral vanishes on the whole window.
    DegenerateZeroTail,
}

impl LogRateFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            LogRateFit::Fitted { slope, .. } => Some(*slope),
            LogRateFit::DegenerateZeroTail => None,
        }
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn check_d(d: f64) -> Result<()> {
    if d > 0.5 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("log exponent d must exceed 1/2, got {d}")))
    }
}

/// Fits `(x, I(x))` samples, dropping underflowed or zero tails.
fn fit_tail(samples: Vec<(f64, f64)>, d: f64, floor: f64) -> LogRateFit {
    let total = samples.len();
    let usable: Vec<(f64, f64)> = samples
        .into_iter()
        .filter(|&(x, i)| x > 0.0 && i > floor && i.is_finite())
        .map(|(x, i)| (x.ln_1p().ln(), i.ln()))
        .collect();
    if usable.len() < 2 {
        return LogRateFit::DegenerateZeroTail;
    }
    let window = (usable[0].0.exp().exp_m1(), usable[usable.len() - 1].0.exp().exp_m1());
    LogRateFit::Fitted {
        slope: least_squares_slope(&usable),
        predicted: 1.0 - 2.0 * d,
        window,
        points: usable.len(),
        shrunk: usable.len() < total,
    }
}

/// `∫_{x_j}^{x_{n-1}} e^y h dy` at every node by a reverse rectangle sum.
fn grid_tail_integrals(h: &Field) -> Vec<f64> {
    let x = h.grid().x();
    let dx = h.grid().dx();
    let mut acc = 0.0;
    let mut out = vec![0.0; x.len()];
    for j in (0..x.len()).rev() {
        acc += x[j].exp() * h.values()[j] * dx;
        out[j] = acc;
    }
    out
}

/// Log-rate fit of the averaged source at `times[t_index]` over `window`.
pub fn log_remainder_rate(traj: &Trajectory, t_index: usize, d: f64, window: (f64, f64)) -> Result<LogRateFit> {
    check_d(d)?;
    let h = averaged_source(traj, t_index, ProfileVariant::Averaged)?;
    let tails = grid_tail_integrals(&h);
    let peak = tails.iter().cloned().fold(0.0, f64::max);
    let samples = h
        .grid()
        .x()
        .iter()
        .zip(tails)
        .filter(|(x, _)| **x >= window.0 && **x <= window.1)
        .map(|(&x, i)| (x, i))
        .collect();
    Ok(fit_tail(samples, d, 1e-14 * peak))
}

/// `∫_x^∞ e^y h(y) dy` for a density given in the variable `s = ln(1+y)`.
///
/// `q(s) = (1+y)e^y h(y)`, so the integral is `∫_{ln(1+x)}^∞ q(s) ds`; the
/// substitution `s = 1/w` maps it onto a finite interval.
pub fn tail_integral_log_variable(q: impl Fn(f64) -> f64, x: f64) -> f64 {
    let w0 = 1.0 / x.ln_1p();
    let g = |w: f64| if w <= 0.0 { 0.0 } else { q(1.0 / w) / (w * w) };
    integrate_adaptive(g, 0.0, w0, 1e-12).0
}

/// Log-rate fit for a synthetic tail density `q(s)` (see [`tail_integral_log_variable`]).
pub fn log_remainder_rate_synthetic(
    q: impl Fn(f64) -> f64,
    d: f64,
    window: (f64, f64),
    points: usize,
) -> Result<LogRateFit> {
    check_d(d)?;
    if !(window.0 > 0.0 && window.1 > window.0) || points < 2 {
        return Err(Error::InvalidArgument("need 0 < x_lo < x_hi and at least 2 points".into()));
    }
    let (a, b) = (window.0.ln(), window.1.ln());
    let samples = (0..points)
        .map(|i| {
            let x = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
            (x, tail_integral_log_variable(&q, x))
        })
        .collect();
    Ok(fit_tail(samples, d, 0.0))
}

/// Tail density of the saturating profile `e^y h = (1+y)^{-1}ln(e+y)^{-2d}` in `s = ln(1+y)`.
pub fn saturating_density(d: f64) -> impl Fn(f64) -> f64 {
    // ln(e + e^s - 1) = s + ln(1 + (e-1)e^{-s})
    move |s: f64| (s + ((std::f64::consts::E - 1.0) * (-s).exp()).ln_1p()).powf(-2.0 * d)
}

/// One sampled point of the bracketing inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketSample {
    pub x: f64,
    /// `∫_x^∞ (e^y + e^{2x-y}) h dy`.
    pub inner: f64,
    /// `2∫_x^∞ e^y h dy`.
    pub outer: f64,
}

/// Samples `0 ≤ ∫_x^∞(e^y + e^{2x-y})h ≤ 2∫_x^∞ e^y h` at every node of `window`.
pub fn bracketing_check(h: &Field, window: (f64, f64)) -> Vec<BracketSample> {
    let x = h.grid().x();
    let dx = h.grid().dx();
    let v = h.values();
    let tails = grid_tail_integrals(h);
    let mut out = Vec::new();
    for j in 0..x.len() {
        if x[j] < window.0 || x[j] > window.1 {
            continue;
        }
        let mirrored: f64 = (j..x.len()).map(|k| (2.0 * x[j] - x[k]).exp() * v[k]).sum::<f64>() * dx;
        out.push(BracketSample { x: x[j], inner: tails[j] + mirrored, outer: 2.0 * tails[j] });
    }
    out
}

/// Every sample satisfies `0 ≤ inner ≤ outer` (with relative slack for roundoff).
pub fn bracketing_holds(samples: &[BracketSample]) -> bool {
    samples
        .iter()
        .all(|s| s.inner >= -1e-300 && s.inner <= s.outer * (1.0 + 1e-12) + 1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RhsForm;
    use crate::grid::{make_grid, sample};

    fn frozen(u: &Field, count: usize) -> Trajectory {
        let times = (0..count).map(|i| 0.05 * i as f64).collect();
        Trajectory::from_snapshots(times, vec![u.clone(); count], RhsForm::FormB).unwrap()
    }

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn variant_names_parse() {
        assert_eq!("averaged".parse::<ProfileVariant>().unwrap(), ProfileVariant::Averaged);
        assert_eq!("THM43".parse::<ProfileVariant>().unwrap(), ProfileVariant::RootMeanSquare);
        assert!("other".parse::<ProfileVariant>().is_err());
    }

    #[test]
    fn source_of_zero_and_frozen_trajectories() {
        let g = make_grid(256, 20.0).unwrap();
        let zero = frozen(&Field::zeros(&g), 4);
        assert_eq!(averaged_source(&zero, 2, ProfileVariant::Averaged).unwrap().sup(), 0.0);
        assert_eq!(averaged_source(&zero, 0, ProfileVariant::Averaged).unwrap_err(), Error::ProfileAtTimeZero);

        let u0 = sample(&g, |x| 0.05 * sech(x).powi(2)).unwrap();
        let h = averaged_source(&frozen(&u0, 5), 4, ProfileVariant::Averaged).unwrap();
        let ux = derivative(&u0, 1).unwrap();
        let f = &(&square(&u0) * 6.0) + &(&square(&ux) * 2.0);
        assert!((&h - &f).sup() <= 1e-15 * f.sup());

        // constant data: the root-mean-square source is the pointwise root
        let rms = averaged_source(&frozen(&u0, 5), 4, ProfileVariant::RootMeanSquare).unwrap();
        let s = &(&ux * 2f64.sqrt()) + &(&u0 * 6f64.sqrt());
        assert!((&rms - &s.map(f64::abs)).sup() <= 1e-14);
    }

    #[test]
    fn moments_of_two_sided_exponential() {
        // ½(∫_{-∞}^0 e^{3y} + ∫_0^∞ e^{-y}) = 2/3; the kink at 0 needs a fine grid
        let g = make_grid(65536, 30.0).unwrap();
        let h = sample(&g, |y| (-2.0 * y.abs()).exp()).unwrap();
        let (phi, psi) = phi_psi(&h, PsiConvention::Mirrored).unwrap();
        assert!((phi - 2.0 / 3.0).abs() < 1e-6, "{phi}");
        assert!((psi - 2.0 / 3.0).abs() < 1e-6, "{psi}");
        assert_eq!(phi_psi(&Field::zeros(&g), PsiConvention::Mirrored).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn even_source_has_equal_moments_and_literal_convention_copies_phi() {
        let g = make_grid(1024, 40.0).unwrap();
        let h = sample(&g, |y| sech(y).powi(4)).unwrap();
        let (phi, psi) = phi_psi(&h, PsiConvention::Mirrored).unwrap();
        assert!((phi - psi).abs() <= 1e-14 * phi);
        let odd = sample(&g, |y| sech(y).powi(4) * (1.0 + 0.5 * y.tanh())).unwrap();
        let (phi, psi) = phi_psi(&odd, PsiConvention::Literal).unwrap();
        assert_eq!(phi, psi);
    }

    #[test]
    fn slow_decay_is_rejected() {
        let g = make_grid(256, 20.0).unwrap();
        let h = sample(&g, |y| (-0.5 * y.abs()).exp()).unwrap();
        assert!(matches!(phi_psi(&h, PsiConvention::Mirrored), Err(Error::InsufficientDecay { .. })));
    }

    #[test]
    fn tail_ratio_rejects_empty_signal_and_bad_window() {
        let g = make_grid(1024, 40.0).unwrap();
        let zero = frozen(&Field::zeros(&g), 3);
        assert_eq!(
            tail_ratio(&zero, 2, (10.0, 20.0), ProfileVariant::Averaged, PsiConvention::Mirrored).unwrap_err(),
            Error::TailSignalBelowFloor
        );
        assert!(tail_ratio(&zero, 2, (5.0, 20.0), ProfileVariant::Averaged, PsiConvention::Mirrored).is_err());
    }

    #[test]
    fn synthetic_log_rate_recovers_exponent() {
        let q = saturating_density(1.0);
        // closed form for the ln(1+y) version: ∫_x^∞ dy/((1+y)ln²(1+y)) = 1/ln(1+x)
        let exact = tail_integral_log_variable(|s: f64| s.powi(-2), 50.0);
        assert!((exact - 1.0 / 51f64.ln()).abs() < 1e-10);
        let fit = log_remainder_rate_synthetic(&q, 1.0, (10.0, 1e4), 40).unwrap();
        let slope = fit.slope().unwrap();
        assert!((slope + 1.0).abs() < 0.15, "{slope}");
        let narrow = log_remainder_rate_synthetic(&q, 1.0, (10.0, 1e2), 40).unwrap();
        assert!((narrow.slope().unwrap() - slope).abs() < 0.1);
        assert!(log_remainder_rate_synthetic(&q, 0.5, (10.0, 1e4), 40).is_err());
    }

    #[test]
    fn compact_tail_is_degenerate() {
        let q = |s: f64| if s < 2.0 { 1.0 } else { 0.0 };
        let fit = log_remainder_rate_synthetic(q, 1.0, (10.0, 100.0), 10).unwrap();
        assert_eq!(fit, LogRateFit::DegenerateZeroTail);
    }

    #[test]
    fn bracketing_on_decaying_source() {
        let g = make_grid(1024, 40.0).unwrap();
        let h = sample(&g, |y| sech(y).powi(4)).unwrap();
        let s = bracketing_check(&h, (2.0, 15.0));
        assert!(!s.is_empty() && bracketing_holds(&s));
        assert!(s.last().unwrap().inner < 1e-3 * s[0].inner);
    }
}
