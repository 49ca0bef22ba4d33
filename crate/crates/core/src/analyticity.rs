//! Truncated majorant norm `‖u‖_s = max_{k≤K} s^k(k+1)²‖∂^k u‖_{H¹}/k!`, the operator
//! bounds it satisfies, and a Fourier-decay estimate of the analyticity strip width.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{h1_norm, Field};
use crate::integrator::Trajectory;
use crate::nonlocal::p2_apply;

/// Spectral coefficients below this fraction of the largest are treated as round-off.
pub const SPECTRAL_NOISE: f64 = 1e-14;
/// Normalized Fourier magnitudes at or below this are excluded from the radius fit.
pub const RADIUS_FLOOR: f64 = 1e-13;
/// Lowest modes left out of the radius fit.
pub const SKIPPED_LOW_MODES: usize = 4;
pub const MIN_FIT_MODES: usize = 10;
/// Second-half to first-half slope ratio above which decay is called super-exponential.
pub const SUPER_EXPONENTIAL_RATIO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EsNormParams {
    pub s: f64,
    pub k_max: usize,
}

impl EsNormParams {
    pub fn new(s: f64, k_max: usize) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidArgument(format!("s must lie in (0, 1], got {s}")));
        }
        if k_max > 30 {
            return Err(Error::InvalidArgument(format!("K must be at most 30, got {k_max}")));
        }
        Ok(EsNormParams { s, k_max })
    }
}

impl Default for EsNormParams {
    fn default() -> Self {
        EsNormParams { s: 0.5, k_max: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EsNorm {
    pub value: f64,
    /// Index `k` of the largest term.
    pub argmax_k: usize,
}

impl EsNorm {
    /// The maximum sits at the truncation order, so the full supremum may be larger.
    pub fn at_truncation(&self, params: &EsNormParams) -> bool {
        self.argmax_k == params.k_max && params.k_max > 0
    }
}

/// Spectrum with round-off modes removed.
fn cleaned_spectrum(f: &Field) -> Vec<Complex64> {
    let mut spec = f.spectrum();
    let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for c in spec.iter_mut() {
        if c.norm() < SPECTRAL_NOISE * peak {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    spec
}

/// `∂^k f` from a cleaned spectrum, Nyquist zeroed for odd `k`.
fn derivative_from_spectrum(f: &Field, spec: &[Complex64], k: usize) -> Field {
    let grid = f.grid();
    let nyq = grid.nyquist_index();
    let out = spec
        .iter()
        .zip(grid.wavenumbers())
        .enumerate()
        .map(|(j, (c, &kw))| {
            if k % 2 == 1 && j == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, kw).powu(k as u32)
            }
        })
        .collect();
    Field::from_spectrum(grid, out)
}

/// `ln(s^k(k+1)²/k!)`.
fn ln_coefficient(s: f64, k: usize) -> f64 {
    let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    k as f64 * s.ln() + 2.0 * ((k + 1) as f64).ln() - ln_fact
}

pub fn es_norm_truncated(f: &Field, params: &EsNormParams) -> Result<EsNorm> {
    let spec = cleaned_spectrum(f);
    let mut best = EsNorm { value: 0.0, argmax_k: 0 };
    for k in 0..=params.k_max {
        let coef = ln_coefficient(params.s, k).exp();
        if !coef.is_finite() {
            return Err(Error::EsOverflow { k });
        }
        let d = if k == 0 { f.clone() } else { derivative_from_spectrum(f, &spec, k) };
        let term = coef * h1_norm(&d);
        if !term.is_finite() {
            return Err(Error::EsOverflow { k });
        }
        if term > best.value {
            best = EsNorm { value: term, argmax_k: k };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorBoundReport {
    pub s: f64,
    pub s_prime: f64,
    pub k_max: usize,
    /// `‖∂x f‖_{s'}` (order `K`).
    pub p1_lhs: f64,
    /// `‖f‖_s/(s - s')`, with `f`'s norm taken to order `K+1` since the left side reaches `∂^{K+1}f`.
    pub p1_rhs: f64,
    pub p1_slack: f64,
    pub p2_lhs: f64,
    pub p2_rhs: f64,
    pub p2_slack: f64,
    /// `‖f‖_s - ‖f‖_{s'}`.
    pub monotone_slack: f64,
    /// `‖f²‖_s/‖f‖_s²`; `None` for the zero field.
    pub c_meas: Option<f64>,
    /// The same ratio with `K` doubled (capped at 30).
    pub c_meas_doubled: Option<f64>,
}

impl OperatorBoundReport {
    /// Relative change of the algebra constant under `K`-doubling.
    pub fn c_meas_drift(&self) -> Option<f64> {
        match (self.c_meas, self.c_meas_doubled) {
            (Some(a), Some(b)) if a > 0.0 => Some((b - a).abs() / a),
            _ => None,
        }
    }

    pub fn passes(&self) -> bool {
        self.p1_slack >= 0.0 && self.p2_slack >= 0.0 && self.monotone_slack >= 0.0
    }
}

pub fn operator_bound_checks(f: &Field, s: f64, s_prime: f64, k_max: usize) -> Result<OperatorBoundReport> {
    if !(0.0 < s_prime && s_prime < s && s <= 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < s' < s <= 1, got s = {s}, s' = {s_prime}")));
    }
    let at = |s: f64, k: usize| EsNormParams::new(s, k.min(30));
    let norm = |g: &Field, p: EsNormParams| es_norm_truncated(g, &p).map(|n| n.value);
    let fx = derivative_from_spectrum(f, &cleaned_spectrum(f), 1);
    let p1_lhs = norm(&fx, at(s_prime, k_max)?)?;
    let p1_rhs = norm(f, at(s, k_max + 1)?)? / (s - s_prime);
    let base = norm(f, at(s, k_max)?)?;
    let p2_lhs = norm(&p2_apply(f), at(s, k_max)?)?;
    let monotone_slack = base - norm(f, at(s_prime, k_max)?)?;
    let ratio = |k: usize| algebra_constant(f, f, &at(s, k)?);
    Ok(OperatorBoundReport {
        s,
        s_prime,
        k_max,
        p1_lhs,
        p1_rhs,
        p1_slack: p1_rhs - p1_lhs,
        p2_lhs,
        p2_rhs: base,
        p2_slack: base - p2_lhs,
        monotone_slack,
        c_meas: ratio(k_max)?,
        c_meas_doubled: ratio((2 * k_max).min(30))?,
    })
}

/// `‖uv‖_s/(‖u‖_s‖v‖_s)`; `None` if either factor has zero norm.
pub fn algebra_constant(u: &Field, v: &Field, params: &EsNormParams) -> Result<Option<f64>> {
    let nu = es_norm_truncated(u, params)?.value;
    let nv = es_norm_truncated(v, params)?.value;
    if nu == 0.0 || nv == 0.0 {
        return Ok(None);
    }
    Ok(Some(es_norm_truncated(&u.pointwise_mul(v)?, params)?.value / (nu * nv)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusFit {
    /// Exponential decay rate of the spectrum, the strip half-width estimate.
    pub sigma: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    /// Wavenumber range used.
    pub band: (f64, f64),
    pub modes: usize,
    /// Log-spectrum bends downward: sigma is a lower bound.
    pub super_exponential: bool,
}

fn fit_line(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

/// Fits `-ln|c_j|` against `k_j` over the longest contiguous above-floor band,
/// skipping the first [`SKIPPED_LOW_MODES`] entries. `magnitudes` are normalized
/// by their maximum before the floor is applied.
pub fn radius_from_spectrum(wavenumbers: &[f64], magnitudes: &[f64]) -> Result<RadiusFit> {
    let peak = magnitudes.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::SpectrumTooNarrow { usable: 0 });
    }
    let above: Vec<bool> = magnitudes.iter().map(|m| m / peak > RADIUS_FLOOR).collect();
    let mut best = (0usize, 0usize);
    let mut start = None;
    for j in SKIPPED_LOW_MODES..=magnitudes.len() {
        let on = j < magnitudes.len() && above[j];
        match (on, start) {
            (true, None) => start = Some(j),
            (false, Some(s)) => {
                if j - s > best.1 - best.0 {
                    best = (s, j);
                }
                start = None;
            }
            _ => {}
        }
    }
    let usable = best.1 - best.0;
    if usable < MIN_FIT_MODES {
        return Err(Error::SpectrumTooNarrow { usable });
    }
    let points: Vec<(f64, f64)> =
        (best.0..best.1).map(|j| (wavenumbers[j], -(magnitudes[j] / peak).ln())).collect();
    let (sigma, _, residual) = fit_line(&points);
    let half = points.len() / 2;
    let (first, _, _) = fit_line(&points[..half]);
    let (second, _, _) = fit_line(&points[half..]);
    let super_exponential = first > 0.0 && second / first > SUPER_EXPONENTIAL_RATIO;
    Ok(RadiusFit {
        sigma,
        residual,
        band: (wavenumbers[best.0], wavenumbers[best.1 - 1]),
        modes: usable,
        super_exponential,
    })
}

/// Radius fit on the non-negative wavenumbers of `f`.
pub fn radius_estimate(f: &Field) -> Result<RadiusFit> {
    radius_estimate_below(f, f64::INFINITY)
}

/// Radius fit restricted to wavenumbers `k ≤ k_cap`.
///
/// Log-spectra of evolved fields are curved, so fits on two grids are only
/// comparable over a common physical band.
pub fn radius_estimate_below(f: &Field, k_cap: f64) -> Result<RadiusFit> {
    let spec = f.spectrum();
    let k = f.grid().wavenumbers();
    let half = (0..f.grid().n() / 2).take_while(|&j| k[j] <= k_cap).count();
    let mags: Vec<f64> = spec[..half].iter().map(|c| c.norm()).collect();
    radius_from_spectrum(&k[..half], &mags)
}

/// Largest wavenumber kept by 2/3-rule dealiasing on the grid of `f`.
pub fn dealiased_cutoff(f: &Field) -> f64 {
    let g = f.grid();
    (0..g.n() / 2)
        .filter(|&j| g.is_resolved_mode(j))
        .map(|j| g.wavenumbers()[j])
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusSeries {
    pub times: Vec<f64>,
    /// Per-snapshot fit; `None` where the fit failed.
    pub fits: Vec<Option<RadiusFit>>,
    pub es_argmax: Vec<usize>,
}

impl RadiusSeries {
    pub fn sigma(&self) -> Vec<Option<f64>> {
        self.fits.iter().map(|f| f.as_ref().map(|r| r.sigma)).collect()
    }

    /// Largest relative change of sigma between consecutive valid snapshots.
    pub fn max_relative_jump(&self) -> f64 {
        let s: Vec<f64> = self.sigma().into_iter().flatten().collect();
        s.windows(2).map(|w| (w[1] - w[0]).abs() / w[0].abs()).fold(0.0, f64::max)
    }
}

pub fn radius_track(traj: &Trajectory, params: &EsNormParams) -> Result<RadiusSeries> {
    radius_estimate(traj.initial())?;
    let mut fits = Vec::with_capacity(traj.len());
    let mut es_argmax = Vec::with_capacity(traj.len());
    for u in traj.snapshots() {
        fits.push(radius_estimate(u).ok());
        es_argmax.push(es_norm_truncated(u, params)?.argmax_k);
    }
    Ok(RadiusSeries { times: traj.times().to_vec(), fits, es_argmax })
}
