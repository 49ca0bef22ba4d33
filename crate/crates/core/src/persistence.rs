//! Weighted growth ledgers: `W(t) = ‖uφ_N‖_p + ‖u_xφ_N‖_p + ‖u_xxφ_N‖_p` against
//! the envelope `W(0)e^{C·M·t}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{derivative, Field};
use crate::integrator::Trajectory;
use crate::weights::{lp_condition, weighted_lp_norm, TruncatedWeight, Weight, WeightSpec};

/// Relative slack allowed when checking `W ≤ W(0)e^{C·M·t}` in floating point.
pub const ENVELOPE_RTOL: f64 = 1e-12;

fn derivatives(u: &Field) -> (Field, Field) {
    let ux = derivative(u, 1).expect("order 1 is supported");
    let uxx = derivative(u, 2).expect("order 2 is supported");
    (ux, uxx)
}

/// `‖u‖∞ + ‖u_x‖∞ + ‖u_xx‖∞` for one field.
pub fn sup_norm_sum(u: &Field) -> f64 {
    let (ux, uxx) = derivatives(u);
    u.sup() + ux.sup() + uxx.sup()
}

/// Max over snapshots of `‖u‖∞ + ‖u_x‖∞ + ‖u_xx‖∞`.
#[allow(non_snake_case)]
pub fn sup_norm_M(traj: &Trajectory) -> f64 {
    traj.snapshots().iter().map(sup_norm_sum).fold(0.0, f64::max)
}

/// `‖uw‖_p + ‖u_xw‖_p + ‖u_xxw‖_p`.
pub fn weighted_sum<W: Weight + ?Sized>(u: &Field, w: &W, p: f64) -> f64 {
    let (ux, uxx) = derivatives(u);
    weighted_lp_norm(u, w, p) + weighted_lp_norm(&ux, w, p) + weighted_lp_norm(&uxx, w, p)
}

/// Smallest `C ≥ 0` with `series[i] ≤ series[0]·e^{C·scale·t_i}`, and the index attaining it.
///
/// `None` when `series[0] = 0`.
pub fn fit_growth(times: &[f64], series: &[f64], scale: f64) -> Option<(f64, usize)> {
    let s0 = series[0];
    if !(s0 > 0.0) {
        return None;
    }
    let mut best = (0.0, 0usize);
    if scale > 0.0 {
        for i in 1..series.len() {
            let slope = (series[i] / s0).ln() / (scale * times[i]);
            if slope > best.0 {
                best = (slope, i);
            }
        }
    }
    Some(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceLedger {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    pub m: f64,
    /// `None` for a degenerate ledger (zero data).
    pub c_fit: Option<f64>,
    pub binding_index: Option<usize>,
    pub n_used: f64,
    pub p: f64,
    pub phi: WeightSpec,
}

impl PersistenceLedger {
    pub fn is_degenerate(&self) -> bool {
        self.c_fit.is_none()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|w| w.is_finite()) && self.m.is_finite()
    }

    /// `W(0)·e^{C_fit·M·t_i}`, or `W(0)` for a degenerate ledger.
    pub fn bound(&self, i: usize) -> f64 {
        self.w[0] * (self.c_fit.unwrap_or(0.0) * self.m * self.times[i]).exp()
    }

    /// The envelope holds at every sample.
    pub fn envelope_holds(&self) -> bool {
        (0..self.w.len()).all(|i| self.w[i] <= self.bound(i) * (1.0 + ENVELOPE_RTOL))
    }

    /// Relative gap `|W - bound|/bound` at the binding index.
    pub fn binding_gap(&self) -> Option<f64> {
        self.binding_index.map(|i| {
            let b = self.bound(i);
            if b == 0.0 {
                0.0
            } else {
                (self.w[i] - b).abs() / b
            }
        })
    }
}

/// Default truncation level: `φ(0.9·L)`.
pub fn default_truncation(phi: &WeightSpec, half_width: f64) -> f64 {
    phi.eval(0.9 * half_width)
}

pub fn persistence_ledger(
    traj: &Trajectory,
    phi: WeightSpec,
    p: f64,
    n: Option<f64>,
) -> Result<PersistenceLedger> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm order must be at least 1, got {p}")));
    }
    let n_used = n.unwrap_or_else(|| default_truncation(&phi, traj.grid().half_width()));
    let weight: TruncatedWeight = phi.truncate(n_used)?;
    let w: Vec<f64> = traj.snapshots().iter().map(|u| weighted_sum(u, &weight, p)).collect();
    let m = sup_norm_M(traj);
    let fit = fit_growth(traj.times(), &w, m);
    Ok(PersistenceLedger {
        times: traj.times().to_vec(),
        w,
        m,
        c_fit: fit.map(|f| f.0),
        binding_index: fit.map(|f| f.1),
        n_used,
        p,
        phi,
    })
}

/// A time series with its fitted `s(0)e^{2C·M·t}` envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSeries {
    pub values: Vec<f64>,
    pub c_fit: Option<f64>,
}

impl EnvelopeSeries {
    fn fit(times: &[f64], values: Vec<f64>, m: f64) -> Self {
        let c_fit = fit_growth(times, &values, 2.0 * m).map(|f| f.0);
        EnvelopeSeries { values, c_fit }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoTierReport {
    pub full: PersistenceLedger,
    /// Ledger for `φ^{1/2}` with `p = 2`.
    pub half: PersistenceLedger,
    /// `‖[(2u_x²+6u²) + ∂x(u_x²)]φ_N‖₁` per snapshot.
    pub source_series: EnvelopeSeries,
    /// `‖[∂x(2u_x²+6u²) + u_x²]φ_N‖₁` per snapshot.
    pub flux_series: EnvelopeSeries,
}

impl TwoTierReport {
    pub fn all_finite(&self) -> bool {
        self.full.is_finite()
            && self.half.is_finite()
            && self.source_series.is_finite()
            && self.flux_series.is_finite()
    }
}

/// The `(φ, p)` and `(φ^{1/2}, 2)` ledgers plus the two nonlinear-term series.
///
/// Requires `v e^{-|x|} ∈ L^p` for the canonical moderator `v` of `φ`.
pub fn two_tier_check(traj: &Trajectory, phi: WeightSpec, p: f64) -> Result<TwoTierReport> {
    let half_width = traj.grid().half_width();
    if !lp_condition(&phi.canonical_moderator(), p, half_width) {
        return Err(Error::HypothesisNotSatisfied);
    }
    let full = persistence_ledger(traj, phi, p, None)?;
    let half = persistence_ledger(traj, phi.sqrt(), 2.0, None)?;
    let weight = phi.truncate(full.n_used)?;
    let mut source = Vec::with_capacity(traj.len());
    let mut flux = Vec::with_capacity(traj.len());
    for u in traj.snapshots() {
        let (ux, _) = derivatives(u);
        let ux2 = ux.pointwise_mul(&ux)?;
        let quad = &(&ux2 * 2.0) + &(&u.pointwise_mul(u)? * 6.0);
        let s = &quad + &derivative(&ux2, 1)?;
        let f = &derivative(&quad, 1)? + &ux2;
        source.push(weighted_lp_norm(&s, &weight, 1.0));
        flux.push(weighted_lp_norm(&f, &weight, 1.0));
    }
    Ok(TwoTierReport {
        source_series: EnvelopeSeries::fit(traj.times(), source, full.m),
        flux_series: EnvelopeSeries::fit(traj.times(), flux, full.m),
        full,
        half,
    })
}

/// Per-snapshot `sup_x (|u|+|u_x|+|u_xx|)·φ(x)`.
pub fn weighted_sup_series<W: Weight + ?Sized>(traj: &Trajectory, w: &W) -> Vec<f64> {
    let x = traj.grid().x();
    traj.snapshots()
        .iter()
        .map(|u| {
            let (ux, uxx) = derivatives(u);
            (0..x.len())
                .map(|j| (u.values()[j].abs() + ux.values()[j].abs() + uxx.values()[j].abs()) * w.value(x[j]))
                .fold(0.0, f64::max)
        })
        .collect()
}
