//! Fixed-step classical Runge-Kutta integration and snapshot recording.

use serde::Serialize;

use crate::dynamics::{rhs_with, RhsForm};
use crate::error::{Error, Result};
use crate::grid::{derivative, Field, Grid};

/// Courant factor in [`estimate_dt`].
pub const CFL: f64 = 0.5;
/// Upper bound on any step.
pub const DT_MAX: f64 = 1e-2;
/// Steps between step-size re-evaluations.
pub const DT_REFRESH: usize = 100;
/// A run aborts once `‖u‖∞` exceeds this multiple of `‖u0‖∞`.
pub const BLOWUP_FACTOR: f64 = 1e3;
/// Largest boundary magnitude for which a run counts as valid.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// One classical RK4 step of `u' = deriv(u)`.
pub fn rk4_step<F>(u: &Field, dt: f64, deriv: F) -> Result<Field>
where
    F: Fn(&Field) -> Result<Field>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let stage = |v: &Field, index: usize| -> Result<Field> {
        let k = deriv(v)?;
        if k.is_finite() {
            Ok(k)
        } else {
            Err(Error::NonFiniteStage { stage: index })
        }
    };
    let k1 = stage(u, 1)?;
    let k2 = stage(&(u + &(&k1 * (0.5 * dt))), 2)?;
    let k3 = stage(&(u + &(&k2 * (0.5 * dt))), 3)?;
    let k4 = stage(&(u + &(&k3 * dt)), 4)?;
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            v + dt / 6.0
                * (k1.values()[j] + 2.0 * k2.values()[j] + 2.0 * k3.values()[j] + k4.values()[j])
        })
        .collect();
    let next = Field::new(u.grid(), values)?;
    if !next.is_finite() {
        return Err(Error::NonFiniteStage { stage: 4 });
    }
    Ok(next)
}

/// `C_cfl·dx / max(1, ‖4u‖∞ + ‖2u_x‖∞)`, capped at [`DT_MAX`].
pub fn estimate_dt(u: &Field) -> f64 {
    let ux = derivative(u, 1).expect("order 1 is supported");
    let speed = 4.0 * u.sup() + 2.0 * ux.sup();
    (CFL * u.grid().dx() / speed.max(1.0)).min(DT_MAX)
}

/// `max(|u(x_0)|, |u(x_{n-1})|)`, the samples nearest `±L`.
pub fn boundary_magnitude(u: &Field) -> f64 {
    let v = u.values();
    v[0].abs().max(v[v.len() - 1].abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// Fixed step instead of the CFL estimate; disables re-evaluation.
    pub dt: Option<f64>,
    pub dealias: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions { dt: None, dealias: true }
    }
}

/// Run metadata recorded with every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub dt_initial: f64,
    pub dt_final: f64,
    pub steps: usize,
    pub dealias: bool,
    pub blowup_threshold: f64,
    /// Boundary magnitude per snapshot.
    pub boundary: Vec<f64>,
}

/// Time-ordered snapshots of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    times: Vec<f64>,
    snapshots: Vec<Field>,
    form: RhsForm,
    metadata: RunMetadata,
}

impl Trajectory {
    /// Builds a trajectory from externally produced snapshots, checking the invariants.
    pub fn from_snapshots(times: Vec<f64>, snapshots: Vec<Field>, form: RhsForm) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(Error::InvalidTrajectory(format!(
                "{} times for {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidTrajectory("first time must be 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTrajectory("times must be strictly increasing".into()));
        }
        let grid = snapshots[0].grid().clone();
        if snapshots.iter().any(|s| s.grid() != &grid) {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = snapshots.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("snapshot {i} is not finite")));
        }
        let boundary = snapshots.iter().map(boundary_magnitude).collect();
        let metadata = RunMetadata {
            dt_initial: 0.0,
            dt_final: 0.0,
            steps: 0,
            dealias: true,
            blowup_threshold: BLOWUP_FACTOR * snapshots[0].sup(),
            boundary,
        };
        Ok(Trajectory { grid, times, snapshots, form, metadata })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn form(&self) -> RhsForm {
        self.form
    }

    pub fn metadata(&self) -> &RunMetadata {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn max_boundary(&self) -> f64 {
        self.metadata.boundary.iter().cloned().fold(0.0, f64::max)
    }

    /// Boundary magnitude stayed below [`BOUNDARY_TOL`] at every snapshot.
    pub fn is_boundary_clean(&self) -> bool {
        self.max_boundary() <= BOUNDARY_TOL
    }

    /// Index of the snapshot whose time is closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// The first `count` snapshots as a trajectory of their own.
    pub fn truncated(&self, count: usize) -> Trajectory {
        let count = count.clamp(1, self.len());
        let mut metadata = self.metadata.clone();
        metadata.boundary.truncate(count);
        Trajectory {
            grid: self.grid.clone(),
            times: self.times[..count].to_vec(),
            snapshots: self.snapshots[..count].to_vec(),
            form: self.form,
            metadata,
        }
    }
}

/// [`simulate_with`] using default options.
pub fn simulate(u0: &Field, t_end: f64, form: RhsForm, snapshot_stride: usize) -> Result<Trajectory> {
    simulate_with(u0, t_end, form, snapshot_stride, SimulationOptions::default())
}

/// Integrates from `u0` to `t_end`, storing every `snapshot_stride`-th step and the final state.
pub fn simulate_with(
    u0: &Field,
    t_end: f64,
    form: RhsForm,
    snapshot_stride: usize,
    options: SimulationOptions,
) -> Result<Trajectory> {
    if form.is_diagnostic_only() {
        return Err(Error::DiagnosticOnlyForm(form));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("T must be positive, got {t_end}")));
    }
    if snapshot_stride == 0 {
        return Err(Error::InvalidArgument("snapshot stride must be at least 1".into()));
    }
    if !u0.is_finite() {
        return Err(Error::InvalidTrajectory("initial data is not finite".into()));
    }
    if let Some(dt) = options.dt {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
    }
    let deriv = |v: &Field| rhs_with(v, form, options.dealias);
    let threshold = BLOWUP_FACTOR * u0.sup();
    let mut dt = options.dt.unwrap_or_else(|| estimate_dt(u0));
    let dt_initial = dt;

    let mut times = vec![0.0];
    let mut snapshots = vec![u0.clone()];
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    loop {
        let remaining = t_end - t;
        let last = remaining <= dt * (1.0 + 1e-9);
        let h = if last { remaining } else { dt };
        u = rk4_step(&u, h, deriv)?;
        steps += 1;
        t = if last { t_end } else { t + h };
        let sup = u.sup();
        if sup > threshold {
            return Err(Error::BlowUp { t, sup, threshold });
        }
        if last || steps % snapshot_stride == 0 {
            times.push(t);
            snapshots.push(u.clone());
        }
        if last {
            break;
        }
        if options.dt.is_none() && steps % DT_REFRESH == 0 {
            dt = dt.min(estimate_dt(&u));
        }
    }
    let boundary = snapshots.iter().map(boundary_magnitude).collect();
    let metadata = RunMetadata {
        dt_initial,
        dt_final: dt,
        steps,
        dealias: options.dealias,
        blowup_threshold: threshold,
        boundary,
    };
    Ok(Trajectory { grid: u0.grid().clone(), times, snapshots, form, metadata })
}

/// Observed convergence order from runs at `dt`, `dt/2` and `dt/4`.
pub fn measure_order(u0: &Field, t_end: f64, form: RhsForm, dt: f64) -> Result<f64> {
    let run = |h: f64| -> Result<Field> {
        let opts = SimulationOptions { dt: Some(h), dealias: true };
        Ok(simulate_with(u0, t_end, form, usize::MAX, opts)?.last().clone())
    };
    let a = run(dt)?;
    let b = run(0.5 * dt)?;
    let c = run(0.25 * dt)?;
    let e1 = (&a - &b).sup();
    let e2 = (&b - &c).sup();
    Ok((e1 / e2).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{momentum_from_velocity, momentum_tendency, rhs};
    use crate::grid::{make_grid, sample};

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    fn small_bump(g: &Grid) -> Field {
        sample(g, |x| 0.05 * sech(x).powi(2)).unwrap()
    }

    #[test]
    fn rk4_tableau_on_linear_decay() {
        let g = make_grid(16, 8.0).unwrap();
        let one = Field::constant(&g, 1.0);
        let still = rk4_step(&one, 0.1, |v| Ok(Field::zeros(v.grid()))).unwrap();
        assert_eq!(still, one);
        let next = rk4_step(&one, 0.1, |v| Ok(-v)).unwrap();
        // 1 - h + h²/2 - h³/6 + h⁴/24 at h = 0.1
        let taylor = 1.0 - 0.1 + 0.005 - 0.1f64.powi(3) / 6.0 + 0.1f64.powi(4) / 24.0;
        assert!((taylor - 0.904_837_5).abs() < 1e-12);
        assert!(next.values().iter().all(|v| (v - taylor).abs() < 1e-15));
    }

    #[test]
    fn rk4_rejects_bad_step_and_names_stage() {
        let g = make_grid(16, 8.0).unwrap();
        let one = Field::constant(&g, 1.0);
        assert!(rk4_step(&one, 0.0, |v| Ok(v.clone())).is_err());
        let err = rk4_step(&one, 0.1, |v| Ok(v.map(|x| if x > 1.0 { f64::NAN } else { x })))
            .unwrap_err();
        assert_eq!(err, Error::NonFiniteStage { stage: 2 });
    }

    #[test]
    fn local_error_scales_with_fifth_power() {
        let g = make_grid(256, 20.0).unwrap();
        let u = sample(&g, |x| 0.5 * sech(x).powi(2)).unwrap();
        let f = |v: &Field| rhs(v, RhsForm::FormB);
        let local = |h: f64| {
            let full = rk4_step(&u, h, f).unwrap();
            let half = rk4_step(&rk4_step(&u, 0.5 * h, f).unwrap(), 0.5 * h, f).unwrap();
            (&full - &half).sup()
        };
        let ratio = local(0.1) / local(0.05);
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn estimate_dt_examples() {
        let g = make_grid(1024, 40.0).unwrap();
        assert_eq!(estimate_dt(&Field::zeros(&g)), (0.5 * g.dx()).min(DT_MAX));
        let u = sample(&g, sech).unwrap();
        // max|sech'| = 1/2, so the denominator is 4 + 1 = 5; the grid max of
        // |u_x| sits slightly below 1/2 because no node hits the extremum
        let grid_max = g.x().iter().map(|&x| (sech(x) * x.tanh()).abs()).fold(0.0, f64::max);
        let expected = 0.5 * g.dx() / (4.0 + 2.0 * grid_max);
        assert!((estimate_dt(&u) - expected).abs() < 1e-12);
        assert!((estimate_dt(&u) - 0.5 * 0.078125 / 5.0).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for amp in [0.1, 0.2, 0.4, 0.8, 1.6] {
            let dt = estimate_dt(&(&u * amp));
            assert!(dt <= prev);
            prev = dt;
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = make_grid(64, 10.0).unwrap();
        let traj = simulate(&Field::zeros(&g), 0.1, RhsForm::FormA, 3).unwrap();
        assert!(traj.snapshots().iter().all(|s| s.sup() == 0.0));
        assert_eq!(*traj.times().last().unwrap(), 0.1);
        assert!(traj.is_boundary_clean());
    }

    #[test]
    fn diagnostic_form_and_bad_arguments_are_rejected() {
        let g = make_grid(64, 10.0).unwrap();
        let u = Field::zeros(&g);
        assert_eq!(
            simulate(&u, 1.0, RhsForm::Sqrt3, 1).unwrap_err(),
            Error::DiagnosticOnlyForm(RhsForm::Sqrt3)
        );
        assert!(simulate(&u, 0.0, RhsForm::FormB, 1).is_err());
        assert!(simulate(&u, 1.0, RhsForm::FormB, 0).is_err());
    }

    #[test]
    fn snapshots_land_on_stride_and_end_time() {
        let g = make_grid(128, 20.0).unwrap();
        let opts = SimulationOptions { dt: Some(0.03), dealias: true };
        let traj = simulate_with(&small_bump(&g), 0.1, RhsForm::FormB, 2, opts).unwrap();
        // steps at 0.03, 0.06, 0.09, then a short step to 0.1
        assert_eq!(traj.metadata().steps, 4);
        assert_eq!(traj.len(), 3);
        assert!((traj.times()[1] - 0.06).abs() < 1e-15);
        assert_eq!(traj.times()[2], 0.1);
    }

    #[test]
    fn small_bump_run_is_clean_and_converged() {
        let g = make_grid(1024, 40.0).unwrap();
        let u0 = small_bump(&g);
        let traj = simulate(&u0, 0.5, RhsForm::FormB, 10).unwrap();
        assert!(traj.last().is_finite());
        assert!(traj.is_boundary_clean());
        let dt = traj.metadata().dt_initial;
        let opts = SimulationOptions { dt: Some(0.5 * dt), dealias: true };
        let fine = simulate_with(&u0, 0.5, RhsForm::FormB, 10, opts).unwrap();
        assert!((traj.last() - fine.last()).sup() <= 1e-8);

        let other = simulate(&u0, 0.5, RhsForm::FormA, 10).unwrap();
        assert!((traj.last() - other.last()).sup() <= 1e-7);
    }

    #[test]
    fn runs_are_bit_identical() {
        let g = make_grid(128, 20.0).unwrap();
        let u0 = small_bump(&g);
        let a = simulate(&u0, 0.2, RhsForm::Primitive, 5).unwrap();
        let b = simulate(&u0, 0.2, RhsForm::Primitive, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn convergence_order_is_four() {
        let g = make_grid(256, 20.0).unwrap();
        let order = measure_order(&small_bump(&g), 1.0, RhsForm::FormB, 0.1).unwrap();
        assert!((3.8..=4.2).contains(&order), "order {order}");
    }

    #[test]
    fn reversing_time_returns_to_initial_data() {
        let g = make_grid(256, 20.0).unwrap();
        let u0 = small_bump(&g);
        let dt = 0.01;
        let forward = |v: &Field| rhs(v, RhsForm::FormB);
        let backward = |v: &Field| Ok(-&rhs(v, RhsForm::FormB)?);
        let mut u = u0.clone();
        for _ in 0..50 {
            u = rk4_step(&u, dt, forward).unwrap();
        }
        for _ in 0..50 {
            u = rk4_step(&u, dt, backward).unwrap();
        }
        assert!((&u - &u0).sup() <= 1e-6);
    }

    #[test]
    fn velocity_and_momentum_evolutions_stay_consistent() {
        let g = make_grid(512, 30.0).unwrap();
        let mut u = small_bump(&g);
        let mut m = momentum_from_velocity(&u);
        let dt = 0.01;
        for _ in 0..50 {
            u = rk4_step(&u, dt, |v| rhs(v, RhsForm::FormB)).unwrap();
            m = rk4_step(&m, dt, momentum_tendency).unwrap();
        }
        assert!((&m - &momentum_from_velocity(&u)).sup() <= 1e-6);
    }

    #[test]
    fn from_snapshots_validates() {
        let g = make_grid(16, 8.0).unwrap();
        let z = Field::zeros(&g);
        assert!(Trajectory::from_snapshots(vec![0.0, 1.0], vec![z.clone()], RhsForm::FormB).is_err());
        assert!(Trajectory::from_snapshots(vec![0.5], vec![z.clone()], RhsForm::FormB).is_err());
        assert!(Trajectory::from_snapshots(
            vec![0.0, 0.0],
            vec![z.clone(), z.clone()],
            RhsForm::FormB
        )
        .is_err());
        let t = Trajectory::from_snapshots(vec![0.0, 1.0], vec![z.clone(), z], RhsForm::FormB).unwrap();
        assert_eq!(t.index_near(0.7), 1);
    }
}
