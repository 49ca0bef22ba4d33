//! Runs one configured experiment: simulate, run the selected diagnostics, write artifacts.
//!
//! Every CSV starts with a `# config-hash:` line followed by a header row. `summary.json`
//! is a flat, key-sorted object whose numbers are rounded to ten significant digits, so
//! repeated runs produce identical bytes; wall time goes to `timing.json` instead.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gch_core::analyticity::{es_norm_truncated, operator_bound_checks, radius_track, EsNormParams};
use gch_core::asymptotics::{
    averaged_source, bracketing_check, bracketing_holds, is_time_sampling_sparse, log_remainder_rate,
    moment_series, tail_ratio, PsiConvention,
};
use gch_core::dynamics::{form_residual, rhs};
use gch_core::integrator::{simulate_with, SimulationOptions, Trajectory};
use gch_core::io::{load_initial_condition, write_checkpoint, write_trajectory_csv};
use gch_core::persistence::{persistence_ledger, sup_norm_sum, two_tier_check};
use gch_core::{make_grid, sample, Error, Field, RhsForm};
use serde_json::{Map, Value};

use crate::config::{parse_config, ConfigErrors, Diagnostic, ExperimentConfig, InitialCondition};

/// Equivalent-form residuals above `RESIDUAL_TOL·max(1, ‖rhs‖_∞)` count as a failure.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    InitialCondition,
    Simulation,
    Residuals,
    Persistence,
    TwoTier,
    Asymptotics,
    Analyticity,
    Output,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::InitialCondition => "initial_condition",
            Stage::Simulation => "simulation",
            Stage::Residuals => "residuals",
            Stage::Persistence => "persistence",
            Stage::TwoTier => "two_tier",
            Stage::Asymptotics => "asymptotics",
            Stage::Analyticity => "analyticity",
            Stage::Output => "output",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration\n{0}")]
    Config(ConfigErrors),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: Stage, source: Error },
    #[error("stage output failed for {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl RunError {
    pub fn stage(&self) -> Stage {
        match self {
            RunError::Config(_) => Stage::Config,
            RunError::Stage { stage, .. } => *stage,
            RunError::Output { .. } => Stage::Output,
        }
    }

    /// 2 for configuration problems, 3 for numerical aborts, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Stage { stage: Stage::Simulation, source } => match source {
                Error::BlowUp { .. } | Error::NonFiniteStage { .. } | Error::NonFiniteTerm { .. } => 3,
                Error::DiagnosticOnlyForm(_) => 2,
                _ => 1,
            },
            _ => 1,
        }
    }

    /// Flat JSON report naming the failing stage.
    pub fn report(&self, config_hash: Option<&str>) -> String {
        let mut m = Map::new();
        m.insert("stage".into(), self.stage().name().into());
        m.insert("message".into(), self.to_string().into());
        m.insert("exit_code".into(), self.exit_code().into());
        if let Some(h) = config_hash {
            m.insert("config_hash".into(), h.into());
        }
        serde_json::to_string_pretty(&Value::Object(m)).expect("string map serializes") + "\n"
    }
}

fn stage_err(stage: Stage) -> impl Fn(Error) -> RunError {
    move |source| RunError::Stage { stage, source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub config_hash: String,
    pub out_dir: PathBuf,
    pub boundary_clean: bool,
    pub no_blowup: bool,
    /// Named diagnostic checks that did not hold.
    pub failures: Vec<String>,
    pub wall_time_seconds: f64,
    /// The flat content of `summary.json`.
    pub values: Map<String, Value>,
}

impl RunSummary {
    pub fn is_valid(&self) -> bool {
        self.boundary_clean && self.no_blowup
    }

    /// 0 success, 1 diagnostics failed, 3 boundary or blow-up violation.
    pub fn exit_code(&self) -> i32 {
        if !self.is_valid() {
            3
        } else if !self.failures.is_empty() {
            1
        } else {
            0
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.values).expect("string map serializes") + "\n"
    }
}

/// Ten significant digits; non-finite values become `null`.
fn num(v: f64) -> Value {
    if v.is_finite() {
        let rounded: f64 = format!("{v:.9e}").parse().expect("formatted float parses");
        serde_json::Number::from_f64(rounded).map(Value::Number).unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

fn opt(v: Option<f64>) -> Value {
    v.map(num).unwrap_or(Value::Null)
}

/// Writes through a temporary file and a rename, so readers never see partial artifacts.
fn write_artifact(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let err = |e: std::io::Error| RunError::Output { path: path.to_path_buf(), message: e.to_string() };
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

struct Artifacts<'a> {
    dir: &'a Path,
    hash: &'a str,
}

impl Artifacts<'_> {
    fn csv(&self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), RunError> {
        let mut text = format!("# config-hash: {}\n{header}\n", self.hash);
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        write_artifact(&self.dir.join(name), text.as_bytes())
    }

    fn bytes(&self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        write_artifact(&self.dir.join(name), bytes)
    }
}

fn initial_field(config: &ExperimentConfig) -> Result<Field, Error> {
    let grid = make_grid(config.grid.n, config.grid.half_width)?;
    match &config.initial {
        InitialCondition::File(path) => load_initial_condition(path, &grid),
        ic => sample(&grid, ic.profile().expect("analytic profile")),
    }
}

/// Rejects anything the text form would reject, including diagnostic-only forms.
pub fn validate(config: &ExperimentConfig) -> Result<(), RunError> {
    parse_config(&config.to_text()).map(|_| ()).map_err(RunError::Config)
}

/// Simulates and runs the configured diagnostics, writing artifacts under `config.output.dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    validate(config)?;
    let start = Instant::now();
    let hash = config.hash();
    let dir = config.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| RunError::Output { path: dir.clone(), message: e.to_string() })?;
    let out = Artifacts { dir: &dir, hash: &hash };
    let result = execute(config, &out);
    match result {
        Ok(mut summary) => {
            summary.wall_time_seconds = start.elapsed().as_secs_f64();
            out.bytes("summary.json", summary.to_json().as_bytes())?;
            let timing = serde_json::json!({ "config_hash": hash, "wall_time_seconds": summary.wall_time_seconds });
            out.bytes("timing.json", (serde_json::to_string_pretty(&timing).expect("json") + "\n").as_bytes())?;
            Ok(summary)
        }
        Err(e) => {
            let _ = out.bytes("error.json", e.report(Some(&hash)).as_bytes());
            Err(e)
        }
    }
}

fn execute(config: &ExperimentConfig, out: &Artifacts) -> Result<RunSummary, RunError> {
    let mut v = Map::new();
    let mut failures = Vec::new();
    v.insert("config_hash".into(), out.hash.into());
    for (k, value) in config.echo() {
        v.insert(format!("config.{k}"), value.into());
    }

    let u0 = initial_field(config).map_err(stage_err(Stage::InitialCondition))?;
    let options = SimulationOptions { dt: config.time.dt, dealias: config.dealias };
    let traj = simulate_with(&u0, config.time.t_end, config.form, config.time.snapshot_stride, options)
        .map_err(stage_err(Stage::Simulation))?;
    record_run(&traj, out, &mut v)?;
    let boundary_clean = traj.is_boundary_clean();

    for diagnostic in &config.diagnostics {
        match diagnostic {
            Diagnostic::Residuals => residuals(&traj, out, &mut v, &mut failures)?,
            Diagnostic::Persistence => persistence(config, &traj, out, &mut v, &mut failures)?,
            Diagnostic::TwoTier => two_tier(config, &traj, out, &mut v, &mut failures)?,
            Diagnostic::Asymptotics => asymptotics(config, &traj, out, &mut v, &mut failures)?,
            Diagnostic::Analyticity => analyticity(config, &traj, out, &mut v, &mut failures)?,
        }
    }

    if config.output.trajectory {
        let mut buf = format!("# config-hash: {}\n", out.hash).into_bytes();
        write_trajectory_csv(&mut buf, &traj).map_err(stage_err(Stage::Output))?;
        out.bytes("trajectory.csv", &buf)?;
    }
    let mut state = Vec::new();
    let t_final = *traj.times().last().expect("non-empty trajectory");
    write_checkpoint(&mut state, traj.last(), t_final).map_err(stage_err(Stage::Output))?;
    out.bytes("final_state.bin", &state)?;

    v.insert("valid.boundary_clean".into(), boundary_clean.into());
    v.insert("valid.no_blowup".into(), true.into());
    v.insert("diagnostics.failures".into(), failures.join("; ").into());
    v.insert("diagnostics.passed".into(), failures.is_empty().into());
    Ok(RunSummary {
        config_hash: out.hash.to_string(),
        out_dir: out.dir.to_path_buf(),
        boundary_clean,
        no_blowup: true,
        failures,
        wall_time_seconds: 0.0,
        values: v,
    })
}

fn record_run(traj: &Trajectory, out: &Artifacts, v: &mut Map<String, Value>) -> Result<(), RunError> {
    let meta = traj.metadata();
    let rows = traj.times().iter().zip(traj.snapshots()).zip(&meta.boundary).map(|((t, u), b)| {
        format!("{t},{},{},{b}", u.sup(), sup_norm_sum(u))
    });
    out.csv("run.csv", "t,sup_u,sup_norm_sum,boundary", rows)?;
    v.insert("run.steps".into(), meta.steps.into());
    v.insert("run.snapshots".into(), traj.len().into());
    v.insert("run.dt_initial".into(), num(meta.dt_initial));
    v.insert("run.dt_final".into(), num(meta.dt_final));
    v.insert("run.boundary_max".into(), num(traj.max_boundary()));
    v.insert("run.blowup_threshold".into(), num(meta.blowup_threshold));
    v.insert("run.t_final".into(), num(*traj.times().last().expect("non-empty trajectory")));
    Ok(())
}

fn residuals(
    traj: &Trajectory,
    out: &Artifacts,
    v: &mut Map<String, Value>,
    failures: &mut Vec<String>,
) -> Result<(), RunError> {
    let err = stage_err(Stage::Residuals);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut worst_scaled: f64 = 0.0;
    let mut discrepancy: f64 = 0.0;
    let forms = RhsForm::EQUIVALENT;
    for (t, u) in [(traj.times()[0], traj.initial()), (*traj.times().last().unwrap(), traj.last())] {
        let scale = rhs(u, RhsForm::FormB).map_err(&err)?.sup().max(1.0);
        for i in 0..forms.len() {
            for j in i + 1..forms.len() {
                let r = form_residual(u, forms[i], forms[j]).map_err(&err)?;
                rows.push(format!("{t},{}-{},{r}", forms[i], forms[j]));
                worst = worst.max(r);
                worst_scaled = worst_scaled.max(r / scale);
            }
        }
        let d = form_residual(u, RhsForm::FormB, RhsForm::Sqrt3).map_err(&err)?;
        rows.push(format!("{t},FormB-Sqrt3,{d}"));
        discrepancy = discrepancy.max(d);
    }
    out.csv("residuals.csv", "t,pair,residual", rows)?;
    v.insert("residuals.max_equivalent".into(), num(worst));
    v.insert("residuals.sqrt3_discrepancy".into(), num(discrepancy));
    if !(worst_scaled <= RESIDUAL_TOL) {
        failures.push(format!("residuals: equivalent forms differ by {worst:e}"));
    }
    Ok(())
}

fn persistence(
    config: &ExperimentConfig,
    traj: &Trajectory,
    out: &Artifacts,
    v: &mut Map<String, Value>,
    failures: &mut Vec<String>,
) -> Result<(), RunError> {
    let p = config.weights.p;
    for (i, phi) in config.weights.phi.iter().enumerate() {
        let ledger =
            persistence_ledger(traj, *phi, p, config.weights.truncation).map_err(stage_err(Stage::Persistence))?;
        let rows = (0..ledger.w.len()).map(|k| format!("{},{},{}", ledger.times[k], ledger.w[k], ledger.bound(k)));
        out.csv(&format!("persistence_{i}.csv"), "t,W,envelope", rows)?;
        let key = |s: &str| format!("persistence.{i}.{s}");
        v.insert("persistence.M".into(), num(ledger.m));
        v.insert(key("phi"), phi.to_string().into());
        v.insert(key("N"), num(ledger.n_used));
        v.insert(key("C_fit"), opt(ledger.c_fit));
        v.insert(key("binding_t"), opt(ledger.binding_index.map(|b| ledger.times[b])));
        v.insert(key("degenerate"), ledger.is_degenerate().into());
        v.insert(key("envelope_holds"), ledger.envelope_holds().into());
        if !ledger.is_finite() {
            failures.push(format!("persistence: ledger for phi = {phi} is not finite"));
        } else if !ledger.envelope_holds() {
            failures.push(format!("persistence: envelope violated for phi = {phi}"));
        }
    }
    Ok(())
}

fn two_tier(
    config: &ExperimentConfig,
    traj: &Trajectory,
    out: &Artifacts,
    v: &mut Map<String, Value>,
    failures: &mut Vec<String>,
) -> Result<(), RunError> {
    for (i, phi) in config.weights.phi.iter().enumerate() {
        let report = two_tier_check(traj, *phi, config.weights.p).map_err(stage_err(Stage::TwoTier))?;
        let rows = (0..traj.len()).map(|k| {
            format!(
                "{},{},{},{},{}",
                traj.times()[k],
                report.full.w[k],
                report.half.w[k],
                report.source_series.values[k],
                report.flux_series.values[k]
            )
        });
        out.csv(&format!("two_tier_{i}.csv"), "t,W_full,W_half,source,flux", rows)?;
        let key = |s: &str| format!("two_tier.{i}.{s}");
        v.insert(key("phi"), phi.to_string().into());
        v.insert(key("C_full"), opt(report.full.c_fit));
        v.insert(key("C_half"), opt(report.half.c_fit));
        v.insert(key("C_source"), opt(report.source_series.c_fit));
        v.insert(key("C_flux"), opt(report.flux_series.c_fit));
        v.insert(key("finite"), report.all_finite().into());
        if !report.all_finite() {
            failures.push(format!("two_tier: non-finite ledger for phi = {phi}"));
        }
    }
    Ok(())
}

fn asymptotics(
    config: &ExperimentConfig,
    traj: &Trajectory,
    out: &Artifacts,
    v: &mut Map<String, Value>,
    failures: &mut Vec<String>,
) -> Result<(), RunError> {
    let err = stage_err(Stage::Asymptotics);
    let a = &config.asymptotics;
    let l = config.grid.half_width;
    let t_index = traj.index_near(a.t.unwrap_or(config.time.t_end));
    let window = a.window_or_default(l);
    let moments = moment_series(traj, a.variant, a.psi).map_err(&err)?;
    let rows = (0..moments.times.len()).map(|k| format!("{},{},{}", moments.times[k], moments.phi[k], moments.psi[k]));
    out.csv("moments.csv", "t,Phi,Psi", rows)?;
    let (c1, c2) = moments.phi_bounds();
    v.insert("asymptotics.t".into(), num(traj.times()[t_index]));
    v.insert("asymptotics.variant".into(), a.variant.name().into());
    let psi = if a.psi == PsiConvention::Literal { "literal" } else { "mirrored" };
    v.insert("asymptotics.psi_convention".into(), psi.into());
    v.insert("asymptotics.Phi".into(), num(moments.phi[t_index]));
    v.insert("asymptotics.Psi".into(), num(moments.psi[t_index]));
    v.insert("asymptotics.c1".into(), num(c1));
    v.insert("asymptotics.c2".into(), num(c2));
    v.insert("asymptotics.initial_jump".into(), opt(moments.initial_jump()));
    v.insert("asymptotics.sparse_time_sampling".into(), is_time_sampling_sparse(t_index).into());
    if !moments.phi.iter().chain(&moments.psi).all(|x| x.is_finite()) {
        failures.push("asymptotics: non-finite profile moments".into());
    }

    match tail_ratio(traj, t_index, window, a.variant, a.psi) {
        Ok(tr) => {
            let rows = tr
                .right
                .iter()
                .map(|(x, r)| format!("right,{x},{r}"))
                .chain(tr.left.iter().map(|(x, r)| format!("left,{x},{r}")));
            out.csv("tail.csv", "side,x,ratio", rows)?;
            v.insert("asymptotics.tail".into(), "ok".into());
            v.insert("asymptotics.median_right".into(), num(tr.median_right));
            v.insert("asymptotics.median_left".into(), num(tr.median_left));
            v.insert("asymptotics.deviation_right".into(), num(tr.deviation_right));
            v.insert("asymptotics.deviation_left".into(), num(tr.deviation_left));
            v.insert("asymptotics.far_field_right".into(), num(tr.far_field_right));
            v.insert("asymptotics.far_field_left".into(), num(tr.far_field_left));
        }
        Err(Error::TailSignalBelowFloor) => {
            out.csv("tail.csv", "side,x,ratio", Vec::new())?;
            v.insert("asymptotics.tail".into(), "degenerate".into());
        }
        Err(e) => return Err(err(e)),
    }

    let fit = log_remainder_rate(traj, t_index, a.d, a.log_window.unwrap_or(window)).map_err(&err)?;
    v.insert("asymptotics.log_rate_slope".into(), opt(fit.slope()));
    v.insert("asymptotics.log_rate_predicted".into(), num(1.0 - 2.0 * a.d));

    let h = averaged_source(traj, t_index, a.variant).map_err(&err)?;
    let samples = bracketing_check(&h, window);
    let rows = samples.iter().map(|s| format!("{},{},{}", s.x, s.inner, s.outer));
    out.csv("bracketing.csv", "x,inner,outer", rows)?;
    let holds = bracketing_holds(&samples);
    v.insert("asymptotics.bracketing_holds".into(), holds.into());
    if !holds {
        failures.push("asymptotics: bracketing inequality violated".into());
    }
    Ok(())
}

fn analyticity(
    config: &ExperimentConfig,
    traj: &Trajectory,
    out: &Artifacts,
    v: &mut Map<String, Value>,
    failures: &mut Vec<String>,
) -> Result<(), RunError> {
    let err = stage_err(Stage::Analyticity);
    let c = &config.analyticity;
    let params = EsNormParams::new(c.s, c.k_max).map_err(&err)?;
    let es: Vec<f64> = traj
        .snapshots()
        .iter()
        .map(|u| es_norm_truncated(u, &params).map(|n| n.value))
        .collect::<Result<_, _>>()
        .map_err(&err)?;
    let series = match radius_track(traj, &params) {
        Ok(series) => Some(series),
        Err(Error::SpectrumTooNarrow { .. }) => None,
        Err(e) => return Err(err(e)),
    };
    let rows = (0..traj.len()).map(|k| {
        let fit = series.as_ref().and_then(|s| s.fits[k].as_ref());
        let cell = |f: Option<String>| f.unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            traj.times()[k],
            cell(fit.map(|f| f.sigma.to_string())),
            cell(fit.map(|f| f.residual.to_string())),
            cell(fit.map(|f| f.modes.to_string())),
            es[k]
        )
    });
    out.csv("analyticity.csv", "t,sigma,fit_residual,fit_modes,es_norm", rows)?;
    let sigma = series.as_ref().map(|s| s.sigma()).unwrap_or_else(|| vec![None; traj.len()]);
    v.insert("analyticity.radius".into(), if series.is_some() { "ok" } else { "degenerate" }.into());
    v.insert("analyticity.sigma0".into(), opt(sigma[0]));
    v.insert("analyticity.sigmaT".into(), opt(*sigma.last().unwrap()));
    v.insert("analyticity.max_relative_jump".into(), opt(series.as_ref().map(|s| s.max_relative_jump())));
    v.insert("analyticity.es_norm0".into(), num(es[0]));
    v.insert("analyticity.es_normT".into(), num(*es.last().unwrap()));

    let bounds = operator_bound_checks(traj.initial(), c.s, c.s_prime, c.k_max).map_err(&err)?;
    v.insert("analyticity.derivative_bound_slack".into(), num(bounds.p1_slack));
    v.insert("analyticity.nonlocal_bound_slack".into(), num(bounds.p2_slack));
    v.insert("analyticity.algebra_constant".into(), opt(bounds.c_meas));
    if !bounds.passes() {
        failures.push("analyticity: operator bound violated at t = 0".into());
    }
    if !es.iter().all(|x| x.is_finite()) {
        failures.push("analyticity: non-finite E_s norm".into());
    }
    Ok(())
}
