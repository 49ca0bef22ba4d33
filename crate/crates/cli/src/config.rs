//! Experiment configuration: flat `key = value` lines grouped under `[section]` headers.
//!
//! `#` starts a comment. Every problem in a file is reported, each with its line number.
//! [`ExperimentConfig::to_text`] writes the canonical form, which parses back to an equal value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gch_core::asymptotics::{ProfileVariant, PsiConvention};
use gch_core::weights::WeightSpec;
use gch_core::RhsForm;
use sha2::{Digest, Sha256};

/// Allowed keys per section, in canonical output order.
const SCHEMA: &[(&str, &[&str])] = &[
    ("grid", &["n", "L"]),
    ("time", &["T", "snapshot_stride", "dt"]),
    ("initial", &["kind", "amplitude", "width", "center", "file"]),
    ("dynamics", &["form", "dealias"]),
    ("weights", &["phi", "p", "truncation"]),
    ("diagnostics", &["run"]),
    ("asymptotics", &["t", "variant", "psi", "window", "d", "log_window"]),
    ("analyticity", &["s", "s_prime", "K"]),
    ("output", &["dir", "trajectory"]),
    ("run", &["seed"]),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line, `None` for a missing key.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// All problems found in one configuration text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub snapshot_stride: usize,
    /// Fixed step; `None` uses the adaptive CFL estimate.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// `A·sech²((x - c)/w)`.
    Sech2 { amplitude: f64, width: f64, center: f64 },
    /// `A·sech((x - c)/w)`.
    Sech { amplitude: f64, width: f64, center: f64 },
    /// `A·exp(-((x - c)/w)²)`.
    Gaussian { amplitude: f64, width: f64, center: f64 },
    /// Two-column `x value` file, interpolated onto the grid.
    File(PathBuf),
}

impl InitialCondition {
    pub fn kind(&self) -> &'static str {
        match self {
            InitialCondition::Zero => "zero",
            InitialCondition::Sech2 { .. } => "sech2",
            InitialCondition::Sech { .. } => "sech",
            InitialCondition::Gaussian { .. } => "gaussian",
            InitialCondition::File(_) => "file",
        }
    }

    /// The profile as a function of `x`, or `None` for file data.
    pub fn profile(&self) -> Option<Box<dyn Fn(f64) -> f64>> {
        match *self {
            InitialCondition::Zero => Some(Box::new(|_| 0.0)),
            InitialCondition::Sech2 { amplitude, width, center } => {
                Some(Box::new(move |x| amplitude / ((x - center) / width).cosh().powi(2)))
            }
            InitialCondition::Sech { amplitude, width, center } => {
                Some(Box::new(move |x| amplitude / ((x - center) / width).cosh()))
            }
            InitialCondition::Gaussian { amplitude, width, center } => {
                Some(Box::new(move |x| amplitude * (-((x - center) / width).powi(2)).exp()))
            }
            InitialCondition::File(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Diagnostic {
    Residuals,
    Persistence,
    TwoTier,
    Asymptotics,
    Analyticity,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 5] = [
        Diagnostic::Residuals,
        Diagnostic::Persistence,
        Diagnostic::TwoTier,
        Diagnostic::Asymptotics,
        Diagnostic::Analyticity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Diagnostic::Residuals => "residuals",
            Diagnostic::Persistence => "persistence",
            Diagnostic::TwoTier => "two_tier",
            Diagnostic::Asymptotics => "asymptotics",
            Diagnostic::Analyticity => "analyticity",
        }
    }
}

impl FromStr for Diagnostic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Diagnostic::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown diagnostic `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightsConfig {
    pub phi: Vec<WeightSpec>,
    /// Norm order, `f64::INFINITY` for the sup norm.
    pub p: f64,
    /// Truncation level `N`; `None` uses `φ(0.9L)`.
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsConfig {
    /// Evaluation time; `None` means the final time.
    pub t: Option<f64>,
    pub variant: ProfileVariant,
    pub psi: PsiConvention,
    /// Tail window; `None` means `[0.25L, 0.5L]`.
    pub window: Option<(f64, f64)>,
    /// Log-density exponent for the remainder-rate fit.
    pub d: f64,
    /// Window for the remainder-rate fit; `None` reuses the tail window.
    pub log_window: Option<(f64, f64)>,
}

impl AsymptoticsConfig {
    pub fn window_or_default(&self, half_width: f64) -> (f64, f64) {
        self.window.unwrap_or((0.25 * half_width, 0.5 * half_width))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticityConfig {
    pub s: f64,
    pub s_prime: f64,
    pub k_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write the full `t,x,u` trajectory CSV.
    pub trajectory: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub initial: InitialCondition,
    pub form: RhsForm,
    pub dealias: bool,
    pub weights: WeightsConfig,
    pub diagnostics: Vec<Diagnostic>,
    pub asymptotics: AsymptoticsConfig,
    pub analyticity: AnalyticityConfig,
    pub output: OutputConfig,
    pub seed: u64,
}

fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn fmt_pair((a, b): (f64, f64)) -> String {
    format!("{}, {}", fmt_f64(a), fmt_f64(b))
}

impl ExperimentConfig {
    /// Canonical text form; every field is written, optional ones only when set.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut section = |name: &str, entries: Vec<(&str, String)>| {
            s.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                s.push_str(&format!("{k} = {v}\n"));
            }
            s.push('\n');
        };
        section("grid", vec![("n", self.grid.n.to_string()), ("L", fmt_f64(self.grid.half_width))]);
        let mut time = vec![
            ("T", fmt_f64(self.time.t_end)),
            ("snapshot_stride", self.time.snapshot_stride.to_string()),
        ];
        if let Some(dt) = self.time.dt {
            time.push(("dt", fmt_f64(dt)));
        }
        section("time", time);
        let mut initial = vec![("kind", self.initial.kind().to_string())];
        match &self.initial {
            InitialCondition::Zero => {}
            InitialCondition::Sech2 { amplitude, width, center }
            | InitialCondition::Sech { amplitude, width, center }
            | InitialCondition::Gaussian { amplitude, width, center } => {
                initial.push(("amplitude", fmt_f64(*amplitude)));
                initial.push(("width", fmt_f64(*width)));
                initial.push(("center", fmt_f64(*center)));
            }
            InitialCondition::File(path) => initial.push(("file", path.display().to_string())),
        }
        section("initial", initial);
        section(
            "dynamics",
            vec![("form", self.form.name().to_string()), ("dealias", self.dealias.to_string())],
        );
        let phi: Vec<String> = self.weights.phi.iter().map(|w| w.to_string()).collect();
        let mut weights = vec![("phi", phi.join("; ")), ("p", fmt_f64(self.weights.p))];
        if let Some(n) = self.weights.truncation {
            weights.push(("truncation", fmt_f64(n)));
        }
        section("weights", weights);
        let run: Vec<&str> = self.diagnostics.iter().map(|d| d.name()).collect();
        section("diagnostics", vec![("run", run.join(", "))]);
        let a = &self.asymptotics;
        let mut asym = Vec::new();
        if let Some(t) = a.t {
            asym.push(("t", fmt_f64(t)));
        }
        asym.push(("variant", a.variant.name().to_string()));
        let psi = match a.psi {
            PsiConvention::Mirrored => "mirrored",
            PsiConvention::Literal => "literal",
        };
        asym.push(("psi", psi.to_string()));
        if let Some(w) = a.window {
            asym.push(("window", fmt_pair(w)));
        }
        asym.push(("d", fmt_f64(a.d)));
        if let Some(w) = a.log_window {
            asym.push(("log_window", fmt_pair(w)));
        }
        section("asymptotics", asym);
        section(
            "analyticity",
            vec![
                ("s", fmt_f64(self.analyticity.s)),
                ("s_prime", fmt_f64(self.analyticity.s_prime)),
                ("K", self.analyticity.k_max.to_string()),
            ],
        );
        section(
            "output",
            vec![
                ("dir", self.output.dir.display().to_string()),
                ("trajectory", self.output.trajectory.to_string()),
            ],
        );
        section("run", vec![("seed", self.seed.to_string())]);
        s.pop();
        s
    }

    /// Hex SHA-256 of the canonical text without the output directory,
    /// so the same experiment hashes equally wherever it is written.
    pub fn hash(&self) -> String {
        let text: String = self.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// `(section.key, value)` pairs of the canonical text, except the output directory.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut section = "";
        let text = self.to_text();
        for line in text.lines() {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = SCHEMA.iter().find(|(s, _)| *s == name).map(|(s, _)| *s).unwrap_or("");
            } else if let Some((k, v)) = line.split_once('=') {
                let key = format!("{section}.{}", k.trim());
                if key != "output.dir" {
                    out.push((key, v.trim().to_string()));
                }
            }
        }
        out
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigErrors;

    fn from_str(s: &str) -> Result<Self, ConfigErrors> {
        parse_config(s)
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Reader {
    entries: BTreeMap<(&'static str, &'static str), Entry>,
    errors: Vec<ConfigError>,
}

impl Reader {
    fn line(&self, section: &'static str, key: &'static str) -> Option<usize> {
        self.entries.get(&(section, key)).map(|e| e.line)
    }

    fn has(&self, section: &'static str, key: &'static str) -> bool {
        self.entries.contains_key(&(section, key))
    }

    fn get<T>(
        &mut self,
        section: &'static str,
        key: &'static str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Option<T> {
        let entry = self.entries.get(&(section, key))?;
        match parse(&entry.value) {
            Ok(v) => Some(v),
            Err(message) => {
                let line = Some(entry.line);
                self.errors.push(ConfigError { line, message: format!("{key}: {message}") });
                None
            }
        }
    }

    fn require<T>(
        &mut self,
        section: &'static str,
        key: &'static str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Option<T> {
        if !self.has(section, key) {
            self.errors.push(ConfigError { line: None, message: format!("missing required key `{key}` in [{section}]") });
            return None;
        }
        self.get(section, key, parse)
    }

    fn check(&mut self, ok: bool, section: &'static str, key: &'static str, message: impl Into<String>) {
        if !ok {
            let line = self.line(section, key);
            self.errors.push(ConfigError { line, message: message.into() });
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("expected a number, got `{s}`")),
    }
}

fn finite(s: &str) -> Result<f64, String> {
    number(s).and_then(|v| if v.is_finite() { Ok(v) } else { Err(format!("expected a finite number, got `{s}`")) })
}

fn integer<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    match s.split(',').map(|p| finite(p.trim())).collect::<Result<Vec<_>, _>>()?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(format!("expected two numbers `lo, hi`, got `{s}`")),
    }
}

fn weight_list(s: &str) -> Result<Vec<WeightSpec>, String> {
    let list = s
        .split(';')
        .map(|w| w.trim().parse::<WeightSpec>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(list)
}

fn diagnostic_list(s: &str) -> Result<Vec<Diagnostic>, String> {
    let mut list = s
        .split(',')
        .map(str::trim)
        .filter(|d| !d.is_empty())
        .map(Diagnostic::from_str)
        .collect::<Result<Vec<_>, _>>()?;
    list.sort();
    list.dedup();
    Ok(list)
}

/// Splits the text into entries, reporting syntax errors, unknown keys and duplicates.
fn tokenize(text: &str) -> (BTreeMap<(&'static str, &'static str), Entry>, Vec<ConfigError>) {
    let mut entries: BTreeMap<(&'static str, &'static str), Entry> = BTreeMap::new();
    let mut errors = Vec::new();
    // `None` before any header, `Some(None)` inside an unknown section
    let mut current: Option<Option<(&'static str, &'static [&'static str])>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError { line: Some(line_no), message };
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(err(format!("malformed section header `{line}`")));
                continue;
            };
            let name = name.trim();
            let found = SCHEMA.iter().find(|(s, _)| *s == name).copied();
            if found.is_none() {
                errors.push(err(format!("unknown section [{name}]")));
            }
            current = Some(found);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(err(format!("expected `key = value`, got `{line}`")));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let (section, keys) = match current {
            None => {
                errors.push(err(format!("key `{key}` appears before any [section]")));
                continue;
            }
            Some(None) => continue,
            Some(Some(s)) => s,
        };
        let Some(&key) = keys.iter().find(|k| **k == key) else {
            errors.push(err(format!("unknown key `{key}` in [{section}]")));
            continue;
        };
        if value.is_empty() {
            errors.push(err(format!("{key}: empty value")));
            continue;
        }
        if let Some(first) = entries.get(&(section, key)) {
            errors.push(err(format!(
                "duplicate key `{key}` in [{section}] on lines {} and {line_no}",
                first.line
            )));
            continue;
        }
        entries.insert((section, key), Entry { value: value.to_string(), line: line_no });
    }
    (entries, errors)
}

/// Parses a configuration, filling defaults; returns every error found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let (entries, errors) = tokenize(text);
    let mut r = Reader { entries, errors };

    let n = r.require("grid", "n", integer::<usize>);
    if let Some(n) = n {
        r.check(n.is_power_of_two() && n >= 16, "grid", "n", format!("n must be a power of two, at least 16 (got {n})"));
    }
    let half_width = r.require("grid", "L", finite);
    if let Some(l) = half_width {
        r.check(l > 0.0, "grid", "L", format!("L must be positive (got {l})"));
    }

    let t_end = r.require("time", "T", finite);
    if let Some(t) = t_end {
        r.check(t > 0.0, "time", "T", format!("T must be positive (got {t})"));
    }
    let snapshot_stride = r.get("time", "snapshot_stride", integer::<usize>).unwrap_or(10);
    r.check(snapshot_stride >= 1, "time", "snapshot_stride", "snapshot_stride must be at least 1");
    let dt = r.get("time", "dt", finite);
    if let Some(dt) = dt {
        r.check(dt > 0.0, "time", "dt", format!("dt must be positive (got {dt})"));
    }

    let kind = r.require("initial", "kind", |s| Ok(s.to_string()));
    let amplitude = r.get("initial", "amplitude", finite).unwrap_or(1.0);
    let width = r.get("initial", "width", finite).unwrap_or(1.0);
    r.check(width > 0.0, "initial", "width", format!("width must be positive (got {width})"));
    let center = r.get("initial", "center", finite).unwrap_or(0.0);
    let file = r.get("initial", "file", |s| Ok(PathBuf::from(s)));
    let shaped = ["amplitude", "width", "center"];
    let initial = match kind.as_deref() {
        None => None,
        Some("zero") => Some(InitialCondition::Zero),
        Some("sech2") => Some(InitialCondition::Sech2 { amplitude, width, center }),
        Some("sech") => Some(InitialCondition::Sech { amplitude, width, center }),
        Some("gaussian") => Some(InitialCondition::Gaussian { amplitude, width, center }),
        Some("file") => {
            r.check(r.has("initial", "file"), "initial", "kind", "kind = file needs a `file` key");
            for key in shaped {
                r.check(!r.has("initial", key), "initial", key, format!("`{key}` does not apply to kind = file"));
            }
            file.clone().map(InitialCondition::File)
        }
        Some(other) => {
            r.check(false, "initial", "kind", format!("unknown initial condition kind `{other}` (zero, sech2, sech, gaussian, file)"));
            None
        }
    };
    if kind.as_deref().is_some_and(|k| k != "file") {
        r.check(!r.has("initial", "file"), "initial", "file", "`file` only applies to kind = file");
    }
    if kind.as_deref() == Some("zero") {
        for key in shaped {
            r.check(!r.has("initial", key), "initial", key, format!("`{key}` does not apply to kind = zero"));
        }
    }

    let form = r
        .get("dynamics", "form", |s| RhsForm::from_str(s).map_err(|e| e.to_string()))
        .unwrap_or(RhsForm::FormB);
    r.check(
        !form.is_diagnostic_only(),
        "dynamics",
        "form",
        format!("form {form} is diagnostic-only and cannot drive a simulation"),
    );
    let dealias = r.get("dynamics", "dealias", boolean).unwrap_or(true);

    let phi = r
        .get("weights", "phi", weight_list)
        .unwrap_or_else(|| vec![WeightSpec::new(0.5, 1.0, 0.5, 1.0)]);
    let p = r.get("weights", "p", number).unwrap_or(f64::INFINITY);
    r.check(p >= 1.0, "weights", "p", format!("p must be at least 1 (got {p})"));
    let truncation = r.get("weights", "truncation", finite);
    if let Some(level) = truncation {
        r.check(level > 0.0, "weights", "truncation", format!("truncation must be positive (got {level})"));
    }

    let diagnostics = r.get("diagnostics", "run", diagnostic_list).unwrap_or_else(|| vec![Diagnostic::Residuals]);

    let t_eval = r.get("asymptotics", "t", finite);
    if let (Some(t), Some(t_end)) = (t_eval, t_end) {
        r.check(t > 0.0 && t <= t_end, "asymptotics", "t", format!("t must lie in (0, T] (got {t})"));
    }
    let variant = r
        .get("asymptotics", "variant", |s| ProfileVariant::from_str(s).map_err(|e| e.to_string()))
        .unwrap_or(ProfileVariant::Averaged);
    let psi = r
        .get("asymptotics", "psi", |s| match s {
            "mirrored" => Ok(PsiConvention::Mirrored),
            "literal" => Ok(PsiConvention::Literal),
            _ => Err(format!("expected mirrored or literal, got `{s}`")),
        })
        .unwrap_or_default();
    let window = r.get("asymptotics", "window", pair);
    let log_window = r.get("asymptotics", "log_window", pair);
    if let Some(l) = half_width {
        for (key, w) in [("window", window), ("log_window", log_window)] {
            if let Some((lo, hi)) = w {
                r.check(
                    lo < hi && lo > 0.2 * l && hi < 0.8 * l,
                    "asymptotics",
                    key,
                    format!("{key} [{lo}, {hi}] must lie inside (0.2L, 0.8L) = ({}, {})", 0.2 * l, 0.8 * l),
                );
            }
        }
    }
    let d = r.get("asymptotics", "d", finite).unwrap_or(1.0);
    r.check(d > 0.5, "asymptotics", "d", format!("d must exceed 1/2 (got {d})"));

    let s = r.get("analyticity", "s", finite).unwrap_or(0.5);
    r.check(s > 0.0 && s <= 1.0, "analyticity", "s", format!("s must lie in (0, 1] (got {s})"));
    let s_prime = r.get("analyticity", "s_prime", finite).unwrap_or(0.5 * s);
    r.check(s_prime > 0.0 && s_prime < s, "analyticity", "s_prime", format!("s_prime must lie in (0, s) (got {s_prime})"));
    let k_max = r.get("analyticity", "K", integer::<usize>).unwrap_or(12);
    r.check(k_max <= 30, "analyticity", "K", format!("K must be at most 30 (got {k_max})"));

    let dir = r.get("output", "dir", |s| Ok(PathBuf::from(s))).unwrap_or_else(|| PathBuf::from("out"));
    let trajectory = r.get("output", "trajectory", boolean).unwrap_or(true);
    let seed = r.get("run", "seed", integer::<u64>).unwrap_or(0);

    if !r.errors.is_empty() {
        r.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(ConfigErrors(r.errors));
    }
    Ok(ExperimentConfig {
        grid: GridConfig { n: n.unwrap(), half_width: half_width.unwrap() },
        time: TimeConfig { t_end: t_end.unwrap(), snapshot_stride, dt },
        initial: initial.unwrap(),
        form,
        dealias,
        weights: WeightsConfig { phi, p, truncation },
        diagnostics,
        asymptotics: AsymptoticsConfig { t: t_eval, variant, psi, window, d, log_window },
        analyticity: AnalyticityConfig { s, s_prime, k_max },
        output: OutputConfig { dir, trajectory },
        seed,
    })
}
