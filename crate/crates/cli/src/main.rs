use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gch_cli::config::{Diagnostic, ExperimentConfig, InitialCondition};
use gch_cli::{parse_config, run_experiment, selftest_with, Faults, RunError};
use gch_core::asymptotics::{ProfileVariant, PsiConvention};
use gch_core::weights::{admissibility_report, WeightSpec};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "gch", version, about = "Simulate the generalized Camassa-Holm equation and run diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled sweeps.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation and the diagnostics listed in the configuration.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Weighted persistence ledgers for the configured weights.
    Persistence {
        #[command(flatten)]
        common: Common,
        /// Also run the two-tier check.
        #[arg(long)]
        two_tier: bool,
    },
    /// Tail profile moments, tail ratios and the log remainder fit.
    Asymptotics {
        #[command(flatten)]
        common: Common,
        /// Evaluation time.
        #[arg(long)]
        t: Option<f64>,
        /// Source variant: averaged or rms.
        #[arg(long)]
        variant: Option<ProfileVariant>,
        /// Use the same exponential weight for both tails.
        #[arg(long)]
        psi_literal: bool,
    },
    /// Fourier decay radius and E_s norm diagnostics.
    Analyticity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long = "K")]
        k_max: Option<usize>,
    },
    /// Sampled admissibility constants for a weight pair, printed as JSON.
    VerifyWeights {
        #[command(flatten)]
        common: Common,
        /// Weight `a,b,c,d` for `e^{a|x|^b}(1+|x|)^c log(e+|x|)^d`.
        #[arg(long)]
        phi: WeightSpec,
        /// Moderating weight; defaults to the canonical moderator of `phi`.
        #[arg(long)]
        v: Option<WeightSpec>,
        /// Norm order, `inf` for the sup norm.
        #[arg(long, default_value = "inf")]
        p: f64,
        /// Half-width of the sampling box.
        #[arg(long, default_value_t = 30.0)]
        bound: f64,
        #[arg(long, default_value_t = 4000)]
        samples: usize,
    },
    /// Fixed-seed checks of the numerical core.
    Selftest {
        #[command(flatten)]
        common: Common,
        /// Corrupt one component to confirm the checks catch it.
        #[arg(long, value_parser = ["flip-formb-ux2"])]
        inject_fault: Option<String>,
    },
}

const DEFAULT_SEED: u64 = 20240501;

fn load(common: &Common) -> Result<ExperimentConfig, (String, u8)> {
    let path = common.config.as_ref().ok_or_else(|| ("--config is required".to_string(), 2))?;
    let text = std::fs::read_to_string(path).map_err(|e| (format!("{}: {e}", path.display()), 2))?;
    let mut config = parse_config(&text).map_err(|e| (format!("{}:\n{e}", path.display()), 2))?;
    if let InitialCondition::File(file) = &config.initial {
        if file.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.initial = InitialCondition::File(base.join(file));
        }
    }
    if let Some(out) = &common.out {
        config.output.dir = out.clone();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(config: ExperimentConfig) -> ExitCode {
    match run_experiment(&config) {
        Ok(summary) => {
            print!("{}", summary.to_json());
            for f in &summary.failures {
                eprintln!("diagnostic failed: {f}");
            }
            if !summary.is_valid() {
                eprintln!("run invalid: boundary magnitude exceeded tolerance");
            }
            eprintln!("artifacts in {} ({:.2} s)", summary.out_dir.display(), summary.wall_time_seconds);
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn flatten(prefix: &str, value: Value, out: &mut Map<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other);
        }
    }
}

fn with_diagnostics(common: &Common, select: impl FnOnce(&mut ExperimentConfig)) -> ExitCode {
    match load(common) {
        Ok(mut config) => {
            select(&mut config);
            run(config)
        }
        Err((message, code)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { common } => with_diagnostics(&common, |_| {}),
        Command::Persistence { common, two_tier } => with_diagnostics(&common, |c| {
            let listed = c.diagnostics.contains(&Diagnostic::TwoTier);
            c.diagnostics = vec![Diagnostic::Persistence];
            if two_tier || listed {
                c.diagnostics.push(Diagnostic::TwoTier);
            }
        }),
        Command::Asymptotics { common, t, variant, psi_literal } => with_diagnostics(&common, |c| {
            c.diagnostics = vec![Diagnostic::Asymptotics];
            if t.is_some() {
                c.asymptotics.t = t;
            }
            if let Some(v) = variant {
                c.asymptotics.variant = v;
            }
            if psi_literal {
                c.asymptotics.psi = PsiConvention::Literal;
            }
        }),
        Command::Analyticity { common, s, k_max } => with_diagnostics(&common, |c| {
            c.diagnostics = vec![Diagnostic::Analyticity];
            if let Some(s) = s {
                c.analyticity.s = s;
                c.analyticity.s_prime = c.analyticity.s_prime.min(0.5 * s);
            }
            if let Some(k) = k_max {
                c.analyticity.k_max = k;
            }
        }),
        Command::VerifyWeights { common, phi, v, p, bound, samples } => {
            let v = v.unwrap_or_else(|| phi.canonical_moderator());
            match admissibility_report(phi, v, samples, bound, p) {
                Ok(report) => {
                    let mut flat = Map::new();
                    flatten("", serde_json::to_value(&report).expect("report serializes"), &mut flat);
                    let admissible =
                        report.moderate && report.derivative_bounded && report.kernel_condition && report.lp_condition;
                    flat.insert("admissible".into(), admissible.into());
                    let text = serde_json::to_string_pretty(&flat).expect("json") + "\n";
                    print!("{text}");
                    if let Some(dir) = common.out {
                        let path = dir.join("weights.json");
                        if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(&path, &text)) {
                            eprintln!("error: {}: {e}", path.display());
                            return ExitCode::from(1);
                        }
                    }
                    ExitCode::from(if admissible { 0 } else { 1 })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Selftest { common, inject_fault } => {
            let faults = Faults { flip_formb_ux2_sign: inject_fault.is_some() };
            let report = selftest_with(common.seed.unwrap_or(DEFAULT_SEED), faults);
            println!("{report}");
            ExitCode::from(if report.all_passed() { 0 } else { 1 })
        }
    }
}
