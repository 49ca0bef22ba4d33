use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gch_cli::parse_config;
use tempfile::TempDir;

fn gch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gch")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("conf") {
            continue;
        }
        let c = parse_config(&std::fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_config(&c.to_text()).unwrap(), c, "{}", path.display());
        count += 1;
    }
    assert!(count >= 4);
}

#[test]
fn selftest_passes_and_is_deterministic() {
    let a = gch(&["selftest"]);
    let b = gch(&["selftest"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for name in ["convolution oracle", "form residual matrix", "rk4 order", "weighted young sweep", "operator bound sweep"] {
        assert!(text.lines().any(|l| l.starts_with(name) && l.contains("PASS")), "{name}\n{text}");
    }
}

#[test]
fn injected_fault_fails_the_named_check() {
    let o = gch(&["selftest", "--inject-fault", "flip-formb-ux2"]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8(o.stdout).unwrap();
    let failing: Vec<&str> = text.lines().filter(|l| l.contains(" FAIL ")).collect();
    assert_eq!(failing.len(), 1, "{text}");
    assert!(failing[0].starts_with("form residual matrix") && failing[0].contains("FormB"), "{text}");
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let path = write_config(
        dir.path(),
        "bad.conf",
        "[grid]\nn = 1000\nL = 20\nn = 512\n[time]\nT = 0.1\n[initial]\nkind = sech2\ncolour = red\n",
    );
    let o = gch(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 2: n must be a power of two"), "{err}");
    assert!(err.contains("lines 2 and 4"), "{err}");
    assert!(err.contains("line 9: unknown key `colour`"), "{err}");
    assert!(!out.exists());
}

#[test]
fn sqrt3_is_rejected_before_simulating() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let path = write_config(
        dir.path(),
        "sqrt3.conf",
        "[grid]\nn = 256\nL = 20\n[time]\nT = 0.1\n[initial]\nkind = sech2\n[dynamics]\nform = Sqrt3\n",
    );
    let o = gch(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("diagnostic-only"));
    assert!(!out.exists(), "nothing may be written for a rejected config");
}

#[test]
fn missing_config_flag_is_a_config_error() {
    assert_eq!(code(&gch(&["simulate"])), 2);
}

#[test]
fn blow_up_exits_3_and_names_the_stage() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let path = write_config(
        dir.path(),
        "blow.conf",
        "[grid]\nn = 256\nL = 20\n[time]\nT = 5\ndt = 0.5\n[initial]\nkind = sech2\namplitude = 1\n",
    );
    let o = gch(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(report["stage"], "simulation");
    assert_eq!(report["exit_code"], 3);
}

#[test]
fn boundary_contamination_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let path = write_config(
        dir.path(),
        "wide.conf",
        "[grid]\nn = 256\nL = 20\n[time]\nT = 0.1\n[initial]\nkind = sech2\nwidth = 5\namplitude = 0.01\n",
    );
    let o = gch(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["valid.boundary_clean"], false);
}

#[test]
fn file_initial_condition_is_resolved_next_to_the_config() {
    let dir = TempDir::new().unwrap();
    let rows: String = (0..=400).map(|i| -20.0 + 0.1 * i as f64).map(|x| format!("{x} {}\n", 0.05 / x.cosh().powi(2))).collect();
    std::fs::write(dir.path().join("ic.txt"), rows).unwrap();
    let path = write_config(
        dir.path(),
        "file.conf",
        "[grid]\nn = 256\nL = 20\n[time]\nT = 0.1\n[initial]\nkind = file\nfile = ic.txt\n[output]\ntrajectory = true\n",
    );
    let out = dir.path().join("out");
    let o = gch(&["simulate", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config-hash: "));
    assert_eq!(lines.next(), Some("t,x,u"));
}

#[test]
fn subcommands_select_their_diagnostics() {
    let dir = TempDir::new().unwrap();
    let config = configs_dir().join("zero.conf");
    let cases: [(&[&str], &str); 3] = [
        (&["persistence", "--two-tier"], "two_tier_0.csv"),
        (&["asymptotics", "--t", "0.05", "--variant", "rms", "--psi-literal"], "moments.csv"),
        (&["analyticity", "--s", "0.8", "--K", "8"], "analyticity.csv"),
    ];
    for (args, artifact) in cases {
        let out = dir.path().join(args[0]);
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"]);
        let o = gch(&full);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(artifact).exists(), "{args:?}");
        let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(summary["config.run.seed"], "5");
        assert_eq!(summary["config.diagnostics.run"].as_str().unwrap().split(", ").next(), Some(args[0]));
    }
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("asymptotics/summary.json")).unwrap()).unwrap();
    assert_eq!(s["asymptotics.variant"], "rms");
    assert_eq!(s["asymptotics.psi_convention"], "literal");
    assert_eq!(s["asymptotics.t"], 0.05);
}

#[test]
fn verify_weights_prints_flat_json() {
    let dir = TempDir::new().unwrap();
    let o = gch(&[
        "verify-weights", "--phi", "0,0,1,0", "--v", "0,0,1,0", "--p", "2", "--bound", "30",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report.as_object().unwrap().values().all(|v| !v.is_object() && !v.is_array()));
    assert!((report["kernel_integral"].as_f64().unwrap() - 4.0).abs() < 1e-6);
    assert_eq!(report["phi.c"], 1.0);
    assert_eq!(report["admissible"], true);
    assert!(dir.path().join("weights.json").exists());

    let exp = gch(&["verify-weights", "--phi", "1,1,0,0", "--p", "inf"]);
    let report: serde_json::Value = serde_json::from_slice(&exp.stdout).unwrap();
    assert_eq!(report["p"], "inf");
    assert_eq!(report["lp_infinity_condition"], true);
}

#[test]
fn every_csv_carries_hash_and_header() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let config = configs_dir().join("zero.conf");
    let o = gch(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let hash = summary["config_hash"].as_str().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(&out).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            let text = std::fs::read_to_string(&path).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some(format!("# config-hash: {hash}").as_str()), "{}", path.display());
            let header = lines.next().unwrap();
            assert!(header.contains(',') && !header.starts_with('#'), "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 6, "{seen}");
    let timing: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("timing.json")).unwrap()).unwrap();
    assert!(timing["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(std::fs::read(out.join("final_state.bin")).unwrap().starts_with(b"GCH1"));
}
