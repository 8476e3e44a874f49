use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_ensemble-qcomm");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.env_clear().args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&run(&["--help"], &[])), 0);
    assert_eq!(code(&run(&["sweep", "--help"], &[])), 0);
}

#[test]
fn entangle_writes_json_to_stdout() {
    let o = run(&["entangle", "--config", config("ideal.conf").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["command"], "entangle");
    assert_eq!(v["seed"], 1);
    assert_eq!(v["config"]["channel.kappa"], "5.0000000000000000e0");
    let r = v["summary"]["r"].as_f64().unwrap();
    assert!((r - 0.5 * 51f64.ln()).abs() < 1e-12);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn configuration_errors_exit_one() {
    let ideal = config("ideal.conf");
    let ideal = ideal.to_str().unwrap();
    let unknown = run(&["entangle", "--config", ideal, "--set", "noise.etat=0.1"], &[]);
    assert_eq!(code(&unknown), 1);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("noise.etat"));
    assert_eq!(code(&run(&["entangle", "--config", "/nonexistent/x.conf"], &[])), 1);
    assert_eq!(code(&run(&["entangle", "--config", ideal, "--set", "noise.eta_t=1.5"], &[])), 1);
    assert_eq!(code(&run(&["derive", "--config", ideal], &[])), 1);
    assert_eq!(code(&run(&["entangle"], &[])), 1);
    assert_eq!(code(&run(&["entangle", "--config", ideal, "--trials", "0"], &[])), 1);
    assert_eq!(code(&run(&["bogus"], &[])), 1);
    assert_eq!(code(&run(&["entangle", "--config", ideal], &[("EQC_NOT__A__KEY", "1")])), 1);
}

#[test]
fn regime_violation_exits_two_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("derive.json");
    let o = run(
        &[
            "derive",
            "--config",
            config("paper_regime.conf").to_str().unwrap(),
            "--set",
            "physical.detuning_over_gamma=40",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 2);
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["summary"]["regime_ok"], false);
    assert!(v["summary"]["regime_failures"].as_array().unwrap().iter().any(|f| f == "detuning_large"));
}

#[test]
fn paper_regime_derive_passes() {
    let o = run(&["derive", "--config", config("paper_regime.conf").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!((v["summary"]["kappa"].as_f64().unwrap() - 5.0).abs() < 1e-9);
    assert_eq!(v["summary"]["regime_ok"], true);
}

#[test]
fn mb_tolerance_failure_exits_three() {
    let ideal = config("ideal.conf");
    let o = run(
        &[
            "mb-validate",
            "--config",
            ideal.to_str().unwrap(),
            "--set",
            "channel.eps_p=0.05",
            "--set",
            "channel.eps_a=0.05",
            "--set",
            "mb.grids=4,8",
            "--set",
            "mb.eps_tol=1e-6",
        ],
        &[],
    );
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["summary"]["pass"], false);
}

#[test]
fn artifacts_are_identical_across_thread_counts() {
    let ideal = config("ideal.conf");
    let base = ["--config", ideal.to_str().unwrap(), "--seed", "99", "--trials", "24", "--set", "noise.eta_t=0.1"];
    for cmd in ["entangle", "teleport"] {
        for format in ["json", "csv"] {
            let outputs: Vec<Vec<u8>> = ["1", "4", "7"]
                .iter()
                .map(|t| {
                    let mut args = vec![cmd, "--format", format, "--threads", t];
                    args.extend_from_slice(&base);
                    let o = run(&args, &[]);
                    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
                    o.stdout
                })
                .collect();
            assert!(!outputs[0].is_empty());
            assert_eq!(outputs[0], outputs[1], "{cmd} {format}");
            assert_eq!(outputs[0], outputs[2], "{cmd} {format}");
        }
    }
    let mut other = vec!["teleport", "--threads", "2"];
    other.extend_from_slice(&base);
    let a = run(&other, &[]).stdout;
    let b = run(&[other.clone(), vec!["--seed", "100"]].concat(), &[]).stdout;
    assert_ne!(a, b);
}

#[test]
fn sweep_is_deterministic_and_fast() {
    let lossy = config("lossy.conf");
    let args = ["sweep", "--config", lossy.to_str().unwrap(), "--format", "csv"];
    let a = run(&[&args[..], &["--threads", "1"]].concat(), &[]);
    let b = run(&[&args[..], &["--threads", "3"]].concat(), &[]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("# command = sweep\n# seed = 1\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 200);
}

#[test]
fn precedence_is_flags_then_env_then_file() {
    let ideal = config("ideal.conf");
    let ideal = ideal.to_str().unwrap();
    let env = [("EQC_SEED", "5"), ("EQC_NOISE__ETA_T", "0.25")];
    let from_env = json(&run(&["entangle", "--config", ideal], &env));
    assert_eq!(from_env["seed"], 5);
    assert_eq!(from_env["config"]["noise.eta_t"], "2.5000000000000000e-1");
    let from_flag = json(&run(&["entangle", "--config", ideal, "--seed", "6", "--set", "noise.eta_t=0.5"], &env));
    assert_eq!(from_flag["seed"], 6);
    assert_eq!(from_flag["config"]["noise.eta_t"], "5.0000000000000000e-1");
}

#[test]
fn density_alias_matches_si_units() {
    let paper = config("paper_regime.conf");
    let paper = paper.to_str().unwrap();
    let per_cm3 = json(&run(&["derive", "--config", paper], &[]));
    let both = run(&["derive", "--config", paper, "--set", "physical.density=5e18"], &[]);
    assert_eq!(code(&both), 1);
    let dir = tempfile::tempdir().unwrap();
    let si_path = dir.path().join("si.conf");
    let text = std::fs::read_to_string(paper).unwrap().replace("density_per_cm3 = 5e12", "density = 5e18");
    std::fs::write(&si_path, text).unwrap();
    let si = json(&run(&["derive", "--config", si_path.to_str().unwrap()], &[]));
    assert_eq!(per_cm3["summary"], si["summary"]);
}

#[test]
fn out_flag_writes_file_and_leaves_stdout_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(
        &[
            "teleport",
            "--config",
            config("ideal.conf").to_str().unwrap(),
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# config.channel.kappa = 5.0000000000000000e0"));
    assert!(text.contains("# summary.beats_classical_bound = true"));
}
