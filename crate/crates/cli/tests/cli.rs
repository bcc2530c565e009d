use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn knollset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knollset")).args(args).output().expect("binary runs")
}

#[test]
fn build_dict_writes_dictionary_and_summary() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("build_dict.toml");
    let run = knollset(&["build-dict", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--seed", "42"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let dict = std::fs::read_to_string(out.path().join("dictionary.txt")).unwrap();
    assert!(dict.contains("count 100"));
    assert_eq!(dict.lines().filter(|l| l.starts_with("knoll\t")).count(), 100);
    let summary = std::fs::read_to_string(out.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 42"));
    assert!(summary.contains("\"config_hash\""));
}

#[test]
fn compose_demo_reports_active_set() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("compose_lshape.toml");
    let run = knollset(&["compose-demo", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert!(run.status.success());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.starts_with("compose-demo seed=1 status=Converged"), "{stdout}");
    assert!(stdout.contains("active=2"));
    for file in ["coefficients.csv", "trace.csv", "target.pgm", "mask.pgm", "summary.json"] {
        assert!(out.path().join(file).exists(), "{file}");
    }
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let missing = knollset(&["segment", "--config", "/no/such/config.toml"]);
    assert!(!missing.status.success());
    let err = String::from_utf8_lossy(&missing.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("knollset segment:"));

    // a compose config has no [segment] section
    let cfg = config("compose_lshape.toml");
    let wrong = knollset(&["segment", "--config", cfg.to_str().unwrap(), "--out", "/tmp/unused"]);
    assert!(!wrong.status.success());
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("missing [segment] section"));
}

#[test]
fn ct_sim_then_recon_from_counts() {
    let out = tempfile::tempdir().unwrap();
    let sim_dir = out.path().join("sim");
    let cfg = config("ct_desk.toml");
    let sim = knollset(&["ct-sim", "--config", cfg.to_str().unwrap(), "--out", sim_dir.to_str().unwrap()]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    for file in ["counts.csv", "phantom.pgm", "phantom.csv", "fbp.pgm", "fbp.csv", "summary.json"] {
        assert!(sim_dir.join(file).exists(), "{file}");
    }

    // point a copy of the config at the simulated counts
    let text = std::fs::read_to_string(&cfg).unwrap().replace(
        "[ct]\n",
        &format!("[ct]\ncounts = \"{}\"\n", sim_dir.join("counts.csv").display()),
    );
    let recon_cfg = out.path().join("recon.toml");
    std::fs::write(&recon_cfg, text).unwrap();
    let recon_dir = out.path().join("recon");
    let recon = knollset(&["ct-recon", "--config", recon_cfg.to_str().unwrap(), "--out", recon_dir.to_str().unwrap()]);
    assert!(recon.status.success(), "{}", String::from_utf8_lossy(&recon.stderr));
    assert!(recon_dir.join("mu.pgm").exists() && recon_dir.join("coefficients.csv").exists());
    assert!(!recon_dir.join("counts.csv").exists());
}
