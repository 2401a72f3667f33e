use std::path::Path;
use std::process::{Command, Output};

fn zeno(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zeno"))
        .args(args)
        .env("ZENO_OUT", out)
        .output()
        .expect("spawn zeno")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_under_zeno_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = zeno(dir.path(), &["run", "spin-model", "--set", "spin.t_max=1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = dir.path().join("spin-model/manifest.json");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(json["recipe"], "spin-model");
    assert_eq!(json["config"]["spin.t_max"], "1");
    for f in json["outputs"].as_array().unwrap() {
        let path = f["path"].as_str().unwrap();
        assert!(dir.path().join("spin-model").join(path).is_file());
        // printed as a digest prefix and the path
        assert!(stdout(&o).contains(&f["sha256"].as_str().unwrap()[..16]));
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cfg.txt");
    std::fs::write(&file, "spin.t_max = 0.5\nspin.D = 0.3 # stronger\n").unwrap();
    let f = file.to_str().unwrap();
    let o = zeno(dir.path(), &["run", "spin-model", "--config", f, "--set", "spin.D=0.2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("spin-model/manifest.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["config"]["spin.t_max"], "0.5");
    assert_eq!(json["config"]["spin.D"], "0.2");
    let missing = zeno(dir.path(), &["run", "spin-model", "--config", "/nonexistent/zeno.cfg"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "no-such-recipe"][..],
        &["run", "spin-model", "--set", "spin.bogus=1"],
        &["run", "spin-model", "--set", "run.eps=0.0015"],
        &["run", "spin-model", "--set", "qbm.D=minus"],
        &["timescales", "--set", "proj.L=-1"],
        &["sweep", "spin-model", "--param", "spin.omega"],
        &["sweep", "spin-model", "--param", "run.eps=0.01,0.0015"],
        &["frobnicate"],
    ] {
        let o = zeno(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    // nothing was written for the failing sweep
    assert!(!dir.path().join("spin-model-sweep").exists());
}

#[test]
fn sweep_creates_a_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = zeno(dir.path(), &["sweep", "spin-model", "--param", "spin.D=0.1,0.2", "--set", "spin.t_max=0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let base = dir.path().join("spin-model-sweep");
    assert!(base.join("spin.D=0.1/manifest.json").is_file());
    assert!(base.join("spin.D=0.2/manifest.json").is_file());
    assert!(base.join("sweep.json").is_file());
}

#[test]
fn timescales_prints_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let o = zeno(dir.path(), &["timescales", "--set", "qbm.D=8000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    let value = |label: &str| -> f64 {
        let line = s.lines().find(|l| l.starts_with(label)).unwrap_or_else(|| panic!("{label} in {s}"));
        line.split_whitespace().last().unwrap().parse().unwrap()
    };
    assert!((value("classical decay time") - 0.05).abs() < 1e-9);
    assert!((value("final energy time") - 0.0025).abs() < 1e-9);
    assert!((value("momentum cut-off") - 100.0).abs() < 1e-9);
    assert!(s.contains("classical"));
    let free = stdout(&zeno(dir.path(), &["timescales"]));
    assert!(free.contains("inf") && free.contains("zeno"));
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = zeno(dir.path(), &["validate"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains(" 0 failed"));
}

#[test]
fn numerical_failure_exits_with_three() {
    // a single particle is absorbed almost at once
    let dir = tempfile::tempdir().unwrap();
    let o = zeno(
        dir.path(),
        &[
            "run",
            "classical-mode",
            "--set",
            "langevin.particles=1",
            "--set",
            "classical.half_cells=10",
            "--set",
            "classical.n_p=60",
            "--set",
            "langevin.batches=2",
        ],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(!dir.path().join("classical-mode/manifest.json").exists());
}

#[test]
fn list_names_every_recipe() {
    let dir = tempfile::tempdir().unwrap();
    let o = zeno(dir.path(), &["list"]);
    assert_eq!(code(&o), 0);
    for r in ["p2-decomposition", "regime-surface", "flux-environment", "classical-mode", "qbm.D", "run.eps"] {
        assert!(stdout(&o).contains(r), "{r}");
    }
}
