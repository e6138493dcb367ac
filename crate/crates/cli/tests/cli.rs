//! End-to-end tests of the command-line binary: determinism, output
//! structure, and the exit-code contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_backsample")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("backsample-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

#[test]
fn identical_runs_produce_identical_files() {
    let dir = tmp("determinism");
    let cfg = write_config(
        &dir,
        "[instance]\nkind = \"binary\"\n[run]\nsamples = 300\nseed = 9\nkl_window = 75\n",
    );
    let cfg = cfg.to_str().unwrap();
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    for out in [&out1, &out2] {
        let st = run(&["--config", cfg, "--out", out.to_str().unwrap()]);
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    }
    let mut names: Vec<_> = std::fs::read_dir(&out1)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 5, "expected metrics plus per-strategy files");
    for name in names {
        let a = std::fs::read(out1.join(&name)).unwrap();
        let b = std::fs::read(out2.join(&name)).unwrap();
        assert_eq!(a, b, "file {name:?} differs between identical runs");
    }
}

#[test]
fn metrics_file_has_a_row_and_summary_per_strategy() {
    let dir = tmp("metrics");
    let cfg = write_config(&dir, "[instance]\nkind = \"binary\"\n[run]\nsamples = 100\n");
    let out = dir.join("out");
    let st = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(st.status.success());
    let metrics = std::fs::read_to_string(out.join("metrics.txt")).unwrap();
    for strategy in ["unconstrained", "constrained", "asap", "backtrack"] {
        assert!(
            metrics.contains(&format!("binary {strategy} ")),
            "missing problem row for {strategy}"
        );
        assert!(
            metrics.lines().any(|l| l.starts_with(&format!("{strategy} "))),
            "missing summary row for {strategy}"
        );
        assert!(out.join(format!("samples_{strategy}.txt")).exists());
    }
    // Summary rows carry avg/min/max model calls with min <= avg <= max.
    let summary: Vec<&str> = metrics
        .lines()
        .skip_while(|l| !l.starts_with("# summary"))
        .skip(1)
        .collect();
    assert_eq!(summary.len(), 4);
    for row in summary {
        let f: Vec<&str> = row.split_whitespace().collect();
        let avg: f64 = f[2].parse().unwrap();
        let min: f64 = f[3].parse().unwrap();
        let max: f64 = f[4].parse().unwrap();
        assert!(min <= avg && avg <= max, "bad call stats in {row:?}");
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tmp("bad-config");
    let cfg = write_config(&dir, "[run]\nsamples = 0\n");
    let st = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(2));
    let cfg = write_config(&dir, "[instance]\nkind = \"nope\"\n");
    let st = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(2));
    let st = run(&["--config", dir.join("missing.toml").to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn budget_exhaustion_exits_with_code_three() {
    let dir = tmp("budget");
    let cfg = write_config(
        &dir,
        "[instance]\nkind = \"binary\"\n[run]\nsamples = 10\nmax_model_calls = 2\nstrategies = [\"backtrack\"]\n",
    );
    let out = dir.join("out");
    let st = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(3), "{}", String::from_utf8_lossy(&st.stderr));
}

#[test]
fn oracle_check_passes_on_the_binary_instance() {
    let dir = tmp("oracle-pass");
    let cfg = write_config(
        &dir,
        "[instance]\nkind = \"binary\"\n[run]\noracle_samples = 20000\nshare_q = true\n",
    );
    let st = run(&["--config", cfg.to_str().unwrap(), "--oracle"]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stdout));
    let text = String::from_utf8_lossy(&st.stdout);
    assert!(text.contains("PASS"));
}

#[test]
fn oracle_check_catches_a_broken_sampler() {
    // Skipping the rejection step leaves held tokens unrevised, which on the
    // binary instance concentrates on the all-zeros string.
    let dir = tmp("oracle-fail");
    let cfg = write_config(
        &dir,
        "[instance]\nkind = \"binary\"\n[run]\noracle_samples = 20000\nfault_skip_rejection = true\n",
    );
    let st = run(&["--config", cfg.to_str().unwrap(), "--oracle"]);
    assert_eq!(st.status.code(), Some(4), "{}", String::from_utf8_lossy(&st.stdout));
    assert!(String::from_utf8_lossy(&st.stdout).contains("FAIL"));
}

#[test]
fn window_larger_than_sample_count_is_a_config_error() {
    let dir = tmp("window");
    let cfg = write_config(
        &dir,
        "[instance]\nkind = \"binary\"\n[run]\nsamples = 10\nkl_window = 11\nstrategies = [\"backtrack\"]\n",
    );
    let out = dir.join("out");
    let st = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tmp("overrides");
    let cfg = write_config(&dir, "[instance]\nkind = \"binary\"\n[run]\nsamples = 50\nseed = 1\n");
    let out1 = dir.join("s1");
    let out2 = dir.join("s2");
    let cfg = cfg.to_str().unwrap();
    for (out, seed) in [(&out1, "1"), (&out2, "2")] {
        let st = run(&[
            "--config",
            cfg,
            "--seed",
            seed,
            "--strategy",
            "backtrack",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(st.status.success());
        assert!(out.join("samples_backtrack.txt").exists());
        assert!(!out.join("samples_unconstrained.txt").exists());
    }
    let a = std::fs::read(out1.join("samples_backtrack.txt")).unwrap();
    let b = std::fs::read(out2.join("samples_backtrack.txt")).unwrap();
    assert_ne!(a, b, "different seeds should give different samples");
}
