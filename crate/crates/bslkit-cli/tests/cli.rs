//! End-to-end tests of the `bslkit` binary: help text, exit codes, config
//! validation, output files, and byte-for-byte determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bslkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bslkit"))
        .args(args)
        .env_remove("BSLKIT_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_matches_golden() {
    let out = bslkit(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let expected = include_str!("golden/help.txt");
    assert_eq!(String::from_utf8_lossy(&out.stdout), expected);
}

#[test]
fn help_lists_every_subcommand_and_flag() {
    let help = include_str!("golden/help.txt");
    for sub in [
        "toy-figure1",
        "ma2-coverage",
        "toad",
        "bvm-check",
        "acceptance-rate",
        "m-convergence",
        "sample",
        "diagnose-sigma2",
    ] {
        assert!(help.contains(sub), "help missing subcommand {sub}");
    }
    for flag in ["--config", "--seed", "--out", "--preset", "--threads"] {
        assert!(help.contains(flag), "help missing flag {flag}");
    }
}

#[test]
fn experiment_without_config_or_preset_exits_1() {
    let out = bslkit(&["ma2-coverage"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--preset"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_exits_1_with_usage() {
    let out = bslkit(&["toy-figure1", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn missing_config_file_names_the_path() {
    let out = bslkit(&["toy-figure1", "--config", "/no/such/config.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("/no/such/config.toml"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn invalid_m_reports_section_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[sample]\nm = 0\n").unwrap();
    let out = bslkit(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("sample.m"), "{err}");
    assert!(err.contains("m must be >= 2"), "{err}");
}

#[test]
fn invalid_gamma_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[ma2_coverage]\ngamma = 1.5\n").unwrap();
    let out = bslkit(&["ma2-coverage", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("shrinkage gamma must lie in [0,1]"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[toy_figure1]\nbogus = 1\n").unwrap();
    let out = bslkit(&["toy-figure1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("toy_figure1"), "{}", stderr(&out));
}

fn tiny_toy_config(dir: &Path) -> String {
    let cfg = dir.join("tiny.toml");
    fs::write(
        &cfg,
        "[toy_figure1]\nq = 2000\nm = 20\nb = 20\nj = 10\n",
    )
    .unwrap();
    cfg.to_str().unwrap().to_owned()
}

#[test]
fn toy_figure1_smoke_creates_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_toy_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = bslkit(&[
        "toy-figure1",
        "--preset",
        "desk",
        "--seed",
        "7",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--svg",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let exp = out_dir.join("toy_figure1");
    for file in [
        "samples_bsl.csv",
        "samples_adjusted.csv",
        "samples_adjusted_bootstrap.csv",
        "density_grid.csv",
        "summary.json",
        "meta.json",
        "figure1.svg",
    ] {
        assert!(exp.join(file).exists(), "missing {file}");
    }
    // resolved config echoed into meta.json
    let meta = fs::read_to_string(exp.join("meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 7"), "{meta}");
    assert!(meta.contains("\"q\": 2000"), "{meta}");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_toy_config(dir.path());
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("out{run}"));
        let out = bslkit(&[
            "toy-figure1",
            "--preset",
            "desk",
            "--seed",
            "11",
            "--config",
            &cfg,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let exp = out_dir.join("toy_figure1");
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&exp)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort_by(|a, b| a.0.cmp(&b.0));
        outputs.push(files);
    }
    assert_eq!(
        outputs[0].iter().map(|(n, _)| n).collect::<Vec<_>>(),
        outputs[1].iter().map(|(n, _)| n).collect::<Vec<_>>()
    );
    for ((name, a), (_, b)) in outputs[0].iter().zip(outputs[1].iter()) {
        assert_eq!(a, b, "{name} differs between identical invocations");
    }
}

#[test]
fn diagnose_sigma2_flag_driven() {
    let dir = tempfile::tempdir().unwrap();
    let out = bslkit(&[
        "diagnose-sigma2",
        "--model",
        "toy",
        "--theta",
        "5",
        "--m",
        "200",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sigma^2"), "{stdout}");
    assert!(
        stdout.contains("within") || stdout.contains("ABOVE"),
        "{stdout}"
    );
    assert!(dir.path().join("diagnose_sigma2/summary.json").exists());
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bslkit"))
        .args(["sample", "--model", "toy", "--q", "200", "--m", "10", "--seed", "4"])
        .env("BSLKIT_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("sample/samples.csv").exists());
    assert!(dir.path().join("sample/summary.json").exists());
}
