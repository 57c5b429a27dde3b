//! Experiments are pure functions of (config, seed): re-running one into a
//! fresh directory reproduces every output file byte for byte.

use bslkit::harness::config::{BvmConfig, RunSettings, ToyFigure1Config};
use bslkit::harness::{run_bvm_diagnostic, run_toy_figure1};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn assert_identical(a: &Path, b: &Path) {
    let sa = snapshot(a);
    let sb = snapshot(b);
    assert_eq!(
        sa.keys().collect::<Vec<_>>(),
        sb.keys().collect::<Vec<_>>(),
        "different file sets"
    );
    for (name, bytes) in &sa {
        assert_eq!(bytes, &sb[name], "file {name} differs between reruns");
    }
}

#[test]
fn bvm_outputs_are_reproducible() {
    let cfg = BvmConfig {
        n_ladder: vec![500, 2000],
        q: 5000,
        cov_scale: 1.0,
        ratio_base: 500,
        quad_points: 1001,
    };
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let settings = RunSettings {
            seed: 99,
            out_dir: d.path().to_path_buf(),
        };
        run_bvm_diagnostic(&cfg, &settings).unwrap();
    }
    assert_identical(dirs[0].path(), dirs[1].path());
}

#[test]
fn toy_figure1_outputs_are_reproducible() {
    let cfg = ToyFigure1Config {
        n: 20,
        m: 20,
        q: 2000,
        cov_scale: 0.5,
        b: 20,
        j: 10,
        burn_in: 0.2,
        delta_mult: 4.0,
    };
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        let settings = RunSettings {
            seed: 123,
            out_dir: d.path().to_path_buf(),
        };
        run_toy_figure1(&cfg, &settings).unwrap();
    }
    assert_identical(dirs[0].path(), dirs[1].path());
}
