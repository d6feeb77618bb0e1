use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tatpat::io::{read_field, read_spectrum, AnyField};
use tatpat::model::VoxelGrid;
use tatpat::phantom::{build_phantom, ParamMap, ParamValue};

const SPEC: &str = r#"
output = "run"

[phantom]
name = "constant_speed_cyl_source"
params = { speed = 1.3 }

[grid]
dims = 16

[spectrum]
n_sphere = 256

[identity]
ted1_points = 64
"#;

fn tatpat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tatpat")).args(args).output().unwrap()
}

fn setup(body: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    std::fs::write(&spec, body).unwrap();
    (dir, spec)
}

fn stage(verb: &str, spec: &Path) -> Output {
    tatpat(&[verb, "--spec", spec.to_str().unwrap(), "--threads", "1"])
}

fn toml_at(path: &Path) -> toml::Table {
    std::fs::read_to_string(path).unwrap().parse().unwrap()
}

#[test]
fn missing_spec_is_a_validation_error() {
    assert_eq!(tatpat(&["phantom"]).status.code(), Some(2));
}

#[test]
fn unreadable_spec_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("absent.toml");
    assert_eq!(stage("phantom", &p).status.code(), Some(1));
}

#[test]
fn schema_violation_is_a_validation_error() {
    let (_d, spec) = setup(&SPEC.replace("[grid]", "[grid]\nspacing_typo = 3"));
    let out = stage("phantom", &spec);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_verb_is_rejected() {
    assert_eq!(tatpat(&["reconstruct"]).status.code(), Some(2));
}

#[test]
fn stages_out_of_order_are_rejected() {
    let (d, spec) = setup(SPEC);
    assert_eq!(stage("invert", &spec).status.code(), Some(2));
    assert_eq!(stage("phantom", &spec).status.code(), Some(0));
    assert_eq!(stage("verify", &spec).status.code(), Some(2));
    assert!(!d.path().join("run/verify").exists());
}

#[test]
fn ls_pipeline_writes_readable_outputs() {
    let (d, spec) = setup(SPEC);
    for verb in ["phantom", "spectrum", "verify", "invert", "report"] {
        let out = stage(verb, &spec);
        assert_eq!(out.status.code(), Some(0), "{verb}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let run = d.path().join("run");

    // The phantom file holds exactly the in-memory phantom.
    let grid = VoxelGrid::centered_cube(18, 1.0 + 2.0 / 16.0).unwrap();
    let params: ParamMap = [("speed".to_string(), ParamValue::Number(1.3))].into_iter().collect();
    let cfg = build_phantom("constant_speed_cyl_source", grid, &params).unwrap();
    let (field, meta) = read_field(BufReader::new(File::open(run.join("phantom/q.tpkf")).unwrap())).unwrap();
    let q = match field {
        AnyField::Real(f) => f,
        AnyField::Complex(_) => panic!("q stored as complex"),
    };
    assert_eq!(q.grid(), cfg.grid());
    assert_eq!(q.values(), cfg.q().values());
    assert!(meta.code_version.starts_with(env!("CARGO_PKG_VERSION")));

    let (freq, _) = read_spectrum(BufReader::new(File::open(run.join("spectrum/sphere.tpks")).unwrap())).unwrap();
    assert_eq!(freq.sampling.len(), 256);
    assert_eq!(freq.ks.len(), 10);

    // Comparing the phantom against itself gives a zero moment residual.
    let verify = toml_at(&run.join("verify/report.toml"));
    assert_eq!(verify["orth1_residual"].as_float(), Some(0.0));

    let result = toml_at(&run.join("invert/result.toml"));
    let c = result["c_value"].as_float().unwrap();
    assert!((c - 1.3).abs() < 0.05 * 1.3, "{c}");

    let summary = toml_at(&run.join("report/summary.toml"));
    let slope = summary["leading_remainder_slope"].as_float().unwrap();
    assert!((1.85..=2.15).contains(&slope), "{slope}");
    assert!(std::fs::read_to_string(run.join("report/low_freq.svg")).unwrap().starts_with("<svg"));

    let manifest = toml_at(&run.join("manifest.toml"));
    let stages = manifest["stages"].as_table().unwrap();
    for s in ["phantom", "spectrum", "verify", "invert", "report"] {
        assert!(stages.contains_key(s), "{s} missing from manifest");
    }
}

#[test]
fn out_flag_overrides_spec_output() {
    let (d, spec) = setup(SPEC);
    let alt = d.path().join("elsewhere");
    let out = tatpat(&["phantom", "--spec", spec.to_str().unwrap(), "--out", alt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(alt.join("phantom/f.tpkf").exists());
    assert!(!d.path().join("run").exists());
}

#[test]
fn zero_threads_rejected() {
    let (_d, spec) = setup(SPEC);
    assert_eq!(tatpat(&["phantom", "--spec", spec.to_str().unwrap(), "--threads", "0"]).status.code(), Some(2));
}
