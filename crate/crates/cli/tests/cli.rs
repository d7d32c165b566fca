use std::path::Path;
use std::process::{Command, Output};

fn protoseg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protoseg"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &Path) {
    let cfg = r#"{"seed":3,"classes":3,"dims":8,"points_per_class":20,"noise":0.5,"points_per_scan":50,"scans":3,"flip_rate":0.2}"#;
    std::fs::write(dir.join("synth.json"), cfg).unwrap();
    let out = protoseg(dir, &["synth", "--config", "synth.json", "--out", "s"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn version_lists_formats() {
    let out = protoseg(Path::new("."), &["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for f in ["igft v1", "igl v1", "poses"] {
        assert!(text.contains(f), "{text}");
    }
}

#[test]
fn missing_required_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = protoseg(dir.path(), &["classify", "--mode", "nn", "--out", "x.igl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mode_without_its_input_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = protoseg(dir.path(), &["classify", "--mode", "threshold", "--points", "s/points.igft", "--out", "x.igl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("protoseg: usage error:"), "{}", stderr(&out));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = protoseg(dir.path(), &["crop", "--image", "nope.ppm", "--out", "x.ppm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.ppm"));
}

#[test]
fn bad_magic_is_format_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    std::fs::write(dir.path().join("bad.igft"), b"NOPE and then some more bytes here..").unwrap();
    let out = protoseg(dir.path(), &["fit", "--bank", "s/manifest.json", "--out", "m.igft"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let out = protoseg(dir.path(), &["ensemble", "--a", "bad.igft", "--b", "s/points.igft", "--out", "x.igft"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("bad.igft"));
}

#[test]
fn nonpositive_regularization_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    assert!(protoseg(dir.path(), &["build-bank", "--manifest", "s/manifest.json", "--out", "bank.json"]).status.success());
    let out = protoseg(dir.path(), &["fit", "--bank", "bank.json", "--C", "0", "--out", "m.igft"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn consist_writes_one_label_file_per_scan() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = protoseg(dir.path(), &["consist", "--scans", "s/sequence.json", "--out", "pseudo"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let files = std::fs::read_dir(dir.path().join("pseudo")).unwrap().count();
    assert_eq!(files, 3);
}

#[test]
fn eval_prints_table_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = protoseg(dir.path(), &["eval", "--gt", "s/gt.igl", "--pred", "gt=s/gt.igl", "--classes", "s/manifest.json", "--out", "r.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mIoU"));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "mIoU,1.0"), "{csv}");
}
