use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polyhdiv_cli::{read_archive, ArchiveMetadata};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn polyhdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyhdiv"))
        .args(args)
        .env("POLYHDIV_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn build(polygon: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["build", "--polygon", polygon.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    polyhdiv(&args)
}

fn error_kind(o: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).expect("stderr is a JSON error record");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn nonagon_ib_archive() {
    let dir = tempfile::tempdir().unwrap();
    let o = build(&data("nonagon.json"), dir.path(), &["--k", "2", "--config", "ib"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: ArchiveMetadata =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("element.json")).unwrap()).unwrap();
    assert_eq!(meta.n_basis, 56);
    assert_eq!((meta.counts.normal, meta.counts.degenerate_normal, meta.counts.internal), (27, 18, 11));
    assert_eq!(meta.counts.constant_lift, 0);
    assert!(meta.kronecker_defect < 1e-6);
}

#[test]
fn reduced_triangle_lowest_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = build(&data("triangle.json"), dir.path(), &["--k", "0", "--setting", "reduced"]);
    assert!(o.status.success());
    let arch = read_archive(dir.path()).unwrap();
    assert_eq!(arch.meta.counts.normal, 3);
    assert_eq!(arch.meta.counts.constant_lift, 2);
    assert_eq!(arch.meta.n_basis, 5);
    assert_eq!(arch.meta.dimension.rank, 5);
    assert!(arch.meta.dimension.discrepancy);
}

#[test]
fn archive_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build(&data("nonagon.json"), dir.path(), &["--k", "1"]).status.success());
    let arch = read_archive(dir.path()).unwrap();
    assert!((arch.kronecker_defect() - arch.meta.kronecker_defect).abs() < 1e-14);
    let el = arch.rebuild().unwrap();
    assert_eq!(el.transfer.matrix, arch.transfer);
    assert_eq!(el.basis.classes, arch.meta.classes);
}

#[test]
fn self_intersecting_polygon_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let poly = dir.path().join("bow.json");
    std::fs::write(&poly, r#"{"vertices": [[0,0],[1,1],[1,0],[0,1]]}"#).unwrap();
    let o = build(&poly, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "GeometryError");
}

#[test]
fn axis_parallel_square_rejects_coordinate_moments() {
    let dir = tempfile::tempdir().unwrap();
    let o = build(&data("square.json"), dir.path(), &["--k", "1", "--config", "ia"]);
    assert_ne!(o.status.code(), Some(0));
    assert_eq!(error_kind(&o), "AdmissibilityError");
}

#[test]
fn trace_tables_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let arch = dir.path().join("el");
    assert!(build(&data("nonagon.json"), &arch, &["--k", "2"]).status.success());
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = polyhdiv(&["trace", "--archive", arch.to_str().unwrap(), "--edge", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        tables.push(files.iter().map(|f| std::fs::read_to_string(f).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(tables[0], tables[1]);
    // k + 3 functionals on the edge, 33 samples each
    assert_eq!(tables[0].len(), 5);
    for t in &tables[0] {
        assert!(t.starts_with("edge,t,x,y,phi_1,phi_2,phi_dot_n\n"));
        assert_eq!(t.lines().count(), 34);
    }
}

#[test]
fn trace_rejects_out_of_range_dual() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build(&data("triangle.json"), dir.path(), &["--k", "0"]).status.success());
    let o = polyhdiv(&["trace", "--archive", dir.path().to_str().unwrap(), "--dof", "99"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "UsageError");
}

#[test]
fn verify_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyhdiv(&[
        "verify",
        "--polygon",
        data("triangle.json").to_str().unwrap(),
        "--k",
        "0",
        "--levels",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS kronecker"));
}

#[test]
fn export_field_samples() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build(&data("triangle.json"), dir.path(), &["--k", "1"]).status.success());
    let out = dir.path().join("f.csv");
    let o = polyhdiv(&["export", "--archive", dir.path().to_str().unwrap(), "--dof", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("node,x,y,phi_1,phi_2\n"));
    assert!(csv.lines().count() > 10);
}
