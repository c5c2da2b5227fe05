use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gnslab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnslab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("GNSLAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn gns_verify_passes_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnslab(dir.path(), &["gns-verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(dir.path());
    assert_eq!(m["subcommand"], "gns-verify");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    let files: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["file"].as_str().unwrap())
        .collect();
    for name in ["config.toml", "certification.csv", "translation.csv"] {
        assert!(files.contains(&name), "{files:?}");
    }
    for f in m["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(dir.path().join(f["file"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
}

#[test]
fn csv_headers_define_every_column() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gnslab(dir.path(), &["gns-verify"]).status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("translation.csv")).unwrap();
    let defined: Vec<&str> = text
        .lines()
        .skip(1)
        .take_while(|l| l.starts_with("# "))
        .map(|l| l[2..].split(':').next().unwrap())
        .collect();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header.split(',').collect::<Vec<_>>(), defined);
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 12);
}

#[test]
fn supercritical_scan_is_all_collapse() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnslab(dir.path(), &["phase-diagram", "--b", "1.05bcrit"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let cols: Vec<&str> = r.split(',').collect();
        assert_eq!(cols[3], "collapse", "{r}");
    }
}

#[test]
fn nls_solve_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnslab(dir.path(), &["nls-solve", "--L", "16", "--M", "512"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert!((report["mass"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(dir.path().join("profile.txt").exists());
}

#[test]
fn negative_grid_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnslab(dir.path(), &["nls-solve", "--set", "grid.M=-4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.M"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnslab(dir.path(), &["nls-solve", "--set", "solver.tolerence=1e-8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solver.tolerence"), "{}", stderr(&o));
}

#[test]
fn config_file_is_read_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[model]\na = 1.0\nb = \"0.5*bcrit\"\n[grid]\nL = 12.0\nM = 256\n").unwrap();
    let out = dir.path().join("out");
    let o = gnslab(&out, &["print-config", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let printed = String::from_utf8_lossy(&o.stdout);
    assert!(printed.contains("M = 256"), "{printed}");

    std::fs::write(&cfg, "[model]\nb = \"lots\"\n").unwrap();
    let o = gnslab(&out, &["nls-solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.b"), "{}", stderr(&o));
}

#[test]
fn mode_ceiling_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnslab(dir.path(), &["manybody-ed", "--N", "3", "--set", "ed.K=13"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(manifest(dir.path())["exit_code"], 3);
}

#[test]
fn manybody_writes_density_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let o = gnslab(dir.path(), &["manybody-ed", "--N", "3", "--set", "ed.K=6", "--set", "ed.dump_gamma=true"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let gamma = std::fs::read_to_string(dir.path().join("gamma1_N3.txt")).unwrap();
    assert_eq!(gamma.lines().filter(|l| !l.starts_with('#')).count(), 36);
}

#[test]
fn collapse_sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(gnslab(&a, &["collapse-sweep", "--workers", "1"]).status.code(), Some(0));
    assert_eq!(gnslab(&b, &["collapse-sweep"]).status.code(), Some(0));
    for name in ["points.csv", "regime.csv"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        assert_eq!(x, y, "{name}");
    }
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["complete"], true);
    assert_eq!(summary["distance_decreasing"], true);
}

#[test]
fn workers_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gnslab"))
        .args(["gns-verify", "--workers", "1", "--out"])
        .arg(dir.path())
        .env("GNSLAB_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(manifest(dir.path())["workers"], 1);

    let o = Command::new(env!("CARGO_BIN_EXE_gnslab"))
        .args(["gns-verify", "--out"])
        .arg(dir.path())
        .env("GNSLAB_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
