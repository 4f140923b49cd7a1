use std::process::Command;

use levykernel::cli::{run_all, run_checks, summary_lines, write_report, write_tables, CHECKS};
use levykernel::config::{FreeGrid, PathGrid, RunConfig};
use levykernel::report::VerificationReport;
use levykernel::symbols::ModelSpec;

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.paths = cfg.paths.with_paths(2000).with_seed(21);
    cfg.grids.free = FreeGrid::Coarse;
    cfg.grids.paths = PathGrid::Coarse;
    cfg
}

#[test]
fn full_run_covers_every_check_once_and_is_reproducible() {
    let cfg = small_config();
    let a = run_all(&cfg).unwrap();
    assert_eq!(a.entries.len(), CHECKS.len());
    for (e, c) in a.entries.iter().zip(CHECKS) {
        assert_eq!(e.check_id, c.id);
        assert!(e.runtime_s >= 0.0);
        assert!(!e.diagnostics.iter().any(|d| d.starts_with("error")), "{}: {:?}", e.check_id, e.diagnostics);
    }
    // deterministic checks pass regardless of the path count
    for id in ["psi-star-sandwich", "renewal-build", "free-lift", "free-mass", "appendix-constants"] {
        assert!(a.entry(id).unwrap().passed, "{id}");
    }
    let b = run_all(&cfg).unwrap();
    assert_eq!(a.numeric_payload(), b.numeric_payload());
    assert_eq!(summary_lines(&a).len(), a.entries.len());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/report.json");
    write_report(&a, &path).unwrap();
    let back = VerificationReport::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn subsets_and_unknown_ids() {
    let cfg = small_config();
    let ids = vec!["free-mass".to_string(), "psi-scaling".to_string()];
    let rep = run_checks(&cfg, Some(&ids)).unwrap();
    // reported in the fixed order, not the requested one
    let got: Vec<_> = rep.entries.iter().map(|e| e.check_id.as_str()).collect();
    assert_eq!(got, ["psi-scaling", "free-mass"]);
    assert!(run_checks(&cfg, Some(&["no-such-check".to_string()])).is_err());
}

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = RunConfig::for_model(ModelSpec::relativistic(0.5, 2));
    cfg.radius = 2.0;
    cfg.checks = Some(vec!["lambda1".into()]);
    let text = cfg.to_toml().unwrap();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    assert!(RunConfig::from_toml(&format!("{text}\nbogus = 1\n")).is_err());
    let mut bad = cfg.clone();
    bad.radius = -1.0;
    assert!(bad.validate().is_err());
}

#[test]
fn report_json_is_strict() {
    let rep = VerificationReport::new(ModelSpec::stable(1.0, 1));
    let mut v: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
    v["extra"] = serde_json::json!(1);
    assert!(VerificationReport::from_json(&v.to_string()).is_err());
}

#[test]
fn tables_are_written() {
    let dir = tempfile::tempdir().unwrap();
    write_tables(&small_config(), dir.path()).unwrap();
    for f in ["model.csv", "renewal.csv", "kernel_p.csv", "kernel_dp_dr.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert!(text.lines().count() > 2, "{f}");
    }
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_levykernel");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(exe).args(["constants"]).env("LEVYKERNEL_OUT", dir.path()).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let rep = std::fs::read_to_string(dir.path().join("constants.json")).unwrap();
    assert!(VerificationReport::from_json(&rep).unwrap().all_passed());

    let bad = Command::new(exe).args(["--alpha", "2.5", "model"]).env("LEVYKERNEL_OUT", dir.path()).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let out = dir.path().join("flag");
    let m = Command::new(exe).args(["--family", "relativistic", "--out"]).arg(&out).arg("model").output().unwrap();
    assert!(m.status.success());
    assert!(out.join("model.csv").exists());
}
