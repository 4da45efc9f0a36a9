use std::fs;
use std::process::Command;

use trotterlab::charges::Variant;
use trotterlab::cli::*;

const BIN: &str = env!("CARGO_BIN_EXE_trotterlab");

fn small() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{"n_sites": 6, "depth_max": 8, "shots_total": 20000,
            "charges": [{"order": 1, "variant": "plus"}, {"order": 2, "variant": "minus"}]}"#,
    )
    .unwrap()
}

#[test]
fn defaults_are_filled_in() {
    let c = ExperimentConfig::default();
    assert_eq!((c.n_sites, c.alpha, c.depth_max, c.engine), (8, 0.3, 30, Engine::Noisy));
    assert_eq!(c.shots_total, 100_000);
    assert_eq!(c.charges, vec![ChargeRequest { order: 1, variant: Variant::Plus }]);
    assert_eq!((c.spectrum.n_sites, c.tomo.n_sites, c.mitigation.n_sites), (4, 6, 4));
    assert_eq!(c.mitigation.depth_max, 15);
}

#[test]
fn unknown_and_invalid_fields_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"n_sits": 8}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"spectrum": {"sites": 4}}"#).is_err());
    let bad = [
        r#"{"n_sites": 7}"#,
        r#"{"schema_version": 2}"#,
        r#"{"n_sites": 4, "charges": [{"order": 2, "variant": "plus"}]}"#,
        r#"{"n_sites": 4, "shots_total": 3}"#,
        r#"{"engine": "pure"}"#,
        r#"{"n_sites": 12}"#,
        r#"{"initial_state": {"bits": "0101"}}"#,
        r#"{"sampling": false, "exact_reference": false}"#,
    ];
    for text in bad {
        assert!(matches!(ExperimentConfig::from_json(text), Err(RunError::Config(_) | RunError::Charge(_))), "{text}");
    }
    let ok = r#"{"engine": "pure", "noise": {"kind": "none"}, "n_sites": 12}"#;
    ExperimentConfig::from_json(ok).unwrap();
}

#[test]
fn hash_tracks_every_field() {
    let a = small();
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.mitigation.shots_total += 1;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn decay_table_round_trips_through_csv() {
    let t = run_decay(&small()).unwrap();
    assert_eq!(t.rows.len(), 2 * 9);
    let back = DecayTable::from_csv(&t.to_csv()).unwrap();
    assert_eq!(back.rows, t.rows);
    assert_eq!(back.charges().len(), 2);
}

#[test]
fn decay_estimates_agree_with_exact() {
    let t = run_decay(&small()).unwrap();
    for r in &t.rows {
        let (e, s, x) = (r.estimate.unwrap(), r.s_q.unwrap(), r.exact.unwrap());
        assert!((e - x).abs() < 5.0 * s, "{r:?}");
    }
}

#[test]
fn pure_engine_conserves_charges() {
    let mut cfg = small();
    cfg.engine = Engine::Pure;
    cfg.noise = trotterlab::noise::NoiseConfig::none();
    cfg.sampling = false;
    let t = run_decay(&cfg).unwrap();
    for label in ["Q1+", "Q2-"] {
        let rows: Vec<_> = t.rows.iter().filter(|r| r.charge == label).collect();
        for r in &rows {
            assert!(r.estimate.is_none());
            assert!((r.exact.unwrap() - rows[0].exact.unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn fit_reports_rates_and_verdicts() {
    let mut cfg = small();
    cfg.depth_max = 20;
    cfg.fit.beta_star = Some(1.0);
    let fits = run_fit(&cfg, &run_decay(&cfg).unwrap()).unwrap();
    assert_eq!(fits.len(), 2);
    for f in &fits {
        assert!(f.linear.is_some() && f.exp.is_some(), "{f:?}");
        assert!(f.benchmark.as_ref().unwrap().pass);
    }
    let csv = fits_csv(&fits);
    assert!(csv.starts_with("charge,variant,c1,gamma,c2,"));
}

fn run_cli(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    let out = Command::new(BIN).current_dir(dir).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn binary_writes_stamped_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"n_sites": 4, "depth_max": 10, "shots_total": 5000, "fit": {"beta_star": 0.5}}"#).unwrap();
    let hash = ExperimentConfig::load(&cfg).unwrap().hash();
    let c = cfg.to_str().unwrap();
    for out in ["a", "b"] {
        run_cli(dir.path(), &["--config", c, "--out", out, "--workers", "2", "decay"]);
        run_cli(dir.path(), &["--config", c, "--out", out, "fit"]);
        run_cli(dir.path(), &["--config", c, "--out", out, "charges"]);
    }
    for name in ["decay.csv", "fits.csv", "fits.json", "benchmark.jsonl", "charge_n1_plus_N4.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let decay = fs::read_to_string(dir.path().join("a/decay.csv")).unwrap();
    assert!(decay.starts_with(&format!("# trotterlab {CODE_VERSION} config_sha256={hash}\n")));
    let fits: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/fits.json")).unwrap()).unwrap();
    assert_eq!(fits["config_sha256"], hash.as_str());

    run_cli(dir.path(), &["--config", c, "--out", "s", "--seed", "77", "decay"]);
    assert_ne!(fs::read(dir.path().join("s/decay.csv")).unwrap(), decay.as_bytes());
}

#[test]
fn binary_reports_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"n_sites": 5}"#).unwrap();
    let out = Command::new(BIN).args(["--config", cfg.to_str().unwrap(), "decay"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_sites"));
}

#[test]
fn mitigation_and_spectrum_reports() {
    let mut cfg = small();
    cfg.mitigation.depth_max = 3;
    let m = run_mitigation(&cfg).unwrap();
    assert_eq!(m.rows.len(), 4);
    let arts = mitigation_artifacts(&cfg, &m).unwrap();
    assert!(arts[0].1.contains("# readout model: synthetic"));

    let s = run_spectrum(&cfg).unwrap();
    assert_eq!(s.eigenvalues.len(), 256);
    assert_eq!(s.unit_multiplicity, 1);
    assert!(s.noiseless_max_deviation < 1e-9);
    assert!(s.fixed_point_min_eigenvalue.unwrap() > -1e-10);
}
