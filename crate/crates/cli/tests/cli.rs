use std::process::Command;

fn tdrc() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tdrc"));
    c.env_remove("TDRC_OUT").env_remove("TDRC_WORKERS").env("RUST_BACKTRACE", "0");
    c
}

#[test]
fn sweep_writes_versioned_csv_under_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"preset": "short-reservoir-fig5", "mode": "bypass", "n_bits": 512, "repetitions": 1,
            "n_mask_trials": 1, "train": {"lambda": 0.01, "cv_reps": 2, "train_frac": 0.75},
            "sweep": [{"name": "link.total_ssmf_km", "values": [10, 20]}]}"#,
    )
    .unwrap();
    let out = dir.path().join("env-out");
    let status = tdrc()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .env("TDRC_OUT", &out)
        .env("TDRC_WORKERS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# tdrc results schema 1");
    assert!(lines[1].starts_with("row,link.total_ssmf_km,mode,repetition,mask_id,ber"));
    assert_eq!(lines.len(), 4);

    // the flag wins over the environment
    let flag_out = dir.path().join("flag-out");
    let status = tdrc()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_out)
        .env("TDRC_OUT", &out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(flag_out.join("sweep.csv").exists());
}

#[test]
fn failures_exit_nonzero_with_the_stage() {
    let out = tdrc().args(["run", "--preset", "no-such-preset"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"preset": "short-reach-45km", "link": {"total_ssmf_km": -3}}"#).unwrap();
    let out = tdrc().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("link: "));
}

#[test]
fn seed_flag_changes_derived_seeds() {
    let a = tdrc().args(["show-config", "--seed", "1"]).output().unwrap();
    let b = tdrc().args(["show-config", "--seed", "2"]).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    let cfg = tdrc::harness::ExperimentConfig::from_json(&String::from_utf8(a.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seeds, tdrc::harness::Seeds::from_master(1));
}
