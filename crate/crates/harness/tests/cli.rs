use std::process::Command;

fn beamfocus(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_beamfocus")).args(args).output().unwrap()
}

#[test]
fn check_subset_passes() {
    let out = beamfocus(&["check", "1", "4"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.matches("[PASS]").count(), 2, "{text}");
}

#[test]
fn sweep_writes_csv_and_reports_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "trials = 0\n\n[sweep]\nvariable = \"snr_db\"\nvalues = [10.0]\n").unwrap();
    let out_path = dir.path().join("out.csv");
    let out = beamfocus(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--arch",
        "digital",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rayleigh_distance=1.37 m"));
    let csv = std::fs::read_to_string(out_path).unwrap();
    assert!(csv.starts_with("sweep_var,sweep_value,arch,metric,value,trials,stderr\n"));
    assert!(csv.lines().skip(1).all(|l| l.contains(",digital,")));
}

#[test]
fn infeasible_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "trials = 0\n\n[constraints]\npower_dbm = -30.0\n").unwrap();
    let out = beamfocus(&["sweep", "--config", cfg.to_str().unwrap(), "--arch", "digital", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"][0]["metric"], "status");
    assert_eq!(v["rows"][0]["value"], 3.0);
}

#[test]
fn bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[geometry]\nantennas = 3\n").unwrap();
    let out = beamfocus(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("antennas"));
    let missing = beamfocus(&["sweep", "--config", "/nonexistent/run.toml"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn heatmap_subcommand_emits_grid() {
    let out = beamfocus(&["heatmap", "--no-constraints", "--arch", "digital", "--points", "15", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("x,y,gain\n"));
    assert_eq!(text.lines().count(), 1 + 15 * 15);
}

#[test]
fn configured_architectures_apply_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "trials = 0\narchitectures = [\"partially\"]\n").unwrap();
    let out = beamfocus(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("partially")), "{text}");
}
