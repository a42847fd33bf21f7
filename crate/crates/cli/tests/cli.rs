use std::process::{Command, Output};

fn xysim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xysim")).args(args).env_remove("XYSIM_SEED").output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = xysim(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn value(csv: &str, key: &str) -> String {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")).map(str::to_string))
        .unwrap_or_else(|| panic!("no row {key}"))
}

fn meta(csv: &str, key: &str) -> String {
    csv.lines().find_map(|l| l.strip_prefix(&format!("# {key}=")).map(str::to_string)).unwrap()
}

#[test]
fn two_site_spectrum_values() {
    let s = stdout(&["spectrum", "--jx", "1", "--jy", "0", "--b", "1"]);
    assert_eq!(value(&s, "E1"), "1.414214");
    assert_eq!(value(&s, "E2"), "1.000000");
    assert_eq!(value(&s, "omega1"), "1.207107");
    assert_eq!(value(&s, "omega2"), "0.207107");
    let s = stdout(&["spectrum", "--jx", "0", "--jy", "0", "--b", "1"]);
    let e: Vec<String> = ["E1", "E2", "E3", "E4"].iter().map(|k| value(&s, k)).collect();
    assert_eq!(e, ["1.000000", "0.000000", "0.000000", "-1.000000"]);
}

#[test]
fn chain_spectrum_is_sector_resolved() {
    let s = stdout(&["spectrum", "--L", "4", "--periodic", "--jx", "1", "--jy", "0.5", "--b", "0.7"]);
    let rows: Vec<&str> = s.lines().filter(|l| l.starts_with("even,") || l.starts_with("odd,")).collect();
    assert_eq!(rows.len(), 16);
    let trace: f64 = rows.iter().map(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!(trace.abs() < 1e-5);
}

#[test]
fn prepare_closed_forms() {
    let s = stdout(&["prepare", "--idx", "1", "--jx", "1", "--jy", "0", "--b", "1"]);
    let (c, sn) = ((std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin());
    assert!(s.contains(&format!("0,00,{c:.6},0.000000")));
    assert!(s.contains(&format!("3,11,{sn:.6},0.000000")));
    let s = stdout(&["prepare", "--idx", "3"]);
    let amps: Vec<f64> = s
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // Equal to (0, 1/√2, -1/√2, 0) up to sign.
    assert!(amps[0].abs() < 1e-6 && amps[3].abs() < 1e-6);
    assert!((amps[1].abs() - r).abs() < 1e-6 && (amps[1] + amps[2]).abs() < 1e-6);
}

#[test]
fn noisy_prepare_fidelity_in_band() {
    let s = stdout(&["prepare", "--idx", "1", "--noise"]);
    let f: f64 = meta(&s, "fidelity").parse().unwrap();
    assert!((0.75..=0.92).contains(&f));
    assert_eq!(s.lines().filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit())).count(), 16);
}

#[test]
fn json_output_has_full_precision() {
    let s = stdout(&["spectrum", "--jx", "1", "--jy", "0", "--b", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    let e1 = v["rows"][0]["value"].as_f64().unwrap();
    assert_eq!(e1, 2f64.sqrt());
}

#[test]
fn invalid_input_exits_nonzero() {
    for args in [
        &["spectrum", "--L", "1"][..],
        &["prepare", "--idx", "5"],
        &["circuit", "--jx", "1", "--jy", "1", "--b", "0"],
        &["circuit", "--L", "6"],
        &["tomo", "--shots", "0"],
        &["prepare", "--noise", "--noise-input", "1.5"],
        &["quench", "--t-max", "-1"],
        &["bogus"],
    ] {
        let out = xysim(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn seed_precedence_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"jx": 0.5, "b": 2.0, "seed": 9, "shots": 500}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let shown: serde_json::Value =
        serde_json::from_str(&stdout(&["tomo", "--config", cfg, "--b", "3", "--show-config"])).unwrap();
    assert_eq!(shown["params"]["jx"], 0.5);
    assert_eq!(shown["params"]["b"], 3.0);
    assert_eq!(shown["seed"], 9);
    assert_eq!(shown["shots"], 500);

    let env = Command::new(env!("CARGO_BIN_EXE_xysim"))
        .args(["tomo", "--show-config"])
        .env("XYSIM_SEED", "42")
        .output()
        .unwrap();
    let shown: serde_json::Value = serde_json::from_slice(&env.stdout).unwrap();
    assert_eq!(shown["seed"], 42);
    let shown: serde_json::Value = serde_json::from_str(&stdout(&["tomo", "--show-config"])).unwrap();
    assert_eq!(shown["seed"], 0);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"jz": 1}"#).unwrap();
    assert!(!xysim(&["spectrum", "--config", bad.to_str().unwrap()]).status.success());
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let args = ["sweep", "--idx", "2"];
    let direct = stdout(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert!(stdout(&with_out).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
}

#[test]
fn tomo_depends_on_seed_only() {
    let a = stdout(&["tomo", "--shots", "1000", "--seed", "3"]);
    let b = stdout(&["tomo", "--shots", "1000", "--seed", "3"]);
    let c = stdout(&["tomo", "--shots", "1000", "--seed", "4"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn circuit_census_in_metadata() {
    let s = stdout(&["circuit", "--L", "8", "--jx", "1", "--jy", "0.5", "--b", "0.7"]);
    assert_eq!(meta(&s, "bogoliubov"), "4");
    assert!(meta(&s, "off_diagonal_ratio").parse::<f64>().unwrap() < 1e-8);
    let s = stdout(&["circuit", "--w", "0.4"]);
    assert_eq!(meta(&s, "cnots"), "2");
}

#[test]
fn quench_energy_column_constant() {
    let s = stdout(&["quench", "--idx", "1", "--w", "0.785398", "--hx", "0.5", "--points", "21"]);
    let energies: Vec<&str> = s
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(energies.len(), 21);
    assert!(energies.iter().all(|e| *e == energies[0]));
}
