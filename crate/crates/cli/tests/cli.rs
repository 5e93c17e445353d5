use std::process::{Command, Output};

fn prophet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prophet"))
        .args(args)
        .env_remove("PROPHET_SEED")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn bounds_csv_header_and_first_row() {
    let out = prophet(&["bounds", "--k", "1..3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: {"));
    assert!(lines.next().unwrap().starts_with("k,v,y1,y2,"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v: f64 = row[1].parse().unwrap();
    assert!((v - 6.0 / std::f64::consts::PI.powi(2)).abs() < 5e-4);
}

#[test]
fn csv_and_json_carry_identical_values() {
    let j = json(&prophet(&["bounds", "--k", "1..4"]));
    let csv = String::from_utf8(prophet(&["bounds", "--k", "1..4", "--format", "csv"]).stdout).unwrap();
    let rows: Vec<Vec<String>> = csv.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect();
    for (i, row) in rows.iter().enumerate() {
        let jr = &j["rows"][i];
        let v: f64 = row[1].parse().unwrap();
        assert_eq!(v.to_bits(), jr["v"].as_f64().unwrap().to_bits());
        for (t, y) in jr["breakpoints"].as_array().unwrap().iter().enumerate() {
            let c: f64 = row[2 + t].parse().unwrap();
            assert_eq!(c.to_bits(), y.as_f64().unwrap().to_bits());
        }
    }
}

#[test]
fn finite_k1_reports_gamma_and_relaxation() {
    let j = json(&prophet(&["bounds", "--k", "1", "--model", "finite", "--n", "2"]));
    let row = &j["rows"][0];
    assert!((row["gamma"].as_f64().unwrap() - 0.75).abs() < 1e-15);
    let v = row["v"].as_f64().unwrap();
    assert!(v < 0.75 && (v - 0.5 / 2f64.ln()).abs() < 1e-9);
}

#[test]
fn invalid_parameters_exit_3() {
    for args in [
        vec!["bounds", "--k", "0..2"],
        vec!["bounds", "--model", "finite", "--k", "1"],
        vec!["bounds", "--k", "1..70"],
        vec!["simulate", "--k", "1", "--n", "10", "--dist", "cauchy"],
        vec!["simulate", "--k", "1", "--n", "10", "--dist", "uniform01", "--trials", "5"],
        vec!["simulate", "--k", "4", "--n", "3", "--dist", "uniform01"],
        vec!["lp-dump", "--n", "10", "--k", "1", "--m", "600"],
        vec!["verify", "nonsense"],
        vec!["frobnicate"],
    ] {
        assert_eq!(prophet(&args).status.code(), Some(3), "{args:?}");
    }
    assert_eq!(prophet(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_is_byte_identical_and_seeded_from_env() {
    let args = ["simulate", "--k", "2", "--n", "200", "--dist", "exponential:1", "--trials", "5000", "--seed", "7"];
    let a = prophet(&args);
    let b = prophet(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let env_seeded = Command::new(env!("CARGO_BIN_EXE_prophet"))
        .args(&args[..args.len() - 2])
        .env("PROPHET_SEED", "7")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap();
    assert_eq!(env_seeded.stdout, a.stdout);
    let j = json(&a);
    assert_eq!(j["manifest"]["seed"], 7);
    assert_eq!(j["schedule"]["kind"], "two-threshold-exact");
    assert_eq!(j["schedule"]["tau"][0], 121);
}

#[test]
fn manifest_timestamp_comes_from_source_date_epoch() {
    let out = Command::new(env!("CARGO_BIN_EXE_prophet"))
        .args(["verify", "beta-bar"])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["manifest"]["timestamp"], "2023-11-14T22:13:20Z");
    assert!(json(&prophet(&["verify", "beta-bar"]))["manifest"]["timestamp"].is_null());
}

#[test]
fn verify_duality_single_case() {
    let out = prophet(&["verify", "duality", "--n", "100", "--k", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json(&out);
    assert_eq!(j["passed"], true);
    assert_eq!(j["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn lp_dump_writes_file() {
    let dir = std::env::temp_dir().join(format!("prophet-lp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("d.lp");
    let out = prophet(&["lp-dump", "--n", "3", "--k", "1", "--m", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("Minimize") && text.contains("prophet:") && text.ends_with("End\n"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn numerical_failures_map_to_exit_2() {
    use prophet_cli::CliError;
    let e = CliError::Core(prophet_core::Error::NonConvergence("x".into()));
    assert_eq!(e.exit_code(), 2);
    assert_eq!(prophet_cli::Outcome::NumericalFailure.exit_code(), 2);
}
