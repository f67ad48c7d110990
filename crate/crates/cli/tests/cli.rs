use std::process::{Command, Output};

fn manhattan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manhattan")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV report, comments and header dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn formula_d2_is_odd_numbers() {
    let o = manhattan(&["formula", "--d", "2", "--n-max", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let msd: Vec<String> = rows(&stdout(&o)).into_iter().map(|r| r[3].clone()).collect();
    assert_eq!(msd, ["0", "1", "3", "5", "7", "9"]);
}

#[test]
fn compare_oracle_only_passes() {
    let o = manhattan(&["compare", "--d", "3", "--n-max", "2", "--chains", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    assert!(r.iter().all(|row| row[1] == row[2] && row[5] == "PASS"));
    assert_eq!(r[2][1], "8/3");
}

#[test]
fn compare_with_monte_carlo() {
    let o = manhattan(&["compare", "--d", "2", "--n-max", "6", "--chains", "20000", "--seed", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    for r in rows {
        assert_eq!(r["exact_verdict"], "PASS");
        assert_eq!(r["mc_verdict"], "PASS");
    }
}

#[test]
fn census_odd_dimension() {
    let o = manhattan(&["census", "--d", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["count"], 16);
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["environments"].as_array().unwrap().len(), 16);
}

#[test]
fn coupling_rejects_d3_with_reason() {
    let o = manhattan(&["coupling", "--d", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("d = 2 only"));
    let ok = manhattan(&["coupling", "--d", "2", "--n-max", "4"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(rows(&stdout(&ok)).iter().all(|r| r[3] == "PASS"));
}

#[test]
fn usage_and_budget_exit_codes() {
    assert_eq!(manhattan(&["formula", "--d", "1"]).status.code(), Some(2));
    assert_eq!(manhattan(&["census", "--format", "svg"]).status.code(), Some(2));
    assert_eq!(manhattan(&["report", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(manhattan(&["formula", "--rule", "iid:4"]).status.code(), Some(2));
    assert_eq!(manhattan(&["simulate", "--n-max", "10", "--record-stride", "3"]).status.code(), Some(2));
    assert_eq!(manhattan(&["formula", "--rule", "bogus"]).status.code(), Some(2));
    assert_eq!(manhattan(&["exact", "--d", "4", "--n-max", "40", "--max-sites", "10000"]).status.code(), Some(3));
}

#[test]
fn environment_overrides_and_flags_win() {
    let o = Command::new(env!("CARGO_BIN_EXE_manhattan"))
        .args(["formula", "--n-max", "1"])
        .env("MANHATTAN_D", "3")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("d=3 "));
    let o = Command::new(env!("CARGO_BIN_EXE_manhattan"))
        .args(["formula", "--n-max", "1", "--d", "4"])
        .env("MANHATTAN_D", "3")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("d=4 "));
}

#[test]
fn exact_reports_return_probabilities() {
    let o = manhattan(&["exact", "--d", "2", "--n-max", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r[0][6], "1");
    assert_eq!(r[1][6], "");
    assert_eq!(r[2][6], "0");
    assert_eq!(r[4][6], "1/8");
    assert!(r.iter().all(|row| row[8] == "PASS"));
}

#[test]
fn simulate_writes_file_and_checks_invariants() {
    let path = std::env::temp_dir().join(format!("manhattan-sim-{}.csv", std::process::id()));
    let o = manhattan(&[
        "simulate", "--d", "3", "--n-max", "10", "--chains", "500", "--record-stride", "5", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.contains("n,mean_1,mean_2,mean_3,msd_estimate,stderr,n_chains"));
    assert!(text.contains("check_invariants=true steps_checked=5000"));
    let r = rows(&text);
    assert_eq!(r.iter().map(|row| row[0].as_str()).collect::<Vec<_>>(), ["0", "5", "10"]);
}

#[test]
fn report_is_svg() {
    let o = manhattan(&["report", "--d", "3", "--n-max", "20", "--chains", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    let svg = stdout(&o);
    assert!(svg.starts_with("<svg") && svg.contains(r#"viewBox="0 0 800 600""#));
    for label in ["closed form", "asymptote", "exact DP", "Monte Carlo"] {
        assert!(svg.contains(label), "missing {label}");
    }
    // oracle truncated by the budget, formula and Monte Carlo still drawn
    let o = manhattan(&["report", "--d", "4", "--n-max", "30", "--max-sites", "2000"]);
    assert_eq!(o.status.code(), Some(0));
}
