use std::path::Path;
use std::process::{Command, Output};

fn aavr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aavr")).args(args).output().expect("spawn aavr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn case_study_one_sends_200_to_b() {
    let o = aavr(&["case-study", "1", "--model", "aavr"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("recommended_to_B: 200"), "{}", stdout(&o));
}

#[test]
fn case_study_all_writes_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cs2");
    let o = aavr(&["case-study", "2", "--replications", "3", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let counts = std::fs::read_to_string(out.join("counts.csv")).unwrap();
    let mut lines = counts.lines();
    assert!(lines.next().unwrap().starts_with("model,recommended_to_B,"));
    assert_eq!(lines.count(), 5);
    assert!(out.join("plan_aavr.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 3);
    assert!(manifest["version"].as_str().unwrap().starts_with('v'));
}

#[test]
fn zero_periods_give_header_only_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = aavr(&["simulate", "--regions", "4", "--drivers", "8", "--periods", "0", "--seeds", "1", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let periods = std::fs::read_to_string(out.join("periods.csv")).unwrap();
    assert_eq!(periods.lines().count(), 1);
    assert!(periods.starts_with("scenario,model,seed,period,"));
}

#[test]
fn identical_runs_give_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = aavr(&[
            "simulate", "--regions", "5", "--drivers", "15", "--periods", "3", "--seeds", "2", "--seed", "9", "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (std::fs::read(out.join("periods.csv")).unwrap(), std::fs::read(out.join("averages.csv")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn simulate_exports_programs_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let lp = dir.path().join("lp");
    let o = aavr(&[
        "simulate", "--regions", "4", "--drivers", "10", "--periods", "2", "--seeds", "1", "--model", "aavr,b2",
        "--out", p(&out), "--export-lp", p(&lp), "--events",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(lp.join("aavr.lp")).unwrap().contains("Subject To"));
    assert!(lp.join("b2.lp").exists());
    assert!(!lp.join("b1.lp").exists());
    let events = std::fs::read_to_string(out.join("events/aavr-42.csv")).unwrap();
    assert!(events.starts_with("period,driver_id,action,"));
    let table = stdout(&o);
    assert!(table.contains("aavr") && table.contains("b2") && !table.contains("b3"), "{table}");
}

#[test]
fn empty_decisions_file_is_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decisions.csv");
    std::fs::write(&path, "").unwrap();
    let o = aavr(&["fit", "--decisions", p(&path), "--out", p(&dir.path().join("fit"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("decisions.csv"), "{}", stderr(&o));

    std::fs::write(&path, "driver_id,period,chosen_region,region,f_0\n").unwrap();
    let o = aavr(&["fit", "--decisions", p(&path), "--out", p(&dir.path().join("fit"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("decisions.csv"), "{}", stderr(&o));
}

#[test]
fn fit_decisions_writes_weights() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decisions.csv");
    let mut csv = String::from("driver_id,period,chosen_region,region,f_0\n");
    for period in 0..20 {
        let chosen = if period % 4 == 0 { 0 } else { 1 };
        csv.push_str(&format!("1,{period},{chosen},0,0.0\n1,{period},{chosen},1,1.0\n"));
    }
    std::fs::write(&path, csv).unwrap();
    let out = dir.path().join("fit");
    let o = aavr(&["fit", "--decisions", p(&path), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let weights = std::fs::read_to_string(out.join("weights.csv")).unwrap();
    let mut lines = weights.lines();
    assert_eq!(lines.next().unwrap(), "driver_id,decisions,degenerate,log_likelihood,top1_accuracy,w_0,w_1");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..3], ["1", "20", "false"]);
    assert_eq!(row[4].parse::<f64>().unwrap(), 0.75);
}

#[test]
fn planted_recovery_meets_the_bar() {
    let dir = tempfile::tempdir().unwrap();
    let o = aavr(&["fit", "--planted", "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("top1_agreement:")).unwrap().to_string();
    let v: f64 = line.split(':').nth(1).unwrap().trim().parse().unwrap();
    assert!(v >= 0.70, "{line}");
}

#[test]
fn fit_trips_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let trips = dir.path().join("trips.csv");
    std::fs::write(
        &trips,
        "pickup_region,dropoff_region,minutes,km,hour,weekday\n0,1,6.0,3.0,8,1\n1,0,8.0,3.2,9,1\n0,1,bad,1,1,1\n",
    )
    .unwrap();
    let out = dir.path().join("fit");
    let o = aavr(&["fit", "--trips", p(&trips), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("skipped_rows: 1"), "{}", stdout(&o));
    let travel = std::fs::read_to_string(out.join("travel.csv")).unwrap();
    assert_eq!(travel.lines().count(), 1 + 4);
    assert!(out.join("demand_history.csv").exists());
}

#[test]
fn plotdata_series() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let o = aavr(&["simulate", "--regions", "4", "--drivers", "8", "--periods", "2", "--seeds", "1", "--out", p(&sim)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("plot");
    let o = aavr(&["plotdata", "--metrics", p(&sim), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let bars = std::fs::read_to_string(out.join("comparison_bars.csv")).unwrap();
    assert!(bars.starts_with("metric,model,scenario,value\n"));
    assert!(bars.lines().any(|l| l.starts_with("served_per_run,b4,")));

    let reach = std::fs::read_to_string(out.join("reachability.csv")).unwrap();
    let fractions: Vec<f64> = reach.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(fractions.len(), 60);
    assert!(fractions.windows(2).all(|w| w[0] <= w[1]));

    let trace = std::fs::read_to_string(out.join("posterior_trace.csv")).unwrap();
    let last = trace.lines().last().unwrap();
    assert_eq!(last.split(',').nth(3).unwrap().parse::<f64>().unwrap(), 0.875);
}

#[test]
fn plotdata_without_metrics_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = aavr(&["plotdata", "--metrics", p(&dir.path().join("missing")), "--out", p(&dir.path().join("p"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(aavr(&["case-study", "4"]).status.code(), Some(2));
    assert_eq!(aavr(&["case-study", "1", "--model", "b9"]).status.code(), Some(2));
    assert_eq!(aavr(&["fit"]).status.code(), Some(2));
    assert_eq!(aavr(&["--rho=-1", "case-study", "1"]).status.code(), Some(2));
}

#[test]
fn unreadable_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "horizon = [").unwrap();
    let o = aavr(&["--config", p(&cfg), "case-study", "1"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}
