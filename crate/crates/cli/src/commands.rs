use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use aavr_core::behavior::{fit_preference, top1_accuracy, top1_agreement, update_belief, BetaBelief, PreferenceModel};
use aavr_core::io;
use aavr_core::rebalance::{build_model, solve_model, FleetSnapshot, RebalanceModel, RecommendationPlan};
use aavr_core::scenarios::{
    case_study_1, case_study_2, case_study_3, ingest_trip_records, planted_choice_corpus, synthetic_network,
    IngestOptions, ScenarioBundle,
};
use aavr_core::sim::{
    monte_carlo, replication_seeds, run_experiment, simulate, ExperimentTable, ScenarioVariant, SimOptions,
};
use aavr_core::solver::write_lp;
use aavr_core::{reachability_fraction, Error, PlanningHorizon, RegionId};
use anyhow::{bail, Context, Result};
use clap::Args;

use crate::manifest::RunManifest;
use crate::{Cli, Command, Global};

#[derive(Args, Debug)]
pub struct CaseStudyArgs {
    /// Case study number.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
    pub id: u8,
    /// aavr, b1, b2, b3, b4, a comma-separated list, or all.
    #[arg(long, default_value = "all")]
    pub model: String,
    /// Monte-Carlo replications of the single period; 0 skips them.
    #[arg(long, default_value_t = 0)]
    pub replications: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// synthetic, case-study-1..3, or a scenario JSON file.
    #[arg(long, default_value = "synthetic")]
    pub scenario: String,
    /// Regions of the synthetic network.
    #[arg(long, default_value_t = 10)]
    pub regions: usize,
    /// Drivers of the synthetic network.
    #[arg(long, default_value_t = 100)]
    pub drivers: usize,
    /// Demand volume: optimistic, neutral or pessimistic.
    #[arg(long, default_value = "neutral")]
    pub variant: ScenarioVariant,
    #[arg(long, default_value = "all")]
    pub model: String,
    #[arg(long, default_value_t = 50)]
    pub periods: usize,
    /// Number of replications; seeds run upward from --seed.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Write the first-period program of each model as an LP file here.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
    /// Write a per-run event log under <out>/events.
    #[arg(long)]
    pub events: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Trip records (pickup_region, dropoff_region, minutes, km, hour, weekday).
    #[arg(long)]
    pub trips: Option<PathBuf>,
    /// Decision corpus (driver_id, period, chosen_region, region, f_0..).
    #[arg(long)]
    pub decisions: Option<PathBuf>,
    /// Fit a synthetic corpus drawn from planted weights and report recovery.
    #[arg(long)]
    pub planted: bool,
    #[arg(long, default_value_t = 2.0)]
    pub default_km: f64,
    #[arg(long, default_value_t = 0.5)]
    pub speed_km_per_min: f64,
    #[arg(long, default_value = "fit")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlotdataArgs {
    /// Directory holding a simulate run's metrics.json.
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, default_value = "plotdata")]
    pub out: PathBuf,
    /// Scenario for the reachability series.
    #[arg(long, default_value = "synthetic")]
    pub scenario: String,
    #[arg(long, default_value_t = 60)]
    pub max_horizon: u32,
    /// Successes in the posterior trace.
    #[arg(long, default_value_t = 6)]
    pub successes: usize,
}

pub fn run(cli: &Cli) -> Result<()> {
    let line = std::env::args().collect::<Vec<_>>().join(" ");
    match &cli.command {
        Command::CaseStudy(a) => case_study(&cli.global, a, &line),
        Command::Simulate(a) => simulate_cmd(&cli.global, a, &line),
        Command::Fit(a) => fit(&cli.global, a, &line),
        Command::Plotdata(a) => plotdata(&cli.global, a, &line),
    }
}

fn parse_models(spec: &str) -> Result<Vec<RebalanceModel>> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(RebalanceModel::ALL.to_vec());
    }
    let mut models = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        models.push(name.parse::<RebalanceModel>()?);
    }
    if models.is_empty() {
        return Err(Error::InvalidInput("no model given".into()).into());
    }
    Ok(models)
}

fn load_scenario(g: &Global, spec: &str, regions: usize, drivers: usize) -> Result<ScenarioBundle> {
    let seed = g.seed.unwrap_or(aavr_core::ScenarioConfig::default().seed);
    let mut b = match spec {
        "synthetic" => synthetic_network(regions, drivers, seed)?,
        "case-study-1" => case_study_1(),
        "case-study-2" => case_study_2(),
        "case-study-3" => case_study_3(seed),
        path => ScenarioBundle::load(Path::new(path)).with_context(|| format!("loading scenario {path}"))?,
    };
    b.config = g.resolve(&b.config)?;
    Ok(b)
}

fn snapshot_plan(b: &ScenarioBundle, model: RebalanceModel) -> Result<RecommendationPlan> {
    let drivers = b.initial_idle_drivers()?;
    let s = FleetSnapshot::new(drivers, b.demand_at(0).mean, &b.graph, &b.config)?;
    Ok(solve_model(model, &s, &aavr_core::rebalance::milp_options(&b.config))?)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(io::create_file(path)?))
}

fn case_study(g: &Global, a: &CaseStudyArgs, line: &str) -> Result<()> {
    let models = parse_models(&a.model)?;
    let b = load_scenario(g, &format!("case-study-{}", a.id), 0, 0)?;
    let target = RegionId(1);
    let mut rows = Vec::new();
    for &m in &models {
        let plan = snapshot_plan(&b, m)?;
        let mc = if a.replications > 0 {
            Some(monte_carlo(&b, m, a.replications, b.config.seed, &SimOptions::default())?)
        } else {
            None
        };
        rows.push((m, plan, mc));
    }

    if let [(m, plan, mc)] = rows.as_slice() {
        println!("model: {m}");
        println!("recommended_to_B: {}", plan.recommended_to(target));
        if let Some(mc) = mc {
            println!("replications: {}", mc.replications);
            println!("mean_served: {:.2}", mc.mean_served);
            println!("mean_idle_at_B: {:.2}", mc.mean_idle_arrivals[1]);
        }
    } else {
        let with_mc = a.replications > 0;
        print!("{:<6} {:>16}", "model", "recommended_to_B");
        if with_mc {
            print!(" {:>12} {:>14}", "mean_served", "mean_idle_at_B");
        }
        println!();
        for (m, plan, mc) in &rows {
            print!("{:<6} {:>16}", m.to_string(), plan.recommended_to(target));
            if let Some(mc) = mc {
                print!(" {:>12.2} {:>14.2}", mc.mean_served, mc.mean_idle_arrivals[1]);
            }
            println!();
        }
    }

    if let Some(out) = &a.out {
        create_dir(out)?;
        let mut w = csv_writer(&out.join("counts.csv"))?;
        w.write_record(["model", "recommended_to_B", "replications", "mean_served", "mean_idle_at_B", "mean_accepted"])?;
        for (m, plan, mc) in &rows {
            let (r, s, i, acc) = match mc {
                Some(mc) => (
                    mc.replications.to_string(),
                    mc.mean_served.to_string(),
                    mc.mean_idle_arrivals[1].to_string(),
                    mc.mean_accepted.to_string(),
                ),
                None => ("0".into(), String::new(), String::new(), String::new()),
            };
            w.write_record([m.to_string(), plan.recommended_to(target).to_string(), r, s, i, acc])?;
            io::write_plan_csv(io::create_file(&out.join(format!("plan_{m}.csv")))?, plan)?;
            if let Some(flow) = &plan.flow {
                io::write_flow_csv(io::create_file(&out.join(format!("flow_{m}.csv")))?, flow)?;
            }
        }
        w.flush()?;
        let seeds = if a.replications > 0 { replication_seeds(b.config.seed, a.replications) } else { vec![b.config.seed] };
        RunManifest::new(line, g.config.as_deref(), seeds, models.iter().map(|m| m.to_string()).collect(), out)
            .write(out)?;
    }
    Ok(())
}

fn print_table(t: &ExperimentTable) {
    let mut rows: Vec<_> = t.averages.iter().collect();
    rows.sort_by(|a, b| b.served_per_run.total_cmp(&a.served_per_run).then(a.model.cmp(&b.model)));
    println!(
        "{:<4} {:<6} {:>6} {:>12} {:>14} {:>12} {:>14} {:>10}",
        "rank", "model", "seeds", "served/run", "wait_min", "earnings", "driver_profit", "accept"
    );
    for (i, a) in rows.iter().enumerate() {
        let wait = a.mean_waiting_min.map(|w| format!("{w:.3}")).unwrap_or_else(|| "-".into());
        let acc = a.acceptance_rate.map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<4} {:<6} {:>6} {:>12.1} {:>14} {:>12.2} {:>14.2} {:>10}",
            i + 1,
            a.model.to_string(),
            a.seeds,
            a.served_per_run,
            wait,
            a.earnings,
            a.driver_profit,
            acc
        );
    }
}

fn simulate_cmd(g: &Global, a: &SimulateArgs, line: &str) -> Result<()> {
    let models = parse_models(&a.model)?;
    let b = a.variant.apply(load_scenario(g, &a.scenario, a.regions, a.drivers)?);
    let seeds = replication_seeds(b.config.seed, a.seeds);
    create_dir(&a.out)?;

    if let Some(dir) = &a.export_lp {
        create_dir(dir)?;
        let drivers = b.initial_idle_drivers()?;
        let s = FleetSnapshot::new(drivers, b.demand_at(0).mean, &b.graph, &b.config)?;
        for &m in &models {
            match build_model(m, &s) {
                Ok(lp) => {
                    let path = dir.join(format!("{m}.lp"));
                    std::fs::write(&path, write_lp(&lp)).with_context(|| format!("writing {}", path.display()))?;
                }
                Err(e) => log::warn!("{m}: no program to export ({e})"),
            }
        }
    }

    let opts = SimOptions::default();
    let table = run_experiment(&b, &models, a.periods, &seeds, &opts)?;
    io::write_period_metrics_csv(io::create_file(&a.out.join("periods.csv"))?, &table)?;
    io::write_runs_csv(io::create_file(&a.out.join("runs.csv"))?, &table)?;
    io::write_averages_csv(io::create_file(&a.out.join("averages.csv"))?, &table)?;
    io::write_json(&a.out.join("metrics.json"), &table)?;

    if a.events {
        let dir = a.out.join("events");
        create_dir(&dir)?;
        let opts = SimOptions { record_events: true, ..opts };
        for &m in &models {
            for &s in &seeds {
                let mut events = Vec::new();
                simulate(&b, m, a.periods, s, &opts, Some(&mut events))?;
                io::write_events_csv(io::create_file(&dir.join(format!("{m}-{s}.csv")))?, &events)?;
            }
        }
    }

    print_table(&table);
    RunManifest::new(line, g.config.as_deref(), seeds, models.iter().map(|m| m.to_string()).collect(), &a.out)
        .write(&a.out)?;
    Ok(())
}

fn fit(g: &Global, a: &FitArgs, line: &str) -> Result<()> {
    if a.trips.is_none() && a.decisions.is_none() && !a.planted {
        return Err(Error::InvalidInput("fit needs --trips, --decisions or --planted".into()).into());
    }
    create_dir(&a.out)?;
    let seed = g.resolve(&aavr_core::ScenarioConfig::default())?.seed;

    if let Some(path) = &a.trips {
        let opts = IngestOptions { default_km: a.default_km, speed_km_per_min: a.speed_km_per_min };
        let ingest = ingest_trip_records(path, &opts)?;
        let n = ingest.graph.n_regions();
        let mut w = csv_writer(&a.out.join("travel.csv"))?;
        w.write_record(["from", "to", "km", "minutes", "stddev_min", "od_share"])?;
        for i in ingest.graph.regions() {
            for j in ingest.graph.regions() {
                w.write_record([
                    i.0.to_string(),
                    j.0.to_string(),
                    ingest.graph.distance(i, j).to_string(),
                    ingest.graph.travel_time(i, j).to_string(),
                    ingest.graph.travel_time_stddev(i, j).to_string(),
                    ingest.od[i.0][j.0].to_string(),
                ])?;
            }
        }
        w.flush()?;
        io::write_demand_history_csv(io::create_file(&a.out.join("demand_history.csv"))?, &ingest.history)?;
        println!("regions: {n}");
        println!("fallback_pairs: {}", ingest.fallback_pairs);
        println!("skipped_rows: {}", ingest.skipped_rows);
    }

    if let Some(path) = &a.decisions {
        let corpus = io::read_choice_corpus_file(path)?;
        if corpus.is_empty() {
            return Err(Error::Schema { path: path.display().to_string(), message: "no decisions".into() }.into());
        }
        write_weights(&a.out.join("weights.csv"), &corpus)?;
        println!("drivers_fitted: {}", corpus.len());
    }

    if a.planted {
        let planted = PreferenceModel::new(vec![2.0, -1.0, 0.5, 0.0])?;
        let corpus = planted_choice_corpus(&planted, 5, 500, seed)?;
        let (train, held) = corpus.split_at(400);
        let fit = fit_preference(train)?;
        let agree = top1_agreement(&fit.model, &planted, held);
        let acc = top1_accuracy(&fit.model, held);
        println!("planted_weights: {:?}", planted.weights);
        println!("fitted_weights: {:?}", fit.model.weights.iter().map(|w| (w * 1e4).round() / 1e4).collect::<Vec<_>>());
        println!("top1_agreement: {agree:.3}");
        println!("top1_accuracy: {acc:.3}");
        let mut w = csv_writer(&a.out.join("recovery.csv"))?;
        w.write_record(["train", "held_out", "top1_agreement", "top1_accuracy"])?;
        w.write_record([train.len().to_string(), held.len().to_string(), agree.to_string(), acc.to_string()])?;
        w.flush()?;
    }

    RunManifest::new(line, g.config.as_deref(), vec![seed], Vec::new(), &a.out).write(&a.out)?;
    Ok(())
}

fn write_weights(path: &Path, corpus: &BTreeMap<aavr_core::DriverId, Vec<aavr_core::behavior::ChoiceRecord>>) -> Result<()> {
    let mut fits = Vec::new();
    for (id, records) in corpus {
        let fit = fit_preference(records).with_context(|| format!("fitting driver {id}"))?;
        let acc = top1_accuracy(&fit.model, records);
        fits.push((*id, records.len(), fit, acc));
    }
    let k = fits.iter().map(|f| f.2.model.weights.len()).max().unwrap_or(0);
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> =
        ["driver_id", "decisions", "degenerate", "log_likelihood", "top1_accuracy"].iter().map(|s| s.to_string()).collect();
    header.extend((0..k).map(|i| format!("w_{i}")));
    w.write_record(&header)?;
    for (id, n, fit, acc) in fits {
        let mut row = vec![id.0.to_string(), n.to_string(), fit.degenerate.to_string(), fit.log_likelihood.to_string(), acc.to_string()];
        row.extend(fit.model.weights.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn plotdata(g: &Global, a: &PlotdataArgs, line: &str) -> Result<()> {
    let metrics_path = a.metrics.join("metrics.json");
    if !metrics_path.is_file() {
        bail!(Error::Schema { path: metrics_path.display().to_string(), message: "metrics file not found".into() });
    }
    let table: ExperimentTable = serde_json::from_reader(File::open(&metrics_path)?)
        .map_err(|e| Error::Schema { path: metrics_path.display().to_string(), message: e.to_string() })?;
    create_dir(&a.out)?;

    let mut w = csv_writer(&a.out.join("comparison_bars.csv"))?;
    w.write_record(["metric", "model", "scenario", "value"])?;
    for avg in &table.averages {
        let metrics = [
            ("served_per_run", Some(avg.served_per_run)),
            ("served_per_period", Some(avg.served_per_period)),
            ("mean_waiting_min", avg.mean_waiting_min),
            ("earnings", Some(avg.earnings)),
            ("driver_profit", Some(avg.driver_profit)),
            ("acceptance_rate", avg.acceptance_rate),
        ];
        for (name, v) in metrics {
            if let Some(v) = v {
                w.write_record([name.to_string(), avg.model.to_string(), avg.scenario.clone(), (v + 0.0).to_string()])?;
            }
        }
    }
    w.flush()?;

    let b = load_scenario(g, &a.scenario, 10, 100)?;
    let mut w = csv_writer(&a.out.join("reachability.csv"))?;
    w.write_record(["horizon_min", "reachable_fraction"])?;
    for h in 1..=a.max_horizon {
        let f = reachability_fraction(&b.graph, PlanningHorizon::new(h as f64)?);
        w.write_record([h.to_string(), f.to_string()])?;
    }
    w.flush()?;

    let cfg = &b.config;
    let mut w = csv_writer(&a.out.join("posterior_trace.csv"))?;
    w.write_record(["step", "alpha", "beta", "mean"])?;
    let mut belief = BetaBelief::default();
    for step in 0..=a.successes {
        if step > 0 {
            belief = update_belief(belief, true, cfg.epsilon0, cfg.epsilon1);
        }
        w.write_record([step.to_string(), belief.alpha.to_string(), belief.beta.to_string(), belief.mean().to_string()])?;
    }
    w.flush()?;

    let seeds: Vec<u64> = table.runs.iter().map(|r| r.seed).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let models = table.averages.iter().map(|m| m.model.to_string()).collect();
    RunManifest::new(line, g.config.as_deref(), seeds, models, &a.out).write(&a.out)?;
    Ok(())
}
