//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use aavr_core::behavior::{
    acceptance_probability, acceptance_probability_exact, fit_preference, top1_accuracy, top1_agreement,
    update_belief, BetaBelief, PreferenceModel,
};
use aavr_core::rebalance::{
    solve_aavr, solve_aavr_with, solve_model, FleetSnapshot, RebalanceModel,
    RecommendationPlan,
};
use aavr_core::scenarios::{case_study_1, case_study_2, case_study_3, planted_choice_corpus, synthetic_network, ScenarioBundle};
use aavr_core::sim::{monte_carlo, replication_seeds, run_experiment, SimOptions};
use aavr_core::solver::{solve_milp, MilpOptions, SolveStatus};
use aavr_core::stochastic::{pb_expectation, pb_pmf, pb_variance, PoissonBinomial};
use aavr_core::{reachability_fraction, seeded_rng, PlanningHorizon, RegionGraph, RegionId, ScenarioConfig};
use rand::Rng;

const B: RegionId = RegionId(1);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn exact() -> MilpOptions {
    MilpOptions::default()
}

fn solve_case(bundle: &ScenarioBundle, model: RebalanceModel) -> RecommendationPlan {
    let drivers = bundle.initial_idle_drivers().unwrap();
    let nu = bundle.demand_at(0).mean;
    let s = FleetSnapshot::new(drivers, nu, &bundle.graph, &bundle.config).unwrap();
    match model {
        RebalanceModel::Aavr => solve_aavr(&s).unwrap(),
        m => solve_model(m, &s, &exact()).unwrap(),
    }
}

fn within(limit: Duration, t: Duration) -> (bool, String) {
    (t <= limit, format!("{:.2}s (limit {}s)", t.as_secs_f64(), limit.as_secs()))
}

fn c1_counts() -> Outcome {
    let start = Instant::now();
    let b = case_study_1();
    let aavr = solve_case(&b, RebalanceModel::Aavr).recommended_to(B);
    let b1 = solve_case(&b, RebalanceModel::B1).recommended_to(B);
    let mut zero = b.clone();
    zero.graph = RegionGraph::deterministic(zero.graph.distance_rows(), vec![vec![0.0; 2]; 2]).unwrap();
    zero.config.rho = 1.0;
    let b1_zero = solve_case(&zero, RebalanceModel::B1).recommended_to(B);
    let b2 = solve_case(&b, RebalanceModel::B2).recommended_to(B);
    let b3 = solve_case(&b, RebalanceModel::B3).recommended_to(B);
    let b4 = solve_case(&b, RebalanceModel::B4).recommended_to(B);
    let got = [aavr, b1, b1_zero, b2, b3, b4];
    let (fast, t) = within(Duration::from_secs(10), start.elapsed());
    check(
        got == [200, 500, 100, 1000, 1000, 100] && fast,
        format!("AAVR {aavr}, B1 {b1} (T=4) / {b1_zero} (T=0), B2 {b2}, B3 {b3}, B4 {b4}; {t}"),
    )
}

fn c2_monte_carlo() -> Outcome {
    let start = Instant::now();
    let b = case_study_1();
    let opts = SimOptions::default();
    let aavr = monte_carlo(&b, RebalanceModel::Aavr, 200, b.config.seed, &opts).unwrap();
    let b4 = monte_carlo(&b, RebalanceModel::B4, 200, b.config.seed, &opts).unwrap();
    let idle_b = aavr.mean_idle_arrivals[1];
    let (fast, t) = within(Duration::from_secs(30), start.elapsed());
    let pass = (97.0..=103.0).contains(&aavr.mean_served)
        && (0.0..=3.0).contains(&idle_b)
        && (47.0..=53.0).contains(&b4.mean_served)
        && fast;
    check(
        pass,
        format!(
            "AAVR served {:.2} (97..103), idle at B {idle_b:.2} (0..3); B4 served {:.2} (47..53); {t}",
            aavr.mean_served, b4.mean_served
        ),
    )
}

fn c3_second_case() -> Outcome {
    let one = case_study_1();
    let two = case_study_2();
    let aavr = solve_case(&two, RebalanceModel::Aavr).recommended_to(B);
    let mut same = Vec::new();
    for m in [RebalanceModel::B1, RebalanceModel::B2, RebalanceModel::B3, RebalanceModel::B4] {
        same.push(solve_case(&one, m).assignments == solve_case(&two, m).assignments);
    }
    check(aavr == 0 && same.iter().all(|&s| s), format!("AAVR moves {aavr}; baselines unchanged {same:?}"))
}

fn c4_third_case() -> Outcome {
    let b = case_study_3(b_seed());
    let plan = solve_case(&b, RebalanceModel::Aavr);
    let mus: Vec<f64> = b.drivers.iter().map(|d| d.pinned_mu.unwrap()).collect();
    let chosen: Vec<usize> = plan.assignments.iter().filter(|a| a.is_move()).map(|a| a.driver_id.0).collect();
    let prefix = common::greedy_mu_prefix(&mus, 100.0);
    let mean_sel = chosen.iter().map(|&k| mus[k]).sum::<f64>() / chosen.len().max(1) as f64;
    let mean_all = mus.iter().sum::<f64>() / mus.len() as f64;
    check(
        chosen.len() < 200 && chosen == prefix && mean_sel > mean_all,
        format!(
            "{} selected, greedy prefix {} (equal: {}); mean mu {mean_sel:.3} vs population {mean_all:.3}",
            chosen.len(),
            prefix.len(),
            chosen == prefix
        ),
    )
}

fn b_seed() -> u64 {
    ScenarioConfig::default().seed
}

fn c5_linearization() -> Outcome {
    let mut rng = seeded_rng(b_seed(), "acceptance/linearization");
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (g, drivers, demand) = common::random_instance(&mut rng);
        let cfg = ScenarioConfig { beta: 0.01, ..ScenarioConfig::default() };
        let s = FleetSnapshot::new(drivers, demand, &g, &cfg).unwrap();
        let plan = solve_aavr_with(&s, &exact()).unwrap();
        worst = worst.max((plan.objective_value - common::brute_force(&s)).abs());
    }
    check(worst <= 1e-6, format!("50 instances, max objective gap {worst:.1e}"))
}

fn c6_poisson_binomial() -> Outcome {
    let mut rng = seeded_rng(b_seed(), "acceptance/pb");
    let (mut pmf_err, mut id_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let m = rng.random_range(0..=12);
        let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let pb = PoissonBinomial::new(p.clone()).unwrap();
        let dp = pb_pmf(&pb);
        for (a, b) in dp.iter().zip(common::pb_subset_oracle(&p)) {
            pmf_err = pmf_err.max((a - b).abs());
        }
        let mean: f64 = dp.iter().enumerate().map(|(k, q)| k as f64 * q).sum();
        let var: f64 = dp.iter().enumerate().map(|(k, q)| (k as f64 - mean).powi(2) * q).sum();
        id_err = id_err.max((mean - pb_expectation(&pb)).abs()).max((var - pb_variance(&pb)).abs());
        // equal probabilities reduce to the binomial
        let q = rng.random::<f64>();
        let bin = pb_pmf(&PoissonBinomial::new(vec![q; m]).unwrap());
        for (k, v) in bin.iter().enumerate() {
            let want = binomial(m, k) * q.powi(k as i32) * (1.0 - q).powi((m - k) as i32);
            id_err = id_err.max((v - want).abs());
        }
    }
    check(pmf_err <= 1e-12 && id_err <= 1e-9, format!("max PMF error {pmf_err:.1e}, max identity error {id_err:.1e}"))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn c7_thompson() -> Outcome {
    let sys = BetaBelief::new(2.0, 1.0).unwrap();
    let own = BetaBelief::new(1.0, 2.0).unwrap();
    let det = acceptance_probability_exact(sys, own);
    let mut worst: f64 = 0.0;
    for s in 0..50 {
        let mut rng = seeded_rng(s, "acceptance/thompson");
        worst = worst.max((acceptance_probability(sys, own, 10_000, &mut rng) - 5.0 / 6.0).abs());
    }
    check(
        (det - 5.0 / 6.0).abs() <= 1e-4 && worst <= 0.02,
        format!("quadrature {det:.6}; sampling max deviation {worst:.4} over 50 seeds"),
    )
}

fn c8_posterior() -> Outcome {
    let b = (0..6).fold(BetaBelief::default(), |b, _| update_belief(b, true, 1.0, 1.0));
    let mut monotone = true;
    let mut rng = seeded_rng(b_seed(), "acceptance/posterior");
    for _ in 0..100 {
        let mut cur = BetaBelief::new(rng.random_range(0.5..5.0), rng.random_range(0.5..5.0)).unwrap();
        let eps1 = rng.random_range(0.1..3.0);
        for _ in 0..20 {
            let next = update_belief(cur, true, 1.0, eps1);
            monotone &= next.mean() > cur.mean();
            cur = next;
        }
    }
    check(
        b == BetaBelief::new(7.0, 1.0).unwrap() && (b.mean() - 0.875).abs() < 1e-12 && monotone,
        format!("Beta({}, {}) mean {:.3}; success-only means increasing: {monotone}", b.alpha, b.beta, b.mean()),
    )
}

fn c9_milp() -> Outcome {
    let mut rng = seeded_rng(b_seed(), "acceptance/milp");
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        let lp = common::random_binary_program(&mut rng, n);
        let sol = solve_milp(&lp).unwrap();
        let ok = match common::binary_oracle(&lp) {
            None => sol.status == SolveStatus::Infeasible,
            Some(best) => sol.status == SolveStatus::Optimal && (sol.objective_value - best).abs() <= 1e-9,
        };
        mismatches += usize::from(!ok);
    }
    check(mismatches == 0, format!("{mismatches} of 100 programs differ from enumeration"))
}

fn c10_network() -> Outcome {
    let start = Instant::now();
    let b = synthetic_network(10, 100, b_seed()).unwrap();
    let seeds = replication_seeds(b_seed(), 20);
    let table = run_experiment(&b, &RebalanceModel::ALL, 50, &seeds, &SimOptions::default()).unwrap();
    let avg = |m: RebalanceModel| table.averages.iter().find(|a| a.model == m).unwrap();
    let aavr = avg(RebalanceModel::Aavr);
    let mut served_ok = true;
    let mut wait_ok = true;
    let mut parts = vec![format!("AAVR served {:.1} wait {:.3}", aavr.served_per_run, aavr.mean_waiting_min.unwrap_or(f64::NAN))];
    for m in &RebalanceModel::ALL[1..] {
        let a = avg(*m);
        served_ok &= aavr.served_per_run >= a.served_per_run;
        let (w_aavr, w) = (aavr.mean_waiting_min.unwrap_or(f64::INFINITY), a.mean_waiting_min.unwrap_or(f64::INFINITY));
        wait_ok &= w_aavr <= 1.05 * w;
        parts.push(format!("{m} {:.1}/{:.3}", a.served_per_run, w));
    }
    let (fast, t) = within(Duration::from_secs(300), start.elapsed());
    check(
        served_ok && wait_ok && fast,
        format!("{}; served ok {served_ok}, waiting ok {wait_ok}; {t}", parts.join(", ")),
    )
}

fn c11_reachability() -> Outcome {
    let g = synthetic_network(10, 100, b_seed()).unwrap().graph;
    let curve: Vec<f64> = (1..=60).map(|h| reachability_fraction(&g, PlanningHorizon::new(h as f64).unwrap())).collect();
    let monotone = curve.windows(2).all(|w| w[1] >= w[0]);
    let at_max = reachability_fraction(&g, PlanningHorizon::new(g.max_travel_time()).unwrap());
    check(monotone && at_max == 1.0, format!("monotone {monotone}; 1.0 at H = {:.2} min: {}", g.max_travel_time(), at_max == 1.0))
}

fn c12_preference() -> Outcome {
    let planted = PreferenceModel::new(vec![2.0, -1.0, 0.5, 0.0]).unwrap();
    let corpus = planted_choice_corpus(&planted, 5, 500, b_seed()).unwrap();
    let (train, held) = corpus.split_at(400);
    let fit = fit_preference(train).unwrap();
    let agree = top1_agreement(&fit.model, &planted, held);
    let acc = top1_accuracy(&fit.model, held);
    let ceiling = top1_accuracy(&planted, held);
    check(
        agree >= 0.70,
        format!("held-out top-1 agreement with planted {agree:.2}; chosen-region accuracy {acc:.2} (planted model {ceiling:.2})"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("case study 1 recommendation counts", c1_counts),
        ("case study 1 Monte-Carlo", c2_monte_carlo),
        ("case study 2", c3_second_case),
        ("case study 3 greedy prefix", c4_third_case),
        ("linearization exactness", c5_linearization),
        ("Poisson binomial", c6_poisson_binomial),
        ("Thompson acceptance", c7_thompson),
        ("posterior dynamics", c8_posterior),
        ("MILP vs enumeration", c9_milp),
        ("network directionality", c10_network),
        ("reachability curve", c11_reachability),
        ("preference recovery", c12_preference),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {}: {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
