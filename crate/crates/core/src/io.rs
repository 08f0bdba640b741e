//! CSV and JSON readers and writers for plans, flows, metrics, driver
//! populations, demand histories, choice corpora and event logs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::behavior::{BetaBelief, ChoiceRecord, DriverAgent, PreferenceModel, RegionFeatures};
use crate::domain::{DriverId, RegionId};
use crate::error::{Error, Result};
use crate::rebalance::{AggregateFlow, RecommendationPlan};
use crate::sim::{ExperimentTable, SimEvent};
use crate::stochastic::{DemandHistory, DemandObservation};

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema { path: path.to_string(), message: message.into() }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(File::create(path)?)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| schema(&path.display().to_string(), format!("cannot open: {e}")))
}

/// Writes any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_plan_csv<W: Write>(w: W, plan: &RecommendationPlan) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["driver_id", "from_region", "to_region", "expected_travel_min"])?;
    for a in &plan.assignments {
        out.write_record([
            a.driver_id.0.to_string(),
            a.from_region.0.to_string(),
            a.to_region.0.to_string(),
            a.expected_travel_min.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Nonzero off-diagonal entries only.
pub fn write_flow_csv<W: Write>(w: W, flow: &AggregateFlow) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["from", "to", "count"])?;
    for (i, row) in flow.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if i != j && c > 0 {
                out.write_record([i.to_string(), j.to_string(), c.to_string()])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (model, seed, period).
pub fn write_period_metrics_csv<W: Write>(w: W, table: &ExperimentTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "scenario",
        "model",
        "seed",
        "period",
        "arrived",
        "served",
        "served_first_batch",
        "mean_waiting_min",
        "fares",
        "earnings",
        "driver_profit",
        "recommended",
        "accepted",
        "allocated_after_rebalance",
        "rebalance_km",
        "trip_km",
        "solver_nodes",
    ])?;
    for (run, detail) in table.runs.iter().zip(&table.details) {
        for p in &detail.periods {
            out.write_record([
                run.scenario.clone(),
                run.model.to_string(),
                run.seed.to_string(),
                p.period.to_string(),
                p.arrived.to_string(),
                p.served.to_string(),
                p.served_first_batch.to_string(),
                opt(p.mean_waiting_min),
                p.fares.to_string(),
                p.earnings.to_string(),
                p.driver_profit.to_string(),
                p.recommended.to_string(),
                p.accepted.to_string(),
                p.allocated_after_rebalance.to_string(),
                p.rebalance_km.to_string(),
                p.trip_km.to_string(),
                p.solver_nodes.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row per (model, seed).
pub fn write_runs_csv<W: Write>(w: W, table: &ExperimentTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "scenario",
        "model",
        "seed",
        "periods",
        "arrived",
        "served",
        "served_per_period",
        "mean_waiting_min",
        "earnings",
        "driver_profit",
        "recommended",
        "accepted",
    ])?;
    for r in &table.runs {
        out.write_record([
            r.scenario.clone(),
            r.model.to_string(),
            r.seed.to_string(),
            r.periods.to_string(),
            r.arrived.to_string(),
            r.served.to_string(),
            r.served_per_period.to_string(),
            opt(r.mean_waiting_min),
            r.earnings.to_string(),
            r.driver_profit.to_string(),
            r.recommended.to_string(),
            r.accepted.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per model, averaged over seeds.
pub fn write_averages_csv<W: Write>(w: W, table: &ExperimentTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "scenario",
        "model",
        "seeds",
        "served_per_period",
        "served_per_run",
        "mean_waiting_min",
        "earnings",
        "driver_profit",
        "acceptance_rate",
    ])?;
    for a in &table.averages {
        out.write_record([
            a.scenario.clone(),
            a.model.to_string(),
            a.seeds.to_string(),
            a.served_per_period.to_string(),
            a.served_per_run.to_string(),
            opt(a.mean_waiting_min),
            a.earnings.to_string(),
            a.driver_profit.to_string(),
            opt(a.acceptance_rate),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_events_csv<W: Write>(w: W, events: &[SimEvent]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["period", "driver_id", "action", "from_region", "to_region", "allocated"])?;
    for e in events {
        let action = serde_json::to_value(e.action)?;
        out.write_record([
            e.period.to_string(),
            e.driver_id.0.to_string(),
            action.as_str().unwrap_or_default().to_string(),
            e.from_region.0.to_string(),
            e.to_region.0.to_string(),
            u8::from(e.allocated).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Calls `f` with the named columns of every row.
fn read_rows<R: Read>(
    r: R,
    path: &str,
    required: &[&str],
    mut f: impl FnMut(&csv::StringRecord, &[usize], &csv::StringRecord, usize) -> Result<()>,
) -> Result<csv::StringRecord> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(|e| schema(path, e.to_string()))?.clone();
    let mut idx = Vec::with_capacity(required.len());
    for name in required {
        match headers.iter().position(|h| h == *name) {
            Some(i) => idx.push(i),
            None => return Err(schema(path, format!("missing column '{name}'"))),
        }
    }
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| schema(path, e.to_string()))?;
        f(&rec, &idx, &headers, line + 2)?;
    }
    Ok(headers)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &str, line: usize, name: &str) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| schema(path, format!("line {line}: column '{name}' has invalid value '{raw}'")))
}

/// Columns `prefix0`, `prefix1`, ... in order, as positions in `headers`.
fn numbered_columns(headers: &csv::StringRecord, prefix: &str) -> Vec<usize> {
    let mut cols = Vec::new();
    while let Some(i) = headers.iter().position(|h| h == format!("{prefix}{}", cols.len())) {
        cols.push(i);
    }
    cols
}

pub fn write_drivers_csv<W: Write>(w: W, drivers: &[DriverAgent]) -> Result<()> {
    let k = drivers.iter().map(|d| d.preference.weights.len()).max().unwrap_or(0);
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> =
        ["driver_id", "region", "alpha_r", "beta_r", "alpha_p", "beta_p"].iter().map(|s| s.to_string()).collect();
    header.extend((0..k).map(|i| format!("w_{i}")));
    out.write_record(&header)?;
    for d in drivers {
        if d.preference.weights.len() != k {
            return Err(Error::invalid(format!("driver {} has {} weights, expected {k}", d.id, d.preference.weights.len())));
        }
        let mut row = vec![
            d.id.0.to_string(),
            d.region.0.to_string(),
            d.belief_system.alpha.to_string(),
            d.belief_system.beta.to_string(),
            d.belief_self.alpha.to_string(),
            d.belief_self.beta.to_string(),
        ];
        row.extend(d.preference.weights.iter().map(|w| w.to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Idle drivers with the given beliefs and weights; `w_k` is the intercept.
pub fn read_drivers_csv<R: Read>(r: R, path: &str) -> Result<Vec<DriverAgent>> {
    let cols = ["driver_id", "region", "alpha_r", "beta_r", "alpha_p", "beta_p"];
    let mut rows = Vec::new();
    let headers = read_rows(r, path, &cols, |rec, idx, _, line| {
        let mut v = Vec::with_capacity(idx.len());
        v.push(field::<usize>(rec, idx[0], path, line, cols[0])? as f64);
        v.push(field::<usize>(rec, idx[1], path, line, cols[1])? as f64);
        for (c, &i) in cols[2..].iter().zip(&idx[2..]) {
            v.push(field::<f64>(rec, i, path, line, c)?);
        }
        rows.push((line, rec.clone(), v));
        Ok(())
    })?;
    let wcols = numbered_columns(&headers, "w_");
    if wcols.is_empty() {
        return Err(schema(path, "missing weight columns w_0..w_k"));
    }
    let mut out = Vec::with_capacity(rows.len());
    for (line, rec, v) in rows {
        let weights = wcols.iter().enumerate().map(|(i, &c)| field::<f64>(&rec, c, path, line, &format!("w_{i}"))).collect::<Result<Vec<_>>>()?;
        let preference = PreferenceModel::new(weights).map_err(|e| schema(path, format!("line {line}: {e}")))?;
        let belief = |a: f64, b: f64| BetaBelief::new(a, b).map_err(|e| schema(path, format!("line {line}: {e}")));
        let mut d = DriverAgent::new(DriverId(v[0] as usize), RegionId(v[1] as usize), preference);
        d.belief_system = belief(v[2], v[3])?;
        d.belief_self = belief(v[4], v[5])?;
        out.push(d);
    }
    Ok(out)
}

pub fn write_demand_history_csv<W: Write>(w: W, history: &DemandHistory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["region_id", "period_index", "hour", "weekday", "day_of_month", "demand"])?;
    for (j, series) in history.series.iter().enumerate() {
        for (t, o) in series.iter().enumerate() {
            out.write_record([
                j.to_string(),
                t.to_string(),
                o.hour.to_string(),
                o.weekday.to_string(),
                o.day_of_month.to_string(),
                o.demand.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Rows may come in any order; each region's series is sorted by period index.
pub fn read_demand_history_csv<R: Read>(r: R, path: &str, n_regions: usize) -> Result<DemandHistory> {
    let cols = ["region_id", "period_index", "hour", "weekday", "day_of_month", "demand"];
    let mut rows: Vec<Vec<(usize, DemandObservation)>> = vec![Vec::new(); n_regions];
    read_rows(r, path, &cols, |rec, idx, _, line| {
        let j: usize = field(rec, idx[0], path, line, cols[0])?;
        if j >= n_regions {
            return Err(schema(path, format!("line {line}: region {j} outside 0..{n_regions}")));
        }
        let obs = DemandObservation {
            hour: field(rec, idx[2], path, line, cols[2])?,
            weekday: field(rec, idx[3], path, line, cols[3])?,
            day_of_month: field(rec, idx[4], path, line, cols[4])?,
            demand: field(rec, idx[5], path, line, cols[5])?,
        };
        if obs.hour > 23 || obs.weekday > 6 || !(obs.demand.is_finite() && obs.demand >= 0.0) {
            return Err(schema(path, format!("line {line}: hour, weekday or demand out of range")));
        }
        rows[j].push((field(rec, idx[1], path, line, cols[1])?, obs));
        Ok(())
    })?;
    let mut h = DemandHistory::new(n_regions);
    for (j, mut series) in rows.into_iter().enumerate() {
        series.sort_by_key(|(t, _)| *t);
        h.series[j] = series.into_iter().map(|(_, o)| o).collect();
    }
    Ok(h)
}

/// Long format: one row per candidate region of each decision.
pub fn write_choice_corpus_csv<W: Write>(w: W, corpus: &BTreeMap<DriverId, Vec<ChoiceRecord>>) -> Result<()> {
    let k = corpus.values().flatten().flat_map(|r| r.features.first()).map(|f| f.0.len()).next().unwrap_or(0);
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> =
        ["driver_id", "period", "chosen_region", "region"].iter().map(|s| s.to_string()).collect();
    header.extend((0..k).map(|i| format!("f_{i}")));
    out.write_record(&header)?;
    for (id, records) in corpus {
        for (t, rec) in records.iter().enumerate() {
            for (j, f) in rec.features.iter().enumerate() {
                let mut row = vec![id.0.to_string(), t.to_string(), rec.chosen.0.to_string(), j.to_string()];
                row.extend(f.0.iter().map(|x| x.to_string()));
                out.write_record(&row)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Groups rows by driver and period; candidate regions are ordered by index
/// and must be contiguous from 0.
pub fn read_choice_corpus_csv<R: Read>(r: R, path: &str) -> Result<BTreeMap<DriverId, Vec<ChoiceRecord>>> {
    let cols = ["driver_id", "period", "chosen_region", "region"];
    let mut raw: Vec<(usize, csv::StringRecord, [usize; 4])> = Vec::new();
    let headers = read_rows(r, path, &cols, |rec, idx, _, line| {
        let mut v = [0usize; 4];
        for (slot, (c, &i)) in v.iter_mut().zip(cols.iter().zip(idx)) {
            *slot = field(rec, i, path, line, c)?;
        }
        raw.push((line, rec.clone(), v));
        Ok(())
    })?;
    let fcols = numbered_columns(&headers, "f_");
    if fcols.is_empty() {
        return Err(schema(path, "missing feature columns f_0..f_k"));
    }
    let mut grouped: BTreeMap<(usize, usize), (usize, Vec<(usize, RegionFeatures)>)> = BTreeMap::new();
    for (line, rec, [id, period, chosen, region]) in raw {
        let f = fcols.iter().enumerate().map(|(i, &c)| field::<f64>(&rec, c, path, line, &format!("f_{i}"))).collect::<Result<Vec<_>>>()?;
        let entry = grouped.entry((id, period)).or_insert((chosen, Vec::new()));
        if entry.0 != chosen {
            return Err(schema(path, format!("line {line}: driver {id} period {period} names two chosen regions")));
        }
        entry.1.push((region, RegionFeatures(f)));
    }
    let mut out: BTreeMap<DriverId, Vec<ChoiceRecord>> = BTreeMap::new();
    for ((id, period), (chosen, mut cands)) in grouped {
        cands.sort_by_key(|(j, _)| *j);
        if cands.iter().enumerate().any(|(k, (j, _))| k != *j) || chosen >= cands.len() {
            return Err(schema(path, format!("driver {id} period {period}: regions must run 0..n and include the chosen one")));
        }
        out.entry(DriverId(id))
            .or_default()
            .push(ChoiceRecord { chosen: RegionId(chosen), features: cands.into_iter().map(|(_, f)| f).collect() });
    }
    Ok(out)
}

pub fn read_drivers_file(path: &Path) -> Result<Vec<DriverAgent>> {
    read_drivers_csv(open(path)?, &path.display().to_string())
}

pub fn read_demand_history_file(path: &Path, n_regions: usize) -> Result<DemandHistory> {
    read_demand_history_csv(open(path)?, &path.display().to_string(), n_regions)
}

pub fn read_choice_corpus_file(path: &Path) -> Result<BTreeMap<DriverId, Vec<ChoiceRecord>>> {
    read_choice_corpus_csv(open(path)?, &path.display().to_string())
}

/// Creates `path` (and its parent directories) for one of the writers above.
pub fn create_file(path: &Path) -> Result<File> {
    create(path)
}
