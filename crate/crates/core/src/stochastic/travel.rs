use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{RegionGraph, RegionId};
use crate::error::{Error, Result};

/// Expected travel time of a driver at `driver_region` to `dest`.
pub fn driver_travel_time(graph: &RegionGraph, driver_region: RegionId, dest: RegionId) -> f64 {
    graph.travel_time(driver_region, dest)
}

/// Realized travel time: expected time plus Gaussian noise, clamped at 0.
pub fn sample_travel_time<R: Rng + ?Sized>(graph: &RegionGraph, from: RegionId, to: RegionId, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    (graph.travel_time(from, to) + graph.travel_time_stddev(from, to) * z).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub from: usize,
    pub to: usize,
    pub km: f64,
    pub minutes: f64,
}

/// Center-to-center shortest distances and times, each by its own Dijkstra
/// run from every center.
pub fn shortest_path_tables(
    n_nodes: usize,
    edges: &[RoadEdge],
    centers: &[usize],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut g: DiGraph<(), (f64, f64)> = DiGraph::with_capacity(n_nodes, edges.len());
    for _ in 0..n_nodes {
        g.add_node(());
    }
    for (k, e) in edges.iter().enumerate() {
        if e.from >= n_nodes || e.to >= n_nodes {
            return Err(Error::RejectedScenario(format!("edge {k} references a node outside 0..{n_nodes}")));
        }
        if !(e.km >= 0.0 && e.minutes >= 0.0) {
            return Err(Error::RejectedScenario(format!("edge {k} has a negative or non-numeric weight")));
        }
        g.add_edge(NodeIndex::new(e.from), NodeIndex::new(e.to), (e.km, e.minutes));
    }
    if let Some(c) = centers.iter().find(|&&c| c >= n_nodes) {
        return Err(Error::RejectedScenario(format!("center node {c} is outside 0..{n_nodes}")));
    }
    let n = centers.len();
    let mut dist = vec![vec![0.0; n]; n];
    let mut time = vec![vec![0.0; n]; n];
    for (a, &ca) in centers.iter().enumerate() {
        let by_km = dijkstra(&g, NodeIndex::new(ca), None, |e| e.weight().0);
        let by_min = dijkstra(&g, NodeIndex::new(ca), None, |e| e.weight().1);
        for (b, &cb) in centers.iter().enumerate() {
            let node = NodeIndex::new(cb);
            match (by_km.get(&node), by_min.get(&node)) {
                (Some(&d), Some(&t)) => {
                    dist[a][b] = d;
                    time[a][b] = t;
                }
                _ => {
                    return Err(Error::RejectedScenario(format!(
                        "region {b} (node {cb}) is unreachable from region {a} (node {ca})"
                    )))
                }
            }
        }
    }
    Ok((dist, time))
}
