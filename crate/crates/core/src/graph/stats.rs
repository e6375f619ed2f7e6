//! Global statistics of an association graph.
//!
//! Unweighted measures (density, clustering, connectivity, diameter) use the
//! binarized weight matrix. Connectivity is node degree.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AssociationGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub density: f64,
    /// Mean local clustering over all nodes; degree < 2 counts as 0.
    pub avg_local_clustering: f64,
    /// Longest shortest path (in hops) inside the largest component.
    pub diameter: usize,
    pub largest_component_size: usize,
    pub max_connectivity: usize,
    pub min_connectivity: usize,
    pub avg_connectivity: f64,
    /// Population standard deviation of node degree.
    pub sd_connectivity: f64,
    /// Weighted average edge: total edge weight / edge count.
    pub weighted_avg_edge: f64,
    /// Mean over nodes of weighted degree / (n - 1).
    pub weighted_degree_centrality: f64,
}

pub fn compute_stats(graph: &AssociationGraph) -> GraphStats {
    let n = graph.node_count();
    let m = graph.edge_count();
    let degrees: Vec<usize> = (0..n).map(|i| graph.degree(i)).collect();

    let density = if n < 2 { 0.0 } else { m as f64 / (n as f64 * (n as f64 - 1.0) / 2.0) };

    let clustering = local_clustering(graph);
    let avg_local_clustering = mean(&clustering);

    let deg_f: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    let avg_connectivity = mean(&deg_f);
    let sd_connectivity = if n == 0 {
        0.0
    } else {
        (deg_f.iter().map(|d| (d - avg_connectivity).powi(2)).sum::<f64>() / n as f64).sqrt()
    };

    let total_weight: f64 = graph.weights().triplets().filter(|&(i, j, _)| i < j).map(|(_, _, w)| w).sum();
    let weighted_avg_edge = if m == 0 { 0.0 } else { total_weight / m as f64 };
    let weighted_degree_centrality = if n < 2 {
        0.0
    } else {
        // sum of weighted degrees is twice the total edge weight
        2.0 * total_weight / (n as f64 * (n as f64 - 1.0))
    };

    let components = connected_components(graph);
    let largest = components.first().cloned().unwrap_or_default();
    let diameter = component_diameter(graph, &largest);

    GraphStats {
        node_count: n,
        edge_count: m,
        density,
        avg_local_clustering,
        diameter,
        largest_component_size: largest.len(),
        max_connectivity: degrees.iter().copied().max().unwrap_or(0),
        min_connectivity: degrees.iter().copied().min().unwrap_or(0),
        avg_connectivity,
        sd_connectivity,
        weighted_avg_edge,
        weighted_degree_centrality,
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Local clustering coefficient of every node: closed triangles through the
/// node over the number of neighbor pairs.
pub fn local_clustering(graph: &AssociationGraph) -> Vec<f64> {
    (0..graph.node_count())
        .into_par_iter()
        .map(|i| {
            let nbrs = graph.neighbors(i);
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            // each triangle through i is seen from both of its other corners
            let links: usize = nbrs.iter().map(|&j| sorted_intersection(nbrs, graph.neighbors(j))).sum();
            let triangles = links as f64 / 2.0;
            2.0 * triangles / (k as f64 * (k as f64 - 1.0))
        })
        .collect()
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Connected components, largest first (ties: smallest member index first).
/// Members of each component are sorted.
pub fn connected_components(graph: &AssociationGraph) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

fn bfs(graph: &AssociationGraph, source: usize, dist: &mut [usize]) -> usize {
    dist.fill(usize::MAX);
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    let mut ecc = 0;
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        ecc = ecc.max(du);
        for &v in graph.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    ecc
}

/// Exact diameter of one connected component using eccentricity bounds
/// (BoundingDiameters). Every node whose upper eccentricity bound cannot
/// beat the current lower diameter bound is pruned, so on small-world
/// graphs only a handful of BFS runs are needed.
fn component_diameter(graph: &AssociationGraph, component: &[usize]) -> usize {
    if component.len() < 2 {
        return 0;
    }
    let n = graph.node_count();
    let mut ecc_lo = vec![0usize; n];
    let mut ecc_hi = vec![usize::MAX; n];
    let mut candidates: Vec<usize> = component.to_vec();
    let mut dist = vec![usize::MAX; n];
    let (mut diam_lo, mut diam_hi) = (0usize, usize::MAX);
    let mut pick_high = true;

    while !candidates.is_empty() && diam_lo != diam_hi {
        let v = if pick_high {
            *candidates
                .iter()
                .max_by(|&&a, &&b| {
                    ecc_hi[a]
                        .cmp(&ecc_hi[b])
                        .then(graph.degree(a).cmp(&graph.degree(b)))
                        .then(b.cmp(&a))
                })
                .unwrap()
        } else {
            *candidates
                .iter()
                .min_by(|&&a, &&b| {
                    ecc_lo[a]
                        .cmp(&ecc_lo[b])
                        .then(graph.degree(b).cmp(&graph.degree(a)))
                        .then(a.cmp(&b))
                })
                .unwrap()
        };
        pick_high = !pick_high;

        let ecc_v = bfs(graph, v, &mut dist);
        diam_lo = diam_lo.max(ecc_v);
        diam_hi = diam_hi.min(2 * ecc_v);

        for &w in &candidates {
            let d = dist[w];
            ecc_lo[w] = ecc_lo[w].max(d.max(ecc_v - d));
            ecc_hi[w] = ecc_hi[w].min(ecc_v + d);
        }
        ecc_lo[v] = ecc_v;
        ecc_hi[v] = ecc_v;
        candidates.retain(|&w| !(ecc_hi[w] <= diam_lo || ecc_lo[w] == ecc_hi[w]));
    }
    diam_lo
}
