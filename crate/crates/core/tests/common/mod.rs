//! Oracles and fixture helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Random citation graph: nodes with years, and citing -> cited edges that
/// may include self-loops, duplicates and cycles.
pub struct RandomGraph {
    pub nodes: Vec<(String, i32)>,
    pub edges: Vec<(String, String)>,
}

pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> RandomGraph {
    let n = rng.random_range(1..=max_nodes);
    let nodes: Vec<(String, i32)> = (0..n).map(|i| (format!("n{i}"), rng.random_range(2000..=2012))).collect();
    let density: f64 = rng.random_range(0.02..0.3);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            // mostly newer citing older, with some anomalies
            let forward = nodes[a].1 >= nodes[b].1;
            let p = if forward { density } else { density * 0.1 };
            if rng.random::<f64>() < p {
                edges.push((nodes[a].0.clone(), nodes[b].0.clone()));
                if rng.random::<f64>() < 0.05 {
                    edges.push((nodes[a].0.clone(), nodes[b].0.clone()));
                }
            }
        }
        if rng.random::<f64>() < 0.02 {
            edges.push((nodes[a].0.clone(), nodes[a].0.clone()));
        }
    }
    RandomGraph { nodes, edges }
}

/// `(n_f, n_b, n_r)` by set algebra over the raw edge list, or `None` when
/// the focal paper has no references or no in-window citers.
pub fn disruption_oracle(g: &RandomGraph, focal: &str, window: i32) -> Option<(u32, u32, u32)> {
    let year: BTreeMap<&str, i32> = g.nodes.iter().map(|(id, y)| (id.as_str(), *y)).collect();
    let edges: BTreeSet<(&str, &str)> =
        g.edges.iter().filter(|(a, b)| a != b).map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let fy = year[focal];
    let later = |p: &str| year[p] > fy && year[p] <= fy + window;
    let refs: BTreeSet<&str> = edges.iter().filter(|(a, _)| *a == focal).map(|(_, b)| *b).collect();
    if refs.is_empty() {
        return None;
    }
    let cites_focal: BTreeSet<&str> = edges.iter().filter(|(a, b)| *b == focal && later(a)).map(|(a, _)| *a).collect();
    if cites_focal.is_empty() {
        return None;
    }
    let cites_refs: BTreeSet<&str> =
        edges.iter().filter(|(a, b)| refs.contains(b) && *a != focal && later(a)).map(|(a, _)| *a).collect();
    let n_f = cites_focal.difference(&cites_refs).count() as u32;
    let n_b = cites_focal.intersection(&cites_refs).count() as u32;
    let n_r = cites_refs.difference(&cites_focal).count() as u32;
    Some((n_f, n_b, n_r))
}

/// Random simplex rows and positive saliences.
pub struct RandomModel {
    pub dims: usize,
    pub nodes: Vec<String>,
    pub theta: Vec<Vec<f64>>,
    pub salience: Vec<f64>,
}

pub fn random_model<R: Rng>(rng: &mut R, n: usize, dims: usize) -> RandomModel {
    let theta = (0..n)
        .map(|_| {
            // a mix of peaked and flat rows
            let sharp = rng.random_range(0.2..6.0);
            let raw: Vec<f64> = (0..dims).map(|_| (rng.random::<f64>() * sharp).exp()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    RandomModel {
        dims,
        nodes: (0..n).map(|i| format!("v{i}")).collect(),
        theta,
        salience: (0..n).map(|_| rng.random_range(0.05..20.0)).collect(),
    }
}

/// `ln sum_d prod_i theta_id` by log-sum-exp over per-dimension log sums.
pub fn log_proximity(m: &RandomModel, members: &[usize]) -> f64 {
    let logs: Vec<f64> = (0..m.dims).map(|d| members.iter().map(|&i| m.theta[i][d].ln()).sum::<f64>()).collect();
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi + logs.iter().map(|l| (l - hi).exp()).sum::<f64>().ln()
}

pub fn oracle_novelty(m: &RandomModel, members: &[usize]) -> f64 {
    (-log_proximity(m, members)).max(0.0)
}

pub fn oracle_propensity(m: &RandomModel, members: &[usize]) -> f64 {
    (log_proximity(m, members) + members.iter().map(|&i| m.salience[i].ln()).sum::<f64>()).exp()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
