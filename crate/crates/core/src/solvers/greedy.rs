use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::graph::RegionGraph;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    theta: f64,
    a: usize,
    b: usize,
    version_a: u64,
    version_b: u64,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Max-heap order: most negative theta first, then smaller (a, b).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .theta
            .total_cmp(&self.theta)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

/// Greedy additive edge contraction for the multicut objective
/// `max Σ θ_e` over cut edges.
///
/// Starts from singletons and repeatedly merges the pair of adjacent
/// clusters whose accumulated between-score is most negative, until every
/// remaining between-score is nonnegative. Clusters are identified by their
/// smallest node, which also breaks ties. Returns component ids numbered by
/// smallest node.
pub fn multicut_greedy(g: &RegionGraph, theta: &[f64]) -> Vec<usize> {
    assert_eq!(theta.len(), g.edge_count(), "one theta per edge");
    let n = g.node_count();
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        *adj[u].entry(v).or_insert(0.0) += theta[e];
        *adj[v].entry(u).or_insert(0.0) += theta[e];
    }
    let mut version = vec![0u64; n];
    let mut alive = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let mut heap = BinaryHeap::new();
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        if theta[e] < 0.0 {
            heap.push(Candidate { theta: theta[e], a, b, version_a: 0, version_b: 0 });
        }
    }
    while let Some(c) = heap.pop() {
        if !alive[c.a] || !alive[c.b] || version[c.a] != c.version_a || version[c.b] != c.version_b {
            continue;
        }
        let (keep, gone) = (c.a, c.b);
        let absorbed = std::mem::take(&mut adj[gone]);
        for (other, t) in absorbed {
            if other == keep {
                continue;
            }
            adj[other].remove(&gone);
            *adj[keep].entry(other).or_insert(0.0) += t;
            let merged = adj[keep][&other];
            adj[other].insert(keep, merged);
        }
        adj[keep].remove(&gone);
        alive[gone] = false;
        parent[gone] = keep;
        version[keep] += 1;
        for (&other, &t) in &adj[keep] {
            if t < 0.0 {
                let (a, b) = (keep.min(other), keep.max(other));
                heap.push(Candidate {
                    theta: t,
                    a,
                    b,
                    version_a: version[a],
                    version_b: version[b],
                });
            }
        }
    }
    let mut out = vec![usize::MAX; n];
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    for u in 0..n {
        let mut r = u;
        while parent[r] != r {
            r = parent[r];
        }
        if ids[r] == usize::MAX {
            ids[r] = next;
            next += 1;
        }
        out[u] = ids[r];
    }
    out
}
