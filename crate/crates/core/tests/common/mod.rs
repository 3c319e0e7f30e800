//! Brute-force reference implementations shared by the integration tests.
//! None of these call into the solver or objective code they check.

#![allow(dead_code)]

use instancecut::model::{ClassSet, PairPrior};
use instancecut::RegionGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus every other pair with probability `density`;
/// all scores uniform in `[-2, 2]`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, num_labels: usize, density: f64) -> RegionGraph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.random_bool(density) {
                edges.push((u, v));
            }
        }
    }
    let node_scores = (0..n * (num_labels + 1)).map(|_| rng.random_range(-2.0..=2.0)).collect();
    let edge_scores = (0..edges.len()).map(|_| rng.random_range(-2.0..=2.0)).collect();
    RegionGraph::new(ClassSet::new(num_labels).unwrap(), n, edges, node_scores, edge_scores).unwrap()
}

/// Term-by-term joint objective over raw indicators:
/// `Σ_u Σ_l α_ul x_ul + w Σ_e Σ_{l,l'} (b_e + β_ll') x_ul x_vl' y_e`,
/// with the forbidden background pair contributing −∞ when its product is 1.
pub fn literal_objective(g: &RegionGraph, prior: &PairPrior, w: f64, x: &[u8], y: &[u8]) -> f64 {
    let labels = g.label_count();
    let mut total = 0.0;
    for u in 0..g.node_count() {
        for l in 0..labels {
            total += g.node_score(u, l) * x[u * labels + l] as f64;
        }
    }
    let mut pair = 0.0;
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        for l in 0..labels {
            for k in 0..labels {
                let on = x[u * labels + l] * x[v * labels + k] * y[e];
                if on == 0 {
                    continue;
                }
                match prior.get(l, k) {
                    Some(beta) => pair += g.edge_score(e) + beta,
                    None => return f64::NEG_INFINITY,
                }
            }
        }
    }
    total + w * pair
}

/// Every simple cycle (length ≥ 3) as a bitmask over edge indices.
pub fn simple_cycles(g: &RegionGraph) -> Vec<u64> {
    assert!(g.edge_count() <= 64);
    let n = g.node_count();
    let mut found = Vec::new();
    for start in 0..n {
        let mut on_path = vec![false; n];
        on_path[start] = true;
        walk(g, start, start, 0, 0, &mut on_path, &mut found);
    }
    found.sort_unstable();
    found.dedup();
    found
}

fn walk(g: &RegionGraph, start: usize, at: usize, mask: u64, len: usize, on_path: &mut [bool], found: &mut Vec<u64>) {
    for &(next, e) in g.neighbors(at) {
        if next == start && len >= 2 && mask & (1 << e) == 0 {
            found.push(mask | (1 << e));
        } else if next > start && !on_path[next] {
            on_path[next] = true;
            walk(g, start, next, mask | (1 << e), len + 1, on_path, found);
            on_path[next] = false;
        }
    }
}

/// Label uniqueness per node, no cycle with exactly one cut edge,
/// `|x_ul − x_vl| ≤ y_e` on every edge and label, no cut between two
/// background nodes.
pub fn literal_feasible(g: &RegionGraph, x: &[u8], y: &[u8], cycles: &[u64]) -> bool {
    let labels = g.label_count();
    let unique = (0..g.node_count()).all(|u| x[u * labels..(u + 1) * labels].iter().map(|&b| b as u32).sum::<u32>() == 1);
    let ymask: u64 = y.iter().enumerate().map(|(e, &b)| (b as u64) << e).sum();
    let cycles_ok = cycles.iter().all(|c| (c & ymask).count_ones() != 1);
    let coupling = g.edges().iter().enumerate().all(|(e, &(u, v))| {
        (0..labels).all(|l| x[u * labels + l].abs_diff(x[v * labels + l]) <= y[e])
    });
    let background = g
        .edges()
        .iter()
        .enumerate()
        .all(|(e, &(u, v))| !(y[e] == 1 && x[u * labels] == 1 && x[v * labels] == 1));
    unique && cycles_ok && coupling && background
}

/// All set partitions of `0..n`, each as a block id per element, built by
/// inserting elements one at a time.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &out {
            let blocks = p.iter().max().map_or(0, |&m| m + 1);
            for b in 0..=blocks {
                let mut q = p.clone();
                q.push(b);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Whether each block of the partition induces a connected subgraph.
pub fn blocks_connected(g: &RegionGraph, part: &[usize]) -> bool {
    let blocks = part.iter().max().map_or(0, |&m| m + 1);
    (0..blocks).all(|b| {
        let members: Vec<usize> = (0..part.len()).filter(|&u| part[u] == b).collect();
        let mut seen = vec![members[0]];
        let mut i = 0;
        while i < seen.len() {
            let u = seen[i];
            for &(v, _) in g.neighbors(u) {
                if part[v] == b && !seen.contains(&v) {
                    seen.push(v);
                }
            }
            i += 1;
        }
        seen.len() == members.len()
    })
}

/// All `base^len` digit vectors in lexicographic order.
pub fn all_tuples(len: usize, base: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..base).map(move |d| {
                    let mut t = t.clone();
                    t.push(d);
                    t
                })
            })
            .collect();
    }
    out
}

/// `x` and `y` indicators for a node partition with per-node labels.
pub fn indicators(g: &RegionGraph, part: &[usize], node_label: &[usize]) -> (Vec<u8>, Vec<u8>) {
    let labels = g.label_count();
    let mut x = vec![0u8; g.node_count() * labels];
    for (u, &l) in node_label.iter().enumerate() {
        x[u * labels + l] = 1;
    }
    let y = g.edges().iter().map(|&(u, v)| (part[u] != part[v]) as u8).collect();
    (x, y)
}

/// Best joint objective over connected partitions and block labelings,
/// scored by [`literal_objective`].
pub fn brute_force_joint(g: &RegionGraph, prior: &PairPrior, w: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for part in set_partitions(g.node_count()) {
        if !blocks_connected(g, &part) {
            continue;
        }
        let blocks = part.iter().max().unwrap() + 1;
        for block_labels in all_tuples(blocks, g.label_count()) {
            let node_label: Vec<usize> = part.iter().map(|&b| block_labels[b]).collect();
            let (x, y) = indicators(g, &part, &node_label);
            best = best.max(literal_objective(g, prior, w, &x, &y));
        }
    }
    best
}

/// CRF score of a labeling, summed directly from its definition.
pub fn literal_crf(g: &RegionGraph, prior: &PairPrior, labeling: &[usize]) -> f64 {
    let unary: f64 = labeling.iter().enumerate().map(|(u, &l)| g.node_score(u, l)).sum();
    let pair: f64 = g
        .edges()
        .iter()
        .enumerate()
        .filter(|&(_, &(u, v))| labeling[u] != labeling[v])
        .map(|(e, &(u, v))| g.edge_score(e) + prior.get(labeling[u], labeling[v]).unwrap())
        .sum();
    unary + pair
}

/// Number of regional-minimum plateaus of an integer map, found with a
/// union-find over equal-valued 4-neighbors.
pub fn count_regional_minima(h: usize, w: usize, level: &[u32]) -> usize {
    let mut parent: Vec<usize> = (0..h * w).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    let offsets = [(0isize, 1isize), (1, 0)];
    for r in 0..h {
        for c in 0..w {
            for (dr, dc) in offsets {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr < h as isize && cc < w as isize {
                    let (p, q) = (r * w + c, rr as usize * w + cc as usize);
                    if level[p] == level[q] {
                        let (a, b) = (find(&mut parent, p), find(&mut parent, q));
                        parent[a] = b;
                    }
                }
            }
        }
    }
    let mut has_lower = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            for (dr, dc) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr >= 0 && cc >= 0 && rr < h as isize && cc < w as isize {
                    let q = rr as usize * w + cc as usize;
                    if level[q] < level[r * w + c] {
                        let root = find(&mut parent, r * w + c);
                        has_lower[root] = true;
                    }
                }
            }
        }
    }
    (0..h * w).filter(|&p| find(&mut parent, p) == p && !has_lower[p]).count()
}

/// Whether the pixels carrying each id form one 4-connected set.
pub fn regions_connected(h: usize, w: usize, ids: &[u32]) -> bool {
    let max = ids.iter().copied().max().unwrap_or(0) as usize;
    let mut first = vec![usize::MAX; max + 1];
    for (p, &id) in ids.iter().enumerate() {
        if first[id as usize] == usize::MAX {
            first[id as usize] = p;
        }
    }
    let mut seen = vec![false; h * w];
    for &start in first.iter().filter(|&&s| s != usize::MAX) {
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(p) = stack.pop() {
            let (r, c) = (p / w, p % w);
            let mut nbrs = Vec::new();
            if r > 0 {
                nbrs.push(p - w);
            }
            if r + 1 < h {
                nbrs.push(p + w);
            }
            if c > 0 {
                nbrs.push(p - 1);
            }
            if c + 1 < w {
                nbrs.push(p + 1);
            }
            for q in nbrs {
                if !seen[q] && ids[q] == ids[p] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Boundary rule checked pixel by pixel against explicit offsets.
pub fn boundary_by_offsets(h: usize, w: usize, ids: &[u32]) -> Vec<bool> {
    (0..h * w)
        .map(|p| {
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)].iter().any(|&(dr, dc)| {
                let (rr, cc) = (r + dr, c + dc);
                if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                    return false;
                }
                let q = rr as usize * w + cc as usize;
                ids[p] != ids[q] && (ids[p] != 0 || ids[q] != 0)
            })
        })
        .collect()
}
