//! Region adjacency graph over superpixels, carrying per-node class scores
//! and per-edge boundary scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{for_each_neighbor4, ScoreGrid, SuperpixelMap};
use crate::model::ClassSet;

/// Undirected, connected graph with node scores `α[u][l]` for every label
/// `l ∈ 0..=L` and one boundary score `b[e]` per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegionGraph", into = "RawRegionGraph")]
pub struct RegionGraph {
    classes: ClassSet,
    node_count: usize,
    edges: Vec<(usize, usize)>,
    node_scores: Vec<f64>,
    edge_scores: Vec<f64>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct RawRegionGraph {
    num_labels: usize,
    node_count: usize,
    node_scores: Vec<f64>,
    edges: Vec<(usize, usize)>,
    edge_scores: Vec<f64>,
}

impl TryFrom<RawRegionGraph> for RegionGraph {
    type Error = Error;

    fn try_from(raw: RawRegionGraph) -> Result<Self> {
        RegionGraph::new(
            ClassSet::new(raw.num_labels)?,
            raw.node_count,
            raw.edges,
            raw.node_scores,
            raw.edge_scores,
        )
    }
}

impl From<RegionGraph> for RawRegionGraph {
    fn from(g: RegionGraph) -> Self {
        RawRegionGraph {
            num_labels: g.classes.num_labels(),
            node_count: g.node_count,
            node_scores: g.node_scores,
            edges: g.edges,
            edge_scores: g.edge_scores,
        }
    }
}

impl RegionGraph {
    /// Validates and builds a graph. Edge endpoints are normalized to
    /// `(min, max)`; edge order is preserved.
    pub fn new(
        classes: ClassSet,
        node_count: usize,
        edges: Vec<(usize, usize)>,
        node_scores: Vec<f64>,
        edge_scores: Vec<f64>,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        let labels = classes.label_count();
        if node_scores.len() != node_count * labels {
            return Err(Error::Dimension(format!(
                "expected {} node scores ({node_count} nodes x {labels} labels), got {}",
                node_count * labels,
                node_scores.len()
            )));
        }
        if edge_scores.len() != edges.len() {
            return Err(Error::Dimension(format!(
                "{} edges but {} edge scores",
                edges.len(),
                edge_scores.len()
            )));
        }
        if node_scores.iter().chain(&edge_scores).any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("graph scores must be finite".into()));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        let mut normalized = Vec::with_capacity(edges.len());
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            let (u, v) = (a.min(b), a.max(b));
            normalized.push((u, v));
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
        }
        for (u, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if nbrs.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidGraph(format!("duplicate edge at node {u}")));
            }
        }
        let graph = Self {
            classes,
            node_count,
            edges: normalized,
            node_scores,
            edge_scores,
            adjacency,
        };
        if !graph.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(graph)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.node_count
    }

    pub fn classes(&self) -> ClassSet {
        self.classes
    }

    /// Number of instance classes `L`; labels run over `0..=L`.
    pub fn num_labels(&self) -> usize {
        self.classes.num_labels()
    }

    pub fn label_count(&self) -> usize {
        self.classes.label_count()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    #[inline]
    pub fn node_score(&self, u: usize, label: usize) -> f64 {
        self.node_scores[u * self.label_count() + label]
    }

    pub fn node_scores(&self, u: usize) -> &[f64] {
        let l = self.label_count();
        &self.node_scores[u * l..(u + 1) * l]
    }

    #[inline]
    pub fn edge_score(&self, e: usize) -> f64 {
        self.edge_scores[e]
    }

    pub fn edge_scores(&self) -> &[f64] {
        &self.edge_scores
    }

    /// `(neighbor, edge index)` pairs sorted by neighbor id.
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    /// Index of the edge joining `u` and `v`, if any.
    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        let nbrs = &self.adjacency[u];
        nbrs.binary_search_by_key(&v, |&(n, _)| n).ok().map(|i| nbrs[i].1)
    }
}

/// Aggregates pixel scores onto the superpixel adjacency graph.
///
/// Node scores are the per-region means of the semantic channels. The score
/// of edge `{u, v}` is the mean edge score over the border set: pixels of
/// `u` with a 4-neighbor in `v` together with pixels of `v` with a
/// 4-neighbor in `u`. Edges are ordered lexicographically by endpoints.
pub fn build_region_graph(
    spx: &SuperpixelMap,
    semantic: &ScoreGrid,
    edge_map: &ScoreGrid,
) -> Result<RegionGraph> {
    let (h, w) = (spx.height(), spx.width());
    for (name, grid) in [("semantic", semantic), ("edge", edge_map)] {
        if grid.height() != h || grid.width() != w {
            return Err(Error::Dimension(format!(
                "{name} map is {}x{}, superpixels are {h}x{w}",
                grid.height(),
                grid.width()
            )));
        }
    }
    if edge_map.channels() != 1 {
        return Err(Error::Dimension(format!(
            "edge map must have 1 channel, got {}",
            edge_map.channels()
        )));
    }
    if semantic.channels() < 2 {
        return Err(Error::Dimension(
            "semantic map needs a background channel and at least one class".into(),
        ));
    }
    let classes = ClassSet::new(semantic.channels() - 1)?;
    let labels = classes.label_count();
    let n = spx.num_regions();

    let mut sums = vec![0.0f64; n * labels];
    let mut sizes = vec![0usize; n];
    for p in 0..spx.num_pixels() {
        let r = spx.region(p);
        sizes[r] += 1;
        for (acc, &v) in sums[r * labels..(r + 1) * labels].iter_mut().zip(semantic.pixel(p)) {
            *acc += v as f64;
        }
    }
    for (r, &size) in sizes.iter().enumerate() {
        for acc in &mut sums[r * labels..(r + 1) * labels] {
            *acc /= size as f64;
        }
    }

    let mut border: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    let mut touched = Vec::with_capacity(4);
    for p in 0..spx.num_pixels() {
        let r = spx.region(p);
        touched.clear();
        for_each_neighbor4(p, h, w, |q| {
            let s = spx.region(q);
            if s != r && !touched.contains(&s) {
                touched.push(s);
            }
        });
        let b = edge_map.get(p, 0) as f64;
        for &s in &touched {
            let entry = border.entry((r.min(s), r.max(s))).or_insert((0.0, 0));
            entry.0 += b;
            entry.1 += 1;
        }
    }
    let (edges, edge_scores) = border
        .into_iter()
        .map(|(key, (sum, count))| (key, sum / count as f64))
        .unzip();
    RegionGraph::new(classes, n, edges, sums, edge_scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_graphs() {
        let c = ClassSet::new(1).unwrap();
        assert!(RegionGraph::new(c, 2, vec![(0, 0)], vec![0.0; 4], vec![0.0]).is_err());
        assert!(RegionGraph::new(c, 2, vec![(0, 1), (1, 0)], vec![0.0; 4], vec![0.0; 2]).is_err());
        assert!(RegionGraph::new(c, 2, vec![(0, 2)], vec![0.0; 4], vec![0.0]).is_err());
        // disconnected
        assert!(RegionGraph::new(c, 2, vec![], vec![0.0; 4], vec![]).is_err());
        assert!(RegionGraph::new(c, 2, vec![(0, 1)], vec![0.0; 3], vec![0.0]).is_err());
        assert!(RegionGraph::new(c, 2, vec![(0, 1)], vec![0.0; 4], vec![f64::INFINITY]).is_err());
        assert!(RegionGraph::new(c, 2, vec![(1, 0)], vec![0.0; 4], vec![0.0]).is_ok());
    }

    #[test]
    fn single_region_mean() {
        let spx = SuperpixelMap::new(1, 2, vec![0, 0]).unwrap();
        let sem = ScoreGrid::new(1, 2, 2, vec![0.0, 0.0, 0.0, 2.0]).unwrap();
        let edge = ScoreGrid::new(1, 2, 1, vec![0.0, 0.0]).unwrap();
        let g = build_region_graph(&spx, &sem, &edge).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_score(0, 1), 1.0);
    }

    #[test]
    fn two_pixel_border() {
        let spx = SuperpixelMap::new(1, 2, vec![0, 1]).unwrap();
        let sem = ScoreGrid::new(1, 2, 2, vec![0.0; 4]).unwrap();
        let edge = ScoreGrid::new(1, 2, 1, vec![-1.0, 3.0]).unwrap();
        let g = build_region_graph(&spx, &sem, &edge).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.edge_score(0), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let spx = SuperpixelMap::new(1, 2, vec![0, 1]).unwrap();
        let sem = ScoreGrid::new(1, 2, 2, vec![0.0; 4]).unwrap();
        let edge = ScoreGrid::new(2, 1, 1, vec![0.0; 2]).unwrap();
        assert!(matches!(build_region_graph(&spx, &sem, &edge), Err(Error::Dimension(_))));
        let edge2 = ScoreGrid::new(1, 2, 2, vec![0.0; 4]).unwrap();
        assert!(build_region_graph(&spx, &sem, &edge2).is_err());
    }
}
