//! Objective evaluation for the joint problem and its two sub-problems
//! (CRF labeling and multicut), feasibility checking of raw assignments,
//! and conversion of solutions into pixel instance maps.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RegionGraph;
use crate::grid::{InstanceMap, SuperpixelMap};
use crate::model::{components_where, JointSolution, PairPrior, SolverParams};

/// Joint score: class scores of every node plus `w·(b + β)` over every cut
/// edge, where β is taken for the labels on both sides. Uncut edges add
/// nothing.
pub fn joint_objective(
    g: &RegionGraph,
    prior: &PairPrior,
    params: &SolverParams,
    s: &JointSolution,
) -> Result<f64> {
    check_dims(g, prior, s)?;
    let unary: f64 = (0..g.node_count()).map(|u| g.node_score(u, s.label(u))).sum();
    let mut pairwise = 0.0;
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if !s.is_cut(u, v) {
            continue;
        }
        match prior.get(s.label(u), s.label(v)) {
            Some(beta) => pairwise += g.edge_score(e) + beta,
            None => {
                return Err(Error::Infeasible(format!(
                    "cut edge {e} ({u}, {v}) joins two background nodes"
                )))
            }
        }
    }
    Ok(unary + params.w * pairwise)
}

fn check_dims(g: &RegionGraph, prior: &PairPrior, s: &JointSolution) -> Result<()> {
    if prior.label_count() != g.label_count() {
        return Err(Error::Dimension(format!(
            "prior has {} labels, graph {}",
            prior.label_count(),
            g.label_count()
        )));
    }
    if s.node_count() != g.node_count() {
        return Err(Error::Dimension(format!(
            "solution has {} nodes, graph {}",
            s.node_count(),
            g.node_count()
        )));
    }
    Ok(())
}

/// Unconstrained binary node/label indicators `x` and edge cut indicators
/// `y`. May be infeasible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAssignment {
    label_count: usize,
    x: Vec<u8>,
    y: Vec<u8>,
}

impl RawAssignment {
    pub fn new(g: &RegionGraph, x: Vec<u8>, y: Vec<u8>) -> Result<Self> {
        let label_count = g.label_count();
        if x.len() != g.node_count() * label_count {
            return Err(Error::Dimension(format!(
                "x needs {} entries, got {}",
                g.node_count() * label_count,
                x.len()
            )));
        }
        if y.len() != g.edge_count() {
            return Err(Error::Dimension(format!(
                "y needs {} entries, got {}",
                g.edge_count(),
                y.len()
            )));
        }
        if x.iter().chain(&y).any(|&b| b > 1) {
            return Err(Error::InvalidValue("assignment entries must be 0 or 1".into()));
        }
        Ok(Self { label_count, x, y })
    }

    pub fn from_solution(g: &RegionGraph, s: &JointSolution) -> Self {
        Self {
            label_count: g.label_count(),
            x: s.derived_x(g.label_count()),
            y: s.derived_y(g),
        }
    }

    #[inline]
    pub fn x(&self, u: usize, l: usize) -> u8 {
        self.x[u * self.label_count + l]
    }

    #[inline]
    pub fn y(&self, e: usize) -> u8 {
        self.y[e]
    }

    pub fn xs(&self) -> &[u8] {
        &self.x
    }

    pub fn ys(&self) -> &[u8] {
        &self.y
    }
}

/// Outcome of [`check_feasibility`], with the first witness of each failed
/// check.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub uniqueness_ok: bool,
    pub cycle_ok: bool,
    pub coupling_ok: bool,
    pub background_ok: bool,
    /// Node whose label row does not sum to one.
    pub uniqueness_witness: Option<usize>,
    /// Edge indices of a cycle containing exactly one cut edge (listed first).
    pub cycle_witness: Option<Vec<usize>>,
    /// `(edge, label)` with differing indicators but no cut.
    pub coupling_witness: Option<(usize, usize)>,
    /// Cut edge joining two background nodes.
    pub background_witness: Option<usize>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.uniqueness_ok && self.cycle_ok && self.coupling_ok && self.background_ok
    }
}

/// Checks label uniqueness, cycle consistency of the cut, label/cut coupling
/// and the background rule.
///
/// Cycle consistency uses the component criterion: a cut is a valid
/// multicut iff no cut edge has both endpoints in the same connected
/// component of the uncut subgraph.
pub fn check_feasibility(g: &RegionGraph, a: &RawAssignment) -> FeasibilityReport {
    let labels = g.label_count();
    let uniqueness_witness = (0..g.node_count())
        .find(|&u| (0..labels).map(|l| a.x(u, l) as usize).sum::<usize>() != 1);

    let mut coupling_witness = None;
    'edges: for (e, &(u, v)) in g.edges().iter().enumerate() {
        for l in 0..labels {
            if a.x(u, l).abs_diff(a.x(v, l)) > a.y(e) {
                coupling_witness = Some((e, l));
                break 'edges;
            }
        }
    }

    let background_witness = g
        .edges()
        .iter()
        .enumerate()
        .find(|&(e, &(u, v))| a.y(e) == 1 && a.x(u, 0) == 1 && a.x(v, 0) == 1)
        .map(|(e, _)| e);

    let cycle_witness = cycle_violation(g, a.ys());

    FeasibilityReport {
        uniqueness_ok: uniqueness_witness.is_none(),
        cycle_ok: cycle_witness.is_none(),
        coupling_ok: coupling_witness.is_none(),
        background_ok: background_witness.is_none(),
        uniqueness_witness,
        cycle_witness,
        coupling_witness,
        background_witness,
    }
}

/// Finds a cycle with exactly one cut edge, if any. The returned edge list
/// starts with the cut edge followed by the uncut path closing the cycle.
pub fn cycle_violation(g: &RegionGraph, y: &[u8]) -> Option<Vec<usize>> {
    let comp = components_where(g, |u, v| {
        g.find_edge(u, v).map(|e| y[e] == 0).unwrap_or(false)
    });
    let (e, &(u, v)) = g
        .edges()
        .iter()
        .enumerate()
        .find(|&(e, &(u, v))| y[e] == 1 && comp[u] == comp[v])?;
    // Shortest uncut path from v back to u.
    let mut parent = vec![None; g.node_count()];
    let mut seen = vec![false; g.node_count()];
    let mut queue = VecDeque::from([v]);
    seen[v] = true;
    while let Some(a) = queue.pop_front() {
        if a == u {
            break;
        }
        for &(b, f) in g.neighbors(a) {
            if !seen[b] && y[f] == 0 {
                seen[b] = true;
                parent[b] = Some((a, f));
                queue.push_back(b);
            }
        }
    }
    let mut cycle = vec![e];
    let mut cur = u;
    while let Some((prev, f)) = parent[cur] {
        cycle.push(f);
        cur = prev;
    }
    Some(cycle)
}

/// CRF score of a node labeling: class scores plus `b + β[l][l']` on every
/// edge whose endpoint labels differ.
pub fn crf_objective(g: &RegionGraph, prior: &PairPrior, labeling: &[usize]) -> f64 {
    let unary: f64 = labeling.iter().enumerate().map(|(u, &l)| g.node_score(u, l)).sum();
    let pairwise: f64 = g
        .edges()
        .iter()
        .enumerate()
        .filter(|&(_, &(u, v))| labeling[u] != labeling[v])
        .map(|(e, &(u, v))| g.edge_score(e) + prior.finite(labeling[u], labeling[v]))
        .sum();
    unary + pairwise
}

/// Multicut score `Σ θ_e y_e`; rejects cuts that are not cycle consistent.
pub fn multicut_objective(g: &RegionGraph, theta: &[f64], y: &[u8]) -> Result<f64> {
    if theta.len() != g.edge_count() || y.len() != g.edge_count() {
        return Err(Error::Dimension(format!(
            "theta/y lengths {}/{} for {} edges",
            theta.len(),
            y.len(),
            g.edge_count()
        )));
    }
    if let Some(cycle) = cycle_violation(g, y) {
        return Err(Error::CycleViolation(cycle));
    }
    Ok(theta.iter().zip(y).filter(|(_, &c)| c == 1).map(|(t, _)| t).sum())
}

/// Cut indicator per edge for a node partition.
pub fn partition_cut(g: &RegionGraph, partition: &[usize]) -> Vec<u8> {
    g.edges().iter().map(|&(u, v)| (partition[u] != partition[v]) as u8).collect()
}

/// Paints each pixel with `(instance id, class)`. All background
/// components collapse to instance 0; the remaining components get ids
/// `1..=k` in order of their first pixel (row-major).
pub fn extract_instances(spx: &SuperpixelMap, s: &JointSolution) -> Result<InstanceMap> {
    if s.node_count() != spx.num_regions() {
        return Err(Error::Dimension(format!(
            "solution has {} nodes, superpixel map {} regions",
            s.node_count(),
            spx.num_regions()
        )));
    }
    let mut ids = vec![u32::MAX; s.num_components()];
    let mut next = 1u32;
    let n = spx.num_pixels();
    let mut instance = Vec::with_capacity(n);
    let mut class = Vec::with_capacity(n);
    for &r in spx.region_of() {
        let c = s.component(r as usize);
        let label = s.label_of()[c];
        if label == 0 {
            instance.push(0);
            class.push(0);
            continue;
        }
        if ids[c] == u32::MAX {
            ids[c] = next;
            next += 1;
        }
        instance.push(ids[c]);
        class.push(label as u8);
    }
    InstanceMap::new(spx.height(), spx.width(), instance, class)
}
