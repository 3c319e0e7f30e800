//! Label sets, the class-pair boundary prior, solver parameters and the
//! joint partition + labeling solution type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RegionGraph;

/// Instance classes `1..=L` plus background label `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSet {
    num_labels: usize,
}

impl ClassSet {
    pub fn new(num_labels: usize) -> Result<Self> {
        if num_labels == 0 {
            return Err(Error::InvalidValue("at least one instance class is required".into()));
        }
        if num_labels > 255 {
            return Err(Error::InvalidValue(format!("{num_labels} classes exceed 255")));
        }
        Ok(Self { num_labels })
    }

    /// `L`, the number of instance classes.
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// `L + 1`, including background.
    pub fn label_count(&self) -> usize {
        self.num_labels + 1
    }

    pub fn labels(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.num_labels
    }
}

/// Symmetric prior `β[l][l']` for a boundary between neighboring regions
/// labeled `l` and `l'`. The background/background entry is forbidden:
/// two background regions can never be separated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPrior {
    label_count: usize,
    beta: Vec<f64>,
}

impl PairPrior {
    /// Builds a prior from a row-major `(L+1)×(L+1)` matrix. Entry `(0, 0)`
    /// is ignored and always reads as forbidden.
    pub fn new(label_count: usize, mut beta: Vec<f64>) -> Result<Self> {
        if label_count < 2 {
            return Err(Error::Dimension("prior needs at least two labels".into()));
        }
        if beta.len() != label_count * label_count {
            return Err(Error::Dimension(format!(
                "prior of {label_count} labels needs {} entries, got {}",
                label_count * label_count,
                beta.len()
            )));
        }
        beta[0] = f64::NEG_INFINITY;
        for l in 0..label_count {
            for k in 0..label_count {
                if (l, k) == (0, 0) {
                    continue;
                }
                let v = beta[l * label_count + k];
                if !v.is_finite() {
                    return Err(Error::InvalidValue(format!("beta[{l}][{k}] is not finite")));
                }
                if v != beta[k * label_count + l] {
                    return Err(Error::InvalidValue(format!("beta is not symmetric at ({l}, {k})")));
                }
            }
        }
        Ok(Self { label_count, beta })
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    /// `None` for the forbidden background/background pair.
    #[inline]
    pub fn get(&self, l: usize, k: usize) -> Option<f64> {
        if l == 0 && k == 0 {
            None
        } else {
            Some(self.beta[l * self.label_count + k])
        }
    }

    #[inline]
    pub fn is_forbidden(&self, l: usize, k: usize) -> bool {
        l == 0 && k == 0
    }

    /// Finite entry; callers guarantee `(l, k) != (0, 0)`.
    #[inline]
    pub(crate) fn finite(&self, l: usize, k: usize) -> f64 {
        debug_assert!(!self.is_forbidden(l, k));
        self.beta[l * self.label_count + k]
    }
}

/// Balance weight, two-level boundary prior and local-search controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Weight of the boundary term relative to the class scores.
    pub w: f64,
    pub beta_small: f64,
    pub beta_big: f64,
    /// Classes whose pairs use `beta_big`.
    pub big_classes: Vec<usize>,
    pub max_rounds: usize,
    pub seed: u64,
    /// Extra local-search runs with a seeded node order; 0 runs once in
    /// canonical order.
    pub restarts: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            w: 1.0,
            beta_small: -2.0,
            beta_big: -2.0,
            big_classes: Vec::new(),
            max_rounds: 1_000_000,
            seed: 0,
            restarts: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self, classes: ClassSet) -> Result<()> {
        if !(self.w.is_finite() && self.w >= 0.0) {
            return Err(Error::InvalidValue(format!("w must be finite and >= 0, got {}", self.w)));
        }
        if !self.beta_small.is_finite() || !self.beta_big.is_finite() {
            return Err(Error::InvalidValue("beta values must be finite".into()));
        }
        if let Some(&c) = self.big_classes.iter().find(|&&c| c == 0 || c > classes.num_labels()) {
            return Err(Error::InvalidValue(format!(
                "big class {c} outside 1..={}",
                classes.num_labels()
            )));
        }
        Ok(())
    }
}

/// Two-level prior: `beta_big` whenever either label is a big class,
/// `beta_small` otherwise, background pair forbidden.
pub fn make_pair_prior(params: &SolverParams, classes: ClassSet) -> Result<PairPrior> {
    params.validate(classes)?;
    let n = classes.label_count();
    let mut is_big = vec![false; n];
    for &c in &params.big_classes {
        is_big[c] = true;
    }
    let beta = (0..n * n)
        .map(|i| {
            let (l, k) = (i / n, i % n);
            if is_big[l] || is_big[k] {
                params.beta_big
            } else {
                params.beta_small
            }
        })
        .collect();
    PairPrior::new(n, beta)
}

/// A partition of the graph into connected components, each carrying one
/// label. Component ids are dense.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointSolution {
    component_of: Vec<usize>,
    label_of: Vec<usize>,
}

impl JointSolution {
    /// Validates every solution invariant against `g`.
    pub fn new(g: &RegionGraph, component_of: Vec<usize>, label_of: Vec<usize>) -> Result<Self> {
        let s = Self { component_of, label_of };
        s.validate(g)?;
        Ok(s)
    }

    pub(crate) fn new_unchecked(component_of: Vec<usize>, label_of: Vec<usize>) -> Self {
        Self { component_of, label_of }
    }

    /// Components are the connected pieces of the subgraph that keeps only
    /// edges between equally labeled nodes; each inherits its nodes' label.
    pub fn from_labeling(g: &RegionGraph, labeling: &[usize]) -> Result<Self> {
        if labeling.len() != g.node_count() {
            return Err(Error::Dimension(format!(
                "labeling has {} entries for {} nodes",
                labeling.len(),
                g.node_count()
            )));
        }
        if let Some(&l) = labeling.iter().find(|&&l| l > g.num_labels()) {
            return Err(Error::InvalidValue(format!("label {l} out of range")));
        }
        let component_of = components_where(g, |u, v| labeling[u] == labeling[v]);
        let k = component_of.iter().max().map_or(0, |&c| c + 1);
        let mut label_of = vec![0; k];
        for (u, &c) in component_of.iter().enumerate() {
            label_of[c] = labeling[u];
        }
        Ok(Self { component_of, label_of })
    }

    pub fn validate(&self, g: &RegionGraph) -> Result<()> {
        let n = g.node_count();
        if self.component_of.len() != n {
            return Err(Error::Dimension(format!(
                "solution covers {} nodes, graph has {n}",
                self.component_of.len()
            )));
        }
        let k = self.label_of.len();
        let mut used = vec![false; k];
        for &c in &self.component_of {
            if c >= k {
                return Err(Error::InvalidSolution(format!("component id {c} >= {k}")));
            }
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidSolution(format!("component id {c} unused")));
        }
        if let Some(&l) = self.label_of.iter().find(|&&l| l > g.num_labels()) {
            return Err(Error::InvalidSolution(format!("label {l} out of range")));
        }
        let pieces = components_where(g, |u, v| self.component_of[u] == self.component_of[v]);
        let piece_count = pieces.iter().max().map_or(0, |&c| c + 1);
        if piece_count != k {
            return Err(Error::InvalidSolution(format!(
                "{k} components but {piece_count} connected pieces"
            )));
        }
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if self.component_of[u] != self.component_of[v]
                && self.label(u) == 0
                && self.label(v) == 0
            {
                return Err(Error::Infeasible(format!(
                    "edge {e} ({u}, {v}) separates two background components"
                )));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.component_of.len()
    }

    pub fn num_components(&self) -> usize {
        self.label_of.len()
    }

    pub fn component_of(&self) -> &[usize] {
        &self.component_of
    }

    pub fn label_of(&self) -> &[usize] {
        &self.label_of
    }

    #[inline]
    pub fn component(&self, u: usize) -> usize {
        self.component_of[u]
    }

    /// Label of node `u` (its component's label).
    #[inline]
    pub fn label(&self, u: usize) -> usize {
        self.label_of[self.component_of[u]]
    }

    pub fn node_labels(&self) -> Vec<usize> {
        (0..self.node_count()).map(|u| self.label(u)).collect()
    }

    #[inline]
    pub fn is_cut(&self, u: usize, v: usize) -> bool {
        self.component_of[u] != self.component_of[v]
    }

    /// One-hot node labels, `node_count × label_count`, row-major.
    pub fn derived_x(&self, label_count: usize) -> Vec<u8> {
        let mut x = vec![0u8; self.node_count() * label_count];
        for u in 0..self.node_count() {
            x[u * label_count + self.label(u)] = 1;
        }
        x
    }

    /// Cut indicator per edge of `g`.
    pub fn derived_y(&self, g: &RegionGraph) -> Vec<u8> {
        g.edges().iter().map(|&(u, v)| self.is_cut(u, v) as u8).collect()
    }

    /// Renumbers components in order of their smallest node.
    pub fn canonical(&self) -> Self {
        let mut remap = vec![usize::MAX; self.num_components()];
        let mut next = 0;
        let mut label_of = vec![0; self.num_components()];
        let component_of = self
            .component_of
            .iter()
            .map(|&c| {
                if remap[c] == usize::MAX {
                    remap[c] = next;
                    label_of[next] = self.label_of[c];
                    next += 1;
                }
                remap[c]
            })
            .collect();
        Self { component_of, label_of }
    }
}

/// Connected components of the subgraph keeping edges where `keep(u, v)`,
/// numbered by smallest node.
pub(crate) fn components_where(g: &RegionGraph, keep: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &(v, _) in g.neighbors(u) {
                if comp[v] == usize::MAX && keep(u, v) {
                    comp[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    comp
}
