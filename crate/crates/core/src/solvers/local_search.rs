//! Best-improvement local search over joint partitions + labelings.
//!
//! The search state is a partition of the graph into connected components,
//! each with one label. Four move types are scanned every round in a fixed
//! order:
//!
//! 1. relabel a component,
//! 2. merge two adjacent components that share a label,
//! 3. shift a boundary node into an adjacent component (taking its label),
//!    splitting the donor if it falls apart,
//! 4. isolate a node as a new component with its best label.
//!
//! The single move with the largest gain is applied; ties go to the move
//! that comes first in scan order (move type, then node/component id).
//! Gains are cached per component and per node and only recomputed for the
//! entities a move touched.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::RegionGraph;
use crate::model::{JointSolution, PairPrior, SolverParams};
use crate::objective::joint_objective;

use super::{crf_solve, SolveResult, Stopwatch};

/// Gains at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-9;
/// Longest move chain tried when no single move improves.
const MAX_CHAIN: usize = 64;
/// Number of opening moves tried for such chains.
const CHAIN_OPENERS: usize = 16;

/// Joint local search from the ICM labeling.
///
/// The initial partition cuts exactly the label boundaries of the ICM
/// labeling. With `params.restarts > 0`, additional runs scan node shifts
/// in a seeded random node order; the best objective wins, ties going to the
/// earliest run.
pub fn joint_local_search(g: &RegionGraph, prior: &PairPrior, params: &SolverParams) -> Result<SolveResult> {
    let start = Stopwatch::start();
    params.validate(g.classes())?;
    if prior.label_count() != g.label_count() {
        return Err(Error::Dimension(format!(
            "prior has {} labels, graph {}",
            prior.label_count(),
            g.label_count()
        )));
    }
    let labeling = crf_solve(g, prior);
    let init = JointSolution::from_labeling(g, &labeling)?;

    let mut best: Option<Run> = None;
    for restart in 0..=params.restarts {
        let order = shift_order(g.node_count(), params.seed, restart);
        let run = Search::new(g, prior, params.w, &init, order).run(params.max_rounds);
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one run");
    let objective = joint_objective(g, prior, params, &run.solution)?;
    Ok(SolveResult {
        solution: run.solution,
        objective,
        rounds: run.rounds,
        moves_applied: run.moves,
        wall_time: start.elapsed(),
        trace: run.trace,
    })
}

fn shift_order(n: usize, seed: u64, restart: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if restart > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        order.shuffle(&mut rng);
    }
    order
}

struct Run {
    solution: JointSolution,
    objective: f64,
    rounds: usize,
    moves: usize,
    trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    Relabel { comp: usize, label: usize },
    Merge { keep: usize, absorb: usize },
    Shift { node: usize, target: usize },
    Isolate { node: usize, label: usize },
}

#[derive(Debug, Clone, Copy, Default)]
struct Link {
    bsum: f64,
    count: usize,
}

#[derive(Clone)]
struct Search<'a> {
    g: &'a RegionGraph,
    prior: &'a PairPrior,
    w: f64,
    labels: usize,
    comp_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    slot_in_comp: Vec<usize>,
    label: Vec<usize>,
    unary: Vec<f64>,
    adj: Vec<BTreeMap<usize, Link>>,
    /// Scan order of nodes for shift moves.
    order: Vec<usize>,
    relabel_best: Vec<Option<(f64, usize)>>,
    merge_best: Vec<Option<(f64, usize)>>,
    shift_best: Vec<Option<(f64, usize)>>,
    isolate_best: Vec<Option<(f64, usize)>>,
    dirty_nodes: Vec<usize>,
    node_dirty: Vec<bool>,
    dirty_comps: Vec<usize>,
    comp_dirty: Vec<bool>,
    objective: f64,
}

impl<'a> Search<'a> {
    fn new(g: &'a RegionGraph, prior: &'a PairPrior, w: f64, init: &JointSolution, order: Vec<usize>) -> Self {
        let n = g.node_count();
        let k = init.num_components();
        let labels = g.label_count();
        let mut members = vec![Vec::new(); k];
        let mut slot_in_comp = vec![0; n];
        let mut unary = vec![0.0; k * labels];
        for u in 0..n {
            let c = init.component(u);
            slot_in_comp[u] = members[c].len();
            members[c].push(u);
            for l in 0..labels {
                unary[c * labels + l] += g.node_score(u, l);
            }
        }
        let mut adj = vec![BTreeMap::new(); k];
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            let (cu, cv) = (init.component(u), init.component(v));
            if cu != cv {
                add_link(&mut adj[cu], cv, g.edge_score(e));
                add_link(&mut adj[cv], cu, g.edge_score(e));
            }
        }
        let mut search = Self {
            g,
            prior,
            w,
            labels,
            comp_of: init.component_of().to_vec(),
            members,
            slot_in_comp,
            label: init.label_of().to_vec(),
            unary,
            adj,
            order,
            relabel_best: vec![None; k],
            merge_best: vec![None; k],
            shift_best: vec![None; n],
            isolate_best: vec![None; n],
            dirty_nodes: Vec::new(),
            node_dirty: vec![false; n],
            dirty_comps: Vec::new(),
            comp_dirty: vec![false; k],
            objective: 0.0,
        };
        search.objective = search.full_objective();
        for c in 0..k {
            search.mark_comp(c);
        }
        for u in 0..n {
            search.mark_node(u);
        }
        search
    }

    fn run(mut self, max_rounds: usize) -> Run {
        let mut trace = vec![self.objective];
        let mut rounds = 0;
        let mut moves = 0;
        while rounds < max_rounds {
            rounds += 1;
            self.refresh();
            if let Some((gain, mv)) = self.select() {
                #[cfg(test)]
                self.assert_matches_full_scan(gain, mv);
                self.apply(mv);
                self.objective += gain;
                moves += 1;
            } else {
                let Some((gain, chain)) = self.escape_chain() else { break };
                moves += chain.len();
                for mv in chain {
                    self.apply(mv);
                }
                self.objective += gain;
            }
            trace.push(self.objective);
            debug_assert!({
                let full = self.full_objective();
                (full - self.objective).abs() <= 1e-9 * (1.0 + full.abs())
            });
        }
        let solution = self.solution();
        Run { solution, objective: self.objective, rounds, moves, trace }
    }

    fn solution(&self) -> JointSolution {
        let mut remap = vec![usize::MAX; self.members.len()];
        let mut label_of = Vec::new();
        let component_of = self
            .comp_of
            .iter()
            .map(|&c| {
                if remap[c] == usize::MAX {
                    remap[c] = label_of.len();
                    label_of.push(self.label[c]);
                }
                remap[c]
            })
            .collect();
        JointSolution::new_unchecked(component_of, label_of)
    }

    #[inline]
    fn beta(&self, l: usize, k: usize) -> f64 {
        self.prior.finite(l, k)
    }

    #[inline]
    fn node_label(&self, u: usize) -> usize {
        self.label[self.comp_of[u]]
    }

    fn full_objective(&self) -> f64 {
        let unary: f64 = (0..self.g.node_count())
            .map(|u| self.g.node_score(u, self.node_label(u)))
            .sum();
        let pairwise: f64 = self
            .g
            .edges()
            .iter()
            .enumerate()
            .filter(|&(_, &(u, v))| self.comp_of[u] != self.comp_of[v])
            .map(|(e, &(u, v))| self.g.edge_score(e) + self.beta(self.node_label(u), self.node_label(v)))
            .sum();
        unary + self.w * pairwise
    }

    // ---- gains ----

    fn relabel_gain(&self, c: usize, to: usize) -> Option<f64> {
        let from = self.label[c];
        if to == from {
            return None;
        }
        let mut pair = 0.0;
        for (&d, link) in &self.adj[c] {
            let ld = self.label[d];
            if to == 0 && ld == 0 {
                return None;
            }
            pair += link.count as f64 * (self.beta(to, ld) - self.beta(from, ld));
        }
        let l = self.labels;
        Some(self.unary[c * l + to] - self.unary[c * l + from] + self.w * pair)
    }

    fn merge_gain(&self, a: usize, b: usize) -> Option<f64> {
        let l = self.label[a];
        if l != self.label[b] || l == 0 {
            return None;
        }
        let link = self.adj[a].get(&b)?;
        Some(-self.w * (link.bsum + link.count as f64 * self.beta(l, l)))
    }

    fn shift_gain(&self, u: usize, d: usize) -> Option<f64> {
        let c = self.comp_of[u];
        let (lc, ld) = (self.label[c], self.label[d]);
        let (mut before, mut after) = (0.0, 0.0);
        for &(v, e) in self.g.neighbors(u) {
            let x = self.comp_of[v];
            let lx = self.label[x];
            let b = self.g.edge_score(e);
            if x != c {
                before += b + self.beta(lc, lx);
            }
            if x != d {
                if ld == 0 && lx == 0 {
                    return None;
                }
                after += b + self.beta(ld, lx);
            }
        }
        Some(self.g.node_score(u, ld) - self.g.node_score(u, lc) + self.w * (after - before))
    }

    fn isolate_gain(&self, u: usize, l: usize) -> Option<f64> {
        let c = self.comp_of[u];
        if self.members[c].len() < 2 {
            return None;
        }
        let lc = self.label[c];
        let (mut before, mut after) = (0.0, 0.0);
        for &(v, e) in self.g.neighbors(u) {
            let x = self.comp_of[v];
            let lx = self.label[x];
            let b = self.g.edge_score(e);
            if x != c {
                before += b + self.beta(lc, lx);
            }
            if l == 0 && lx == 0 {
                return None;
            }
            after += b + self.beta(l, lx);
        }
        Some(self.g.node_score(u, l) - self.g.node_score(u, lc) + self.w * (after - before))
    }

    /// Distinct neighboring components of `u` other than its own, ascending.
    fn shift_targets(&self, u: usize) -> Vec<usize> {
        let c = self.comp_of[u];
        let mut targets: Vec<usize> = self
            .g
            .neighbors(u)
            .iter()
            .map(|&(v, _)| self.comp_of[v])
            .filter(|&x| x != c)
            .collect();
        targets.sort_unstable();
        targets.dedup();
        targets
    }

    fn best_relabel(&self, c: usize) -> Option<(f64, usize)> {
        best_of((0..self.labels).filter_map(|l| self.relabel_gain(c, l).map(|gain| (gain, l))))
    }

    fn best_merge(&self, a: usize) -> Option<(f64, usize)> {
        best_of(
            self.adj[a]
                .range(a + 1..)
                .filter_map(|(&b, _)| self.merge_gain(a, b).map(|gain| (gain, b))),
        )
    }

    fn best_shift(&self, u: usize) -> Option<(f64, usize)> {
        best_of(
            self.shift_targets(u)
                .into_iter()
                .filter_map(|d| self.shift_gain(u, d).map(|gain| (gain, d))),
        )
    }

    fn best_isolate(&self, u: usize) -> Option<(f64, usize)> {
        best_of((0..self.labels).filter_map(|l| self.isolate_gain(u, l).map(|gain| (gain, l))))
    }

    // ---- caches ----

    fn mark_node(&mut self, u: usize) {
        if !self.node_dirty[u] {
            self.node_dirty[u] = true;
            self.dirty_nodes.push(u);
        }
    }

    fn mark_node_and_neighbors(&mut self, u: usize) {
        self.mark_node(u);
        for i in 0..self.g.degree(u) {
            let v = self.g.neighbors(u)[i].0;
            self.mark_node(v);
        }
    }

    fn mark_comp(&mut self, c: usize) {
        if !self.comp_dirty[c] {
            self.comp_dirty[c] = true;
            self.dirty_comps.push(c);
        }
    }

    fn mark_comp_and_adjacent(&mut self, c: usize) {
        self.mark_comp(c);
        let adjacent: Vec<usize> = self.adj[c].keys().copied().collect();
        for d in adjacent {
            self.mark_comp(d);
        }
    }

    fn refresh(&mut self) {
        for c in std::mem::take(&mut self.dirty_comps) {
            self.comp_dirty[c] = false;
            if self.members[c].is_empty() {
                self.relabel_best[c] = None;
                self.merge_best[c] = None;
            } else {
                self.relabel_best[c] = self.best_relabel(c);
                self.merge_best[c] = self.best_merge(c);
            }
        }
        for u in std::mem::take(&mut self.dirty_nodes) {
            self.node_dirty[u] = false;
            self.shift_best[u] = self.best_shift(u);
            self.isolate_best[u] = self.best_isolate(u);
        }
    }

    /// Best cached move; earlier scan positions win ties.
    fn select(&self) -> Option<(f64, Move)> {
        let mut best: Option<(f64, Move)> = None;
        let mut consider = |gain: f64, mv: Move| {
            if gain > MIN_GAIN && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, mv));
            }
        };
        for (c, entry) in self.relabel_best.iter().enumerate() {
            if let Some((gain, label)) = *entry {
                consider(gain, Move::Relabel { comp: c, label });
            }
        }
        for (a, entry) in self.merge_best.iter().enumerate() {
            if let Some((gain, b)) = *entry {
                consider(gain, Move::Merge { keep: a, absorb: b });
            }
        }
        for &u in &self.order {
            if let Some((gain, target)) = self.shift_best[u] {
                consider(gain, Move::Shift { node: u, target });
            }
        }
        for (u, entry) in self.isolate_best.iter().enumerate() {
            if let Some((gain, label)) = *entry {
                consider(gain, Move::Isolate { node: u, label });
            }
        }
        best
    }

    /// Kernighan-Lin style chains from a local optimum. Each chain opens
    /// with one of the best few moves, then repeatedly takes the best move
    /// of any sign among nodes and components it has not yet touched, on a
    /// scratch copy. Returns the best improving prefix over all chains.
    fn escape_chain(&self) -> Option<(f64, Vec<Move>)> {
        let mut openers = self.ranked_moves();
        openers.truncate(CHAIN_OPENERS);
        let mut best: Option<(f64, Vec<Move>)> = None;
        for first in openers {
            if let Some((gain, chain)) = self.chain_from(first) {
                if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                    best = Some((gain, chain));
                }
            }
        }
        best
    }

    fn chain_from(&self, first: (f64, Move)) -> Option<(f64, Vec<Move>)> {
        let mut trial = self.clone();
        let mut locked_nodes = vec![false; self.g.node_count()];
        let mut locked_comps = vec![false; self.members.len()];
        let (mut total, mut best_total, mut best_len) = (0.0, MIN_GAIN, 0);
        let mut chain = Vec::new();
        let mut next = Some(first);
        while let Some((gain, mv)) = next {
            match mv {
                Move::Relabel { comp, .. } => lock(&mut locked_comps, comp),
                Move::Merge { keep, absorb } => {
                    lock(&mut locked_comps, keep);
                    lock(&mut locked_comps, absorb);
                }
                Move::Shift { node, .. } | Move::Isolate { node, .. } => locked_nodes[node] = true,
            }
            trial.apply(mv);
            total += gain;
            chain.push(mv);
            if total > best_total {
                best_total = total;
                best_len = chain.len();
            }
            if chain.len() >= self.g.node_count().min(MAX_CHAIN) {
                break;
            }
            trial.refresh();
            next = trial.select_unlocked(&locked_nodes, &locked_comps);
        }
        (best_len > 0).then(|| {
            chain.truncate(best_len);
            (best_total, chain)
        })
    }

    /// Every cached move, best gain first; equal gains keep scan order.
    fn ranked_moves(&self) -> Vec<(f64, Move)> {
        let mut all = Vec::new();
        for (c, entry) in self.relabel_best.iter().enumerate() {
            if let Some((gain, label)) = *entry {
                all.push((gain, Move::Relabel { comp: c, label }));
            }
        }
        for (a, entry) in self.merge_best.iter().enumerate() {
            if let Some((gain, b)) = *entry {
                all.push((gain, Move::Merge { keep: a, absorb: b }));
            }
        }
        for &u in &self.order {
            if let Some((gain, target)) = self.shift_best[u] {
                all.push((gain, Move::Shift { node: u, target }));
            }
        }
        for (u, entry) in self.isolate_best.iter().enumerate() {
            if let Some((gain, label)) = *entry {
                all.push((gain, Move::Isolate { node: u, label }));
            }
        }
        all.sort_by(|a, b| b.0.total_cmp(&a.0));
        all
    }

    /// Best cached move of any gain that avoids locked nodes and components.
    fn select_unlocked(&self, locked_nodes: &[bool], locked_comps: &[bool]) -> Option<(f64, Move)> {
        let is_locked = |c: usize| locked_comps.get(c).copied().unwrap_or(false);
        let mut best: Option<(f64, Move)> = None;
        let mut consider = |gain: f64, mv: Move| {
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, mv));
            }
        };
        for (c, entry) in self.relabel_best.iter().enumerate() {
            if let Some((gain, label)) = *entry {
                if !is_locked(c) {
                    consider(gain, Move::Relabel { comp: c, label });
                }
            }
        }
        for (a, entry) in self.merge_best.iter().enumerate() {
            if let Some((gain, b)) = *entry {
                if !is_locked(a) && !is_locked(b) {
                    consider(gain, Move::Merge { keep: a, absorb: b });
                }
            }
        }
        for &u in &self.order {
            if let Some((gain, target)) = self.shift_best[u] {
                if !locked_nodes[u] {
                    consider(gain, Move::Shift { node: u, target });
                }
            }
        }
        for (u, entry) in self.isolate_best.iter().enumerate() {
            if let Some((gain, label)) = *entry {
                if !locked_nodes[u] {
                    consider(gain, Move::Isolate { node: u, label });
                }
            }
        }
        best
    }

    #[cfg(test)]
    fn assert_matches_full_scan(&self, gain: f64, mv: Move) {
        if self.g.node_count() > 64 {
            return;
        }
        let mut best: Option<(f64, Move)> = None;
        let mut consider = |gain: f64, mv: Move| {
            if gain > MIN_GAIN && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, mv));
            }
        };
        for c in 0..self.members.len() {
            if self.members[c].is_empty() {
                continue;
            }
            for l in 0..self.labels {
                if let Some(g) = self.relabel_gain(c, l) {
                    consider(g, Move::Relabel { comp: c, label: l });
                }
            }
        }
        for a in 0..self.members.len() {
            for &b in self.adj[a].keys().filter(|&&b| b > a) {
                if let Some(g) = self.merge_gain(a, b) {
                    consider(g, Move::Merge { keep: a, absorb: b });
                }
            }
        }
        for &u in &self.order {
            for d in self.shift_targets(u) {
                if let Some(g) = self.shift_gain(u, d) {
                    consider(g, Move::Shift { node: u, target: d });
                }
            }
        }
        for u in 0..self.g.node_count() {
            for l in 0..self.labels {
                if let Some(g) = self.isolate_gain(u, l) {
                    consider(g, Move::Isolate { node: u, label: l });
                }
            }
        }
        assert_eq!(best, Some((gain, mv)), "cached selection diverged from full scan");
    }

    // ---- moves ----

    fn apply(&mut self, mv: Move) {
        match mv {
            Move::Relabel { comp, label } => {
                self.label[comp] = label;
                for i in 0..self.members[comp].len() {
                    let u = self.members[comp][i];
                    self.mark_node_and_neighbors(u);
                }
                self.mark_comp_and_adjacent(comp);
            }
            Move::Merge { keep, absorb } => self.merge(keep, absorb),
            Move::Shift { node, target } => self.transfer(node, target),
            Move::Isolate { node, label } => {
                let slot = self.new_slot(label);
                self.transfer(node, slot);
            }
        }
    }

    fn new_slot(&mut self, label: usize) -> usize {
        let slot = self.members.len();
        self.members.push(Vec::new());
        self.label.push(label);
        self.unary.extend(std::iter::repeat_n(0.0, self.labels));
        self.adj.push(BTreeMap::new());
        self.relabel_best.push(None);
        self.merge_best.push(None);
        self.comp_dirty.push(false);
        slot
    }

    fn merge(&mut self, keep: usize, absorb: usize) {
        if self.members[keep].len() == 1 {
            let u = self.members[keep][0];
            self.mark_node(u);
        }
        let moved = std::mem::take(&mut self.members[absorb]);
        for &u in &moved {
            self.mark_node_and_neighbors(u);
            self.comp_of[u] = keep;
            self.slot_in_comp[u] = self.members[keep].len();
            self.members[keep].push(u);
        }
        let l = self.labels;
        for i in 0..l {
            self.unary[keep * l + i] += self.unary[absorb * l + i];
            self.unary[absorb * l + i] = 0.0;
        }
        let links = std::mem::take(&mut self.adj[absorb]);
        for (x, link) in links {
            self.adj[x].remove(&absorb);
            if x == keep {
                continue;
            }
            let merged = {
                let entry = self.adj[keep].entry(x).or_default();
                entry.bsum += link.bsum;
                entry.count += link.count;
                *entry
            };
            self.adj[x].insert(keep, merged);
        }
        self.mark_comp(absorb);
        self.mark_comp_and_adjacent(keep);
    }

    fn detach(&mut self, u: usize) {
        let c = self.comp_of[u];
        let i = self.slot_in_comp[u];
        self.members[c].swap_remove(i);
        if let Some(&moved) = self.members[c].get(i) {
            self.slot_in_comp[moved] = i;
        }
        let l = self.labels;
        for k in 0..l {
            self.unary[c * l + k] -= self.g.node_score(u, k);
        }
    }

    fn attach(&mut self, u: usize, d: usize) {
        self.comp_of[u] = d;
        self.slot_in_comp[u] = self.members[d].len();
        self.members[d].push(u);
        let l = self.labels;
        for k in 0..l {
            self.unary[d * l + k] += self.g.node_score(u, k);
        }
    }

    /// Moves `u` into component `d` and splits the donor if needed.
    fn transfer(&mut self, u: usize, d: usize) {
        let c = self.comp_of[u];
        let g = self.g;
        for &(v, e) in g.neighbors(u) {
            let x = self.comp_of[v];
            if x != c {
                self.unlink(c, x, g.edge_score(e));
            }
        }
        self.detach(u);
        self.attach(u, d);
        for &(v, e) in g.neighbors(u) {
            let x = self.comp_of[v];
            if x != d {
                add_link(&mut self.adj[d], x, g.edge_score(e));
                add_link(&mut self.adj[x], d, g.edge_score(e));
            }
        }
        self.mark_node_and_neighbors(u);
        for &(v, _) in g.neighbors(u) {
            self.mark_comp(self.comp_of[v]);
        }
        self.mark_comp_and_adjacent(c);
        self.mark_comp_and_adjacent(d);
        if !self.members[c].is_empty() {
            self.split_if_disconnected(c);
        }
    }

    fn unlink(&mut self, a: usize, b: usize, score: f64) {
        for (from, to) in [(a, b), (b, a)] {
            let entry = self.adj[from].get_mut(&to).expect("adjacent components share a link");
            entry.count -= 1;
            entry.bsum -= score;
            if entry.count == 0 {
                self.adj[from].remove(&to);
            }
        }
    }

    fn split_if_disconnected(&mut self, c: usize) {
        let g = self.g;
        let nodes = self.members[c].clone();
        let mut piece_of: BTreeMap<usize, usize> = BTreeMap::new();
        let mut pieces: Vec<Vec<usize>> = Vec::new();
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        for &s in &sorted {
            if piece_of.contains_key(&s) {
                continue;
            }
            let p = pieces.len();
            piece_of.insert(s, p);
            let mut piece = vec![s];
            let mut i = 0;
            while i < piece.len() {
                let u = piece[i];
                i += 1;
                for &(v, _) in g.neighbors(u) {
                    if self.comp_of[v] == c && !piece_of.contains_key(&v) {
                        piece_of.insert(v, p);
                        piece.push(v);
                    }
                }
            }
            pieces.push(piece);
        }
        if pieces.len() == 1 {
            return;
        }
        // The piece holding the smallest node keeps the slot.
        let old_adjacent: Vec<usize> = self.adj[c].keys().copied().collect();
        for &x in &old_adjacent {
            self.adj[x].remove(&c);
            self.mark_comp(x);
        }
        self.adj[c].clear();
        let label = self.label[c];
        let mut slots = vec![c];
        for _ in 1..pieces.len() {
            slots.push(self.new_slot(label));
        }
        let l = self.labels;
        for (piece, &slot) in pieces.iter().zip(&slots) {
            self.members[slot].clear();
            for k in 0..l {
                self.unary[slot * l + k] = 0.0;
            }
            for &u in piece {
                self.attach(u, slot);
            }
        }
        for (piece, &slot) in pieces.iter().zip(&slots) {
            for &u in piece {
                self.mark_node_and_neighbors(u);
                for &(v, e) in g.neighbors(u) {
                    let x = self.comp_of[v];
                    if x == slot {
                        continue;
                    }
                    add_link(&mut self.adj[slot], x, g.edge_score(e));
                    if !slots.contains(&x) {
                        add_link(&mut self.adj[x], slot, g.edge_score(e));
                    }
                }
            }
            self.mark_comp_and_adjacent(slot);
        }
    }
}

fn lock(locked: &mut Vec<bool>, c: usize) {
    if c >= locked.len() {
        locked.resize(c + 1, false);
    }
    locked[c] = true;
}

fn add_link(map: &mut BTreeMap<usize, Link>, to: usize, score: f64) {
    let entry = map.entry(to).or_default();
    entry.bsum += score;
    entry.count += 1;
}

/// Maximum by gain; the first of equal gains wins.
fn best_of(items: impl Iterator<Item = (f64, usize)>) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (gain, id) in items {
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, id));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_pair_prior, ClassSet};
    use crate::objective::{check_feasibility, RawAssignment};
    use crate::solvers::oracle_exact;

    fn random_instance(seed: u64, n: usize, labels: usize) -> RegionGraph {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
        for u in 0..n {
            for v in u + 1..n {
                if !edges.contains(&(u, v)) && rng.random_bool(0.3) {
                    edges.push((u, v));
                }
            }
        }
        let alpha = (0..n * (labels + 1)).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b = (0..edges.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        RegionGraph::new(ClassSet::new(labels).unwrap(), n, edges, alpha, b).unwrap()
    }

    #[test]
    fn cached_selection_matches_full_scan() {
        // assert_matches_full_scan runs inside every round under cfg(test)
        for seed in 0..60 {
            let g = random_instance(seed, 12 + (seed as usize % 20), 1 + seed as usize % 3);
            let params = SolverParams {
                w: 1.0,
                beta_small: -0.5,
                beta_big: 0.5,
                big_classes: vec![1],
                ..Default::default()
            };
            let prior = make_pair_prior(&params, g.classes()).unwrap();
            let r = joint_local_search(&g, &prior, &params).unwrap();
            let report = check_feasibility(&g, &RawAssignment::from_solution(&g, &r.solution));
            assert!(report.is_feasible());
            r.solution.validate(&g).unwrap();
            assert!(r.trace.windows(2).all(|w| w[1] > w[0]));
            assert!((r.trace.last().unwrap() - r.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn never_beats_the_oracle() {
        for seed in 100..140 {
            let g = random_instance(seed, 7, 2);
            let params = SolverParams { w: 1.0, beta_small: 0.3, beta_big: -0.3, ..Default::default() };
            let prior = make_pair_prior(&params, g.classes()).unwrap();
            let exact = oracle_exact(&g, &prior, &params).unwrap();
            let local = joint_local_search(&g, &prior, &params).unwrap();
            assert!(local.objective <= exact.objective + 1e-9);
        }
    }

    #[test]
    fn max_rounds_caps_the_search() {
        let g = random_instance(7, 30, 2);
        let params = SolverParams { max_rounds: 2, beta_small: 1.0, ..Default::default() };
        let prior = make_pair_prior(&params, g.classes()).unwrap();
        let r = joint_local_search(&g, &prior, &params).unwrap();
        assert!(r.rounds <= 2 && r.moves_applied <= 2);
    }

    #[test]
    fn restarts_are_deterministic() {
        let g = random_instance(3, 40, 3);
        let params = SolverParams { restarts: 3, seed: 11, beta_small: 0.2, ..Default::default() };
        let prior = make_pair_prior(&params, g.classes()).unwrap();
        let a = joint_local_search(&g, &prior, &params).unwrap();
        let b = joint_local_search(&g, &prior, &params).unwrap();
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.trace, b.trace);
        let single = joint_local_search(&g, &prior, &SolverParams { restarts: 0, ..params }).unwrap();
        assert!(a.objective >= single.objective);
    }
}
