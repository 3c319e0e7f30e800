use crate::error::{Error, Result};
use crate::graph::RegionGraph;
use crate::model::{JointSolution, PairPrior, SolverParams};
use crate::objective::joint_objective;

use super::{SolveResult, Stopwatch};

pub const ORACLE_MAX_NODES: usize = 9;
pub const ORACLE_MAX_LABELS: usize = 3;

/// Exact maximizer by enumeration.
///
/// Walks every set partition of the nodes as a restricted growth string in
/// lexicographic order, drops partitions with a disconnected block, then
/// enumerates all labelings of the blocks (also lexicographically),
/// skipping background/background cuts. Only strictly better candidates
/// replace the incumbent, so ties resolve to the lexicographically smallest
/// `(component_of, label_of)`.
pub fn oracle_exact(g: &RegionGraph, prior: &PairPrior, params: &SolverParams) -> Result<SolveResult> {
    let start = Stopwatch::start();
    let n = g.node_count();
    if n > ORACLE_MAX_NODES || g.num_labels() > ORACLE_MAX_LABELS {
        return Err(Error::TooLarge(format!(
            "{n} nodes / {} labels (limits {ORACLE_MAX_NODES} / {ORACLE_MAX_LABELS})",
            g.num_labels()
        )));
    }
    params.validate(g.classes())?;
    let labels = g.label_count();
    let w = params.w;

    let mut rgs = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    let mut search = LabelSearch::default();
    loop {
        let k = rgs.iter().max().map_or(0, |&m| m + 1);
        if blocks_connected(g, &rgs, k) {
            search.prepare(g, &rgs, k, labels);
            if let Some((value, label_of)) = search.best_labeling(prior, w, labels) {
                if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
                    best = Some((value, rgs.clone(), label_of));
                }
            }
        }
        if !next_rgs(&mut rgs) {
            break;
        }
    }
    let (_, component_of, label_of) = best.expect("the single-block partition is always feasible");
    let solution = JointSolution::new(g, component_of, label_of)?;
    let objective = joint_objective(g, prior, params, &solution)?;
    Ok(SolveResult {
        solution,
        objective,
        rounds: 1,
        moves_applied: 0,
        wall_time: start.elapsed(),
        trace: vec![objective],
    })
}

/// Advances a restricted growth string (`a[0] = 0`, `a[i] <= 1 + max a[..i]`)
/// to its lexicographic successor.
fn next_rgs(a: &mut [usize]) -> bool {
    let n = a.len();
    for i in (1..n).rev() {
        let prefix_max = a[..i].iter().copied().max().unwrap_or(0);
        if a[i] <= prefix_max {
            a[i] += 1;
            for x in &mut a[i + 1..] {
                *x = 0;
            }
            return true;
        }
    }
    false
}

fn blocks_connected(g: &RegionGraph, block_of: &[usize], k: usize) -> bool {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut reached = 0;
    let mut stack = Vec::new();
    for b in 0..k {
        let s = block_of.iter().position(|&x| x == b).expect("rgs blocks are nonempty");
        seen[s] = true;
        reached += 1;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &(v, _) in g.neighbors(u) {
                if !seen[v] && block_of[v] == b {
                    seen[v] = true;
                    reached += 1;
                    stack.push(v);
                }
            }
        }
    }
    reached == n
}

/// Block-level data for enumerating labelings of one partition.
#[derive(Default)]
struct LabelSearch {
    k: usize,
    /// `unary[c * labels + l]`: summed class scores of block `c`.
    unary: Vec<f64>,
    /// For each block, `(earlier adjacent block, summed b, edge count)`.
    earlier: Vec<Vec<(usize, f64, usize)>>,
}

impl LabelSearch {
    fn prepare(&mut self, g: &RegionGraph, block_of: &[usize], k: usize, labels: usize) {
        self.k = k;
        self.unary.clear();
        self.unary.resize(k * labels, 0.0);
        for (u, &c) in block_of.iter().enumerate() {
            for l in 0..labels {
                self.unary[c * labels + l] += g.node_score(u, l);
            }
        }
        self.earlier.clear();
        self.earlier.resize(k, Vec::new());
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            let (cu, cv) = (block_of[u], block_of[v]);
            if cu == cv {
                continue;
            }
            let (lo, hi) = (cu.min(cv), cu.max(cv));
            let list = &mut self.earlier[hi];
            match list.iter_mut().find(|(d, _, _)| *d == lo) {
                Some(entry) => {
                    entry.1 += g.edge_score(e);
                    entry.2 += 1;
                }
                None => list.push((lo, g.edge_score(e), 1)),
            }
        }
    }

    fn best_labeling(&self, prior: &PairPrior, w: f64, labels: usize) -> Option<(f64, Vec<usize>)> {
        let mut current = vec![0usize; self.k];
        let mut best = None;
        self.descend(0, 0.0, &mut current, &mut best, prior, w, labels);
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        c: usize,
        acc: f64,
        current: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
        prior: &PairPrior,
        w: f64,
        labels: usize,
    ) {
        if c == self.k {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                *best = Some((acc, current.clone()));
            }
            return;
        }
        'label: for l in 0..labels {
            let mut value = acc + self.unary[c * labels + l];
            let mut pair = 0.0;
            for &(d, bsum, count) in &self.earlier[c] {
                match prior.get(l, current[d]) {
                    Some(beta) => pair += bsum + count as f64 * beta,
                    None => continue 'label,
                }
            }
            value += w * pair;
            current[c] = l;
            self.descend(c + 1, value, current, best, prior, w, labels);
        }
    }
}
