use crate::graph::RegionGraph;
use crate::model::PairPrior;

/// Labeling by iterated conditional modes.
///
/// Starts from the per-node argmax of the class scores and sweeps nodes in
/// id order, moving each to its conditional argmax. Ties go to the smaller
/// label; a node only moves when the new label is strictly better than its
/// current one, so every sweep either changes nothing or increases the CRF
/// score.
pub fn crf_solve(g: &RegionGraph, prior: &PairPrior) -> Vec<usize> {
    let labels = g.label_count();
    let mut labeling: Vec<usize> = (0..g.node_count())
        .map(|u| argmax_first(g.node_scores(u)))
        .collect();
    let mut local = vec![0.0; labels];
    loop {
        let mut changed = false;
        for u in 0..g.node_count() {
            local.copy_from_slice(g.node_scores(u));
            for &(v, e) in g.neighbors(u) {
                let lv = labeling[v];
                let b = g.edge_score(e);
                for (l, acc) in local.iter_mut().enumerate() {
                    if l != lv {
                        *acc += b + prior.finite(l, lv);
                    }
                }
            }
            let best = argmax_first(&local);
            if local[best] > local[labeling[u]] {
                labeling[u] = best;
                changed = true;
            }
        }
        if !changed {
            return labeling;
        }
    }
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_pair_prior, ClassSet, SolverParams};
    use crate::objective::crf_objective;

    #[test]
    fn edgeless_graph_takes_unary_argmax() {
        let classes = ClassSet::new(2).unwrap();
        let g = RegionGraph::new(classes, 1, vec![], vec![0.0, 3.0, 3.0], vec![]).unwrap();
        let prior = make_pair_prior(&SolverParams::default(), classes).unwrap();
        // tie between 1 and 2 goes to the smaller label
        assert_eq!(crf_solve(&g, &prior), vec![1]);
    }

    #[test]
    fn ambiguous_node_copies_neighbor() {
        let classes = ClassSet::new(2).unwrap();
        let params = SolverParams { beta_small: -10.0, beta_big: -10.0, ..Default::default() };
        let prior = make_pair_prior(&params, classes).unwrap();
        // node 0 is confidently class 2; node 1 slightly prefers class 1
        let alpha = vec![-5.0, -5.0, 5.0, -5.0, 0.1, 0.0];
        let g = RegionGraph::new(classes, 2, vec![(0, 1)], alpha, vec![0.0]).unwrap();
        let labeling = crf_solve(&g, &prior);
        assert_eq!(labeling, vec![2, 2]);
        assert!(crf_objective(&g, &prior, &labeling) > crf_objective(&g, &prior, &[2, 1]));
    }
}
