//! Exhaustive parameter search with k-fold cross-validation on mean F1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::graph::{build_region_graph, RegionGraph};
use crate::grid::{InstanceMap, ScoreGrid, SuperpixelMap};
use crate::objective::extract_instances;
use crate::pipeline::{solve_graph, PipelineConfig};
use crate::watershed::watershed;

/// A scene with known instances.
#[derive(Debug, Clone)]
pub struct LabeledScene {
    pub semantic: ScoreGrid,
    pub edge: ScoreGrid,
    pub gt: InstanceMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub w: Vec<f64>,
    pub beta_small: Vec<f64>,
    pub beta_big: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub w: f64,
    pub beta_small: f64,
    pub beta_big: f64,
    /// Mean F1 on each fold.
    pub fold_f1: Vec<f64>,
    /// Mean of `fold_f1`.
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    /// Base config with the winning `(w, beta_small, beta_big)`.
    pub best: PipelineConfig,
    pub best_mean_f1: f64,
    /// Per fold: the point chosen on the other folds and its F1 on this one.
    pub held_out: Vec<(usize, f64)>,
    /// Mean of the held-out F1 values.
    pub cv_f1: f64,
    /// Every point in lexicographic `(w, beta_small, beta_big)` order.
    pub points: Vec<GridPoint>,
    /// One per (point, fold) pair.
    pub fold_evaluations: usize,
    /// One per (point, scene) pair.
    pub solver_invocations: usize,
}

/// Scene `i` belongs to fold `i % folds`. The winner maximizes the mean over
/// folds of the per-fold mean F1; ties go to the lexicographically smallest
/// `(w, beta_small, beta_big)`.
pub fn grid_search(
    scenes: &[LabeledScene],
    grid: &ParamGrid,
    base: &PipelineConfig,
    folds: usize,
) -> Result<GridSearchReport> {
    if grid.w.is_empty() || grid.beta_small.is_empty() || grid.beta_big.is_empty() {
        return Err(Error::InvalidValue("every parameter range must be nonempty".into()));
    }
    if folds < 2 || scenes.len() < folds {
        return Err(Error::InvalidValue(format!(
            "{folds} folds need at least that many scenes (and at least 2), got {}",
            scenes.len()
        )));
    }
    let sorted = |v: &[f64]| -> Result<Vec<f64>> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidValue("parameter values must be finite".into()));
        }
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(v)
    };
    let (ws, bss, bbs) = (sorted(&grid.w)?, sorted(&grid.beta_small)?, sorted(&grid.beta_big)?);
    let mut triples = Vec::new();
    for &w in &ws {
        for &bs in &bss {
            for &bb in &bbs {
                triples.push((w, bs, bb));
            }
        }
    }

    // Superpixels and graphs do not depend on the searched parameters.
    let prepared: Vec<(SuperpixelMap, RegionGraph)> = scenes
        .iter()
        .map(|s| {
            let spx = watershed(&s.edge, base.quantization_levels)?;
            let g = build_region_graph(&spx, &s.semantic, &s.edge)?;
            Ok((spx, g))
        })
        .collect::<Result<_>>()?;

    let units: Vec<(usize, usize)> =
        (0..triples.len()).flat_map(|p| (0..scenes.len()).map(move |s| (p, s))).collect();
    let run = |&(p, s): &(usize, usize)| -> Result<f64> {
        let (w, beta_small, beta_big) = triples[p];
        let mut params = base.params.clone();
        params.w = w;
        params.beta_small = beta_small;
        params.beta_big = beta_big;
        let (spx, g) = &prepared[s];
        let result = solve_graph(g, &params, base.solver)?;
        let pred = extract_instances(spx, &result.solution)?;
        Ok(evaluate(&pred, &scenes[s].gt)?.f1)
    };
    #[cfg(feature = "parallel")]
    let f1: Vec<f64> = {
        use rayon::prelude::*;
        units.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let f1: Vec<f64> = units.iter().map(run).collect::<Result<_>>()?;

    let per_scene = scenes.len();
    let points: Vec<GridPoint> = triples
        .iter()
        .enumerate()
        .map(|(p, &(w, beta_small, beta_big))| {
            let row = &f1[p * per_scene..(p + 1) * per_scene];
            let fold_f1: Vec<f64> = (0..folds)
                .map(|f| {
                    let vals: Vec<f64> = row.iter().skip(f).step_by(folds).copied().collect();
                    vals.iter().sum::<f64>() / vals.len() as f64
                })
                .collect();
            let mean_f1 = fold_f1.iter().sum::<f64>() / folds as f64;
            GridPoint { w, beta_small, beta_big, fold_f1, mean_f1 }
        })
        .collect();

    let argmax = |score: &dyn Fn(&GridPoint) -> f64| -> usize {
        // Strictly better only, so the earliest (smallest) point wins ties.
        (0..points.len()).fold(0, |b, i| if score(&points[i]) > score(&points[b]) { i } else { b })
    };
    let best_idx = argmax(&|p| p.mean_f1);
    let held_out: Vec<(usize, f64)> = (0..folds)
        .map(|f| {
            let i = argmax(&|p| {
                p.fold_f1.iter().enumerate().filter(|&(k, _)| k != f).map(|(_, v)| v).sum::<f64>()
            });
            (i, points[i].fold_f1[f])
        })
        .collect();
    let cv_f1 = held_out.iter().map(|&(_, v)| v).sum::<f64>() / folds as f64;

    let mut best = base.clone();
    best.params.w = points[best_idx].w;
    best.params.beta_small = points[best_idx].beta_small;
    best.params.beta_big = points[best_idx].beta_big;
    Ok(GridSearchReport {
        best,
        best_mean_f1: points[best_idx].mean_f1,
        held_out,
        cv_f1,
        fold_evaluations: points.len() * folds,
        solver_invocations: units.len(),
        points,
    })
}
