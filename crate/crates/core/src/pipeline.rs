//! Score maps to instances: watershed, region graph, solver, painting.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_region_graph, RegionGraph};
use crate::grid::{InstanceMap, ScoreGrid, SuperpixelMap};
use crate::model::{components_where, make_pair_prior, JointSolution, SolverParams};
use crate::objective::{extract_instances, joint_objective};
use crate::solvers::{crf_solve, joint_local_search, multicut_greedy, oracle_exact, SolveResult, Stopwatch};
use crate::watershed::{watershed, DEFAULT_QUANTIZATION_LEVELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Local,
    Oracle,
    Crf,
    Greedy,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Self::Local),
            "oracle" => Ok(Self::Oracle),
            "crf" => Ok(Self::Crf),
            "greedy" => Ok(Self::Greedy),
            other => Err(Error::InvalidValue(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub quantization_levels: usize,
    pub solver: SolverKind,
    pub params: SolverParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            quantization_levels: DEFAULT_QUANTIZATION_LEVELS,
            solver: SolverKind::Local,
            params: SolverParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub superpixels: SuperpixelMap,
    pub graph: RegionGraph,
    pub result: SolveResult,
    pub instances: InstanceMap,
}

/// Runs one solver on a region graph.
///
/// `Crf` labels nodes and takes same-label connected pieces as components.
/// `Greedy` partitions with the multicut baseline, using
/// `θ = b + β(l_u, l_v)` for the per-node argmax labels, labels each cluster
/// by its best summed class score, and finally merges adjacent background
/// clusters, which the joint model does not allow to be separated.
pub fn solve_graph(g: &RegionGraph, params: &SolverParams, solver: SolverKind) -> Result<SolveResult> {
    let prior = make_pair_prior(params, g.classes())?;
    match solver {
        SolverKind::Local => joint_local_search(g, &prior, params),
        SolverKind::Oracle => oracle_exact(g, &prior, params),
        SolverKind::Crf => {
            let start = Stopwatch::start();
            let labeling = crf_solve(g, &prior);
            let solution = JointSolution::from_labeling(g, &labeling)?;
            finish(g, params, solution, start)
        }
        SolverKind::Greedy => {
            let start = Stopwatch::start();
            let argmax: Vec<usize> = (0..g.node_count())
                .map(|u| {
                    let s = g.node_scores(u);
                    (0..s.len()).fold(0, |b, l| if s[l] > s[b] { l } else { b })
                })
                .collect();
            let theta: Vec<f64> = g
                .edges()
                .iter()
                .enumerate()
                .map(|(e, &(u, v))| {
                    let beta = prior.get(argmax[u], argmax[v]).unwrap_or(params.beta_small);
                    g.edge_score(e) + beta
                })
                .collect();
            let partition = multicut_greedy(g, &theta);
            let k = partition.iter().max().map_or(0, |&c| c + 1);
            let mut sums = vec![vec![0.0; g.label_count()]; k];
            for (u, &c) in partition.iter().enumerate() {
                for (acc, s) in sums[c].iter_mut().zip(g.node_scores(u)) {
                    *acc += s;
                }
            }
            let cluster_label: Vec<usize> = sums
                .iter()
                .map(|s| (0..s.len()).fold(0, |b, l| if s[l] > s[b] { l } else { b }))
                .collect();
            let labeling: Vec<usize> = partition.iter().map(|&c| cluster_label[c]).collect();
            // Split clusters are kept apart unless both sides are background.
            let component_of = components_where(g, |u, v| {
                partition[u] == partition[v] || (labeling[u] == 0 && labeling[v] == 0)
            });
            let k = component_of.iter().max().map_or(0, |&c| c + 1);
            let mut label_of = vec![0; k];
            for (u, &c) in component_of.iter().enumerate() {
                label_of[c] = labeling[u];
            }
            let solution = JointSolution::new(g, component_of, label_of)?;
            finish(g, params, solution, start)
        }
    }
}

fn finish(g: &RegionGraph, params: &SolverParams, solution: JointSolution, start: Stopwatch) -> Result<SolveResult> {
    let prior = make_pair_prior(params, g.classes())?;
    let objective = joint_objective(g, &prior, params, &solution)?;
    Ok(SolveResult {
        solution,
        objective,
        rounds: 0,
        moves_applied: 0,
        wall_time: start.elapsed(),
        trace: vec![objective],
    })
}

/// Watershed → region graph → solver → instance map.
pub fn run_pipeline(semantic: &ScoreGrid, edge_map: &ScoreGrid, config: &PipelineConfig) -> Result<PipelineOutput> {
    let superpixels = watershed(edge_map, config.quantization_levels)?;
    let graph = build_region_graph(&superpixels, semantic, edge_map)?;
    let result = solve_graph(&graph, &config.params, config.solver)?;
    let instances = extract_instances(&superpixels, &result.solution)?;
    Ok(PipelineOutput { superpixels, graph, result, instances })
}
