//! Instance segmentation from a semantic score map and an instance-aware
//! edge map: watershed superpixels, a region adjacency graph, and a joint
//! labeling + partitioning solved by local search.

pub mod error;
pub mod eval;
pub mod formats;
pub mod graph;
pub mod grid;
pub mod gridsearch;
pub mod groundtruth;
pub mod model;
pub mod objective;
pub mod pipeline;
pub mod scores;
pub mod solvers;
pub mod synth;
pub mod watershed;

pub use error::{Error, Result};
pub use eval::{evaluate, MatchReport};
pub use graph::{build_region_graph, RegionGraph};
pub use grid::{InstanceMap, LabelGrid, ScoreGrid, SuperpixelMap};
pub use gridsearch::{grid_search, GridSearchReport, LabeledScene, ParamGrid};
pub use model::{make_pair_prior, ClassSet, JointSolution, PairPrior, SolverParams};
pub use objective::{extract_instances, joint_objective};
pub use pipeline::{run_pipeline, solve_graph, PipelineConfig, PipelineOutput, SolverKind};
pub use solvers::SolveResult;
pub use synth::{synth, SynthConfig, SyntheticScene};
pub use watershed::watershed;
