//! `instancecut` command-line tool.
//!
//! Exit codes: 0 on success, 2 for invalid input or arguments, 3 when a
//! solver fails or produces an infeasible result.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use instancecut::formats::{read_lbm, read_sgm, write_lbm, write_sgm};
use instancecut::{
    build_region_graph, evaluate, extract_instances, grid_search, run_pipeline, solve_graph, synth, watershed,
    InstanceMap, LabeledScene, ParamGrid, PipelineConfig, RegionGraph, SolveResult, SolverKind, SolverParams,
    SuperpixelMap, SynthConfig,
};
use serde::Serialize;

mod render;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<instancecut::Error> for CliError {
    fn from(e: instancecut::Error) -> Self {
        use instancecut::Error as E;
        match e {
            E::Infeasible(_) | E::CycleViolation(_) | E::TooLarge(_) | E::InvalidSolution(_) => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "instancecut", version, about = "Instance segmentation by joint labeling and partitioning of superpixels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene: semantic.sgm, edge.sgm and gt.lbm.
    Synth(SynthArgs),
    /// Watershed superpixels of an edge map.
    Superpixels {
        #[arg(long)]
        edge: PathBuf,
        #[arg(long, default_value_t = 256)]
        levels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Region adjacency graph with aggregated scores, as JSON.
    Graph {
        #[arg(long)]
        superpixels: PathBuf,
        #[arg(long)]
        semantic: PathBuf,
        #[arg(long)]
        edge: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a graph produced by `graph`.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Solution as JSON.
        #[arg(long)]
        out: PathBuf,
        /// With --instances-out, paint the solution onto these superpixels.
        #[arg(long, requires = "instances_out")]
        superpixels: Option<PathBuf>,
        #[arg(long, requires = "superpixels")]
        instances_out: Option<PathBuf>,
    },
    /// Score maps to an instance map in one step.
    Pipeline {
        #[arg(long)]
        semantic: PathBuf,
        #[arg(long)]
        edge: PathBuf,
        #[arg(long, default_value_t = 256)]
        levels: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// Instance map (.lbm).
        #[arg(long)]
        out: PathBuf,
        /// Solve summary as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Match a predicted instance map against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated search over (w, beta_small, beta_big).
    Gridsearch(GridArgs),
    /// Color PNG of an instance map.
    Render {
        #[arg(long)]
        instances: PathBuf,
        /// Draw superpixel borders in gray.
        #[arg(long)]
        superpixels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 5)]
    instances: usize,
    #[arg(long, default_value_t = 8)]
    labels: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    beta_small: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    beta_big: f64,
    #[command(flatten)]
    common: SolverCommon,
}

/// Solver settings shared with `gridsearch`.
#[derive(Args)]
struct SolverCommon {
    /// Comma-separated class labels that use beta_big.
    #[arg(long, value_delimiter = ',')]
    big_classes: Vec<usize>,
    #[arg(long, default_value = "local")]
    solver: SolverKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_rounds: usize,
    /// Extra local-search runs with seeded node orders.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
}

#[derive(Args)]
struct GridArgs {
    /// Scene directory holding semantic.sgm, edge.sgm and gt.lbm; repeat for
    /// each scene.
    #[arg(long = "scene", required = true)]
    scenes: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    w: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    beta_small: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    beta_big: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    folds: usize,
    #[arg(long, default_value_t = 256)]
    levels: usize,
    #[command(flatten)]
    common: SolverCommon,
    #[arg(long)]
    out: PathBuf,
}

impl SolverCommon {
    fn params(&self, w: f64, beta_small: f64, beta_big: f64) -> SolverParams {
        SolverParams {
            w,
            beta_small,
            beta_big,
            big_classes: self.big_classes.clone(),
            max_rounds: self.max_rounds,
            seed: self.seed,
            restarts: self.restarts,
        }
    }
}

impl SolverArgs {
    fn params(&self) -> SolverParams {
        self.common.params(self.w, self.beta_small, self.beta_big)
    }
}

/// Solve output without timing, so files are identical across runs.
#[derive(Serialize)]
struct SolveSummary {
    solver: SolverKind,
    objective: f64,
    rounds: usize,
    moves_applied: usize,
    num_nodes: usize,
    num_components: usize,
    component_of: Vec<usize>,
    label_of: Vec<usize>,
    trace: Vec<f64>,
}

impl SolveSummary {
    fn new(solver: SolverKind, r: &SolveResult) -> Self {
        Self {
            solver,
            objective: r.objective,
            rounds: r.rounds,
            moves_applied: r.moves_applied,
            num_nodes: r.solution.node_count(),
            num_components: r.solution.num_components(),
            component_of: r.solution.component_of().to_vec(),
            label_of: r.solution.label_of().to_vec(),
            trace: r.trace.clone(),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_superpixels(path: &Path) -> CliResult<SuperpixelMap> {
    Ok(SuperpixelMap::from_label_grid(read_lbm(path)?)?)
}

fn read_instances(path: &Path) -> CliResult<InstanceMap> {
    let grid = read_lbm(path)?;
    let map = InstanceMap::from_label_grid(&grid);
    Ok(InstanceMap::new(map.height, map.width, map.instance, map.class)?)
}

fn check_solution(g: &RegionGraph, r: &SolveResult) -> CliResult<()> {
    r.solution.validate(g).map_err(|e| CliError::Solver(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(a) => {
            let scene = synth(&SynthConfig {
                height: a.height,
                width: a.width,
                num_instances: a.instances,
                num_labels: a.labels,
                sigma: a.sigma,
                seed: a.seed,
            })?;
            fs::create_dir_all(&a.out_dir).map_err(|e| io_err(&a.out_dir, e))?;
            write_sgm(a.out_dir.join("semantic.sgm"), &scene.semantic)?;
            write_sgm(a.out_dir.join("edge.sgm"), &scene.edge)?;
            write_lbm(a.out_dir.join("gt.lbm"), &scene.gt.to_label_grid())?;
            eprintln!("{} instances written to {}", scene.gt.instances().len(), a.out_dir.display());
        }
        Command::Superpixels { edge, levels, out } => {
            let spx = watershed(&read_sgm(&edge)?, levels)?;
            write_lbm(&out, &spx.to_label_grid())?;
            eprintln!("{} superpixels", spx.num_regions());
        }
        Command::Graph { superpixels, semantic, edge, out } => {
            let spx = read_superpixels(&superpixels)?;
            let g = build_region_graph(&spx, &read_sgm(&semantic)?, &read_sgm(&edge)?)?;
            write_json(&out, &g)?;
            eprintln!("{} nodes, {} edges", g.node_count(), g.edge_count());
        }
        Command::Solve { graph, solver, out, superpixels, instances_out } => {
            let text = fs::read_to_string(&graph).map_err(|e| io_err(&graph, e))?;
            let g: RegionGraph = serde_json::from_str(&text).map_err(|e| io_err(&graph, e))?;
            let kind = solver.common.solver;
            let r = solve_graph(&g, &solver.params(), kind)?;
            check_solution(&g, &r)?;
            write_json(&out, &SolveSummary::new(kind, &r))?;
            if let (Some(spx_path), Some(inst_path)) = (superpixels, instances_out) {
                let spx = read_superpixels(&spx_path)?;
                if spx.num_regions() != g.node_count() {
                    return Err(CliError::Invalid(format!(
                        "{} has {} regions, graph has {} nodes",
                        spx_path.display(),
                        spx.num_regions(),
                        g.node_count()
                    )));
                }
                write_lbm(&inst_path, &extract_instances(&spx, &r.solution)?.to_label_grid())?;
            }
            eprintln!("objective {} after {} moves", r.objective, r.moves_applied);
        }
        Command::Pipeline { semantic, edge, levels, solver, out, report } => {
            let config =
                PipelineConfig { quantization_levels: levels, solver: solver.common.solver, params: solver.params() };
            let output = run_pipeline(&read_sgm(&semantic)?, &read_sgm(&edge)?, &config)?;
            check_solution(&output.graph, &output.result)?;
            write_lbm(&out, &output.instances.to_label_grid())?;
            if let Some(path) = report {
                write_json(&path, &SolveSummary::new(config.solver, &output.result))?;
            }
            eprintln!(
                "{} superpixels, {} instances, objective {}",
                output.superpixels.num_regions(),
                output.instances.instances().len(),
                output.result.objective
            );
        }
        Command::Eval { pred, gt, out } => {
            let report = evaluate(&read_instances(&pred)?, &read_instances(&gt)?)?;
            match out {
                Some(path) => write_json(&path, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
            }
        }
        Command::Gridsearch(a) => {
            let scenes = a
                .scenes
                .iter()
                .map(|dir| {
                    Ok(LabeledScene {
                        semantic: read_sgm(dir.join("semantic.sgm"))?,
                        edge: read_sgm(dir.join("edge.sgm"))?,
                        gt: read_instances(&dir.join("gt.lbm"))?,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            let grid = ParamGrid { w: a.w, beta_small: a.beta_small, beta_big: a.beta_big };
            let base = PipelineConfig {
                quantization_levels: a.levels,
                solver: a.common.solver,
                params: a.common.params(1.0, -2.0, -2.0),
            };
            let report = grid_search(&scenes, &grid, &base, a.folds)?;
            write_json(&a.out, &report)?;
            let p = &report.best.params;
            eprintln!(
                "best w={} beta_small={} beta_big={} mean F1 {:.4}, held-out F1 {:.4}",
                p.w, p.beta_small, p.beta_big, report.best_mean_f1, report.cv_f1
            );
        }
        Command::Render { instances, superpixels, out } => {
            let map = read_instances(&instances)?;
            let spx = superpixels.map(|p| read_superpixels(&p)).transpose()?;
            render::render_png(&map, spx.as_ref(), &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
