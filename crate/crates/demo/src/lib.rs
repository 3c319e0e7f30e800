//! Browser demo: generate a synthetic scene, look at its superpixels, and
//! re-solve with different boundary weights.
//!
//! [`Session`] holds all state and is plain Rust; [`Demo`] wraps it for
//! JavaScript.

use instancecut::{
    build_region_graph, evaluate, extract_instances, solve_graph, synth, watershed, InstanceMap, MatchReport,
    RegionGraph, Result, SolverKind, SolverParams, SuperpixelMap, SynthConfig, SyntheticScene,
};
use wasm_bindgen::prelude::*;

/// Layers that [`Session::render`] can paint.
pub const LAYERS: [&str; 5] = ["edge", "semantic", "superpixels", "instances", "truth"];

pub struct Session {
    scene: SyntheticScene,
    superpixels: SuperpixelMap,
    graph: RegionGraph,
    instances: Option<InstanceMap>,
    report: Option<MatchReport>,
    objective: f64,
}

impl Session {
    pub fn generate(config: &SynthConfig) -> Result<Self> {
        let scene = synth(config)?;
        let superpixels = watershed(&scene.edge, 256)?;
        let graph = build_region_graph(&superpixels, &scene.semantic, &scene.edge)?;
        Ok(Self { scene, superpixels, graph, instances: None, report: None, objective: f64::NAN })
    }

    pub fn superpixel_count(&self) -> usize {
        self.superpixels.num_regions()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Solves the region graph and scores the result against ground truth.
    pub fn solve(&mut self, params: &SolverParams, solver: SolverKind) -> Result<&MatchReport> {
        let result = solve_graph(&self.graph, params, solver)?;
        let instances = extract_instances(&self.superpixels, &result.solution)?;
        self.objective = result.objective;
        let report = evaluate(&instances, &self.scene.gt)?;
        self.instances = Some(instances);
        Ok(self.report.insert(report))
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn report(&self) -> Option<&MatchReport> {
        self.report.as_ref()
    }

    pub fn width(&self) -> usize {
        self.scene.gt.width
    }

    pub fn height(&self) -> usize {
        self.scene.gt.height
    }

    /// RGBA bytes, row-major, ready for a canvas `ImageData`. Unknown layer
    /// names and `instances` before any solve paint black.
    pub fn render(&self, layer: &str) -> Vec<u8> {
        let n = self.scene.gt.num_pixels();
        let rgb: Box<dyn Fn(usize) -> [u8; 3]> = match layer {
            "edge" => {
                let (lo, hi) = min_max(self.scene.edge.values());
                Box::new(move |p| gray(self.scene.edge.get(p, 0), lo, hi))
            }
            "semantic" => Box::new(|p| {
                let px = self.scene.semantic.pixel(p);
                let best = (0..px.len()).fold(0, |b, k| if px[k] > px[b] { k } else { b });
                palette(best as u32)
            }),
            "superpixels" => Box::new(|p| {
                if self.is_border(p) {
                    [255, 255, 255]
                } else {
                    palette(self.superpixels.region(p) as u32 + 1)
                }
            }),
            "instances" => match &self.instances {
                Some(m) => Box::new(move |p| palette(m.instance[p])),
                None => Box::new(|_| [0, 0, 0]),
            },
            "truth" => Box::new(|p| palette(self.scene.gt.instance[p])),
            _ => Box::new(|_| [0, 0, 0]),
        };
        let mut out = Vec::with_capacity(n * 4);
        for p in 0..n {
            out.extend(rgb(p));
            out.push(255);
        }
        out
    }

    fn is_border(&self, p: usize) -> bool {
        let (w, h) = (self.width(), self.height());
        let (r, c) = (p / w, p % w);
        let s = &self.superpixels;
        (c + 1 < w && s.region(p) != s.region(p + 1)) || (r + 1 < h && s.region(p) != s.region(p + w))
    }
}

fn min_max(values: &[f32]) -> (f32, f32) {
    values.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn gray(v: f32, lo: f32, hi: f32) -> [u8; 3] {
    let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    let g = (t * 255.0).round() as u8;
    [g, g, g]
}

/// Id 0 is black; other ids get well-separated hues.
fn palette(id: u32) -> [u8; 3] {
    if id == 0 {
        return [0, 0, 0];
    }
    let h = (id as f32 * 0.618_034).fract() * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let s = |v: f32| (60.0 + 195.0 * v) as u8;
    [s(r), s(g), s(b)]
}

fn js_err(e: instancecut::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

#[wasm_bindgen]
impl Demo {
    /// Generates a scene and its superpixels.
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, instances: usize, sigma: f64, seed: u64) -> std::result::Result<Demo, JsError> {
        let config =
            SynthConfig { height: size, width: size, num_instances: instances, num_labels: 8, sigma, seed };
        Session::generate(&config).map(|session| Demo { session }).map_err(js_err)
    }

    pub fn width(&self) -> usize {
        self.session.width()
    }

    pub fn height(&self) -> usize {
        self.session.height()
    }

    #[wasm_bindgen(js_name = superpixelCount)]
    pub fn superpixel_count(&self) -> usize {
        self.session.superpixel_count()
    }

    #[wasm_bindgen(js_name = edgeCount)]
    pub fn edge_count(&self) -> usize {
        self.session.edge_count()
    }

    /// Solves with the given weights; returns a one-line summary.
    pub fn solve(&mut self, w: f64, beta: f64, solver: &str) -> std::result::Result<String, JsError> {
        let kind: SolverKind = solver.parse().map_err(js_err)?;
        let params = SolverParams { w, beta_small: beta, beta_big: beta, ..Default::default() };
        let r = self.session.solve(&params, kind).map_err(js_err)?;
        Ok(format!(
            "{} predicted / {} true instances, precision {:.2}, recall {:.2}{}",
            r.num_pred,
            r.num_gt,
            r.precision,
            r.recall,
            if r.exact_match { ", exact" } else { "" }
        ))
    }

    pub fn objective(&self) -> f64 {
        self.session.objective()
    }

    /// RGBA pixels of one of `edge`, `semantic`, `superpixels`,
    /// `instances`, `truth`.
    pub fn render(&self, layer: &str) -> Vec<u8> {
        self.session.render(layer)
    }
}
