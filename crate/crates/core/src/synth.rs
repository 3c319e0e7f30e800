//! Seeded synthetic scenes with known instances, for testing the pipeline
//! without any network.
//!
//! Objects are rectangles (with clipped corners) and ellipses on a
//! background canvas. Shapes are trimmed so that every boundary pixel
//! touches a non-boundary pixel of the same object, and objects keep a gap
//! of background between them. Under these conditions the noiseless edge
//! map floods into exactly one superpixel per object.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{connected_components, for_each_neighbor4, InstanceMap, ScoreGrid};
use crate::groundtruth::{derive_boundary_gt, BoundaryLabel};

/// Score given to the true class / a boundary pixel; the alternatives get
/// its negation.
pub const SCORE_MARGIN: f32 = 4.0;
/// Minimum number of background pixels between two objects' boxes.
const OBJECT_GAP: usize = 3;
const BORDER_GAP: usize = 2;
const PLACEMENT_ATTEMPTS: usize = 2000;
const SCENE_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub num_instances: usize,
    /// Instance classes are drawn from `1..=num_labels`.
    pub num_labels: usize,
    /// Standard deviation of the Gaussian noise added to all scores.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { height: 128, width: 128, num_instances: 5, num_labels: 8, sigma: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub config: SynthConfig,
    /// Ground-truth instances with their classes.
    pub gt: InstanceMap,
    /// `num_labels + 1` channels; channel 0 is background.
    pub semantic: ScoreGrid,
    pub edge: ScoreGrid,
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Rect { top: usize, left: usize, h: usize, w: usize },
    Ellipse { top: usize, left: usize, h: usize, w: usize },
}

impl Shape {
    fn bbox(&self) -> (usize, usize, usize, usize) {
        match *self {
            Shape::Rect { top, left, h, w } | Shape::Ellipse { top, left, h, w } => (top, left, h, w),
        }
    }

    fn contains(&self, r: usize, c: usize) -> bool {
        let (top, left, h, w) = self.bbox();
        if r < top || c < left || r >= top + h || c >= left + w {
            return false;
        }
        let (dr, dc) = (r - top, c - left);
        match self {
            Shape::Rect { .. } => {
                let on_row_end = dr == 0 || dr == h - 1;
                let on_col_end = dc == 0 || dc == w - 1;
                !(on_row_end && on_col_end)
            }
            Shape::Ellipse { .. } => {
                let y = (dr as f64 + 0.5) / h as f64 * 2.0 - 1.0;
                let x = (dc as f64 + 0.5) / w as f64 * 2.0 - 1.0;
                x * x + y * y <= 1.0
            }
        }
    }
}

/// Generates a scene; identical configs give bit-identical scenes.
pub fn synth(config: &SynthConfig) -> Result<SyntheticScene> {
    let (h, w) = (config.height, config.width);
    if h == 0 || w == 0 {
        return Err(Error::Dimension("canvas must be nonempty".into()));
    }
    if config.num_labels == 0 || config.num_labels > 255 {
        return Err(Error::InvalidValue(format!("num_labels {} outside 1..=255", config.num_labels)));
    }
    if !(config.sigma.is_finite() && config.sigma >= 0.0) {
        return Err(Error::InvalidValue(format!("sigma must be >= 0, got {}", config.sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..SCENE_ATTEMPTS {
        if let Some(gt) = place_objects(config, &mut rng)? {
            return Ok(render(config, gt, &mut rng));
        }
    }
    Err(Error::Synthesis(format!(
        "could not place {} objects on a {h}x{w} canvas",
        config.num_instances
    )))
}

fn place_objects(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Option<InstanceMap>> {
    let (h, w) = (config.height, config.width);
    let max_extent = (h.min(w) / 4).max(8);
    let min_extent = 8.min(max_extent);
    let mut gt = InstanceMap::background(h, w);
    let mut boxes: Vec<(usize, usize, usize, usize)> = Vec::new();
    for id in 1..=config.num_instances as u32 {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let sh = rng.random_range(min_extent..=max_extent);
            let sw = rng.random_range(min_extent..=max_extent);
            if sh + 2 * BORDER_GAP > h || sw + 2 * BORDER_GAP > w {
                return Err(Error::Synthesis(format!("canvas {h}x{w} too small for objects")));
            }
            let top = rng.random_range(BORDER_GAP..=h - BORDER_GAP - sh);
            let left = rng.random_range(BORDER_GAP..=w - BORDER_GAP - sw);
            let is_rect = rng.random_bool(0.5);
            let class = rng.random_range(1..=config.num_labels) as u8;
            let bbox = (top, left, sh, sw);
            if boxes.iter().any(|&b| boxes_too_close(b, bbox)) {
                continue;
            }
            let shape = if is_rect {
                Shape::Rect { top, left, h: sh, w: sw }
            } else {
                Shape::Ellipse { top, left, h: sh, w: sw }
            };
            let Some(mask) = rasterize(shape, h, w) else { continue };
            for p in mask {
                gt.instance[p] = id;
                gt.class[p] = class;
            }
            boxes.push(bbox);
            placed = true;
            break;
        }
        if !placed {
            return Ok(None);
        }
    }
    Ok(flood_safe(&gt).then_some(gt))
}

fn boxes_too_close(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> bool {
    let apart = |s0: usize, l0: usize, s1: usize, l1: usize| s0 + l0 + OBJECT_GAP <= s1 || s1 + l1 + OBJECT_GAP <= s0;
    !(apart(a.0, a.2, b.0, b.2) || apart(a.1, a.3, b.1, b.3))
}

/// Pixels of the shape after trimming boundary pixels without an interior
/// neighbor; `None` if the result is degenerate.
fn rasterize(shape: Shape, h: usize, w: usize) -> Option<Vec<usize>> {
    let (top, left, sh, sw) = shape.bbox();
    let mut inside = vec![false; h * w];
    for r in top..top + sh {
        for c in left..left + sw {
            inside[r * w + c] = shape.contains(r, c);
        }
    }
    loop {
        let interior: Vec<bool> = (0..h * w)
            .map(|p| {
                let mut all = inside[p];
                for_each_neighbor4(p, h, w, |q| all &= inside[q]);
                all
            })
            .collect();
        let mut removed = false;
        for p in 0..h * w {
            if inside[p] && !interior[p] {
                let mut touches = false;
                for_each_neighbor4(p, h, w, |q| touches |= interior[q]);
                if !touches {
                    inside[p] = false;
                    removed = true;
                }
            }
        }
        if !removed {
            let pixels: Vec<usize> = (0..h * w).filter(|&p| inside[p]).collect();
            let core = interior.iter().filter(|&&i| i).count();
            if core == 0 || !single_component(h, w, &inside) || !single_component(h, w, &interior) {
                return None;
            }
            return Some(pixels);
        }
    }
}

fn single_component(h: usize, w: usize, mask: &[bool]) -> bool {
    let values: Vec<u32> = mask.iter().map(|&m| m as u32).collect();
    let cc = connected_components(h, w, &values);
    let mut ids: Vec<u32> = cc.iter().zip(mask).filter(|(_, &m)| m).map(|(&c, _)| c).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len() == 1
}

/// Every boundary pixel has a non-boundary 4-neighbor of the same instance.
fn flood_safe(gt: &InstanceMap) -> bool {
    let (h, w) = (gt.height, gt.width);
    let boundary = derive_boundary_gt(h, w, &gt.instance).expect("dimensions match");
    (0..h * w).all(|p| {
        if boundary.labels[p] != BoundaryLabel::Edge {
            return true;
        }
        let mut ok = false;
        for_each_neighbor4(p, h, w, |q| {
            ok |= boundary.labels[q] == BoundaryLabel::NonEdge && gt.instance[q] == gt.instance[p];
        });
        ok
    })
}

fn render(config: &SynthConfig, gt: InstanceMap, rng: &mut ChaCha8Rng) -> SyntheticScene {
    let (h, w) = (config.height, config.width);
    let channels = config.num_labels + 1;
    let m = SCORE_MARGIN;
    let noise = Normal::new(0.0, config.sigma).expect("sigma validated");
    let mut sample = |v: f32| -> f32 {
        if config.sigma > 0.0 {
            v + noise.sample(rng) as f32
        } else {
            v
        }
    };
    let mut semantic = Vec::with_capacity(h * w * channels);
    for p in 0..h * w {
        let class = gt.class[p] as usize;
        for k in 0..channels {
            semantic.push(sample(if k == class { m } else { -m }));
        }
    }
    let boundary = derive_boundary_gt(h, w, &gt.instance).expect("dimensions match");
    let edge: Vec<f32> = boundary
        .labels
        .iter()
        .map(|&l| sample(if l == BoundaryLabel::Edge { m } else { -m }))
        .collect();
    SyntheticScene {
        config: config.clone(),
        semantic: ScoreGrid::new(h, w, channels, semantic).expect("finite scores"),
        edge: ScoreGrid::new(h, w, 1, edge).expect("finite scores"),
        gt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_scores_match_ground_truth() {
        let scene = synth(&SynthConfig { num_instances: 6, seed: 3, ..Default::default() }).unwrap();
        assert_eq!(scene.gt.instances().len(), 6);
        let boundary = derive_boundary_gt(128, 128, &scene.gt.instance).unwrap();
        for p in 0..128 * 128 {
            let px = scene.semantic.pixel(p);
            let argmax = (0..px.len()).max_by(|&a, &b| px[a].total_cmp(&px[b]).then(b.cmp(&a))).unwrap();
            assert_eq!(argmax, scene.gt.class[p] as usize);
            let is_edge = boundary.labels[p] == BoundaryLabel::Edge;
            assert_eq!(scene.edge.get(p, 0) > 0.0, is_edge);
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let cfg = SynthConfig { sigma: 0.5, seed: 42, ..Default::default() };
        let a = synth(&cfg).unwrap();
        let b = synth(&cfg).unwrap();
        assert_eq!(a, b);
        let c = synth(&SynthConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.gt, c.gt);
    }

    #[test]
    fn too_small_canvas_fails() {
        let cfg = SynthConfig { height: 10, width: 10, num_instances: 3, ..Default::default() };
        assert!(matches!(synth(&cfg), Err(Error::Synthesis(_))));
    }

    #[test]
    fn rect_corners_are_clipped() {
        let mask = rasterize(Shape::Rect { top: 2, left: 2, h: 5, w: 6 }, 10, 10).unwrap();
        assert_eq!(mask.len(), 5 * 6 - 4);
        assert!(!mask.contains(&22));
    }
}
