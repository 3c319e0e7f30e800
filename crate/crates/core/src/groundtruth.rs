//! Boundary ground truth for an instance-aware edge detector: boundary
//! derivation from instance maps, pruning away from objects, and the
//! class-balanced loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::for_each_neighbor4;

/// Pruning radius used when none is given.
pub const DEFAULT_PRUNE_RADIUS: usize = 32;
const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryLabel {
    Edge,
    NonEdge,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryGt {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<BoundaryLabel>,
}

impl BoundaryGt {
    pub fn count(&self, label: BoundaryLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

fn check_map(height: usize, width: usize, instance_map: &[u32]) -> Result<()> {
    if instance_map.len() != height * width {
        return Err(Error::Dimension(format!(
            "instance map has {} pixels, expected {height}x{width}",
            instance_map.len()
        )));
    }
    Ok(())
}

/// A pixel is an edge iff some 4-neighbor carries a different instance id
/// and at least one of the two is not background (id 0).
pub fn derive_boundary_gt(height: usize, width: usize, instance_map: &[u32]) -> Result<BoundaryGt> {
    check_map(height, width, instance_map)?;
    let labels = (0..height * width)
        .map(|p| {
            let mut edge = false;
            for_each_neighbor4(p, height, width, |q| {
                let (a, b) = (instance_map[p], instance_map[q]);
                edge |= a != b && (a != 0 || b != 0);
            });
            if edge {
                BoundaryLabel::Edge
            } else {
                BoundaryLabel::NonEdge
            }
        })
        .collect();
    Ok(BoundaryGt { height, width, labels })
}

/// Marks non-edge pixels farther than `radius` (Chebyshev distance) from
/// every object pixel as ignored. Edge pixels are kept as they are.
pub fn prune_gt(gt: &BoundaryGt, instance_map: &[u32], radius: usize) -> Result<BoundaryGt> {
    let (h, w) = (gt.height, gt.width);
    check_map(h, w, instance_map)?;
    // Square dilation of the object mask, separably: rows then columns.
    let mut rows = vec![false; h * w];
    for r in 0..h {
        let mut last_object: Option<usize> = None;
        let mut next_object = vec![usize::MAX; w];
        for c in (0..w).rev() {
            if instance_map[r * w + c] != 0 {
                next_object[c] = c;
            } else if c + 1 < w {
                next_object[c] = next_object[c + 1];
            }
        }
        for c in 0..w {
            if instance_map[r * w + c] != 0 {
                last_object = Some(c);
            }
            let near_left = last_object.is_some_and(|l| c - l <= radius);
            let near_right = next_object[c] != usize::MAX && next_object[c] - c <= radius;
            rows[r * w + c] = near_left || near_right;
        }
    }
    let mut near = vec![false; h * w];
    for c in 0..w {
        let mut last: Option<usize> = None;
        let mut next = vec![usize::MAX; h];
        for r in (0..h).rev() {
            if rows[r * w + c] {
                next[r] = r;
            } else if r + 1 < h {
                next[r] = next[r + 1];
            }
        }
        for r in 0..h {
            if rows[r * w + c] {
                last = Some(r);
            }
            near[r * w + c] =
                last.is_some_and(|l| r - l <= radius) || (next[r] != usize::MAX && next[r] - r <= radius);
        }
    }
    let labels = gt
        .labels
        .iter()
        .zip(&near)
        .map(|(&l, &close)| match l {
            BoundaryLabel::NonEdge if !close => BoundaryLabel::Ignore,
            other => other,
        })
        .collect();
    Ok(BoundaryGt { height: h, width: w, labels })
}

/// Negated class-balanced log-likelihood of one pixel:
/// `-(log p)` for edge pixels and `-alpha · log(1 - p)` for non-edge pixels.
/// `p_edge` is clamped to `[1e-12, 1 - 1e-12]`.
pub fn balanced_loss(p_edge: f64, is_edge: bool, alpha: f64) -> f64 {
    let p = p_edge.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if is_edge {
        -p.ln()
    } else {
        -alpha * (1.0 - p).ln()
    }
}

/// `N₁ / N₀`, the ratio of edge to non-edge pixels; ignored pixels count
/// toward neither.
pub fn balance_coefficient(gt: &BoundaryGt) -> Result<f64> {
    let edges = gt.count(BoundaryLabel::Edge);
    let non_edges = gt.count(BoundaryLabel::NonEdge);
    if edges == 0 || non_edges == 0 {
        return Err(Error::InvalidValue(format!(
            "balance needs both classes, got {edges} edge and {non_edges} non-edge pixels"
        )));
    }
    Ok(edges as f64 / non_edges as f64)
}
