//! Seeded watershed flooding of an edge-score map into superpixels.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{connected_components, for_each_neighbor4, ScoreGrid, SuperpixelMap};

pub const DEFAULT_QUANTIZATION_LEVELS: usize = 256;

/// Affinely maps scores onto integer levels `0..levels`, rounding to the
/// nearest level. A constant map quantizes to all zeros.
pub fn quantize(edge_map: &ScoreGrid, levels: usize) -> Result<Vec<u32>> {
    if edge_map.channels() != 1 {
        return Err(Error::Dimension(format!(
            "edge map must have 1 channel, got {}",
            edge_map.channels()
        )));
    }
    if levels < 2 || levels > u32::MAX as usize {
        return Err(Error::InvalidValue(format!("quantization levels must be >= 2, got {levels}")));
    }
    let values = edge_map.values();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v as f64), hi.max(v as f64))
    });
    if hi == lo {
        return Ok(vec![0; values.len()]);
    }
    let scale = (levels - 1) as f64 / (hi - lo);
    Ok(values
        .iter()
        .map(|&v| ((v as f64 - lo) * scale).round() as u32)
        .collect())
}

/// Superpixels by Meyer flooding on the quantized edge map.
///
/// Seeds are the 4-connected plateaus that have no lower 4-neighbor. The
/// flood pops pixels by (level, insertion order); a pixel is enqueued once,
/// by the first labeled neighbor to reach it, and adopts that neighbor's
/// label. There are no watershed-line pixels. Region ids are numbered by
/// each region's first pixel in row-major order.
pub fn watershed(edge_map: &ScoreGrid, quantization_levels: usize) -> Result<SuperpixelMap> {
    let level = quantize(edge_map, quantization_levels)?;
    let (h, w) = (edge_map.height(), edge_map.width());
    let n = h * w;

    let plateau = connected_components(h, w, &level);
    let num_plateaus = plateau.iter().map(|&p| p as usize + 1).max().unwrap_or(0);
    let mut is_minimum = vec![true; num_plateaus];
    for p in 0..n {
        for_each_neighbor4(p, h, w, |q| {
            if level[q] < level[p] {
                is_minimum[plateau[p] as usize] = false;
            }
        });
    }

    const NONE: u32 = u32::MAX;
    let mut label = vec![NONE; n];
    let mut seed_id = vec![NONE; num_plateaus];
    let mut next_seed = 0;
    for p in 0..n {
        let pl = plateau[p] as usize;
        if is_minimum[pl] {
            if seed_id[pl] == NONE {
                seed_id[pl] = next_seed;
                next_seed += 1;
            }
            label[p] = seed_id[pl];
        }
    }

    let mut flood = Flood {
        height: h,
        width: w,
        level: &level,
        queued: vec![false; n],
        pending: vec![NONE; n],
        heap: BinaryHeap::new(),
        seq: 0,
    };
    for p in 0..n {
        if label[p] != NONE {
            flood.enqueue_neighbors(p, &label);
        }
    }
    while let Some(Reverse((_, _, p))) = flood.heap.pop() {
        label[p] = flood.pending[p];
        flood.enqueue_neighbors(p, &label);
    }

    // Renumber regions by first pixel.
    let mut remap = vec![NONE; next_seed as usize];
    let mut next = 0u32;
    for l in label.iter_mut() {
        let r = &mut remap[*l as usize];
        if *r == NONE {
            *r = next;
            next += 1;
        }
        *l = *r;
    }
    Ok(SuperpixelMap::from_parts_unchecked(h, w, next as usize, label))
}

struct Flood<'a> {
    height: usize,
    width: usize,
    level: &'a [u32],
    queued: Vec<bool>,
    pending: Vec<u32>,
    heap: BinaryHeap<Reverse<(u32, u64, usize)>>,
    seq: u64,
}

impl Flood<'_> {
    fn enqueue_neighbors(&mut self, p: usize, label: &[u32]) {
        for_each_neighbor4(p, self.height, self.width, |q| {
            if label[q] == u32::MAX && !self.queued[q] {
                self.queued[q] = true;
                self.pending[q] = label[p];
                self.heap.push(Reverse((self.level[q], self.seq, q)));
                self.seq += 1;
            }
        });
    }
}
