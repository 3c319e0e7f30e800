//! Preparation of per-pixel network scores.

use crate::error::{Error, Result};
use crate::grid::ScoreGrid;

/// Reduces a full semantic score map to background + instance classes.
///
/// Channel 0 of the output is the per-pixel maximum over every channel not
/// listed in `instance_classes`; channels `1..=L` copy the instance-class
/// channels in the given order.
pub fn derive_background(semantic_full: &ScoreGrid, instance_classes: &[usize]) -> Result<ScoreGrid> {
    let c = semantic_full.channels();
    if instance_classes.is_empty() {
        return Err(Error::InvalidValue("instance class list is empty".into()));
    }
    let mut is_instance = vec![false; c];
    for &k in instance_classes {
        if k >= c {
            return Err(Error::InvalidValue(format!("channel {k} out of range for {c} channels")));
        }
        if is_instance[k] {
            return Err(Error::InvalidValue(format!("channel {k} listed twice")));
        }
        is_instance[k] = true;
    }
    if instance_classes.len() == c {
        return Err(Error::InvalidValue(
            "every channel is an instance class; no background channels remain".into(),
        ));
    }
    let out_channels = instance_classes.len() + 1;
    let mut values = Vec::with_capacity(semantic_full.num_pixels() * out_channels);
    for p in 0..semantic_full.num_pixels() {
        let px = semantic_full.pixel(p);
        let bg = px
            .iter()
            .zip(&is_instance)
            .filter(|(_, &inst)| !inst)
            .map(|(&v, _)| v)
            .fold(f32::NEG_INFINITY, f32::max);
        values.push(bg);
        values.extend(instance_classes.iter().map(|&k| px[k]));
    }
    ScoreGrid::new(semantic_full.height(), semantic_full.width(), out_channels, values)
}

/// Logistic map of an edge score to an edge probability.
pub fn sigmoid_edge_probability(score: f64) -> f64 {
    if score >= 0.0 {
        1.0 / (1.0 + (-score).exp())
    } else {
        let e = score.exp();
        e / (1.0 + e)
    }
}
