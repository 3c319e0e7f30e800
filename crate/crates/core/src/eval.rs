//! Instance-level evaluation against ground truth.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::InstanceMap;

/// Minimum IoU for a predicted instance to count as a match.
pub const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: u8,
    pub num_pred: usize,
    pub num_gt: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub num_pred: usize,
    pub num_gt: usize,
    pub matched: usize,
    /// Matched / predicted; 1 when nothing was predicted.
    pub precision: f64,
    /// Matched / ground truth; 1 when there is no ground truth.
    pub recall: f64,
    pub f1: f64,
    /// Unweighted means over the classes present in either map.
    pub mean_class_precision: f64,
    pub mean_class_recall: f64,
    /// Both maps describe the same pixel sets with the same classes, up to a
    /// renaming of instance ids.
    pub exact_match: bool,
    /// `(pred id, gt id, iou)` for every accepted match.
    pub matches: Vec<(u32, u32, f64)>,
    /// Best IoU with any same-class prediction, per ground-truth id.
    pub best_iou: Vec<(u32, f64)>,
    pub per_class: Vec<ClassReport>,
}

/// Greedy one-to-one matching by descending IoU (ties by pred id, then gt
/// id) between same-class instances with IoU ≥ 0.5.
pub fn evaluate(pred: &InstanceMap, gt: &InstanceMap) -> Result<MatchReport> {
    if pred.height != gt.height || pred.width != gt.width {
        return Err(Error::Dimension(format!(
            "prediction is {}x{}, ground truth {}x{}",
            pred.height, pred.width, gt.height, gt.width
        )));
    }
    let pred_inst = pred.instances();
    let gt_inst = gt.instances();
    let area = |m: &InstanceMap| {
        let mut a: HashMap<u32, usize> = HashMap::new();
        for &id in &m.instance {
            *a.entry(id).or_default() += 1;
        }
        a
    };
    let (pred_area, gt_area) = (area(pred), area(gt));
    let mut overlap: HashMap<(u32, u32), usize> = HashMap::new();
    for (&p, &g) in pred.instance.iter().zip(&gt.instance) {
        if p != 0 && g != 0 {
            *overlap.entry((p, g)).or_default() += 1;
        }
    }
    let pred_class: HashMap<u32, u8> = pred_inst.iter().copied().collect();
    let gt_class: HashMap<u32, u8> = gt_inst.iter().copied().collect();

    let mut best: BTreeMap<u32, f64> = gt_inst.iter().map(|&(g, _)| (g, 0.0)).collect();
    let mut candidates = Vec::new();
    for (&(p, g), &inter) in &overlap {
        if pred_class[&p] != gt_class[&g] {
            continue;
        }
        let iou = inter as f64 / (pred_area[&p] + gt_area[&g] - inter) as f64;
        let b = best.get_mut(&g).expect("gt id listed");
        *b = b.max(iou);
        if iou >= MATCH_IOU {
            candidates.push((p, g, iou));
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut pred_used = HashSet::new();
    let mut gt_used = HashSet::new();
    let mut matches = Vec::new();
    for (p, g, iou) in candidates {
        if pred_used.contains(&p) || gt_used.contains(&g) {
            continue;
        }
        pred_used.insert(p);
        gt_used.insert(g);
        matches.push((p, g, iou));
    }

    let mut per_class: BTreeMap<u8, ClassReport> = BTreeMap::new();
    for &(_, c) in &pred_inst {
        class_entry(&mut per_class, c).num_pred += 1;
    }
    for &(_, c) in &gt_inst {
        class_entry(&mut per_class, c).num_gt += 1;
    }
    for &(_, g, _) in &matches {
        class_entry(&mut per_class, gt_class[&g]).matched += 1;
    }

    for c in per_class.values_mut() {
        (c.precision, c.recall) = ratios(c.matched, c.num_pred, c.num_gt);
    }
    let classes = per_class.len().max(1) as f64;
    let (mean_class_precision, mean_class_recall) = if per_class.is_empty() {
        (1.0, 1.0)
    } else {
        (
            per_class.values().map(|c| c.precision).sum::<f64>() / classes,
            per_class.values().map(|c| c.recall).sum::<f64>() / classes,
        )
    };
    let matched = matches.len();
    let (precision, recall) = ratios(matched, pred_inst.len(), gt_inst.len());
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(MatchReport {
        num_pred: pred_inst.len(),
        num_gt: gt_inst.len(),
        matched,
        precision,
        recall,
        f1,
        mean_class_precision,
        mean_class_recall,
        exact_match: same_up_to_renaming(pred, gt),
        matches,
        best_iou: best.into_iter().collect(),
        per_class: per_class.into_values().collect(),
    })
}

fn ratios(matched: usize, num_pred: usize, num_gt: usize) -> (f64, f64) {
    let precision = if num_pred == 0 { 1.0 } else { matched as f64 / num_pred as f64 };
    let recall = if num_gt == 0 { 1.0 } else { matched as f64 / num_gt as f64 };
    (precision, recall)
}

fn class_entry(map: &mut BTreeMap<u8, ClassReport>, class: u8) -> &mut ClassReport {
    map.entry(class)
        .or_insert(ClassReport { class, num_pred: 0, num_gt: 0, matched: 0, precision: 0.0, recall: 0.0 })
}

fn same_up_to_renaming(a: &InstanceMap, b: &InstanceMap) -> bool {
    if a.class != b.class {
        return false;
    }
    let mut forward: HashMap<u32, u32> = HashMap::new();
    let mut backward: HashMap<u32, u32> = HashMap::new();
    for (&x, &y) in a.instance.iter().zip(&b.instance) {
        if (x == 0) != (y == 0) {
            return false;
        }
        if *forward.entry(x).or_insert(y) != y || *backward.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}
