mod common;

use common::*;
use instancecut::groundtruth::{
    balance_coefficient, balanced_loss, derive_boundary_gt, prune_gt, BoundaryGt, BoundaryLabel, DEFAULT_PRUNE_RADIUS,
};
use instancecut::{synth, SynthConfig};
use rand::Rng;

fn random_instance_map(r: &mut rand_chacha::ChaCha8Rng, h: usize, w: usize) -> Vec<u32> {
    // Mostly background with a few blocky instances so every case occurs.
    let mut m = vec![0u32; h * w];
    for id in 1..=r.random_range(1..=4u32) {
        let (r0, c0) = (r.random_range(0..h), r.random_range(0..w));
        let (dh, dw) = (r.random_range(1..=h / 2), r.random_range(1..=w / 2));
        for rr in r0..(r0 + dh).min(h) {
            for cc in c0..(c0 + dw).min(w) {
                m[rr * w + cc] = id;
            }
        }
    }
    m
}

fn chebyshev_near(h: usize, w: usize, map: &[u32], p: usize, radius: usize) -> bool {
    let (r, c) = (p / w, p % w);
    (0..h * w).any(|q| map[q] != 0 && (q / w).abs_diff(r).max((q % w).abs_diff(c)) <= radius)
}

#[test]
fn boundary_status_is_symmetric_across_each_transition() {
    for seed in 0..50 {
        let mut r = rng(3000 + seed);
        let map = random_instance_map(&mut r, 12, 12);
        let gt = derive_boundary_gt(12, 12, &map).unwrap();
        for p in 0..144 {
            for q in [p + 1, p + 12] {
                let horizontal = q == p + 1 && p % 12 != 11;
                let vertical = q == p + 12 && q < 144;
                if (horizontal || vertical) && map[p] != map[q] {
                    assert_eq!(gt.labels[p], BoundaryLabel::Edge);
                    assert_eq!(gt.labels[q], BoundaryLabel::Edge);
                }
            }
        }
        let want = boundary_by_offsets(12, 12, &map);
        let got: Vec<bool> = gt.labels.iter().map(|&l| l == BoundaryLabel::Edge).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn background_transitions_do_not_make_edges() {
    let gt = derive_boundary_gt(2, 2, &[0, 0, 0, 0]).unwrap();
    assert_eq!(gt.count(BoundaryLabel::Edge), 0);
}

#[test]
fn pruning_matches_chebyshev_enumeration_and_never_flips() {
    for seed in 0..40 {
        let mut r = rng(4000 + seed);
        let (h, w) = (r.random_range(4..=14), r.random_range(4..=14));
        let map = random_instance_map(&mut r, h, w);
        let gt = derive_boundary_gt(h, w, &map).unwrap();
        for radius in [0, 1, 2, 5, 20] {
            let pruned = prune_gt(&gt, &map, radius).unwrap();
            for p in 0..h * w {
                let want = match gt.labels[p] {
                    BoundaryLabel::NonEdge if !chebyshev_near(h, w, &map, p, radius) => BoundaryLabel::Ignore,
                    other => other,
                };
                assert_eq!(pruned.labels[p], want, "seed {seed} radius {radius} pixel {p}");
            }
            assert_eq!(pruned.count(BoundaryLabel::Edge), gt.count(BoundaryLabel::Edge));
        }
        // Radius zero keeps non-edge pixels only inside objects.
        let zero = prune_gt(&gt, &map, 0).unwrap();
        for p in 0..h * w {
            if zero.labels[p] == BoundaryLabel::NonEdge {
                assert_ne!(map[p], 0);
            }
        }
        // A radius past the diagonal ignores nothing, unless there is no
        // object at all.
        if map.iter().any(|&id| id != 0) {
            assert_eq!(prune_gt(&gt, &map, h + w).unwrap().count(BoundaryLabel::Ignore), 0);
        }
    }
}

#[test]
fn retained_edge_fraction_two_ways() {
    // Sparse objects on a wide canvas, pruned at the default radius.
    let scene = synth(&SynthConfig { height: 160, width: 320, num_instances: 6, seed: 11, ..Default::default() }).unwrap();
    let (h, w) = (scene.gt.height, scene.gt.width);
    let map = &scene.gt.instance;
    let pruned = prune_gt(&derive_boundary_gt(h, w, map).unwrap(), map, DEFAULT_PRUNE_RADIUS).unwrap();

    let by_mask = pruned.count(BoundaryLabel::Edge) as f64
        / (pruned.count(BoundaryLabel::Edge) + pruned.count(BoundaryLabel::NonEdge)) as f64;
    // Edges straight from the neighbor rule, retained pixels from a
    // brute-force Chebyshev distance to every object pixel.
    let edges = boundary_by_offsets(h, w, map).iter().filter(|&&e| e).count();
    let objects: Vec<(usize, usize)> = (0..h * w).filter(|&p| map[p] != 0).map(|p| (p / w, p % w)).collect();
    let retained = (0..h * w)
        .filter(|&p| {
            let (r, c) = (p / w, p % w);
            objects.iter().any(|&(or, oc)| or.abs_diff(r).max(oc.abs_diff(c)) <= DEFAULT_PRUNE_RADIUS)
        })
        .count();
    let direct = edges as f64 / retained as f64;
    assert_eq!(by_mask, direct);
    assert!(direct > 0.01 && direct < 0.2, "{direct}");
}

#[test]
fn dataset_loss_of_constant_predictor() {
    for seed in 0..5 {
        let scene = synth(&SynthConfig { height: 96, width: 96, num_instances: 4, seed, ..Default::default() }).unwrap();
        let gt = derive_boundary_gt(96, 96, &scene.gt.instance).unwrap();
        let alpha = balance_coefficient(&gt).unwrap();
        let n1 = gt.labels.iter().filter(|&&l| l == BoundaryLabel::Edge).count() as f64;
        let n0 = gt.labels.iter().filter(|&&l| l == BoundaryLabel::NonEdge).count() as f64;
        let p = n1 / (n0 + n1);
        let mean: f64 = gt
            .labels
            .iter()
            .filter(|&&l| l != BoundaryLabel::Ignore)
            .map(|&l| balanced_loss(p, l == BoundaryLabel::Edge, alpha))
            .sum::<f64>()
            / (n0 + n1);
        let direct = (n1 * -p.ln() + (n1 / n0) * n0 * -(1.0 - p).ln()) / (n0 + n1);
        assert!((mean - direct).abs() <= 1e-9 * direct.abs());
    }
}

#[test]
fn loss_is_nonnegative_and_monotone() {
    let ps: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    for alpha in [0.1, 1.0, 3.0] {
        for pair in ps.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            assert!(balanced_loss(b, true, alpha) < balanced_loss(a, true, alpha));
            assert!(balanced_loss(b, false, alpha) > balanced_loss(a, false, alpha));
        }
        for &p in &ps {
            assert!(balanced_loss(p, true, alpha) >= 0.0 && balanced_loss(p, false, alpha) >= 0.0);
        }
    }
    assert!(balanced_loss(0.0, true, 1.0).is_finite() && balanced_loss(1.0, false, 1.0).is_finite());
}

#[test]
fn balance_coefficient_ratios() {
    let gt = |edges: usize, non_edges: usize| {
        let mut labels = vec![BoundaryLabel::Edge; edges];
        labels.extend(vec![BoundaryLabel::NonEdge; non_edges]);
        labels.extend(vec![BoundaryLabel::Ignore; 7]);
        BoundaryGt { height: 1, width: labels.len(), labels }
    };
    assert_eq!(balance_coefficient(&gt(4, 4)).unwrap(), 1.0);
    // Ten percent edges.
    assert_eq!(balance_coefficient(&gt(10, 90)).unwrap(), 1.0 / 9.0);
    assert!(balance_coefficient(&gt(0, 5)).is_err());
}
