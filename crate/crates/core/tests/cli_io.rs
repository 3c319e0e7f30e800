mod common;

use common::*;
use instancecut::formats::{decode_lbm, decode_sgm, encode_lbm, encode_sgm, read_lbm, read_sgm, write_lbm, write_sgm};
use instancecut::grid::{pack_instance, unpack_instance, MAX_INSTANCE_ID};
use instancecut::model::make_pair_prior;
use instancecut::synth::SCORE_MARGIN;
use instancecut::{
    evaluate, grid_search, synth, ClassSet, Error, InstanceMap, LabelGrid, LabeledScene, ParamGrid, PipelineConfig,
    ScoreGrid, SolverParams, SynthConfig,
};
use proptest::prelude::*;

fn score_grid() -> impl Strategy<Value = ScoreGrid> {
    (1usize..6, 1usize..6, 1usize..4).prop_flat_map(|(h, w, c)| {
        proptest::collection::vec(proptest::num::f32::NORMAL | proptest::num::f32::ZERO, h * w * c)
            .prop_map(move |v| ScoreGrid::new(h, w, c, v).unwrap())
    })
}

fn label_grid() -> impl Strategy<Value = LabelGrid> {
    (1usize..6, 1usize..6).prop_flat_map(|(h, w)| {
        proptest::collection::vec(any::<u32>(), h * w).prop_map(move |v| LabelGrid::new(h, w, v).unwrap())
    })
}

proptest! {
    #[test]
    fn sgm_round_trip_is_bit_exact(g in score_grid()) {
        let bytes = encode_sgm(&g);
        let back = decode_sgm(&bytes).unwrap();
        let bits = |g: &ScoreGrid| g.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&g));
        prop_assert_eq!((back.height(), back.width(), back.channels()), (g.height(), g.width(), g.channels()));
        prop_assert_eq!(encode_sgm(&back), bytes);
    }

    #[test]
    fn lbm_round_trip_is_bit_exact(g in label_grid()) {
        let bytes = encode_lbm(&g);
        prop_assert_eq!(decode_lbm(&bytes).unwrap(), g);
    }

    #[test]
    fn truncated_files_are_rejected(g in score_grid(), cut in 1usize..8) {
        let bytes = encode_sgm(&g);
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(matches!(decode_sgm(&bytes[..keep]), Err(Error::Format(_))));
    }

    #[test]
    fn pack_then_unpack_is_identity(id in 0u32..=MAX_INSTANCE_ID, class in 0u32..=255) {
        prop_assert_eq!(unpack_instance(pack_instance(id, class).unwrap()), (id, class));
    }
}

#[test]
fn wide_classes_and_ids_are_rejected() {
    assert!(pack_instance(1, 256).is_err());
    assert!(pack_instance(MAX_INSTANCE_ID + 1, 1).is_err());
}

#[test]
fn files_round_trip_through_disk() {
    let dir = std::env::temp_dir().join(format!("instancecut-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let scene = synth(&SynthConfig { height: 40, width: 40, num_instances: 2, sigma: 0.3, seed: 3, ..Default::default() })
        .unwrap();
    write_sgm(dir.join("s.sgm"), &scene.semantic).unwrap();
    write_lbm(dir.join("g.lbm"), &scene.gt.to_label_grid()).unwrap();
    assert_eq!(read_sgm(dir.join("s.sgm")).unwrap(), scene.semantic);
    assert_eq!(InstanceMap::from_label_grid(&read_lbm(dir.join("g.lbm")).unwrap()), scene.gt);
    assert!(matches!(read_sgm(dir.join("missing.sgm")), Err(Error::Io(_))));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn synthetic_scenes_are_deterministic_and_noiseless_scores_are_exact() {
    for seed in 0..8 {
        let config = SynthConfig { height: 64, width: 80, num_instances: 3, num_labels: 4, sigma: 0.0, seed };
        let a = synth(&config).unwrap();
        let b = synth(&config).unwrap();
        assert_eq!(encode_sgm(&a.semantic), encode_sgm(&b.semantic));
        assert_eq!(encode_sgm(&a.edge), encode_sgm(&b.edge));
        assert_eq!(a.gt, b.gt);
        assert_eq!(a.gt.instances().len(), 3);

        let boundary = boundary_by_offsets(64, 80, &a.gt.instance);
        for p in 0..64 * 80 {
            let px = a.semantic.pixel(p);
            let best = (0..px.len()).fold(0, |b, k| if px[k] > px[b] { k } else { b });
            assert_eq!(best, a.gt.class[p] as usize);
            assert_eq!(a.edge.get(p, 0) > SCORE_MARGIN - 1.0, boundary[p]);
        }

        let noisy = synth(&SynthConfig { sigma: 0.5, ..config.clone() }).unwrap();
        assert_eq!(noisy.gt, a.gt);
        assert_ne!(noisy.edge, a.edge);
        assert_eq!(noisy, synth(&SynthConfig { sigma: 0.5, ..config }).unwrap());
    }
}

fn strip(instance: &[u32], class: &[u8]) -> InstanceMap {
    InstanceMap::new(1, instance.len(), instance.to_vec(), class.to_vec()).unwrap()
}

#[test]
fn iou_point_six_and_point_four() {
    // Ground truth: two ten-pixel cars. The first prediction covers six
    // pixels of the first car (IoU 0.6), the second four of the second (0.4).
    let mut gt_id = vec![1u32; 10];
    gt_id.extend([2; 10]);
    let mut pred_id = vec![0u32; 20];
    pred_id[..6].fill(7);
    pred_id[10..14].fill(9);
    let class = |ids: &[u32]| ids.iter().map(|&i| (i != 0) as u8).collect::<Vec<_>>();
    let r = evaluate(&strip(&pred_id, &class(&pred_id)), &strip(&gt_id, &class(&gt_id))).unwrap();
    assert_eq!((r.precision, r.recall), (0.5, 0.5));
    assert_eq!(r.matches, vec![(7, 1, 0.6)]);
    assert_eq!(r.best_iou, vec![(1, 0.6), (2, 0.4)]);
    assert!(!r.exact_match);
}

#[test]
fn empty_prediction_has_perfect_precision() {
    let gt = strip(&[0, 1, 1, 0], &[0, 2, 2, 0]);
    let r = evaluate(&InstanceMap::background(1, 4), &gt).unwrap();
    assert_eq!((r.precision, r.recall, r.f1), (1.0, 0.0, 0.0));
    let same = evaluate(&gt, &gt).unwrap();
    assert!(same.exact_match && same.precision == 1.0 && same.recall == 1.0);
    assert!(evaluate(&InstanceMap::background(2, 2), &gt).is_err());
}

#[test]
fn big_vehicle_prior_is_symmetric() {
    // person, rider, car, truck, bus, train, motorcycle, bicycle
    let p = SolverParams { beta_small: -1.0, beta_big: -3.0, big_classes: vec![4, 5, 6], ..Default::default() };
    let prior = make_pair_prior(&p, ClassSet::new(8).unwrap()).unwrap();
    assert!(prior.get(0, 0).is_none());
    for l in 0..9 {
        for k in 0..9 {
            if (l, k) == (0, 0) {
                continue;
            }
            assert_eq!(prior.get(l, k), prior.get(k, l));
            let big = (4..=6).contains(&l) || (4..=6).contains(&k);
            assert_eq!(prior.get(l, k), Some(if big { -3.0 } else { -1.0 }));
        }
    }
}

fn labeled_scenes(count: u64) -> Vec<LabeledScene> {
    (0..count)
        .map(|seed| {
            let s = synth(&SynthConfig { height: 64, width: 64, num_instances: 3, seed, ..Default::default() }).unwrap();
            LabeledScene { semantic: s.semantic, edge: s.edge, gt: s.gt }
        })
        .collect()
}

#[test]
fn single_point_grid_is_returned() {
    let scenes = labeled_scenes(2);
    let grid = ParamGrid { w: vec![0.7], beta_small: vec![1.5], beta_big: vec![-4.0] };
    let r = grid_search(&scenes, &grid, &PipelineConfig::default(), 2).unwrap();
    assert_eq!((r.best.params.w, r.best.params.beta_small, r.best.params.beta_big), (0.7, 1.5, -4.0));
    assert_eq!(r.points.len(), 1);
}

#[test]
fn calibrated_point_beats_a_background_swallowing_one() {
    // Every noiseless object is one superpixel whose border scores +m, and
    // node scores are region means, so absorbing an object into the
    // background changes the objective by -2m - w(m + beta). At w = 1 that is
    // positive for beta = -20, so the optimum there erases every object.
    let scenes = labeled_scenes(4);
    let grid = ParamGrid { w: vec![1.0], beta_small: vec![10.0, -2.0, -20.0], beta_big: vec![-2.0] };
    let r = grid_search(&scenes, &grid, &PipelineConfig::default(), 2).unwrap();
    assert_eq!(r.best.params.beta_small, -2.0);
    assert_eq!(r.best_mean_f1, 1.0);
    let erased = r.points.iter().find(|p| p.beta_small == -20.0).unwrap();
    assert_eq!(erased.mean_f1, 0.0);
    assert_eq!(r.cv_f1, 1.0);
    // Ascending order after sorting.
    let order: Vec<f64> = r.points.iter().map(|p| p.beta_small).collect();
    assert_eq!(order, vec![-20.0, -2.0, 10.0]);
}

#[test]
fn cube_grid_counts() {
    let scenes = labeled_scenes(4);
    let grid = ParamGrid { w: vec![0.5, 1.0, 2.0], beta_small: vec![-3.0, -2.0, -1.0], beta_big: vec![-3.0, -2.0, -1.0] };
    let r = grid_search(&scenes, &grid, &PipelineConfig::default(), 2).unwrap();
    assert_eq!(r.points.len(), 27);
    assert_eq!(r.fold_evaluations, 27 * 2);
    assert_eq!(r.solver_invocations, 27 * 4);
    assert_eq!(r.held_out.len(), 2);
    let lex: Vec<(f64, f64, f64)> = r.points.iter().map(|p| (p.w, p.beta_small, p.beta_big)).collect();
    assert!(lex.windows(2).all(|w| w[0] < w[1]));
    // Same result a second time.
    assert_eq!(grid_search(&scenes, &grid, &PipelineConfig::default(), 2).unwrap(), r);
}

#[test]
fn grid_search_errors() {
    let scenes = labeled_scenes(2);
    let base = PipelineConfig::default();
    let ok = ParamGrid { w: vec![1.0], beta_small: vec![-2.0], beta_big: vec![-2.0] };
    assert!(grid_search(&scenes, &ParamGrid { w: vec![], ..ok.clone() }, &base, 2).is_err());
    assert!(grid_search(&scenes, &ParamGrid { beta_big: vec![f64::NAN], ..ok.clone() }, &base, 2).is_err());
    assert!(grid_search(&scenes[..1], &ok, &base, 2).is_err());
    assert!(grid_search(&scenes, &ok, &base, 1).is_err());
}
