mod common;

use common::{low_rank, pair_count_auc, separable};
use dfcn_core::data::SplitTag;
use dfcn_core::masking::MaskedSample;
use dfcn_core::models::{
    predict, score_dataset, train, train_dae, train_dfcn, train_fcn, train_rf, train_sdae, ModelKind, ModelParams, ModelSpec,
    TrainedModel,
};
use dfcn_core::nn::NetworkParams;
use dfcn_core::Execution;

fn spec(kind: ModelKind, imp: f64, dim: usize, epochs: usize) -> ModelSpec {
    let mut s = ModelSpec::new(kind, imp, 11, dim);
    s.training.epochs = epochs;
    s.training.val_mask_replicas = 3;
    if matches!(kind, ModelKind::Dae | ModelKind::Sdae) {
        s.architecture.encoder = vec![32, dim - 1];
        s.architecture.decoder = vec![32];
    }
    s.forest.trees = 25;
    s
}

fn training_auc(m: &TrainedModel, ds: &dfcn_core::data::Dataset) -> f64 {
    let scores = score_dataset(m, ds, Execution::Sequential).unwrap();
    pair_count_auc(&scores, &ds.labels())
}

fn trunk(p: &NetworkParams) -> Vec<(String, Vec<f64>)> {
    p.tensors()
        .into_iter()
        .filter(|(n, _)| !n.starts_with("decoder"))
        .map(|(n, t)| (n, t.to_vec()))
        .collect()
}

#[test]
fn nim_dfcn_and_fcn_share_the_trajectory() {
    let tr = separable(150, 4, 1);
    let va = separable(60, 4, 2).select(&(0..60).collect::<Vec<_>>(), SplitTag::Validation);
    let d = train_dfcn(&spec(ModelKind::Dfcn, 0.0, 4, 8), &tr, &va).unwrap();
    let f = train_fcn(&spec(ModelKind::Fcn, 0.0, 4, 8), &tr, &va).unwrap();
    let dc: Vec<u64> = d.log.epochs.iter().map(|e| e.trunk_checksum).collect();
    let fc: Vec<u64> = f.log.epochs.iter().map(|e| e.trunk_checksum).collect();
    assert_eq!(dc, fc);
    assert!(d.log.epochs.iter().all(|e| e.reconstruction == 0.0));
    assert_eq!(trunk(d.network().unwrap()), trunk(f.network().unwrap()));
    assert_eq!(d.log.val_auc, f.log.val_auc);
}

#[test]
fn masked_dfcn_diverges_from_fcn() {
    let tr = separable(150, 4, 1);
    let va = separable(60, 4, 2);
    let d = train_dfcn(&spec(ModelKind::Dfcn, 0.4, 4, 3), &tr, &va).unwrap();
    let f = train_fcn(&spec(ModelKind::Fcn, 0.4, 4, 3), &tr, &va).unwrap();
    assert!(d.log.epochs.iter().any(|e| e.reconstruction > 0.0));
    assert_ne!(d.log.epochs[2].trunk_checksum, f.log.epochs[2].trunk_checksum);
}

#[test]
fn training_is_deterministic() {
    let tr = separable(120, 4, 3);
    let va = separable(40, 4, 4);
    for kind in ModelKind::ALL {
        let s = spec(kind, 0.3, 4, 4);
        let a = train(&s, &tr, &va).unwrap();
        let b = train(&s, &tr, &va).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap(), "{kind}");
        let back = TrainedModel::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }
}

#[test]
fn separable_data_is_learned() {
    let tr = separable(300, 4, 5);
    let va = separable(80, 4, 6);
    for kind in [ModelKind::Dfcn, ModelKind::Fcn, ModelKind::Sdae] {
        let m = train(&spec(kind, 0.3, 4, 40), &tr, &va).unwrap();
        let auc = training_auc(&m, &tr);
        assert!(auc > 0.95, "{kind} training AUC {auc}");
    }
    let rf = train_rf(&spec(ModelKind::Rf, 0.3, 4, 1), &tr, &va).unwrap();
    assert!(training_auc(&rf, &tr) > 0.95);
}

#[test]
fn dae_encoder_is_frozen_after_pretraining() {
    let tr = low_rank(200, 7);
    let va = low_rank(60, 8);
    let mut s = spec(ModelKind::Dae, 0.3, 6, 6);
    s.architecture.encoder = vec![16, 3];
    s.training.pretrain_epochs = Some(6);
    let m = train_dae(&s, &tr, &va).unwrap();
    let phase1_end = m.log.epochs.iter().rfind(|e| e.phase == 1).unwrap();
    let phase2: Vec<_> = m.log.epochs.iter().filter(|e| e.phase == 2).collect();
    assert_eq!(phase2.len(), 6);
    assert!(phase2.iter().all(|e| e.reconstruction == 0.0));

    // Re-run phase 1 alone: the encoder it produces is the final encoder.
    let mut pre = s.clone();
    pre.training.epochs = 0;
    let p1 = train_dae(&pre, &tr, &va).unwrap();
    let enc = |m: &TrainedModel| m.network().unwrap().encoder_checksum();
    assert_eq!(enc(&p1), enc(&m));
    assert_ne!(phase1_end.trunk_checksum, phase2.last().unwrap().trunk_checksum);
}

#[test]
fn dae_pretraining_reduces_reconstruction_loss() {
    let tr = low_rank(300, 9);
    let va = low_rank(60, 10);
    let mut s = spec(ModelKind::Dae, 0.3, 6, 0);
    s.architecture.encoder = vec![16, 3];
    s.training.pretrain_epochs = Some(40);
    let m = train_dae(&s, &tr, &va).unwrap();
    let rec: Vec<f64> = m.log.epochs.iter().filter(|e| e.phase == 1).map(|e| e.reconstruction).collect();
    let windows: Vec<f64> = rec.chunks(8).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
    for w in windows.windows(2) {
        assert!(w[1] < w[0], "smoothed reconstruction loss rose: {windows:?}");
    }
}

#[test]
fn bottleneck_is_enforced() {
    let tr = separable(40, 4, 1);
    let mut s = spec(ModelKind::Sdae, 0.3, 4, 1);
    s.architecture.encoder = vec![8, 4];
    assert!(train_sdae(&s, &tr, &tr).is_err());
    let wrong_kind = spec(ModelKind::Fcn, 0.3, 4, 1);
    assert!(train_dfcn(&wrong_kind, &tr, &tr).is_err());
}

#[test]
fn forest_is_the_mean_of_its_trees() {
    let tr = separable(200, 4, 12);
    let m = train_rf(&spec(ModelKind::Rf, 0.2, 4, 1), &tr, &tr).unwrap();
    let ModelParams::Forest(f) = &m.params else { panic!() };
    assert_eq!(f.trees.len(), 25);
    let norm = m.prepare(&tr).unwrap();
    for r in norm.records.iter().take(30) {
        let mean = f.trees.iter().map(|t| t.predict(&r.values)).sum::<f64>() / f.trees.len() as f64;
        assert_eq!(f.predict(&r.values), mean);
        for t in &f.trees {
            for n in 0..t.len() {
                assert!((0.0..=1.0).contains(&t.value[n]));
                if !t.is_leaf(n) {
                    assert!(t.left[n] as usize > n && t.right[n] as usize > n);
                }
            }
        }
    }
}

#[test]
fn forest_on_a_single_class_predicts_that_class() {
    let mut tr = separable(60, 3, 13);
    for r in &mut tr.records {
        r.label = 1;
    }
    let va = separable(30, 3, 14);
    let m = train_rf(&spec(ModelKind::Rf, 0.0, 3, 1), &tr, &va).unwrap();
    for s in score_dataset(&m, &va, Execution::Sequential).unwrap() {
        assert_eq!(s, 1.0);
    }
}

#[test]
fn prediction_is_stateless_and_bounded() {
    let tr = separable(100, 4, 15);
    let m = train(&spec(ModelKind::Dfcn, 0.3, 4, 2), &tr, &tr).unwrap();
    let zero = MaskedSample {
        values: vec![0.0; 4],
        targets: vec![0.0; 4],
        train_mask: vec![true; 4],
        known: vec![false; 4],
        label: 0,
        combo: None,
    };
    let a = predict(&m, &zero).unwrap();
    assert_eq!(a, predict(&m, &zero).unwrap());
    assert!((0.0..=1.0).contains(&a));
    let fwd = score_dataset(&m, &tr, Execution::Sequential).unwrap();
    let mut rev = tr.clone();
    rev.records.reverse();
    let mut back = score_dataset(&m, &rev, Execution::Parallel).unwrap();
    back.reverse();
    assert_eq!(fwd, back);
    let mut short = zero.clone();
    short.values.pop();
    assert!(predict(&m, &short).is_err());
}
