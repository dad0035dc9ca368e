mod common;

use common::pair_count_auc;
use dfcn_core::eval::{delong_test, evaluate_per_n, evaluate_subset, roc_auc, significance_matrix, ScoreTable};
use dfcn_core::rng::rng_from_seed;
use dfcn_core::Execution;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

/// Scores drawn from a small grid so ties are common.
fn scored_labels(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2..=max).prop_flat_map(|n| {
        (
            prop::collection::vec((0u8..12).prop_map(|v| v as f64 / 4.0), n),
            prop::collection::vec(0u8..2, n),
        )
            .prop_filter("both classes", |(_, l)| l.contains(&0) && l.contains(&1))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn auc_equals_pair_counting((s, l) in scored_labels(200)) {
        prop_assert_eq!(roc_auc(&s, &l).unwrap().auc, pair_count_auc(&s, &l));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn auc_invariant_under_increasing_transforms((s, l) in scored_labels(120)) {
        let t: Vec<f64> = s.iter().map(|x| (3.0 * x).exp() - 7.0).collect();
        prop_assert_eq!(roc_auc(&s, &l).unwrap().auc, roc_auc(&t, &l).unwrap().auc);
    }

    #[test]
    fn roc_curve_is_monotone_from_origin_to_corner((s, l) in scored_labels(120)) {
        let r = roc_auc(&s, &l).unwrap();
        prop_assert_eq!(r.points.first().copied(), Some((0.0, 0.0)));
        prop_assert_eq!(r.points.last().copied(), Some((1.0, 1.0)));
        for w in r.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn delong_is_symmetric_and_self_consistent((s, l) in scored_labels(80), seed in any::<u64>()) {
        let pos = l.iter().filter(|&&x| x == 1).count();
        prop_assume!(pos >= 2 && l.len() - pos >= 2);
        let mut rng = rng_from_seed(seed);
        let other: Vec<f64> = s.iter().map(|x| x + rng.random_range(-0.5..0.5)).collect();
        let same = delong_test(&s, &s, &l).unwrap();
        prop_assert_eq!(same.p, 1.0);
        prop_assert_eq!(same.z, 0.0);
        match (delong_test(&s, &other, &l), delong_test(&other, &s, &l)) {
            (Ok(ab), Ok(ba)) => {
                prop_assert_eq!(ab.p, ba.p);
                prop_assert_eq!(ab.z, -ba.z);
                prop_assert!((0.0..=1.0).contains(&ab.p));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "asymmetric failure"),
        }
    }
}

fn auc_of(s: &[f64], pos: &[usize], neg: &[usize]) -> f64 {
    let mut twice = 0u32;
    for &i in pos {
        for &j in neg {
            twice += if s[i] > s[j] { 2 } else if s[i] == s[j] { 1 } else { 0 };
        }
    }
    twice as f64 / (2 * pos.len() * neg.len()) as f64
}

#[test]
fn delong_variance_matches_paired_bootstrap() {
    let mut worst: f64 = 0.0;
    for instance in 0..50u64 {
        let mut rng = rng_from_seed(instance);
        let labels: Vec<u8> = (0..40).map(|i| (i < 20) as u8).collect();
        let z: Vec<f64> = labels.iter().map(|&l| rng.sample::<f64, _>(StandardNormal) + l as f64).collect();
        let a: Vec<f64> = z.iter().map(|v| v + 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = z.iter().map(|v| v + 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
        let d = delong_test(&a, &b, &labels).unwrap();

        let (pos, neg): (Vec<usize>, Vec<usize>) = (0..40).partition(|&i| labels[i] == 1);
        let reps = 10_000;
        let mut diffs = Vec::with_capacity(reps);
        let mut bp = vec![0; pos.len()];
        let mut bn = vec![0; neg.len()];
        for _ in 0..reps {
            bp.iter_mut().for_each(|x| *x = pos[rng.random_range(0..pos.len())]);
            bn.iter_mut().for_each(|x| *x = neg[rng.random_range(0..neg.len())]);
            diffs.push(auc_of(&a, &bp, &bn) - auc_of(&b, &bp, &bn));
        }
        let mean = diffs.iter().sum::<f64>() / reps as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let rel = (d.variance - var).abs() / var;
        worst = worst.max(rel);
        assert!(rel < 0.10, "instance {instance}: DeLong {} vs bootstrap {var}", d.variance);
    }
    eprintln!("worst relative variance gap {worst:.3}");
}

#[test]
fn label_shuffled_clone_is_significantly_worse() {
    let mut rng = rng_from_seed(3);
    let n = 400;
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let good: Vec<f64> = labels.iter().map(|&l| l as f64 + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
    // the same model evaluated as if it had been trained on shuffled labels
    let mut shuffled = good.clone();
    for i in (1..n).rev() {
        shuffled.swap(i, rng.random_range(0..=i));
    }
    let t = ScoreTable {
        sample_ids: (0..n).map(|i| i.to_string()).collect(),
        combination_ids: vec![0; n],
        lengths: vec![28; n],
        labels,
        models: vec!["intact".into(), "shuffled".into()],
        scores: vec![good, shuffled],
    };
    let r = significance_matrix(&t, Execution::Sequential).unwrap();
    assert_eq!(r.worse_counts, vec![vec![1], vec![0]]);
}

fn random_table(seed: u64, models: usize) -> ScoreTable {
    let mut rng = rng_from_seed(seed);
    let n = 600;
    let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let lengths: Vec<usize> = (0..n).map(|_| rng.random_range(1..6)).collect();
    let scores = (0..models)
        .map(|m| labels.iter().map(|&l| l as f64 * (m as f64 * 0.3) + rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    ScoreTable {
        sample_ids: (0..n).map(|i| format!("s{i}")).collect(),
        combination_ids: (0..n as u32).collect(),
        lengths,
        labels,
        models: (0..models).map(|m| format!("m{m}")).collect(),
        scores,
    }
}

#[test]
fn worse_counts_are_bounded_and_modes_agree() {
    let t = random_table(5, 5);
    let seq = significance_matrix(&t, Execution::Sequential).unwrap();
    let par = significance_matrix(&t, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    for row in &seq.worse_counts {
        assert!(row.iter().all(|&c| c <= 4));
    }
    assert_eq!(seq.pairwise.len(), 5 * 10);
    assert!(seq.worse_counts[4].iter().sum::<usize>() > 0);
}

#[test]
fn report_is_recomputable_from_the_dump() {
    let t = random_table(8, 3);
    let mut buf = Vec::new();
    t.write_csv_to(&mut buf).unwrap();
    let back = ScoreTable::read_csv_from(buf.as_slice()).unwrap();
    assert_eq!(back, t);
    let report = significance_matrix(&back, Execution::Sequential).unwrap();
    for (m, curve) in report.curves.iter().enumerate() {
        let again = evaluate_per_n(&t.models[m], &t.scores[m], &t.labels, &t.lengths).unwrap();
        assert_eq!(&again, curve);
        let aucs: Vec<f64> = curve.entries.iter().filter_map(|e| e.auc).collect();
        assert_eq!(curve.mean_auc, aucs.iter().sum::<f64>() / aucs.len() as f64);
        for e in &curve.entries {
            let idx: Vec<usize> = (0..t.labels.len()).filter(|&i| t.lengths[i] == e.n).collect();
            let s: Vec<f64> = idx.iter().map(|&i| t.scores[m][i]).collect();
            let l: Vec<u8> = idx.iter().map(|&i| t.labels[i]).collect();
            assert_eq!(e.auc, Some(pair_count_auc(&s, &l)));
        }
    }
}

#[test]
fn subset_rows_compare_against_the_best() {
    let t = random_table(9, 3);
    let models: Vec<(String, Vec<f64>)> = t.models.iter().cloned().zip(t.scores.iter().cloned()).collect();
    let rows = evaluate_subset(&models, &t.labels).unwrap();
    let best = rows.iter().max_by(|a, b| a.auc.total_cmp(&b.auc)).unwrap();
    assert_eq!(best.p_vs_best, 1.0);
    assert!(!best.significantly_lower);
    assert!(rows[0].significantly_lower, "chance model should trail: {rows:?}");
}
