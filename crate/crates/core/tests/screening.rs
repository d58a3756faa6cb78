use std::collections::{BTreeSet, HashSet};

use dvlae_core::bits::BitString;
use dvlae_core::fingerprint::DifferenceVector;
use dvlae_core::screening::{dedup_exact, dedup_hamming, novelty_screen, ood_score, rank_ood, Aggregate, FingerprintStore, NoveltyConfig, ScreeningReport};
use dvlae_core::vectors::VectorRecord;
use dvlae_testkit as tk;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_fps(seed: u64, n: usize, bits: usize) -> Vec<DifferenceVector> {
    let mut rng = tk::rng(seed);
    (0..n)
        .map(|i| {
            let b = BitString::from_bools((0..bits).map(|_| rng.random_bool(0.5)));
            DifferenceVector::new(format!("s{i}"), None, "ref", "sum", 1, b).unwrap()
        })
        .collect()
}

fn assert_partition(report: &ScreeningReport, fps: &[DifferenceVector], radius: usize) {
    let ids: BTreeSet<&str> = fps.iter().map(|f| f.structure_id()).collect();
    let kept: BTreeSet<&str> = report.kept.iter().map(String::as_str).collect();
    let removed: BTreeSet<&str> = report.removed.keys().map(String::as_str).collect();
    assert!(kept.is_disjoint(&removed));
    assert_eq!(kept.union(&removed).copied().collect::<BTreeSet<_>>(), ids);
    assert_eq!(report.input_count, fps.len());
    assert_eq!(report.output_count, kept.len());
    assert_eq!(report.reduction_ratio, removed.len() as f64 / fps.len() as f64);
    let by_id = |id: &str| fps.iter().find(|f| f.structure_id() == id).unwrap();
    for (r, leader) in &report.removed {
        assert!(kept.contains(leader.as_str()));
        assert!(by_id(r).bits().hamming(by_id(leader).bits()) <= radius);
    }
}

#[test]
fn radius_zero_equals_exact_dedup() {
    // 8-bit patterns over 200 draws guarantee many collisions
    let fps = random_fps(41, 200, 8);
    let exact = dedup_exact(&fps).unwrap();
    let h0 = dedup_hamming(&fps, 0).unwrap();
    assert_eq!(exact.kept, h0.kept);
    assert_eq!(exact.removed, h0.removed);
    assert!(exact.output_count < 200);
    assert_partition(&exact, &fps, 0);
}

#[test]
fn leader_clustering_respects_radius() {
    let fps = random_fps(42, 150, 12);
    for radius in [1, 2, 4] {
        let r = dedup_hamming(&fps, radius).unwrap();
        assert_partition(&r, &fps, radius);
        // leaders are pairwise farther apart than the radius
        let kept: Vec<_> = fps.iter().filter(|f| r.kept.iter().any(|k| k == f.structure_id())).collect();
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                assert!(a.bits().hamming(b.bits()) > radius);
            }
        }
    }
    assert_eq!(dedup_hamming(&fps, 12).unwrap().output_count, 1);
}

#[test]
fn reordering_changes_representatives_not_counts() {
    let mut fps = random_fps(43, 120, 7);
    let before = dedup_exact(&fps).unwrap();
    fps.shuffle(&mut tk::rng(44));
    let after = dedup_exact(&fps).unwrap();
    assert_eq!(before.output_count, after.output_count);
}

#[test]
fn exact_dedup_is_idempotent() {
    let fps = random_fps(45, 100, 6);
    let first = dedup_exact(&fps).unwrap();
    let kept: Vec<_> = fps.iter().filter(|f| first.kept.iter().any(|k| k == f.structure_id())).cloned().collect();
    let second = dedup_exact(&kept).unwrap();
    assert!(second.removed.is_empty());
    assert_eq!(second.kept, first.kept);
}

fn vectors(seed: u64, n: usize, prefix: &str) -> Vec<VectorRecord> {
    let mut rng = tk::rng(seed);
    (0..n)
        .map(|i| VectorRecord {
            id: format!("{prefix}{i}"),
            tag: None,
            values: (0..6).map(|_| rng.random_range(-1.0..1.0)).collect(),
        })
        .collect()
}

fn naive_accepted(candidates: &[VectorRecord], training: &[VectorRecord], threshold: f64, aggregate: Aggregate) -> Vec<String> {
    let mut out = Vec::new();
    for c in candidates {
        let mut dists = Vec::new();
        for t in training {
            let mut s = 0.0;
            for k in 0..c.values.len() {
                s += (c.values[k] - t.values[k]).powi(2);
            }
            dists.push(s.sqrt());
        }
        let score = match aggregate {
            Aggregate::Min => dists.iter().cloned().fold(f64::INFINITY, f64::min),
            Aggregate::Mean => dists.iter().sum::<f64>() / dists.len() as f64,
        };
        if score > threshold {
            out.push(c.id.clone());
        }
    }
    out
}

#[test]
fn novelty_screen_matches_double_loop() {
    let training = vectors(46, 50, "t");
    let mut candidates = vectors(47, 50, "c");
    // a few candidates sit exactly on training points, a few very close
    for i in 0..5 {
        candidates[i].values = training[i].values.clone();
        candidates[5 + i].values = training[10 + i].values.iter().map(|v| v + 0.01).collect();
    }
    for threshold in [0.0, 0.1, 1.0] {
        for aggregate in [Aggregate::Min, Aggregate::Mean] {
            let cfg = NoveltyConfig::new(threshold, aggregate).unwrap();
            let report = novelty_screen(&candidates, &training, &cfg).unwrap();
            let got: Vec<String> = report.accepted().into_iter().map(String::from).collect();
            assert_eq!(got, naive_accepted(&candidates, &training, threshold, aggregate), "{threshold} {aggregate}");
        }
    }
}

#[test]
fn zero_threshold_min_rejects_exactly_the_copies() {
    let training = vectors(48, 20, "t");
    let mut candidates = vectors(49, 20, "c");
    let copies: HashSet<String> = (0..20).step_by(3).map(|i| format!("c{i}")).collect();
    for i in (0..20).step_by(3) {
        candidates[i].values = training[19 - i].values.clone();
    }
    let report = novelty_screen(&candidates, &training, &NoveltyConfig::new(0.0, Aggregate::Min).unwrap()).unwrap();
    let accepted: HashSet<String> = report.accepted().into_iter().map(String::from).collect();
    let expected: HashSet<String> = candidates.iter().map(|c| c.id.clone()).filter(|id| !copies.contains(id)).collect();
    assert_eq!(accepted, expected);
}

#[test]
fn empty_training_accepts_everything() {
    let candidates = vectors(50, 4, "c");
    let report = novelty_screen(&candidates, &[], &NoveltyConfig::new(5.0, Aggregate::Mean).unwrap()).unwrap();
    assert_eq!(report.accepted().len(), 4);
    let mut odd = vectors(51, 1, "t");
    odd[0].values.pop();
    assert!(novelty_screen(&candidates, &odd, &NoveltyConfig::new(0.1, Aggregate::Min).unwrap()).is_err());
}

#[test]
fn growing_the_store_never_raises_a_score() {
    let mut rng = tk::rng(52);
    for trial in 0..100 {
        let pool = random_fps(1000 + trial, 12, 64);
        let fp = &pool[0];
        let mut store = FingerprintStore::new([&pool[1]]).unwrap();
        let mut last = ood_score(fp, &store).unwrap();
        for t in &pool[2..] {
            if rng.random_bool(0.7) {
                store.push(t).unwrap();
                let next = ood_score(fp, &store).unwrap();
                assert!(next.min_hamming <= last.min_hamming);
                last = next;
            }
        }
        assert!(last.normalized >= 0.0 && last.normalized <= 1.0);
    }
}

#[test]
fn score_is_bounded_by_every_stored_distance() {
    let pool = random_fps(53, 30, 96);
    let store = FingerprintStore::new(&pool[10..]).unwrap();
    for fp in &pool[..10] {
        let s = ood_score(fp, &store).unwrap();
        for t in &pool[10..] {
            assert!(s.normalized <= fp.bits().hamming(t.bits()) as f64 / 96.0);
        }
    }
    for t in &pool[10..] {
        assert_eq!(ood_score(t, &store).unwrap().min_hamming, 0);
    }
}

#[test]
fn extreme_scores_and_ranking() {
    let zeros = DifferenceVector::new("z", None, "r", "sum", 20, BitString::zeros(160)).unwrap();
    let ones = DifferenceVector::new("o", None, "r", "sum", 20, BitString::ones(160)).unwrap();
    let store = FingerprintStore::new([&zeros]).unwrap();
    let s = ood_score(&ones, &store).unwrap();
    assert_eq!((s.min_hamming, s.normalized), (160, 1.0));
    let ranked = rank_ood(&[zeros.clone(), ones.clone(), zeros.clone()], &store).unwrap();
    assert_eq!(ranked[0].id, "o");
    assert!(FingerprintStore::new(std::iter::empty()).map(|st| ood_score(&ones, &st).is_err()).unwrap());
    let other = DifferenceVector::new("x", None, "r", "other", 20, BitString::zeros(160)).unwrap();
    assert!(ood_score(&other, &store).is_err());
}
