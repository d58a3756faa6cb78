//! Redundancy removal, descriptor-distance novelty screening, and
//! out-of-distribution scores over fingerprints.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::fingerprint::DifferenceVector;
use crate::vectors::VectorRecord;
use crate::{Error, Result};

/// Which structures survived a screening pass and who represents the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub mode: String,
    pub input_count: usize,
    pub output_count: usize,
    pub reduction_ratio: f64,
    pub kept: Vec<String>,
    /// Removed id → id of the kept structure it duplicates.
    pub removed: BTreeMap<String, String>,
}

impl ScreeningReport {
    fn new(mode: String, input_count: usize, kept: Vec<String>, removed: BTreeMap<String, String>) -> Self {
        let ratio = if input_count == 0 {
            0.0
        } else {
            removed.len() as f64 / input_count as f64
        };
        Self {
            mode,
            input_count,
            output_count: kept.len(),
            reduction_ratio: ratio,
            kept,
            removed,
        }
    }
}

fn check_uniform(fps: &[DifferenceVector]) -> Result<()> {
    if let Some(first) = fps.first() {
        for fp in fps {
            if fp.checksum() != first.checksum() {
                return Err(Error::ChecksumMismatch {
                    expected: first.checksum().to_owned(),
                    found: fp.checksum().to_owned(),
                });
            }
            if fp.len() != first.len() {
                return Err(Error::LayoutMismatch(format!(
                    "fingerprint {} has {} bits, expected {}",
                    fp.structure_id(),
                    fp.len(),
                    first.len()
                )));
            }
        }
    }
    Ok(())
}

/// Keep the first structure of every distinct bit pattern, in input order.
pub fn dedup_exact(fps: &[DifferenceVector]) -> Result<ScreeningReport> {
    check_uniform(fps)?;
    let mut leaders: HashMap<&BitString, &str> = HashMap::new();
    let mut kept = Vec::new();
    let mut removed = BTreeMap::new();
    for fp in fps {
        match leaders.get(fp.bits()) {
            Some(leader) => {
                removed.insert(fp.structure_id().to_owned(), (*leader).to_owned());
            }
            None => {
                leaders.insert(fp.bits(), fp.structure_id());
                kept.push(fp.structure_id().to_owned());
            }
        }
    }
    Ok(ScreeningReport::new("exact".into(), fps.len(), kept, removed))
}

/// Greedy leader clustering in input order: a structure is removed iff some
/// already-kept leader lies within `radius` bits; it maps to the earliest such
/// leader. Radius 0 reproduces [`dedup_exact`].
pub fn dedup_hamming(fps: &[DifferenceVector], radius: usize) -> Result<ScreeningReport> {
    check_uniform(fps)?;
    let mut leaders: Vec<&DifferenceVector> = Vec::new();
    let mut removed = BTreeMap::new();
    for fp in fps {
        match leaders.iter().find(|l| l.bits().hamming(fp.bits()) <= radius) {
            Some(leader) => {
                removed.insert(fp.structure_id().to_owned(), leader.structure_id().to_owned());
            }
            None => leaders.push(fp),
        }
    }
    let kept = leaders.iter().map(|l| l.structure_id().to_owned()).collect();
    Ok(ScreeningReport::new(format!("hamming:{radius}"), fps.len(), kept, removed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregate {
    /// Distance to the closest training vector.
    Min,
    /// Mean distance over all training vectors.
    #[default]
    Mean,
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Aggregate::Min),
            "mean" => Ok(Aggregate::Mean),
            other => Err(Error::invalid(format!("unknown aggregate {other:?} (expected min or mean)"))),
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregate::Min => "min",
            Aggregate::Mean => "mean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoveltyConfig {
    threshold: f64,
    pub aggregate: Aggregate,
}

impl NoveltyConfig {
    pub fn new(threshold: f64, aggregate: Aggregate) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::invalid(format!("novelty threshold must be finite and >= 0, got {threshold}")));
        }
        Ok(Self { threshold, aggregate })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Distances of one candidate to the training set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoveltyOutcome {
    pub id: String,
    /// Distance to the closest training vector ("maximum similarity").
    pub min_distance: f64,
    /// Mean distance over the training set ("average similarity").
    pub mean_distance: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoveltyReport {
    pub threshold: f64,
    pub aggregate: String,
    pub outcomes: Vec<NoveltyOutcome>,
}

impl NoveltyReport {
    pub fn accepted(&self) -> Vec<&str> {
        self.outcomes
            .iter()
            .filter(|o| o.accepted)
            .map(|o| o.id.as_str())
            .collect()
    }
}

/// Accept each candidate whose aggregated Euclidean distance to the training
/// vectors exceeds the threshold, i.e. candidates that are far enough from
/// everything already in the training set.
///
/// With an empty training set every candidate is accepted.
pub fn novelty_screen(
    candidates: &[VectorRecord],
    training: &[VectorRecord],
    cfg: &NoveltyConfig,
) -> Result<NoveltyReport> {
    let dim = candidates
        .first()
        .or(training.first())
        .map(|v| v.values.len())
        .unwrap_or(0);
    if let Some(bad) = candidates.iter().chain(training).find(|v| v.values.len() != dim) {
        return Err(Error::LayoutMismatch(format!(
            "vector {} has dimension {}, expected {dim}",
            bad.id,
            bad.values.len()
        )));
    }
    if training.is_empty() {
        log::warn!("novelty screen against an empty training set: every candidate is accepted");
    }

    let outcomes = candidates
        .par_iter()
        .map(|c| {
            if training.is_empty() {
                return NoveltyOutcome {
                    id: c.id.clone(),
                    min_distance: f64::INFINITY,
                    mean_distance: f64::INFINITY,
                    accepted: true,
                };
            }
            let mut min = f64::INFINITY;
            let mut sum = 0.0;
            for t in training {
                let d = euclidean(&c.values, &t.values);
                min = min.min(d);
                sum += d;
            }
            let mean = sum / training.len() as f64;
            let score = match cfg.aggregate {
                Aggregate::Min => min,
                Aggregate::Mean => mean,
            };
            NoveltyOutcome {
                id: c.id.clone(),
                min_distance: min,
                mean_distance: mean,
                accepted: score > cfg.threshold,
            }
        })
        .collect();

    Ok(NoveltyReport {
        threshold: cfg.threshold,
        aggregate: cfg.aggregate.to_string(),
        outcomes,
    })
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Training fingerprints that new structures are scored against.
#[derive(Debug, Clone, Default)]
pub struct FingerprintStore {
    checksum: Option<String>,
    entries: Vec<BitString>,
}

impl FingerprintStore {
    pub fn new<'a>(fps: impl IntoIterator<Item = &'a DifferenceVector>) -> Result<Self> {
        let mut store = Self::default();
        for fp in fps {
            store.push(fp)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, fp: &DifferenceVector) -> Result<()> {
        match &self.checksum {
            Some(c) if c != fp.checksum() => {
                return Err(Error::ChecksumMismatch {
                    expected: c.clone(),
                    found: fp.checksum().to_owned(),
                })
            }
            None => self.checksum = Some(fp.checksum().to_owned()),
            _ => {}
        }
        self.entries.push(fp.bits().clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OodScore {
    pub id: String,
    pub min_hamming: usize,
    /// `min_hamming / bit length`, in `[0, 1]`.
    pub normalized: f64,
}

/// Smallest Hamming distance from `fp` to any stored training fingerprint.
pub fn ood_score(fp: &DifferenceVector, store: &FingerprintStore) -> Result<OodScore> {
    let checksum = store
        .checksum
        .as_deref()
        .ok_or_else(|| Error::invalid("cannot score against an empty fingerprint store"))?;
    if checksum != fp.checksum() {
        return Err(Error::ChecksumMismatch {
            expected: checksum.to_owned(),
            found: fp.checksum().to_owned(),
        });
    }
    let min = store
        .entries
        .iter()
        .map(|t| t.hamming(fp.bits()))
        .min()
        .expect("store is non-empty");
    Ok(OodScore {
        id: fp.structure_id().to_owned(),
        min_hamming: min,
        normalized: if fp.is_empty() { 0.0 } else { min as f64 / fp.len() as f64 },
    })
}

/// Scores sorted by descending distance; ties keep input order.
pub fn rank_ood(predictions: &[DifferenceVector], store: &FingerprintStore) -> Result<Vec<OodScore>> {
    let mut scores: Vec<OodScore> = predictions
        .par_iter()
        .map(|p| ood_score(p, store))
        .collect::<Result<_>>()?;
    scores.sort_by_key(|s| std::cmp::Reverse(s.min_hamming));
    Ok(scores)
}
