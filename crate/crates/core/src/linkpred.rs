//! Balanced labelled train/test node-pair construction from an augmentation
//! result, pairwise edge scoring, and threshold accuracy.
//!
//! Train positives are every augmented-graph edge in lower-triangle scan
//! order; test positives are the removed edges. Negatives are non-edges of
//! the ORIGINAL graph: the train side either truncates the first `num`
//! non-edges met by the same scan (the literal construction) or samples them
//! uniformly; the test side is always sampled uniformly, rejecting collisions
//! with train negatives in either orientation.

use std::collections::HashSet;
use std::io::Write;

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::augment::{verify_decomposition, AugmentResult};
use crate::graph::Graph;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("augmentation result does not decompose the original graph")]
    DecompositionCheckFailed,
    #[error("not enough non-edges: need {needed}, graph has {available}")]
    InsufficientNegatives { needed: usize, available: usize },
    #[error("pair index {index} out of range for {num_nodes} nodes")]
    IndexOutOfRange { index: usize, num_nodes: usize },
    #[error("scores and labels have different lengths ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Io(#[from] SampleIoError),
}

#[derive(Debug, Error)]
#[error("{0}")]
pub struct SampleIoError(#[from] std::io::Error);

impl PartialEq for SampleIoError {
    fn eq(&self, other: &Self) -> bool {
        self.0.kind() == other.0.kind()
    }
}

/// A node pair with its link label (true = linked).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPair {
    pub i: usize,
    pub j: usize,
    pub positive: bool,
}

/// How train negatives are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrainNegStrategy {
    /// First `num` non-edges in lower-triangle row-major scan order (the
    /// literal truncation; biases negatives toward low-index rows).
    Scan,
    /// `num` distinct non-edges sampled uniformly.
    #[default]
    Random,
}

/// Balanced train/test pair sets. Positives and negatives are equal in count
/// within each split; test sizes equal the removed-edge count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSampleSet {
    pub train: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
}

impl LinkSampleSet {
    pub fn train_pairs(&self) -> (Vec<(usize, usize)>, Vec<bool>) {
        split_pairs(&self.train)
    }

    pub fn test_pairs(&self) -> (Vec<(usize, usize)>, Vec<bool>) {
        split_pairs(&self.test)
    }

    /// CSV export (`i,j,label,split`) for external auditing.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), SampleError> {
        let io = |e: std::io::Error| SampleError::Io(SampleIoError(e));
        writeln!(w, "i,j,label,split").map_err(io)?;
        for (split, pairs) in [("train", &self.train), ("test", &self.test)] {
            for p in pairs {
                writeln!(w, "{},{},{},{split}", p.i, p.j, u8::from(p.positive)).map_err(io)?;
            }
        }
        Ok(())
    }
}

fn split_pairs(pairs: &[LabeledPair]) -> (Vec<(usize, usize)>, Vec<bool>) {
    (
        pairs.iter().map(|p| (p.i, p.j)).collect(),
        pairs.iter().map(|p| p.positive).collect(),
    )
}

/// Build the balanced sample sets for one augmentation result.
pub fn build_samples(
    original: &Graph,
    aug: &AugmentResult,
    seed: u64,
    strategy: TrainNegStrategy,
) -> Result<LinkSampleSet, SampleError> {
    if !verify_decomposition(original, aug) {
        return Err(SampleError::DecompositionCheckFailed);
    }
    let n = original.num_nodes();
    let train_pos = aug.augmented.edge_list();
    let num = train_pos.len();
    let removed = &aug.removed;

    let total_pairs = n * (n - 1) / 2;
    let non_edges = total_pairs - original.num_undirected_edges();
    let needed = num + removed.len();
    if non_edges < needed {
        return Err(SampleError::InsufficientNegatives {
            needed,
            available: non_edges,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train_neg: Vec<(usize, usize)> = match strategy {
        TrainNegStrategy::Scan => scan_non_edges(original, num),
        TrainNegStrategy::Random => {
            sample_non_edges(original, num, &mut rng, &HashSet::new(), false)
        }
    };
    let train_neg_set: HashSet<(usize, usize)> = train_neg.iter().copied().collect();
    let test_neg = sample_non_edges(original, removed.len(), &mut rng, &train_neg_set, true);

    let mut train = Vec::with_capacity(2 * num);
    train.extend(train_pos.iter().map(|&(i, j)| LabeledPair { i, j, positive: true }));
    train.extend(train_neg.iter().map(|&(i, j)| LabeledPair { i, j, positive: false }));
    let mut test = Vec::with_capacity(2 * removed.len());
    test.extend(removed.iter().map(|&(i, j)| LabeledPair { i, j, positive: true }));
    test.extend(test_neg.iter().map(|&(i, j)| LabeledPair { i, j, positive: false }));
    Ok(LinkSampleSet { train, test })
}

/// First `num` non-edges in strict lower-triangle row-major order.
fn scan_non_edges(g: &Graph, num: usize) -> Vec<(usize, usize)> {
    let n = g.num_nodes();
    let mut out = Vec::with_capacity(num);
    'outer: for i in 0..n {
        for j in 0..i {
            if !g.contains_edge(i, j) {
                out.push((i, j));
                if out.len() == num {
                    break 'outer;
                }
            }
        }
    }
    out
}

/// Draw `num` distinct canonical non-edges uniformly, excluding `avoid`.
/// Rejection sampling mirrors the random-row/random-column draw; when the
/// eligible set is nearly exhausted it falls back to enumerating the
/// remaining candidates and sampling without replacement (still seeded).
fn sample_non_edges(
    g: &Graph,
    num: usize,
    rng: &mut ChaCha8Rng,
    avoid: &HashSet<(usize, usize)>,
    sort: bool,
) -> Vec<(usize, usize)> {
    let n = g.num_nodes();
    let mut chosen: HashSet<(usize, usize)> = HashSet::with_capacity(num);
    let mut out = Vec::with_capacity(num);
    let max_attempts = 200 * num + 1000;
    let mut attempts = 0usize;
    while out.len() < num && attempts < max_attempts {
        attempts += 1;
        let row = rng.random_range(0..n);
        let col = rng.random_range(0..n);
        if row == col {
            continue;
        }
        let pair = (row.max(col), row.min(col));
        if g.contains_edge(pair.0, pair.1) || avoid.contains(&pair) || chosen.contains(&pair) {
            continue;
        }
        chosen.insert(pair);
        out.push(pair);
    }
    if out.len() < num {
        let mut eligible = Vec::new();
        for i in 0..n {
            for j in 0..i {
                let pair = (i, j);
                if !g.contains_edge(i, j) && !avoid.contains(&pair) && !chosen.contains(&pair) {
                    eligible.push(pair);
                }
            }
        }
        let extra = rand::seq::index::sample(rng, eligible.len(), num - out.len());
        out.extend(extra.iter().map(|k| eligible[k]));
    }
    if sort {
        out.sort_unstable();
    }
    out
}

/// Sigmoid of the embedding dot product at each requested pair. The full
/// pairwise score matrix is never materialized.
pub fn score_pairs(f: &Array2<f64>, pairs: &[(usize, usize)]) -> Result<Vec<f64>, SampleError> {
    let n = f.nrows();
    let fs = f.as_slice().expect("standard layout");
    let d = f.ncols();
    let mut scores = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        for idx in [i, j] {
            if idx >= n {
                return Err(SampleError::IndexOutOfRange {
                    index: idx,
                    num_nodes: n,
                });
            }
        }
        let fi = &fs[i * d..(i + 1) * d];
        let fj = &fs[j * d..(j + 1) * d];
        let logit: f64 = fi.iter().zip(fj).map(|(a, b)| a * b).sum();
        scores.push(sigmoid(logit));
    }
    Ok(scores)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fraction of positions where thresholding at 0.5 matches the label. A score
/// of exactly 0.5 classifies as positive.
pub fn accuracy(scores: &[f64], labels: &[bool]) -> Result<f64, SampleError> {
    if scores.len() != labels.len() {
        return Err(SampleError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(SampleError::EmptyInput);
    }
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| (s >= 0.5) == y)
        .count();
    Ok(correct as f64 / scores.len() as f64)
}
