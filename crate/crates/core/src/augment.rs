//! Edge-removal augmentation: the region strategy (delete up to `step` links
//! per row over a contiguous wrapped block of rows until a percentage budget
//! is met, never isolating a node) and a uniform DropEdge baseline, plus the
//! disjoint-decomposition check tying the outputs back to the original graph.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use thiserror::Error;

use crate::graph::{EdgeList, Graph};

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("percent must be a finite value in [0, 1], got {0}")]
    InvalidPercent(f64),
    #[error("step must be at least 1")]
    InvalidStep,
}

/// How edges are picked within a visited row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowChoice {
    /// Uniformly at random without replacement among the row's current
    /// neighbors.
    #[default]
    Random,
    /// The first eligible neighbors in ascending column order (sensitivity
    /// variant).
    First,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    percent: f64,
    step: usize,
    seed: u64,
    row_choice: RowChoice,
}

impl AugmentConfig {
    pub fn new(percent: f64, step: usize, seed: u64) -> Result<AugmentConfig, AugmentError> {
        if !percent.is_finite() || !(0.0..=1.0).contains(&percent) {
            return Err(AugmentError::InvalidPercent(percent));
        }
        if step == 0 {
            return Err(AugmentError::InvalidStep);
        }
        Ok(AugmentConfig {
            percent,
            step,
            seed,
            row_choice: RowChoice::Random,
        })
    }

    pub fn with_row_choice(mut self, row_choice: RowChoice) -> AugmentConfig {
        self.row_choice = row_choice;
        self
    }

    pub fn percent(&self) -> f64 {
        self.percent
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row_choice(&self) -> RowChoice {
        self.row_choice
    }
}

/// One removal in visit order: the visited row and the neighbor whose edge
/// was deleted (both symmetric entries go together).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemovalEvent {
    pub row: usize,
    pub neighbor: usize,
}

/// An augmented graph plus everything needed to audit it: the removed edges,
/// the budget, the termination flag, and the removal trace (for the region
/// strategy, `start_row`/`rows_visited` describe the wrapped visit interval).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentResult {
    pub augmented: Graph,
    pub removed: EdgeList,
    pub requested_deletions: usize,
    pub actual_deletions: usize,
    /// Set when a full unproductive pass over all rows ended the loop with
    /// `actual_deletions < requested_deletions`.
    pub early_termination: bool,
    pub start_row: usize,
    pub rows_visited: usize,
    pub trace: Vec<RemovalEvent>,
}

/// Region edge removal: starting from a uniformly drawn row, visit rows
/// consecutively (wrapping at the last row) and delete up to `step` edges per
/// visited row until `floor(percent × edges)` edges are gone.
///
/// A row is only entered while its current degree exceeds 1, and an edge is
/// never removed if that would drop either endpoint's current degree to zero.
/// Degrees are evaluated against the mutated graph, so deletions within a
/// call see earlier deletions. A full pass over all rows that removes
/// nothing terminates the loop early with the shortfall flagged.
pub fn rrlfsor(g: &Graph, cfg: &AugmentConfig) -> AugmentResult {
    let n = g.num_nodes();
    let requested = truncate_budget(cfg.percent, g.num_undirected_edges());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start_row = rng.random_range(0..n);

    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| g.neighbors(i).iter().copied().collect())
        .collect();
    let mut removed: Vec<(usize, usize)> = Vec::with_capacity(requested);
    let mut trace: Vec<RemovalEvent> = Vec::with_capacity(requested);
    let mut unproductive_visits = 0usize;
    let mut visit = 0usize;

    while removed.len() < requested && unproductive_visits < n {
        let row = (start_row + visit) % n;
        let mut removed_here = 0usize;
        if adj[row].len() > 1 {
            let mut candidates: Vec<usize> = adj[row].iter().copied().collect();
            if cfg.row_choice == RowChoice::Random {
                candidates.shuffle(&mut rng);
            }
            for &col in &candidates {
                if removed.len() >= requested || removed_here >= cfg.step {
                    break;
                }
                if adj[row].len() >= 2 && adj[col].len() >= 2 {
                    adj[row].remove(&col);
                    adj[col].remove(&row);
                    removed.push((row.max(col), row.min(col)));
                    trace.push(RemovalEvent { row, neighbor: col });
                    removed_here += 1;
                }
            }
        }
        if removed_here > 0 {
            unproductive_visits = 0;
        } else {
            unproductive_visits += 1;
        }
        visit += 1;
    }

    let augmented =
        Graph::from_sorted_adjacency(adj.into_iter().map(|s| s.into_iter().collect()).collect());
    removed.sort_unstable();
    let actual = removed.len();
    AugmentResult {
        augmented,
        removed: EdgeList::from_canonical_sorted(removed),
        requested_deletions: requested,
        actual_deletions: actual,
        early_termination: actual < requested,
        start_row,
        rows_visited: visit,
        trace,
    }
}

/// DropEdge baseline: remove `floor(percent × edges)` undirected edges
/// uniformly at random without replacement. No degree guard, no region
/// structure.
pub fn drop_edge(g: &Graph, percent: f64, seed: u64) -> Result<AugmentResult, AugmentError> {
    if !percent.is_finite() || !(0.0..=1.0).contains(&percent) {
        return Err(AugmentError::InvalidPercent(percent));
    }
    let edges = g.edge_list();
    let requested = truncate_budget(percent, edges.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, edges.len(), requested);

    let mut removed: Vec<(usize, usize)> = Vec::with_capacity(requested);
    let mut trace = Vec::with_capacity(requested);
    for idx in chosen.iter() {
        let (i, j) = edges.as_slice()[idx];
        removed.push((i, j));
        trace.push(RemovalEvent { row: i, neighbor: j });
    }
    let removed_set: BTreeSet<(usize, usize)> = removed.iter().copied().collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.num_nodes()];
    for &(i, j) in edges.iter() {
        if !removed_set.contains(&(i, j)) {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for nbrs in &mut adj {
        nbrs.sort_unstable();
    }
    removed.sort_unstable();
    let actual = removed.len();
    Ok(AugmentResult {
        augmented: Graph::from_sorted_adjacency(adj),
        removed: EdgeList::from_canonical_sorted(removed),
        requested_deletions: requested,
        actual_deletions: actual,
        early_termination: false,
        start_row: 0,
        rows_visited: 0,
        trace,
    })
}

/// True iff the augmented edge set and the removed list form a disjoint
/// partition of the original graph's edges.
pub fn verify_decomposition(original: &Graph, result: &AugmentResult) -> bool {
    if original.num_nodes() != result.augmented.num_nodes() {
        return false;
    }
    if result.actual_deletions != result.removed.len() {
        return false;
    }
    let aug_edges = result.augmented.edge_list();
    if aug_edges.len() + result.removed.len() != original.num_undirected_edges() {
        return false;
    }
    for &(i, j) in aug_edges.iter() {
        if !original.contains_edge(i, j) {
            return false;
        }
    }
    for &(i, j) in result.removed.iter() {
        if !original.contains_edge(i, j) || result.augmented.contains_edge(i, j) {
            return false;
        }
    }
    true
}

fn truncate_budget(percent: f64, edges: usize) -> usize {
    (percent * edges as f64).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> Graph {
        let pairs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edge_list(n, &pairs).unwrap()
    }

    fn complete_graph(n: usize) -> Graph {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..i {
                pairs.push((i, j));
            }
        }
        Graph::from_edge_list(n, &pairs).unwrap()
    }

    #[test]
    fn percent_zero_is_identity() {
        let g = path_graph(5);
        let cfg = AugmentConfig::new(0.0, 3, 7).unwrap();
        let res = rrlfsor(&g, &cfg);
        assert_eq!(res.augmented, g);
        assert!(res.removed.is_empty());
        assert_eq!(res.requested_deletions, 0);
        assert!(!res.early_termination);
        assert!(verify_decomposition(&g, &res));
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            AugmentConfig::new(1.5, 1, 0).unwrap_err(),
            AugmentError::InvalidPercent(1.5)
        );
        assert!(matches!(
            AugmentConfig::new(f64::NAN, 1, 0).unwrap_err(),
            AugmentError::InvalidPercent(_)
        ));
        assert_eq!(
            AugmentConfig::new(0.5, 0, 0).unwrap_err(),
            AugmentError::InvalidStep
        );
    }

    #[test]
    fn four_node_path_every_seed_outcome() {
        // floor(0.5 × 3) = 1 edge removed, and the guard keeps min degree ≥ 1.
        // Brute-forced over many seeds: every reachable outcome satisfies both.
        let g = path_graph(4);
        for seed in 0..200 {
            let cfg = AugmentConfig::new(0.5, 1, seed).unwrap();
            let res = rrlfsor(&g, &cfg);
            assert_eq!(res.requested_deletions, 1);
            assert_eq!(res.actual_deletions, 1);
            assert!(!res.early_termination);
            assert!(verify_decomposition(&g, &res));
            let min_deg = (0..4).map(|i| res.augmented.degree(i)).min().unwrap();
            assert!(min_deg >= 1, "seed {seed} isolated a node");
            // Only the middle edge (1,2) keeps both endpoints at degree ≥ 1.
            assert_eq!(res.removed.as_slice(), &[(2, 1)]);
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let g = complete_graph(9);
        let cfg = AugmentConfig::new(0.4, 2, 123).unwrap();
        assert_eq!(rrlfsor(&g, &cfg), rrlfsor(&g, &cfg));
        assert_eq!(
            drop_edge(&g, 0.4, 123).unwrap(),
            drop_edge(&g, 0.4, 123).unwrap()
        );
    }

    #[test]
    fn early_termination_on_perfect_matching() {
        // Every node has degree 1: no row may be entered, nothing is removable.
        let g = Graph::from_edge_list(6, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        let cfg = AugmentConfig::new(1.0, 2, 5).unwrap();
        let res = rrlfsor(&g, &cfg);
        assert_eq!(res.actual_deletions, 0);
        assert_eq!(res.requested_deletions, 3);
        assert!(res.early_termination);
        assert!(verify_decomposition(&g, &res));
        assert_eq!(res.augmented, g);
    }

    #[test]
    fn row_choice_first_takes_ascending_columns() {
        // Star plus ring so the hub row has many removable edges.
        let g = complete_graph(6);
        let cfg = AugmentConfig::new(0.2, 3, 99)
            .unwrap()
            .with_row_choice(RowChoice::First);
        let res = rrlfsor(&g, &cfg);
        assert_eq!(res.actual_deletions, 3);
        // All three deletions happen in the start row, lowest columns first.
        let row = res.start_row;
        let taken: Vec<usize> = res.trace.iter().map(|e| e.neighbor).collect();
        let expected: Vec<usize> = (0..6).filter(|&c| c != row).take(3).collect();
        assert_eq!(taken, expected);
        assert!(res.trace.iter().all(|e| e.row == row));
    }

    #[test]
    fn drop_edge_zero_and_full() {
        let g = complete_graph(3);
        let res = drop_edge(&g, 0.0, 1).unwrap();
        assert_eq!(res.augmented, g);
        assert!(res.removed.is_empty());

        let res = drop_edge(&g, 1.0, 1).unwrap();
        assert_eq!(res.actual_deletions, 3);
        assert_eq!(res.augmented.num_undirected_edges(), 0);
        assert!(verify_decomposition(&g, &res));
    }

    #[test]
    fn drop_edge_rejects_bad_percent() {
        let g = complete_graph(3);
        assert!(drop_edge(&g, -0.1, 0).is_err());
        assert!(drop_edge(&g, f64::INFINITY, 0).is_err());
    }

    #[test]
    fn drop_edge_frequency_on_k4() {
        // Monte Carlo: each of K4's 6 edges is removed with empirical
        // probability `percent` ± 0.05 over 1000 trials.
        let g = complete_graph(4);
        let percent = 0.5;
        let edges: Vec<(usize, usize)> = g.edge_list().as_slice().to_vec();
        let mut counts = vec![0usize; edges.len()];
        let trials = 1000;
        for seed in 0..trials {
            let res = drop_edge(&g, percent, seed).unwrap();
            for (k, &(i, j)) in edges.iter().enumerate() {
                if res.removed.contains(i, j) {
                    counts[k] += 1;
                }
            }
        }
        for (k, &c) in counts.iter().enumerate() {
            let freq = c as f64 / trials as f64;
            assert!(
                (freq - percent).abs() <= 0.05,
                "edge {:?} removed with frequency {freq}",
                edges[k]
            );
        }
    }

    #[test]
    fn tampered_result_fails_decomposition() {
        let g = complete_graph(5);
        let cfg = AugmentConfig::new(0.3, 1, 3).unwrap();
        let mut res = rrlfsor(&g, &cfg);
        assert!(verify_decomposition(&g, &res));
        // Re-insert one removed edge into the augmented graph.
        let &(i, j) = res.removed.iter().next().unwrap();
        let mut pairs: Vec<(usize, usize)> = res.augmented.edge_list().as_slice().to_vec();
        pairs.push((i, j));
        res.augmented = Graph::from_edge_list(g.num_nodes(), &pairs).unwrap();
        assert!(!verify_decomposition(&g, &res));
    }

    #[test]
    fn budget_matches_truncated_fraction() {
        let g = complete_graph(8); // 28 edges
        for (p, expect) in [(0.1, 2), (0.25, 7), (0.5, 14), (0.99, 27)] {
            let cfg = AugmentConfig::new(p, 1, 11).unwrap();
            assert_eq!(rrlfsor(&g, &cfg).requested_deletions, expect);
        }
    }
}
