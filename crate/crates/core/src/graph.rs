//! Undirected simple graphs in CSR form, degree statistics, and the
//! symmetric renormalization used by the propagation layer.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use thiserror::Error;

use crate::sparse::Csr;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("node index {index} out of range for {num_nodes} nodes")]
    IndexOutOfRange { index: usize, num_nodes: usize },
    #[error("matrix has {got} rows, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Undirected simple graph: symmetric CSR adjacency, no self-loops, no
/// duplicate entries, neighbor lists ascending within each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    num_undirected_edges: usize,
}

/// Counts surfaced by construction for dataset auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeListStats {
    pub raw_pairs: usize,
    pub self_loops_dropped: usize,
    pub duplicates_merged: usize,
}

impl Graph {
    /// Build a graph from raw (possibly directed, duplicated, self-looped)
    /// pairs. Pairs are symmetrized; self-loops dropped; duplicates merged.
    pub fn from_edge_list(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<Graph, GraphError> {
        Self::from_edge_list_with_stats(num_nodes, pairs).map(|(g, _)| g)
    }

    /// Same as [`Graph::from_edge_list`] but also reports how much input was
    /// dropped or merged.
    pub fn from_edge_list_with_stats(
        num_nodes: usize,
        pairs: &[(usize, usize)],
    ) -> Result<(Graph, EdgeListStats), GraphError> {
        if num_nodes == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let mut canonical = BTreeSet::new();
        let mut self_loops = 0usize;
        for &(a, b) in pairs {
            for idx in [a, b] {
                if idx >= num_nodes {
                    return Err(GraphError::IndexOutOfRange {
                        index: idx,
                        num_nodes,
                    });
                }
            }
            if a == b {
                self_loops += 1;
            } else {
                canonical.insert((a.max(b), a.min(b)));
            }
        }
        let stats = EdgeListStats {
            raw_pairs: pairs.len(),
            self_loops_dropped: self_loops,
            duplicates_merged: pairs.len() - self_loops - canonical.len(),
        };
        let mut adj = vec![Vec::new(); num_nodes];
        for &(i, j) in &canonical {
            adj[i].push(j);
            adj[j].push(i);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        Ok((Self::from_sorted_adjacency(adj), stats))
    }

    /// Build from per-node neighbor lists that are already symmetric,
    /// ascending, self-loop-free and duplicate-free.
    pub(crate) fn from_sorted_adjacency(adj: Vec<Vec<usize>>) -> Graph {
        let num_nodes = adj.len();
        let mut row_ptr = Vec::with_capacity(num_nodes + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for nbrs in &adj {
            debug_assert!(nbrs.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(nbrs);
            row_ptr.push(col_idx.len());
        }
        debug_assert_eq!(col_idx.len() % 2, 0);
        Graph {
            num_nodes,
            num_undirected_edges: col_idx.len() / 2,
            row_ptr,
            col_idx,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_undirected_edges(&self) -> usize {
        self.num_undirected_edges
    }

    /// Stored entry count (twice the undirected edge count).
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[node]..self.row_ptr[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.row_ptr[node + 1] - self.row_ptr[node]
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        if i >= self.num_nodes || j >= self.num_nodes {
            return false;
        }
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Map degree → node count; keys cover every degree present (including 0),
    /// counts sum to `num_nodes`.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for node in 0..self.num_nodes {
            *hist.entry(self.degree(node)).or_insert(0) += 1;
        }
        hist
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_nodes).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Canonical edge list in lower-triangle row-major scan order.
    pub fn edge_list(&self) -> EdgeList {
        let mut pairs = Vec::with_capacity(self.num_undirected_edges);
        for i in 0..self.num_nodes {
            for &j in self.neighbors(i) {
                if j < i {
                    pairs.push((i, j));
                }
            }
        }
        EdgeList { pairs }
    }

    /// Symmetric renormalization with implicit self-loops: entry (i, j) is
    /// 1/√((dᵢ+1)(dⱼ+1)) on the pattern of the graph plus the diagonal.
    pub fn normalize(&self) -> NormalizedAdjacency {
        let n = self.num_nodes;
        let inv_size: Vec<f64> = (0..n).map(|i| (self.degree(i) + 1) as f64).collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + n);
        let mut values = Vec::with_capacity(self.nnz() + n);
        row_ptr.push(0);
        for i in 0..n {
            let mut diag_placed = false;
            for &j in self.neighbors(i) {
                if !diag_placed && j > i {
                    col_idx.push(i);
                    values.push(1.0 / inv_size[i]);
                    diag_placed = true;
                }
                col_idx.push(j);
                values.push(1.0 / (inv_size[i] * inv_size[j]).sqrt());
            }
            if !diag_placed {
                col_idx.push(i);
                values.push(1.0 / inv_size[i]);
            }
            row_ptr.push(col_idx.len());
        }
        NormalizedAdjacency {
            csr: Csr {
                rows: n,
                cols: n,
                row_ptr,
                col_idx,
                values,
            },
        }
    }
}

/// Canonical undirected edge list: pairs (i, j) with i > j, sorted
/// lexicographically, no duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeList {
    pairs: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Canonicalize arbitrary pairs: orient i > j, drop self-loops, sort,
    /// dedupe.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> EdgeList {
        let mut canonical: Vec<(usize, usize)> = pairs
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| (a.max(b), a.min(b)))
            .collect();
        canonical.sort_unstable();
        canonical.dedup();
        EdgeList { pairs: canonical }
    }

    pub(crate) fn from_canonical_sorted(pairs: Vec<(usize, usize)>) -> EdgeList {
        debug_assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(pairs.iter().all(|&(i, j)| i > j));
        EdgeList { pairs }
    }

    pub fn as_slice(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let key = (i.max(j), i.min(j));
        self.pairs.binary_search(&key).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, (usize, usize)> {
        self.pairs.iter()
    }
}

impl<'a> IntoIterator for &'a EdgeList {
    type Item = &'a (usize, usize);
    type IntoIter = std::slice::Iter<'a, (usize, usize)>;
    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}

/// Â = D̃^{-1/2}(A+I)D̃^{-1/2}: the graph's pattern plus the diagonal with
/// symmetric degree weights. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    csr: Csr,
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.csr.rows
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    /// Stored weight at (i, j); None where the pattern has no entry.
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let start = self.csr.row_ptr[i];
        let end = self.csr.row_ptr[i + 1];
        self.csr.col_idx[start..end]
            .binary_search(&j)
            .ok()
            .map(|pos| self.csr.values[start + pos])
    }

    /// Row entries as (column, weight) pairs, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let start = self.csr.row_ptr[i];
        let end = self.csr.row_ptr[i + 1];
        self.csr.col_idx[start..end]
            .iter()
            .copied()
            .zip(self.csr.values[start..end].iter().copied())
    }

    /// Sparse-dense product Â·X. Per-row accumulation order is fixed, so the
    /// result is deterministic.
    pub fn spmm(&self, x: &Array2<f64>) -> Result<Array2<f64>, GraphError> {
        if x.nrows() != self.csr.rows {
            return Err(GraphError::DimensionMismatch {
                expected: self.csr.rows,
                got: x.nrows(),
            });
        }
        Ok(self.csr.mul_dense(x))
    }
}
