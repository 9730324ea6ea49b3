//! Per-sentence adjacency matrices over the dependency graph.
//!
//! Edges are directed head to dependent; the diagonal is always 1. The
//! message-passing layer consumes both the matrix and its transpose, which
//! is what makes the direction meaningful.

use crate::autodiff::Tensor;
use crate::corpus::DependencyGraph;

use super::sdi::SdiTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjacencyMode {
    Binary,
    Sdi,
}

/// Dense n-by-n adjacency with unit diagonal. Off-diagonal entries are 1 in
/// binary mode and the relation's corpus frequency in SDI mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    n: usize,
    data: Vec<f64>,
    mode: AdjacencyMode,
}

impl Adjacency {
    fn diagonal(n: usize, mode: AdjacencyMode) -> Adjacency {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Adjacency { n, data, mode }
    }

    /// Self-loops only; the no-dependency ablation.
    pub fn identity(n: usize) -> Adjacency {
        Adjacency::diagonal(n, AdjacencyMode::Binary)
    }

    /// Unit weight on every dependency edge.
    pub fn binary(graph: &DependencyGraph) -> Adjacency {
        let mut adj = Adjacency::diagonal(graph.n, AdjacencyMode::Binary);
        for edge in &graph.edges {
            adj.data[(edge.head - 1) * graph.n + (edge.dependent - 1)] = 1.0;
        }
        adj
    }

    /// Relation-frequency weight on every dependency edge.
    pub fn sdi(graph: &DependencyGraph, table: &SdiTable) -> Adjacency {
        let mut adj = Adjacency::diagonal(graph.n, AdjacencyMode::Sdi);
        for edge in &graph.edges {
            adj.data[(edge.head - 1) * graph.n + (edge.dependent - 1)] = table.value(&edge.relation);
        }
        adj
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> AdjacencyMode {
        self.mode
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Count of nonzero off-diagonal entries per row; the degree used by the
    /// message-passing normalization.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| j != i && self.data[i * self.n + j] != 0.0)
                    .count()
            })
            .collect()
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.n, self.n], self.data.clone()).expect("square adjacency")
    }

    pub fn transposed_tensor(&self) -> Tensor {
        let mut data = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                data[j * self.n + i] = self.data[i * self.n + j];
            }
        }
        Tensor::new(vec![self.n, self.n], data).expect("square adjacency")
    }

    /// True when both matrices have the same nonzero positions.
    pub fn same_pattern(&self, other: &Adjacency) -> bool {
        self.n == other.n
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| (*a == 0.0) == (*b == 0.0))
    }
}
