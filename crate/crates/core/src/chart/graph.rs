//! k-nearest-neighbour graph and graph geodesics.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::DistanceMatrix;
use crate::error::{Error, Result};

/// Undirected weighted graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub k: usize,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    /// Builds a graph from undirected edges; duplicates keep the first weight.
    pub fn from_edges(n: usize, k: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (a, b, w) in edges {
            assert!(a != b && a < n && b < n, "invalid edge ({a}, {b})");
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in adjacency.iter_mut() {
            list.sort_by_key(|&(j, _)| j);
            list.dedup_by_key(|&mut (j, _)| j);
        }
        NeighborGraph { k, adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sizes of the connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut size = 0;
            while let Some(v) = stack.pop() {
                size += 1;
                for &(w, _) in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

/// Indices of the `k` nearest other nodes of `i`, ties broken by lower index.
pub(crate) fn nearest(dm: &DistanceMatrix, i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> =
        (0..dm.len()).filter(|&j| j != i).map(|j| (dm.get(i, j), j)).collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < others.len() {
        others.select_nth_unstable_by(k - 1, by_distance);
        others.truncate(k);
    }
    others.sort_unstable_by(by_distance);
    others.into_iter().map(|(_, j)| j).collect()
}

/// Connects every node to its `k` nearest neighbours and symmetrizes by
/// union. Ties are broken by node index, so the result is a deterministic
/// function of the distances.
pub fn knn_graph(dm: &DistanceMatrix, k: usize) -> Result<NeighborGraph> {
    let n = dm.len();
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("neighbourhood size {k} must lie in [1, {n})")));
    }
    let lists: Vec<Vec<usize>> = (0..n).into_par_iter().map(|i| nearest(dm, i, k)).collect();
    let edges = lists
        .iter()
        .enumerate()
        .flat_map(|(i, list)| list.iter().map(move |&j| (i, j, dm.get(i, j))));
    Ok(NeighborGraph::from_edges(n, k, edges))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node index
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest path lengths.
pub fn dijkstra(g: &NeighborGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier { dist: 0.0, node: source });
    while let Some(Frontier { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in g.neighbors(node) {
            let candidate = d + w;
            if candidate < dist[next] {
                dist[next] = candidate;
                heap.push(Frontier { dist: candidate, node: next });
            }
        }
    }
    dist
}

/// All-pairs shortest path lengths by one Dijkstra run per source.
///
/// Entry `(i, j)` with `i < j` comes from the run started at `i`.
pub fn geodesic_distances(g: &NeighborGraph) -> Result<DistanceMatrix> {
    let sizes = g.component_sizes();
    if sizes.len() > 1 {
        return Err(Error::DisconnectedGraph { component_sizes: sizes });
    }
    let n = g.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d = dijkstra(g, i);
            d.drain(..=i);
            d
        })
        .collect();
    DistanceMatrix::from_condensed(n, rows.concat())
}
