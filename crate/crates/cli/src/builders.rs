//! Synthetic graphs and graph loading.

use std::fs::File;
use std::path::Path;

use netstab::graph::{parse_edge_list, parse_matrix_market, Graph, GraphError, NodeId};

/// Nodes per cycle in [`build_two_cycles`].
pub const CYCLE_LEN: usize = 111;

/// Two undirected cycles of 111 nodes joined by one directed edge from the
/// last node of the first cycle to the first node of the second. Nodes are
/// labelled `1..=222`; label `p` has id `p - 1`, so the bridge is `110 -> 111`.
pub fn build_two_cycles() -> Graph {
    let mut edges = Vec::with_capacity(4 * CYCLE_LEN + 1);
    for offset in [0, CYCLE_LEN] {
        for i in 0..CYCLE_LEN {
            let u = offset + i;
            let v = offset + (i + 1) % CYCLE_LEN;
            edges.push((u, v, 1.0));
            edges.push((v, u, 1.0));
        }
    }
    edges.push(two_cycles_bridge());
    let labels = (1..=2 * CYCLE_LEN).map(|p| p.to_string()).collect();
    Graph::from_edges(2 * CYCLE_LEN, true, edges)
        .expect("valid construction")
        .with_labels(labels)
}

/// The directed edge joining the two cycles.
pub fn two_cycles_bridge() -> (NodeId, NodeId, f64) {
    (CYCLE_LEN - 1, CYCLE_LEN, 1.0)
}

/// On-disk graph formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    MatrixMarket,
}

impl GraphFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") => GraphFormat::MatrixMarket,
            _ => GraphFormat::EdgeList,
        }
    }
}

/// A graph plus the index base of its external node names.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub base_index: usize,
}

impl LoadedGraph {
    pub fn new(graph: Graph, base_index: usize) -> Self {
        let graph = if graph.labels().is_some() {
            graph
        } else {
            let labels = (0..graph.n_nodes())
                .map(|i| (i + base_index).to_string())
                .collect();
            graph.with_labels(labels)
        };
        LoadedGraph { graph, base_index }
    }

    /// Internal id of an external node number.
    pub fn node(&self, external: usize) -> Result<NodeId, GraphError> {
        let n_nodes = self.graph.n_nodes();
        match external.checked_sub(self.base_index) {
            Some(id) if id < n_nodes => Ok(id),
            _ => Err(GraphError::NodeOutOfRange {
                node: external,
                n_nodes,
            }),
        }
    }
}

/// Reads an edge list or MatrixMarket file. MatrixMarket files are 1-based
/// and carry their own symmetry, so `directed` and `base_index` apply only
/// to edge lists.
pub fn load_graph(
    path: &Path,
    directed: bool,
    base_index: usize,
) -> Result<LoadedGraph, GraphError> {
    let file = File::open(path)?;
    match GraphFormat::from_path(path) {
        GraphFormat::MatrixMarket => Ok(LoadedGraph::new(parse_matrix_market(file)?, 1)),
        GraphFormat::EdgeList => Ok(LoadedGraph::new(
            parse_edge_list(file, directed, base_index)?,
            base_index,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycles_shape() {
        let g = build_two_cycles();
        assert_eq!(g.n_nodes(), 222);
        assert_eq!(g.n_entries(), 2 * 111 * 2 + 1);
        assert!(g.has_edge(110, 111));
        assert!(!g.has_edge(111, 110));
        assert_eq!(g.label(110), "111");
        assert!(g.has_edge(0, 110) && g.has_edge(111, 221));
    }
}
