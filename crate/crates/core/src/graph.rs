//! Weighted directed/undirected graphs backed by a row-compressed adjacency
//! matrix, edge perturbations, matrix normalizations and exact hop distances.
//!
//! Undirected graphs are directed graphs whose adjacency is exactly symmetric.
//! Hop distances ignore weights: `dist(k, l)` is the length of the shortest
//! walk from `k` to `l`, `None` when `l` cannot be reached.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use thiserror::Error;

use crate::sparse::CsrMatrix;

pub type NodeId = usize;

/// Hop count; `None` stands for an infinite distance.
pub type Hops = Option<usize>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: edge weight must be positive, got {weight}")]
    InvalidWeight { line: usize, weight: f64 },
    #[error("node {node} out of range for a graph with {n_nodes} nodes")]
    NodeOutOfRange { node: NodeId, n_nodes: usize },
    #[error("edge ({src}, {dst}): {reason}")]
    Conflict {
        src: NodeId,
        dst: NodeId,
        reason: &'static str,
    },
    #[error("node {node} has no outgoing edge")]
    Dangling { node: NodeId },
    #[error("node {node} carries a self-loop, not allowed for {kind:?}")]
    SelfLoop { node: NodeId, kind: MatrixKind },
    #[error("{0:?} requires an undirected graph")]
    RequiresUndirected(MatrixKind),
    #[error("node set must not be empty")]
    EmptySet,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GraphError {
    /// Structural violations of an operation's preconditions, as opposed to
    /// malformed input or I/O failures.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            GraphError::Conflict { .. }
                | GraphError::Dangling { .. }
                | GraphError::SelfLoop { .. }
                | GraphError::RequiresUndirected(_)
                | GraphError::EmptySet
                | GraphError::NodeOutOfRange { .. }
        )
    }
}

/// Which matrix a graph is turned into before a function is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    /// `A` itself.
    PlainAdjacency,
    /// `D^{-1/2} A D^{-1/2}` for undirected graphs.
    NormalizedSymmetric,
    /// Row-stochastic `D_out^{-1} A`.
    TransitionOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Walks starting at the given node.
    FromNode,
    /// Walks ending at the given node.
    ToNode,
}

#[derive(Debug, Clone)]
pub struct Graph {
    directed: bool,
    adjacency: CsrMatrix,
    transpose: CsrMatrix,
    labels: Option<Vec<String>>,
    merged_duplicates: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.directed == other.directed && self.adjacency == other.adjacency
    }
}

impl Graph {
    /// Builds a graph from weighted directed entries. Repeated entries are
    /// summed. When `directed` is false every entry is mirrored, so each
    /// undirected edge must be listed once.
    pub fn from_edges<I>(n_nodes: usize, directed: bool, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut entries: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        let mut merged = 0;
        for (src, dst, w) in edges {
            for node in [src, dst] {
                if node >= n_nodes {
                    return Err(GraphError::NodeOutOfRange { node, n_nodes });
                }
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::InvalidWeight { line: 0, weight: w });
            }
            let key = if directed {
                (src, dst)
            } else {
                (src.min(dst), src.max(dst))
            };
            if let Some(acc) = entries.get_mut(&key) {
                *acc += w;
                merged += 1;
            } else {
                entries.insert(key, w);
            }
        }
        let mut g = Self::from_entry_map(n_nodes, directed, entries);
        g.merged_duplicates = merged;
        Ok(g)
    }

    /// `entries` holds one key per directed edge, or per unordered pair
    /// `(min, max)` when undirected.
    fn from_entry_map(
        n_nodes: usize,
        directed: bool,
        entries: BTreeMap<(NodeId, NodeId), f64>,
    ) -> Self {
        let mut triplets = Vec::with_capacity(entries.len() * if directed { 1 } else { 2 });
        for (&(i, j), &w) in &entries {
            triplets.push((i, j, w));
            if !directed && i != j {
                triplets.push((j, i, w));
            }
        }
        Self::from_matrix_unchecked(CsrMatrix::from_triplets(n_nodes, triplets), directed)
    }

    fn from_matrix_unchecked(adjacency: CsrMatrix, directed: bool) -> Self {
        let transpose = adjacency.transpose();
        Graph {
            directed,
            adjacency,
            transpose,
            labels: None,
            merged_duplicates: 0,
        }
    }

    /// Wraps a nonnegative matrix. Undirected graphs must have a symmetric matrix.
    pub fn from_adjacency(adjacency: CsrMatrix, directed: bool) -> Result<Self, GraphError> {
        for (i, j, w) in adjacency.iter() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::InvalidWeight { line: 0, weight: w });
            }
            if !directed && adjacency.get(j, i) != w {
                return Err(GraphError::Conflict {
                    src: i,
                    dst: j,
                    reason: "asymmetric entry in undirected graph",
                });
            }
        }
        Ok(Self::from_matrix_unchecked(adjacency, directed))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.n_nodes(), "one label per node");
        self.labels = Some(labels);
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.dim()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// External name of a node: its label if present, else the index.
    pub fn label(&self, node: NodeId) -> String {
        match &self.labels {
            Some(l) => l[node].clone(),
            None => node.to_string(),
        }
    }

    /// Duplicate input lines folded into existing edges during construction.
    pub fn merged_duplicates(&self) -> usize {
        self.merged_duplicates
    }

    /// Number of stored (directed) adjacency entries.
    pub fn n_entries(&self) -> usize {
        self.adjacency.nnz()
    }

    /// Number of edges: directed entries, or unordered pairs when undirected.
    pub fn n_edges(&self) -> usize {
        if self.directed {
            self.adjacency.nnz()
        } else {
            self.adjacency.iter().filter(|&(i, j, _)| i <= j).count()
        }
    }

    pub fn weight(&self, src: NodeId, dst: NodeId) -> f64 {
        self.adjacency.get(src, dst)
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.weight(src, dst) > 0.0
    }

    pub fn out_neighbors(&self, node: NodeId) -> &[NodeId] {
        self.adjacency.row(node).0
    }

    pub fn in_neighbors(&self, node: NodeId) -> &[NodeId] {
        self.transpose.row(node).0
    }

    /// Edges as `(src, dst, weight)`; undirected graphs list each pair once with `src <= dst`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        let directed = self.directed;
        self.adjacency
            .iter()
            .filter(move |&(i, j, _)| directed || i <= j)
    }

    pub(crate) fn check_node(&self, node: NodeId) -> Result<(), GraphError> {
        if node < self.n_nodes() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                node,
                n_nodes: self.n_nodes(),
            })
        }
    }
}

/// Parses a whitespace separated edge list, one `src dst [weight]` per line.
///
/// Lines starting with `#` or `%` and blank lines are skipped, except that a
/// `# nodes N` header fixes the node count for trailing isolated nodes.
/// Repeating an edge in the same orientation sums the weights. For undirected
/// input a pair may be listed in one or both orientations; both orientations
/// must then carry the same weight.
pub fn parse_edge_list<R: Read>(
    input: R,
    directed: bool,
    base_index: usize,
) -> Result<Graph, GraphError> {
    let reader = BufReader::new(input);
    let mut oriented: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    let mut merged = 0;
    let mut max_node: Option<NodeId> = None;
    let mut declared = 0;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if let Some(n) = declared_nodes(trimmed) {
            declared = declared.max(n);
        }
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("expected `src dst [weight]`, got {trimmed:?}"),
            });
        }
        let src = parse_node(fields[0], base_index, line_no)?;
        let dst = parse_node(fields[1], base_index, line_no)?;
        let weight = match fields.get(2) {
            Some(s) => s.parse::<f64>().map_err(|e| GraphError::Parse {
                line: line_no,
                msg: format!("bad weight {s:?}: {e}"),
            })?,
            None => 1.0,
        };
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(GraphError::InvalidWeight {
                line: line_no,
                weight,
            });
        }
        max_node = Some(max_node.map_or(src.max(dst), |m| m.max(src).max(dst)));
        if let Some(acc) = oriented.get_mut(&(src, dst)) {
            *acc += weight;
            merged += 1;
        } else {
            oriented.insert((src, dst), weight);
        }
    }

    let n_nodes = max_node.map_or(0, |m| m + 1).max(declared);
    let entries = if directed {
        oriented
    } else {
        let mut pairs = BTreeMap::new();
        for (&(i, j), &w) in &oriented {
            if i > j {
                if let Some(&w_fwd) = oriented.get(&(j, i)) {
                    if w_fwd != w {
                        return Err(GraphError::Conflict {
                            src: j,
                            dst: i,
                            reason: "orientations list different weights",
                        });
                    }
                    continue;
                }
            }
            pairs.insert((i.min(j), i.max(j)), w);
        }
        pairs
    };
    let mut g = Graph::from_entry_map(n_nodes, directed, entries);
    g.merged_duplicates = merged;
    Ok(g)
}

/// Node count from a `# nodes N ...` header as written by [`write_edge_list`].
fn declared_nodes(line: &str) -> Option<usize> {
    let mut words = line.strip_prefix('#')?.split_whitespace();
    if words.next()? != "nodes" {
        return None;
    }
    words.next()?.parse().ok()
}

fn parse_node(field: &str, base_index: usize, line: usize) -> Result<NodeId, GraphError> {
    let raw: usize = field.parse().map_err(|e| GraphError::Parse {
        line,
        msg: format!("bad node id {field:?}: {e}"),
    })?;
    raw.checked_sub(base_index)
        .ok_or_else(|| GraphError::Parse {
            line,
            msg: format!("node id {raw} below base index {base_index}"),
        })
}

/// Reads a MatrixMarket coordinate file (`pattern`, `real` or `integer`;
/// `general` or `symmetric`). Symmetric files yield undirected graphs.
pub fn parse_matrix_market<R: Read>(input: R) -> Result<Graph, GraphError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(GraphError::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header?.to_ascii_lowercase();
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
    {
        return Err(GraphError::Parse {
            line: 1,
            msg: format!("unsupported MatrixMarket header {header:?}"),
        });
    }
    let pattern = match tokens[3] {
        "pattern" => true,
        "real" | "integer" => false,
        other => {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("unsupported field {other:?}"),
            })
        }
    };
    let symmetric = match tokens[4] {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("unsupported symmetry {other:?}"),
            })
        }
    };

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| GraphError::Parse {
                line: line_no,
                msg: format!("bad integer {s:?}: {e}"),
            })
        };
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: "expected `rows cols nnz`".into(),
                    });
                }
                let (rows, cols) = (parse_usize(fields[0])?, parse_usize(fields[1])?);
                if rows != cols {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: "adjacency matrix must be square".into(),
                    });
                }
                size = Some((rows, parse_usize(fields[2])?));
            }
            Some((n, _)) => {
                let expected = if pattern { 2 } else { 3 };
                if fields.len() != expected {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: format!("expected {expected} fields"),
                    });
                }
                let i = parse_usize(fields[0])?;
                let j = parse_usize(fields[1])?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: format!("index ({i}, {j}) outside 1..={n}"),
                    });
                }
                let w = if pattern {
                    1.0
                } else {
                    fields[2].parse::<f64>().map_err(|e| GraphError::Parse {
                        line: line_no,
                        msg: format!("bad value: {e}"),
                    })?
                };
                if w == 0.0 {
                    continue;
                }
                if !(w > 0.0) || !w.is_finite() {
                    return Err(GraphError::InvalidWeight {
                        line: line_no,
                        weight: w,
                    });
                }
                triplets.push((i - 1, j - 1, w));
            }
        }
    }
    let (n, _) = size.ok_or(GraphError::Parse {
        line: 1,
        msg: "missing size line".into(),
    })?;
    Graph::from_edges(n, !symmetric, triplets)
}

/// Writes the edge-list format read by [`parse_edge_list`], weights with 15
/// significant digits.
pub fn write_edge_list(g: &Graph, base_index: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# nodes {} directed {}", g.n_nodes(), g.is_directed());
    for (i, j, w) in g.edges() {
        let _ = writeln!(
            out,
            "{} {} {}",
            i + base_index,
            j + base_index,
            format_sig15(w)
        );
    }
    out
}

fn format_sig15(w: f64) -> String {
    let s = format!("{w:.14e}");
    let parsed: f64 = s.parse().expect("formatted float parses");
    // shortest representation of the rounded value
    format!("{parsed}")
}

/// Kind of change applied to one directed entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeAction {
    Add(f64),
    Remove,
    Reweight(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeChange {
    pub src: NodeId,
    pub dst: NodeId,
    pub action: EdgeAction,
}

/// A set of edge insertions, deletions and reweightings, with the sources
/// `S` and tips `T` of the touched entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeDelta {
    changes: Vec<EdgeChange>,
    sources: BTreeSet<NodeId>,
    tips: BTreeSet<NodeId>,
}

impl EdgeDelta {
    pub fn new(changes: Vec<EdgeChange>) -> Self {
        let sources = changes.iter().map(|c| c.src).collect();
        let tips = changes.iter().map(|c| c.dst).collect();
        EdgeDelta {
            changes,
            sources,
            tips,
        }
    }

    /// Adds the mirrored change `(dst, src)` for every non-loop change not
    /// already present, as required for undirected graphs.
    pub fn symmetric(changes: Vec<EdgeChange>) -> Self {
        let mut seen: BTreeSet<(NodeId, NodeId)> = changes.iter().map(|c| (c.src, c.dst)).collect();
        let mut all = changes.clone();
        for c in changes {
            if c.src != c.dst && seen.insert((c.dst, c.src)) {
                all.push(EdgeChange {
                    src: c.dst,
                    dst: c.src,
                    action: c.action,
                });
            }
        }
        Self::new(all)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn changes(&self) -> &[EdgeChange] {
        &self.changes
    }

    pub fn sources(&self) -> &BTreeSet<NodeId> {
        &self.sources
    }

    pub fn tips(&self) -> &BTreeSet<NodeId> {
        &self.tips
    }

    /// Checks the delta against `g`: node ranges, no duplicate entries,
    /// Add only on absent edges, Remove/Reweight only on present ones, positive
    /// weights, and closure under reversal for undirected graphs.
    pub fn validate(&self, g: &Graph) -> Result<(), GraphError> {
        let mut seen: BTreeMap<(NodeId, NodeId), EdgeAction> = BTreeMap::new();
        for c in &self.changes {
            g.check_node(c.src)?;
            g.check_node(c.dst)?;
            if seen.insert((c.src, c.dst), c.action).is_some() {
                return Err(GraphError::Conflict {
                    src: c.src,
                    dst: c.dst,
                    reason: "entry changed twice",
                });
            }
            let present = g.has_edge(c.src, c.dst);
            match c.action {
                EdgeAction::Add(w) | EdgeAction::Reweight(w) if !(w > 0.0) || !w.is_finite() => {
                    return Err(GraphError::InvalidWeight { line: 0, weight: w });
                }
                EdgeAction::Add(_) if present => {
                    return Err(GraphError::Conflict {
                        src: c.src,
                        dst: c.dst,
                        reason: "cannot add an existing edge",
                    });
                }
                EdgeAction::Remove | EdgeAction::Reweight(_) if !present => {
                    return Err(GraphError::Conflict {
                        src: c.src,
                        dst: c.dst,
                        reason: "edge does not exist",
                    });
                }
                _ => {}
            }
        }
        if !g.is_directed() {
            for (&(i, j), action) in &seen {
                if i != j && seen.get(&(j, i)) != Some(action) {
                    return Err(GraphError::Conflict {
                        src: i,
                        dst: j,
                        reason: "undirected delta must change both orientations alike",
                    });
                }
            }
        }
        Ok(())
    }

    /// The delta undoing `self` when applied to `apply_delta(g, self)`.
    pub fn inverse(&self, g: &Graph) -> EdgeDelta {
        let changes = self
            .changes
            .iter()
            .map(|c| {
                let action = match c.action {
                    EdgeAction::Add(_) => EdgeAction::Remove,
                    EdgeAction::Remove => EdgeAction::Add(g.weight(c.src, c.dst)),
                    EdgeAction::Reweight(_) => EdgeAction::Reweight(g.weight(c.src, c.dst)),
                };
                EdgeChange {
                    src: c.src,
                    dst: c.dst,
                    action,
                }
            })
            .collect();
        EdgeDelta::new(changes)
    }
}

/// Returns the perturbed graph; `g` is left untouched.
pub fn apply_delta(g: &Graph, d: &EdgeDelta) -> Result<Graph, GraphError> {
    d.validate(g)?;
    let mut entries: BTreeMap<(NodeId, NodeId), f64> =
        g.adjacency.iter().map(|(i, j, w)| ((i, j), w)).collect();
    for c in d.changes() {
        match c.action {
            EdgeAction::Add(w) | EdgeAction::Reweight(w) => {
                entries.insert((c.src, c.dst), w);
            }
            EdgeAction::Remove => {
                entries.remove(&(c.src, c.dst));
            }
        }
    }
    let adjacency = CsrMatrix::from_triplets(
        g.n_nodes(),
        entries.into_iter().map(|((i, j), w)| (i, j, w)),
    );
    let mut out = Graph::from_matrix_unchecked(adjacency, g.directed);
    out.labels = g.labels.clone();
    Ok(out)
}

/// Builds the matrix of the requested kind. Degrees are sums of incident weights.
pub fn build_matrix(g: &Graph, kind: MatrixKind) -> Result<CsrMatrix, GraphError> {
    let a = &g.adjacency;
    if kind == MatrixKind::PlainAdjacency {
        return Ok(a.clone());
    }
    if kind == MatrixKind::NormalizedSymmetric && g.directed {
        return Err(GraphError::RequiresUndirected(kind));
    }
    let mut degree = vec![0.0; g.n_nodes()];
    for (i, j, w) in a.iter() {
        if i == j {
            return Err(GraphError::SelfLoop { node: i, kind });
        }
        degree[i] += w;
    }
    if let Some(node) = degree.iter().position(|&d| d == 0.0) {
        return Err(GraphError::Dangling { node });
    }
    let scaled = match kind {
        MatrixKind::TransitionOut => a.map_entries(|i, _, w| w / degree[i]),
        MatrixKind::NormalizedSymmetric => {
            let root: Vec<f64> = degree.iter().map(|d| d.sqrt()).collect();
            a.map_entries(|i, j, w| w / (root[i] * root[j]))
        }
        MatrixKind::PlainAdjacency => unreachable!(),
    };
    Ok(scaled)
}

/// Exact hop distances from `source` (or to it, following edges backwards,
/// when `reverse`).
pub fn bfs_distances(g: &Graph, source: NodeId, reverse: bool) -> Vec<Hops> {
    multi_source_bfs(g, std::iter::once(source), reverse)
}

/// Distances from the nearest member of `sources` (or to it when `reverse`).
pub fn multi_source_bfs<I>(g: &Graph, sources: I, reverse: bool) -> Vec<Hops>
where
    I: IntoIterator<Item = NodeId>,
{
    let csr = if reverse { &g.transpose } else { &g.adjacency };
    let mut dist: Vec<Hops> = vec![None; g.n_nodes()];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let next = dist[u].map(|d| d + 1);
        for &v in csr.row(u).0 {
            if dist[v].is_none() {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// `dist(k, S)` for [`Direction::FromNode`], `dist(S, k)` for [`Direction::ToNode`].
pub fn dist_to_set(
    g: &Graph,
    k: NodeId,
    set: &BTreeSet<NodeId>,
    direction: Direction,
) -> Result<Hops, GraphError> {
    if set.is_empty() {
        return Err(GraphError::EmptySet);
    }
    g.check_node(k)?;
    for &s in set {
        g.check_node(s)?;
    }
    let reverse = direction == Direction::ToNode;
    let dist = bfs_distances(g, k, reverse);
    Ok(set.iter().filter_map(|&s| dist[s]).min())
}

/// For every node `m`, `dist(m, S)` ([`Direction::FromNode`]) or `dist(S, m)`
/// ([`Direction::ToNode`]), via one multi-source BFS.
pub fn distances_to_set(g: &Graph, set: &BTreeSet<NodeId>, direction: Direction) -> Vec<Hops> {
    // dist(m, S) walks backwards from S
    let reverse = direction == Direction::FromNode;
    multi_source_bfs(g, set.iter().copied(), reverse)
}

/// Largest finite hop distance over all ordered pairs.
pub fn diameter(g: &Graph) -> usize {
    (0..g.n_nodes())
        .map(|k| {
            bfs_distances(g, k, false)
                .into_iter()
                .flatten()
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0)
}
