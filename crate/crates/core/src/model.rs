//! Logistic preferential-attachment random graphs: an edge `i -> j` exists
//! independently with probability `s(c_j - c_i)`, `s` a sigmoid of slope
//! `alpha`, so well-ranked nodes rarely point to poorly ranked ones.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Graph, NodeId};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("centrality {value} of node {node} outside [0, 1]")]
    Centrality { node: NodeId, value: f64 },
    #[error("slope must lie in (0, 1], got {0}")]
    Slope(f64),
    #[error("{0}")]
    Argument(String),
    #[error("probability bound not applicable: {0}")]
    BoundNotApplicable(String),
}

/// `1 / (1 + exp(-alpha x))`, evaluated without overflow.
pub fn sigmoid(x: f64, alpha: f64) -> f64 {
    let y = alpha * x;
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    centralities: Vec<f64>,
    slope: f64,
    seed: u64,
}

impl LogisticModel {
    pub fn new(centralities: Vec<f64>, slope: f64, seed: u64) -> Result<Self, ModelError> {
        if !(slope > 0.0 && slope <= 1.0) {
            return Err(ModelError::Slope(slope));
        }
        if let Some((node, &value)) = centralities
            .iter()
            .enumerate()
            .find(|(_, c)| !(0.0..=1.0).contains(*c))
        {
            return Err(ModelError::Centrality { node, value });
        }
        Ok(LogisticModel {
            centralities,
            slope,
            seed,
        })
    }

    /// Model with centralities drawn uniformly from `[0, 1]` using `seed`.
    pub fn uniform(n_nodes: usize, slope: f64, seed: u64) -> Result<Self, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..n_nodes).map(|_| rng.random::<f64>()).collect();
        Self::new(c, slope, seed)
    }

    pub fn n_nodes(&self) -> usize {
        self.centralities.len()
    }

    pub fn centralities(&self) -> &[f64] {
        &self.centralities
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edge_probability(&self, i: NodeId, j: NodeId) -> f64 {
        if i == j {
            return 0.0;
        }
        sigmoid(self.centralities[j] - self.centralities[i], self.slope)
    }

    fn probability_table(&self) -> Vec<f64> {
        let n = self.n_nodes();
        (0..n * n)
            .map(|idx| self.edge_probability(idx / n, idx % n))
            .collect()
    }
}

/// Draws one directed unweighted graph; identical seeds give identical graphs.
pub fn sample_graph(m: &LogisticModel) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
    sample_graph_with(m, &mut rng)
}

/// Draws one graph from an external generator (pairs visited row-major).
pub fn sample_graph_with<R: Rng + ?Sized>(m: &LogisticModel, rng: &mut R) -> Graph {
    let n = m.n_nodes();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < m.edge_probability(i, j) {
                edges.push((i, j, 1.0));
            }
        }
    }
    Graph::from_edges(n, true, edges).expect("sampled edges are valid")
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Lower bound on `P(dist(i, S) > n)` for a node `i` outside `S`:
/// `max(0, 1 - C(N - |S|, n) s(c_S - c_i))^n`, with `c_S` the largest
/// centrality in `S`.
///
/// The inequality only holds when `2n <= N - |S|` and `2|S| <= N`; outside
/// that range small graphs violate it, so the function refuses.
pub fn distance_prob_lower_bound(
    n_nodes: usize,
    s_size: usize,
    c_s: f64,
    c_i: f64,
    alpha: f64,
    n: usize,
) -> Result<f64, ModelError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ModelError::Slope(alpha));
    }
    for (node, value) in [(0, c_s), (1, c_i)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ModelError::Centrality { node, value });
        }
    }
    if s_size == 0 || s_size >= n_nodes {
        return Err(ModelError::Argument(format!(
            "need 0 < |S| < N, got |S| = {s_size}, N = {n_nodes}"
        )));
    }
    if n == 0 {
        return Err(ModelError::Argument("n must be positive".into()));
    }
    let rest = n_nodes - s_size;
    if 2 * n > rest {
        return Err(ModelError::BoundNotApplicable(format!(
            "2n = {} exceeds N - |S| = {rest}",
            2 * n
        )));
    }
    if 2 * s_size > n_nodes {
        return Err(ModelError::BoundNotApplicable(format!(
            "2|S| = {} exceeds N = {n_nodes}",
            2 * s_size
        )));
    }
    let log_term = ln_binomial(rest, n) + sigmoid(c_s - c_i, alpha).ln();
    let inner = 1.0 - log_term.exp();
    Ok(inner.max(0.0).powi(n as i32))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub probability: f64,
    pub std_error: f64,
    pub trials: usize,
}

const CHUNK: usize = 1000;

/// Monte Carlo estimate of `P(dist(i, S) > n)` over `trials` sampled graphs.
/// Chunks of samples use separate ChaCha streams of the model seed, so the
/// result does not depend on the thread count.
pub fn estimate_distance_prob(
    m: &LogisticModel,
    set: &BTreeSet<NodeId>,
    i: NodeId,
    n: usize,
    trials: usize,
) -> Result<Estimate, ModelError> {
    let nn = m.n_nodes();
    if set.is_empty() || set.iter().any(|&s| s >= nn) || i >= nn {
        return Err(ModelError::Argument(
            "set and node must be valid and nonempty".into(),
        ));
    }
    if trials == 0 {
        return Err(ModelError::Argument("trials must be positive".into()));
    }
    let probs = m.probability_table();
    let chunks = trials.div_ceil(CHUNK);
    let far: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
            rng.set_stream(c as u64 + 1);
            let count = CHUNK.min(trials - c * CHUNK);
            (0..count)
                .filter(|_| far_from_set(&probs, nn, set, i, n, &mut rng))
                .count()
        })
        .sum();
    let p = far as f64 / trials as f64;
    Ok(Estimate {
        probability: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Samples one graph and reports whether no walk of length `<= n` leads from
/// `i` into `set`.
fn far_from_set<R: Rng>(
    probs: &[f64],
    nn: usize,
    set: &BTreeSet<NodeId>,
    i: NodeId,
    n: usize,
    rng: &mut R,
) -> bool {
    if set.contains(&i) {
        return false;
    }
    let mut adj = vec![Vec::new(); nn];
    for (a, row) in adj.iter_mut().enumerate() {
        for b in 0..nn {
            if a != b && rng.random::<f64>() < probs[a * nn + b] {
                row.push(b);
            }
        }
    }
    let mut seen = vec![false; nn];
    seen[i] = true;
    let mut frontier = vec![i];
    for _ in 0..n {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adj[u] {
                if !seen[v] {
                    if set.contains(&v) {
                        return false;
                    }
                    seen[v] = true;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    true
}
