//! Centrality vectors, least-central selection and ranking comparison.

use std::collections::HashSet;
use std::hash::Hash;

use rayon::prelude::*;
use thiserror::Error;

use netstab::graph::{build_matrix, Graph, GraphError, MatrixKind, NodeId};
use netstab::krylov::{estimate_entry, KrylovError};
use netstab::oracle::{dense_function, OracleError};
use netstab::sparse::CsrMatrix;
use netstab::FunctionDescriptor;

/// Graphs up to this size get exact centralities from the dense oracle.
pub const DENSE_CENTRALITY_LIMIT: usize = 600;

/// Lanczos steps for centralities of larger graphs.
pub const CENTRALITY_STEPS: usize = 60;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error("{0}")]
    Argument(String),
}

/// Diagonal of `f(M)`: dense for small matrices, Lanczos otherwise.
pub fn centralities(
    matrix: &CsrMatrix,
    f: &FunctionDescriptor,
    dense_limit: usize,
    steps: usize,
) -> Result<Vec<f64>, RankingError> {
    let n = matrix.dim();
    if n <= dense_limit {
        let fm = dense_function(&matrix.to_dense(), f)?;
        return Ok((0..n).map(|k| fm[(k, k)]).collect());
    }
    (0..n)
        .into_par_iter()
        .map(|k| Ok(estimate_entry(f, matrix, k, k, steps.min(n))?))
        .collect()
}

/// Scores agreeing to 12 significant digits count as ties, so rounding
/// noise in equal centralities does not decide the order.
fn tie_key(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().unwrap_or(x)
    } else {
        x
    }
}

/// Node ids ordered by centrality, most central first; ties by id.
pub fn ranking(scores: &[f64]) -> Vec<NodeId> {
    let keys: Vec<f64> = scores.iter().map(|&x| tie_key(x)).collect();
    let mut ids: Vec<NodeId> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    ids
}

/// The `m` nodes with smallest score, ties broken by id ascending.
pub fn smallest(scores: &[f64], m: usize) -> Vec<NodeId> {
    let keys: Vec<f64> = scores.iter().map(|&x| tie_key(x)).collect();
    let mut ids: Vec<NodeId> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    ids.truncate(m);
    ids
}

/// The `m` nodes with smallest `f(M)_{kk}`, `M` the `kind` matrix of `g`.
pub fn least_central_nodes(
    g: &Graph,
    f: &FunctionDescriptor,
    kind: MatrixKind,
    m: usize,
) -> Result<Vec<NodeId>, RankingError> {
    if m > g.n_nodes() {
        return Err(RankingError::Argument(format!(
            "m = {m} exceeds the {} nodes",
            g.n_nodes()
        )));
    }
    let matrix = build_matrix(g, kind)?;
    let scores = centralities(&matrix, f, DENSE_CENTRALITY_LIMIT, CENTRALITY_STEPS)?;
    Ok(smallest(&scores, m))
}

/// Top-`kappa` intersection similarity: one minus the mean over prefixes of
/// length `t <= kappa` of `|prefix1 sym-diff prefix2| / (2t)`.
pub fn intersection_similarity<T: Eq + Hash + Clone>(
    l1: &[T],
    l2: &[T],
    kappa: usize,
) -> Result<f64, RankingError> {
    if kappa == 0 {
        return Err(RankingError::Argument("kappa must be positive".into()));
    }
    if kappa > l1.len().min(l2.len()) {
        return Err(RankingError::Argument(format!(
            "kappa = {kappa} exceeds the list lengths"
        )));
    }
    Ok(isim_curve(l1, l2, kappa)[kappa - 1])
}

/// Intersection similarity for every `kappa = 1..=max_kappa`, incrementally.
pub fn isim_curve<T: Eq + Hash + Clone>(l1: &[T], l2: &[T], max_kappa: usize) -> Vec<f64> {
    let (mut only1, mut only2): (HashSet<T>, HashSet<T>) = (HashSet::new(), HashSet::new());
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(max_kappa);
    for t in 1..=max_kappa {
        if !only2.remove(&l1[t - 1]) {
            only1.insert(l1[t - 1].clone());
        }
        if !only1.remove(&l2[t - 1]) {
            only2.insert(l2[t - 1].clone());
        }
        acc += (only1.len() + only2.len()) as f64 / (2.0 * t as f64);
        out.push(1.0 - acc / t as f64);
    }
    out
}
