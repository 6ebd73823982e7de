//! All-pairs hop distances from Krylov trackers and their accuracy metric.

use rayon::prelude::*;

use netstab::graph::{bfs_distances, build_matrix, Graph, MatrixKind, NodeId};
use netstab::krylov::{arnoldi_tracker, lanczos_hermitian, KrylovError};
use netstab::sparse::{CsrMatrix, Transposed};

/// Tracker distances `d_n(k, m)` from node `k` after `n` steps (sentinel `n`
/// for nodes not reached). Undirected graphs use the normalized matrix
/// (plain adjacency when normalization is impossible) and the Hermitian
/// recurrence. Directed graphs use an Arnoldi basis of the transpose: the
/// two-sided recurrence stops as soon as either side closes, which leaves
/// the other side's distances unread.
pub fn tracked_row(
    g: &Graph,
    matrix: &CsrMatrix,
    k: NodeId,
    n: usize,
) -> Result<Vec<usize>, KrylovError> {
    if !g.is_directed() {
        let (_, tracker) = lanczos_hermitian(matrix, k, n)?;
        return Ok(tracker.raw().to_vec());
    }
    Ok(arnoldi_tracker(&Transposed(matrix), k, n)?.raw().to_vec())
}

/// Matrix the trackers run on.
pub fn tracking_matrix(g: &Graph) -> CsrMatrix {
    if !g.is_directed() {
        if let Ok(m) = build_matrix(g, MatrixKind::NormalizedSymmetric) {
            return m;
        }
    }
    g.adjacency().clone()
}

/// Mismatch counts behind `rho_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RhoCount {
    pub steps: usize,
    /// Connected ordered pairs `k != l` with `d_n(k, l) != dist(k, l)`.
    pub mismatched: u64,
    /// Connected ordered pairs `k != l`.
    pub connected_pairs: u64,
}

impl RhoCount {
    pub fn value(&self) -> f64 {
        if self.connected_pairs == 0 {
            0.0
        } else {
            self.mismatched as f64 / self.connected_pairs as f64
        }
    }
}

/// `rho_n` for every requested step count from a single tracker run per
/// source at the largest count: `d_n = min(d_max, n)`.
pub fn rho_curve(g: &Graph, steps: &[usize]) -> Result<Vec<RhoCount>, KrylovError> {
    let n_max = steps.iter().copied().max().unwrap_or(1).max(1);
    let matrix = tracking_matrix(g);
    let per_source: Vec<Vec<(u64, u64)>> = (0..g.n_nodes())
        .into_par_iter()
        .map(|k| {
            let tracked = tracked_row(g, &matrix, k, n_max)?;
            let exact = bfs_distances(g, k, false);
            let mut counts = vec![(0u64, 0u64); steps.len()];
            for (m, d) in exact.iter().enumerate() {
                let Some(d) = *d else { continue };
                if m == k {
                    continue;
                }
                for (c, &n) in counts.iter_mut().zip(steps) {
                    c.1 += 1;
                    if tracked[m].min(n) != d {
                        c.0 += 1;
                    }
                }
            }
            Ok(counts)
        })
        .collect::<Result<_, KrylovError>>()?;
    Ok(steps
        .iter()
        .enumerate()
        .map(|(i, &n)| RhoCount {
            steps: n,
            mismatched: per_source.iter().map(|c| c[i].0).sum(),
            connected_pairs: per_source.iter().map(|c| c[i].1).sum(),
        })
        .collect())
}

/// Fraction of connected distinct pairs whose tracked distance after `n`
/// steps differs from the exact one.
pub fn rho_metric(g: &Graph, n: usize) -> Result<f64, KrylovError> {
    Ok(rho_curve(g, &[n])?[0].value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use netstab::graph::{diameter, parse_edge_list};

    #[test]
    fn path_metric() {
        let g = parse_edge_list("0 1\n1 2\n2 3\n3 4\n".as_bytes(), false, 0).unwrap();
        assert_eq!(diameter(&g), 4);
        let curve = rho_curve(&g, &[1, 2, 3, 4, 6]).unwrap();
        // pairs at distance > n are wrong: 20 ordered pairs in total
        let wrong: Vec<u64> = curve.iter().map(|c| c.mismatched).collect();
        assert_eq!(wrong, vec![12, 6, 2, 0, 0]);
        assert!(curve.iter().all(|c| c.connected_pairs == 20));
    }
}
