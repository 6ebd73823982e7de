//! Hermitian and two-sided Lanczos with full (bi)orthogonalization.
//!
//! Besides the tridiagonal projection used for quadratic-form estimates of
//! `f(A)_{kl}`, the stored bases reveal hop distances: started from a unit
//! vector at node `l`, the entry `v_j(m)` stays exactly `0.0` while
//! `j < dist(m, l)` and becomes nonzero at `j = dist(m, l)`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::func::FunctionDescriptor;
use crate::graph::{Hops, NodeId};
use crate::oracle::{dense_function, OracleError};
use crate::sparse::{CsrMatrix, LinearOperator, Transposed};

/// Relative size of `|w^T v|` below which the two-sided recurrence stops.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Relative residual norm below which the Krylov space counts as invariant.
const INVARIANT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum KrylovError {
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("node {node} out of range for dimension {dim}")]
    NodeOutOfRange { node: NodeId, dim: usize },
    #[error("start vector is zero")]
    ZeroStart,
    #[error("serious breakdown at step {step}: |w^T v| = {overlap:.3e} relative to |w||v|")]
    Breakdown {
        step: usize,
        overlap: f64,
        partial: Box<KrylovDecomposition>,
    },
    #[error("evaluating f on the projected matrix failed: {0}")]
    Evaluation(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Breakdown {
    None,
    /// Recurrence stopped at `step` with normalized overlap `overlap`.
    Serious {
        step: usize,
        overlap: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovDecomposition {
    requested: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    right: Vec<Vec<f64>>,
    left: Option<Vec<Vec<f64>>>,
    start_scale: f64,
    right_invariant: bool,
    left_invariant: bool,
    breakdown: Breakdown,
}

impl KrylovDecomposition {
    /// Basis vectors actually computed (at most the requested count).
    pub fn steps(&self) -> usize {
        self.right.len()
    }

    pub fn requested_steps(&self) -> usize {
        self.requested
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.alpha
    }

    /// Super-diagonal `T[j][j+1]`; equals the subdiagonal in the Hermitian case.
    pub fn upper(&self) -> &[f64] {
        &self.beta
    }

    /// Sub-diagonal `T[j+1][j]`.
    pub fn lower(&self) -> &[f64] {
        &self.gamma
    }

    pub fn right_basis(&self) -> &[Vec<f64>] {
        &self.right
    }

    pub fn left_basis(&self) -> &[Vec<f64>] {
        self.left.as_deref().unwrap_or(&self.right)
    }

    pub fn is_hermitian(&self) -> bool {
        self.left.is_none()
    }

    /// `w_0^T v_0` of the unnormalized start vectors.
    pub fn start_scale(&self) -> f64 {
        self.start_scale
    }

    /// True when the run stopped early on an invariant subspace.
    pub fn found_invariant_subspace(&self) -> bool {
        self.right_invariant || self.left_invariant
    }

    pub fn breakdown(&self) -> Breakdown {
        self.breakdown
    }

    /// The projected tridiagonal matrix `T_n`.
    pub fn tridiagonal(&self) -> DMatrix<f64> {
        let n = self.alpha.len();
        let mut t = DMatrix::zeros(n, n);
        for j in 0..n {
            t[(j, j)] = self.alpha[j];
            if j + 1 < n {
                t[(j, j + 1)] = self.beta[j];
                t[(j + 1, j)] = self.gamma[j];
            }
        }
        t
    }

    /// `s_0 e_1^T f(T_n) e_1`.
    pub fn quadratic_form(&self, f: &FunctionDescriptor) -> Result<f64, OracleError> {
        let ft = dense_function(&self.tridiagonal(), f)?;
        Ok(self.start_scale * ft[(0, 0)])
    }
}

/// What a tracker knows about one node's distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackedDistance {
    Exact(usize),
    /// Not seen in the scanned basis vectors.
    AtLeast(usize),
    /// The run exhausted an invariant subspace without reaching the node.
    Unreachable,
}

/// Hop distances read off the nonzero pattern of a Krylov basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTracker {
    d: Vec<usize>,
    is_zero: Vec<bool>,
    sentinel: usize,
    exact_up_to: usize,
    complete: bool,
}

impl DistanceTracker {
    /// Scans `basis` (started at node `start`). Nodes never reached keep the
    /// sentinel `n`. An entry counts as nonzero when its magnitude exceeds
    /// `threshold` (use `0.0` for the exact rule).
    pub fn from_basis(
        basis: &[Vec<f64>],
        start: NodeId,
        n: usize,
        complete: bool,
        threshold: f64,
    ) -> Self {
        let dim = basis.first().map_or(0, |v| v.len());
        let mut d = vec![n; dim];
        let mut is_zero = vec![true; dim];
        d[start] = 0;
        is_zero[start] = false;
        for (j, v) in basis.iter().enumerate().skip(1) {
            for (m, &x) in v.iter().enumerate() {
                if is_zero[m] && x.abs() > threshold {
                    d[m] = j;
                    is_zero[m] = false;
                }
            }
        }
        DistanceTracker {
            d,
            is_zero,
            sentinel: n,
            exact_up_to: basis.len(),
            complete,
        }
    }

    /// The raw value: exact distance, or the sentinel `n` when not reached.
    pub fn raw(&self) -> &[usize] {
        &self.d
    }

    pub fn sentinel(&self) -> usize {
        self.sentinel
    }

    pub fn exact_up_to(&self) -> usize {
        self.exact_up_to
    }

    pub fn reading(&self, m: NodeId) -> TrackedDistance {
        if !self.is_zero[m] {
            TrackedDistance::Exact(self.d[m])
        } else if self.complete {
            TrackedDistance::Unreachable
        } else {
            TrackedDistance::AtLeast(self.exact_up_to)
        }
    }

    /// Exact distance if known, `None` for unreachable nodes. Nodes beyond the
    /// scanned horizon are reported as `None` too; check [`Self::reading`].
    pub fn hops(&self, m: NodeId) -> Hops {
        match self.reading(m) {
            TrackedDistance::Exact(d) => Some(d),
            _ => None,
        }
    }

    /// Best available lower bound on the distance (`None` for unreachable).
    pub fn lower_bound(&self, m: NodeId) -> Hops {
        match self.reading(m) {
            TrackedDistance::Exact(d) | TrackedDistance::AtLeast(d) => Some(d),
            TrackedDistance::Unreachable => None,
        }
    }
}

fn unit(dim: usize, node: NodeId) -> Result<Vec<f64>, KrylovError> {
    if node >= dim {
        return Err(KrylovError::NodeOutOfRange { node, dim });
    }
    let mut v = vec![0.0; dim];
    v[node] = 1.0;
    Ok(v)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub_scaled(y: &mut [f64], a: f64, x: &[f64]) {
    if a != 0.0 {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi -= a * xi);
    }
}

/// Two passes of modified Gram-Schmidt of `p` against `along` using the
/// coefficient basis `coef` (`coef == along` for orthogonalization).
pub(crate) fn project_out(p: &mut [f64], coef: &[Vec<f64>], along: &[Vec<f64>]) {
    for _ in 0..2 {
        for (c, a) in coef.iter().zip(along) {
            let h = dot(c, p);
            sub_scaled(p, h, a);
        }
    }
}

fn new_support(p: &[f64], seen: &[bool]) -> bool {
    p.iter().zip(seen).any(|(&x, &s)| x != 0.0 && !s)
}

fn mark(seen: &mut [bool], v: &[f64]) {
    for (s, &x) in seen.iter_mut().zip(v) {
        if x != 0.0 {
            *s = true;
        }
    }
}

/// Hermitian Lanczos from an arbitrary start vector; `op` must be symmetric.
pub fn lanczos_hermitian_from<A: LinearOperator + ?Sized>(
    op: &A,
    start: &[f64],
    n: usize,
) -> Result<KrylovDecomposition, KrylovError> {
    if n == 0 {
        return Err(KrylovError::NoSteps);
    }
    let dim = op.dim();
    assert_eq!(start.len(), dim, "start vector length");
    let nb = norm(start);
    if nb == 0.0 {
        return Err(KrylovError::ZeroStart);
    }
    let mut basis = vec![start.iter().map(|x| x / nb).collect::<Vec<f64>>()];
    let mut seen = vec![false; dim];
    mark(&mut seen, &basis[0]);
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut invariant = false;
    let mut u = vec![0.0; dim];
    for j in 0..n {
        op.apply(&basis[j], &mut u);
        let unorm = norm(&u);
        let a = dot(&basis[j], &u);
        alpha.push(a);
        if j + 1 == n {
            break;
        }
        sub_scaled(&mut u, a, &basis[j]);
        if j > 0 {
            sub_scaled(&mut u, beta[j - 1], &basis[j - 1]);
        }
        project_out(&mut u, &basis, &basis);
        let b = norm(&u);
        if b == 0.0 || (b <= INVARIANT_TOL * unorm && !new_support(&u, &seen)) {
            invariant = true;
            break;
        }
        beta.push(b);
        let next: Vec<f64> = u.iter().map(|x| x / b).collect();
        mark(&mut seen, &next);
        basis.push(next);
    }
    let gamma = beta.clone();
    Ok(KrylovDecomposition {
        requested: n,
        alpha,
        beta,
        gamma,
        right: basis,
        left: None,
        start_scale: nb * nb,
        right_invariant: invariant,
        left_invariant: invariant,
        breakdown: Breakdown::None,
    })
}

/// Hermitian Lanczos from the unit vector at `start`, with its distance tracker.
pub fn lanczos_hermitian<A: LinearOperator + ?Sized>(
    op: &A,
    start: NodeId,
    n: usize,
) -> Result<(KrylovDecomposition, DistanceTracker), KrylovError> {
    let e = unit(op.dim(), start)?;
    let dec = lanczos_hermitian_from(op, &e, n)?;
    let tracker = DistanceTracker::from_basis(&dec.right, start, n, dec.right_invariant, 0.0);
    Ok((dec, tracker))
}

/// Distance tracker from an Arnoldi basis of `K_n(op, e_start)` with full
/// reorthogonalization. Works for any operator; for a nonsymmetric `A`,
/// passing `A^T` tracks distances from `start` along edge directions.
pub fn arnoldi_tracker<A: LinearOperator + ?Sized>(
    op: &A,
    start: NodeId,
    n: usize,
) -> Result<DistanceTracker, KrylovError> {
    if n == 0 {
        return Err(KrylovError::NoSteps);
    }
    let dim = op.dim();
    let mut basis = vec![unit(dim, start)?];
    let mut seen = vec![false; dim];
    seen[start] = true;
    let mut invariant = false;
    let mut u = vec![0.0; dim];
    for j in 0..n - 1 {
        op.apply(&basis[j], &mut u);
        let unorm = norm(&u);
        project_out(&mut u, &basis, &basis);
        let b = norm(&u);
        if b == 0.0 || (b <= INVARIANT_TOL * unorm && !new_support(&u, &seen)) {
            invariant = true;
            break;
        }
        let next: Vec<f64> = u.iter().map(|x| x / b).collect();
        mark(&mut seen, &next);
        basis.push(next);
    }
    Ok(DistanceTracker::from_basis(
        &basis, start, n, invariant, 0.0,
    ))
}

fn split_scale(s: f64, np: f64, nq: f64) -> (f64, f64) {
    let gamma = (s.abs() * np / nq).sqrt();
    (gamma, s / gamma)
}

/// Two-sided Lanczos for `K_n(A, v0)` and `K_n(A^T, w0)` with
/// `w_i^T v_j = delta_ij` and `|v_j| = |w_j|`.
pub fn lanczos_nonhermitian_from<A, B>(
    a: &A,
    at: &B,
    v0: &[f64],
    w0: &[f64],
    n: usize,
) -> Result<KrylovDecomposition, KrylovError>
where
    A: LinearOperator + ?Sized,
    B: LinearOperator + ?Sized,
{
    if n == 0 {
        return Err(KrylovError::NoSteps);
    }
    let dim = a.dim();
    assert_eq!(at.dim(), dim, "operator dimensions differ");
    assert!(v0.len() == dim && w0.len() == dim, "start vector length");
    let (nv, nw) = (norm(v0), norm(w0));
    if nv == 0.0 || nw == 0.0 {
        return Err(KrylovError::ZeroStart);
    }
    let s0 = dot(w0, v0);
    let mut dec = KrylovDecomposition {
        requested: n,
        alpha: Vec::new(),
        beta: Vec::new(),
        gamma: Vec::new(),
        right: Vec::new(),
        left: Some(Vec::new()),
        start_scale: s0,
        right_invariant: false,
        left_invariant: false,
        breakdown: Breakdown::None,
    };
    let overlap0 = s0.abs() / (nv * nw);
    if overlap0 < BREAKDOWN_TOL {
        dec.breakdown = Breakdown::Serious {
            step: 0,
            overlap: overlap0,
        };
        return Err(KrylovError::Breakdown {
            step: 0,
            overlap: overlap0,
            partial: Box::new(dec),
        });
    }
    let (g0, b0) = split_scale(s0, nv, nw);
    let mut right = vec![v0.iter().map(|x| x / g0).collect::<Vec<f64>>()];
    let mut left = vec![w0.iter().map(|x| x / b0).collect::<Vec<f64>>()];
    let (mut seen_r, mut seen_l) = (vec![false; dim], vec![false; dim]);
    mark(&mut seen_r, &right[0]);
    mark(&mut seen_l, &left[0]);
    let (mut alpha, mut beta, mut gamma) = (Vec::new(), Vec::<f64>::new(), Vec::<f64>::new());
    let (mut p, mut q) = (vec![0.0; dim], vec![0.0; dim]);
    let mut failure = None;
    for j in 0..n {
        a.apply(&right[j], &mut p);
        at.apply(&left[j], &mut q);
        let (pn0, qn0) = (norm(&p), norm(&q));
        let al = dot(&left[j], &p);
        alpha.push(al);
        if j + 1 == n {
            break;
        }
        sub_scaled(&mut p, al, &right[j]);
        sub_scaled(&mut q, al, &left[j]);
        if j > 0 {
            sub_scaled(&mut p, beta[j - 1], &right[j - 1]);
            sub_scaled(&mut q, gamma[j - 1], &left[j - 1]);
        }
        project_out(&mut p, &left, &right);
        project_out(&mut q, &right, &left);
        let (np, nq) = (norm(&p), norm(&q));
        let right_inv = np == 0.0 || (np <= INVARIANT_TOL * pn0 && !new_support(&p, &seen_r));
        let left_inv = nq == 0.0 || (nq <= INVARIANT_TOL * qn0 && !new_support(&q, &seen_l));
        if right_inv || left_inv {
            dec.right_invariant = right_inv;
            dec.left_invariant = left_inv;
            break;
        }
        let s = dot(&q, &p);
        let overlap = s.abs() / (np * nq);
        if overlap < BREAKDOWN_TOL {
            failure = Some((j + 1, overlap));
            break;
        }
        let (gj, bj) = split_scale(s, np, nq);
        gamma.push(gj);
        beta.push(bj);
        let vn: Vec<f64> = p.iter().map(|x| x / gj).collect();
        let wn: Vec<f64> = q.iter().map(|x| x / bj).collect();
        mark(&mut seen_r, &vn);
        mark(&mut seen_l, &wn);
        right.push(vn);
        left.push(wn);
    }
    dec.alpha = alpha;
    dec.beta = beta;
    dec.gamma = gamma;
    dec.right = right;
    dec.left = Some(left);
    if let Some((step, overlap)) = failure {
        dec.breakdown = Breakdown::Serious { step, overlap };
        return Err(KrylovError::Breakdown {
            step,
            overlap,
            partial: Box::new(dec),
        });
    }
    Ok(dec)
}

/// Two-sided Lanczos from `v0 = e_l` and `w0 = e_k`. The right tracker gives
/// `dist(m, l)`, the left one `dist(k, m)`.
pub fn lanczos_nonhermitian<A, B>(
    a: &A,
    at: &B,
    v0: NodeId,
    w0: NodeId,
    n: usize,
) -> Result<(KrylovDecomposition, DistanceTracker, DistanceTracker), KrylovError>
where
    A: LinearOperator + ?Sized,
    B: LinearOperator + ?Sized,
{
    let ev = unit(a.dim(), v0)?;
    let ew = unit(a.dim(), w0)?;
    let dec = lanczos_nonhermitian_from(a, at, &ev, &ew, n)?;
    let right = DistanceTracker::from_basis(&dec.right, v0, n, dec.right_invariant, 0.0);
    let left = DistanceTracker::from_basis(dec.left_basis(), w0, n, dec.left_invariant, 0.0);
    Ok((dec, right, left))
}

/// Approximates `f(M)_{kl}` with `n` Lanczos steps.
///
/// Symmetric matrices use Hermitian runs (two of them, via polarization,
/// when `k != l`). Nonsymmetric ones use the two-sided recurrence; for
/// `k != l` the bilinear form `(e_k + e_l)^T f(M) e_l` is estimated and
/// `f(M)_{ll}` subtracted, since `e_k^T e_l = 0` would break down at once.
/// When a unit start breaks down (typical at nodes without reciprocal
/// edges), the entry is recomputed as `(e_k + z)^T f(M) e_l - z^T f(M) e_l`
/// with a fixed dense positive `z`.
pub fn estimate_entry(
    f: &FunctionDescriptor,
    matrix: &CsrMatrix,
    k: NodeId,
    l: NodeId,
    n: usize,
) -> Result<f64, KrylovError> {
    let dim = matrix.dim();
    for node in [k, l] {
        if node >= dim {
            return Err(KrylovError::NodeOutOfRange { node, dim });
        }
    }
    if n == 0 {
        return Err(KrylovError::NoSteps);
    }
    if matrix.is_symmetric() {
        if k == l {
            let e = unit(dim, k)?;
            return Ok(lanczos_hermitian_from(matrix, &e, n)?.quadratic_form(f)?);
        }
        let mut plus = vec![0.0; dim];
        let mut minus = vec![0.0; dim];
        plus[k] = 1.0;
        plus[l] = 1.0;
        minus[k] = 1.0;
        minus[l] = -1.0;
        let qp = lanczos_hermitian_from(matrix, &plus, n)?.quadratic_form(f)?;
        let qm = lanczos_hermitian_from(matrix, &minus, n)?.quadratic_form(f)?;
        return Ok(0.25 * (qp - qm));
    }
    let at = Transposed(matrix);
    let el = unit(dim, l)?;
    let bilinear = |w0: &[f64]| -> Result<f64, KrylovError> {
        Ok(lanczos_nonhermitian_from(matrix, &at, &el, w0, n)?.quadratic_form(f)?)
    };
    let unit_starts = || -> Result<f64, KrylovError> {
        let diag = bilinear(&el)?;
        if k == l {
            return Ok(diag);
        }
        let mut w0 = el.clone();
        w0[k] = 1.0;
        Ok(bilinear(&w0)? - diag)
    };
    match unit_starts() {
        Err(KrylovError::Breakdown { .. }) => {
            let z = dense_start(dim);
            let mut w0 = z.clone();
            w0[k] += 1.0;
            Ok(bilinear(&w0)? - bilinear(&z)?)
        }
        other => other,
    }
}

/// Unit-norm positive vector without graph structure.
fn dense_start(dim: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim)
        .map(|i| 1.0 + (i as f64 * 0.618_033_988_749_895).fract())
        .collect();
    let scale = norm(&raw);
    raw.into_iter().map(|x| x / scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_matrix, parse_edge_list, MatrixKind};

    fn path(n: usize) -> CsrMatrix {
        let text: String = (0..n - 1).map(|i| format!("{i} {}\n", i + 1)).collect();
        let g = parse_edge_list(text.as_bytes(), false, 0).unwrap();
        build_matrix(&g, MatrixKind::PlainAdjacency).unwrap()
    }

    #[test]
    fn path_distances() {
        let a = path(3);
        let (_, t) = lanczos_hermitian(&a, 0, 3).unwrap();
        assert_eq!(t.raw(), &[0, 1, 2]);
        let (_, t) = lanczos_hermitian(&a, 0, 2).unwrap();
        assert_eq!(t.raw(), &[0, 1, 2]);
        assert_eq!(t.reading(2), TrackedDistance::AtLeast(2));
    }

    #[test]
    fn start_node_has_distance_zero() {
        let a = path(5);
        for k in 0..5 {
            let (_, t) = lanczos_hermitian(&a, k, 1).unwrap();
            assert_eq!(t.raw()[k], 0);
        }
    }

    #[test]
    fn exp_of_empty_graph() {
        let a = CsrMatrix::zeros(4);
        let v = estimate_entry(&FunctionDescriptor::Exp, &a, 2, 2, 5).unwrap();
        assert_eq!(v, 1.0);
        let off = estimate_entry(&FunctionDescriptor::Exp, &a, 1, 2, 5).unwrap();
        assert!(off.abs() < 1e-15);
    }

    #[test]
    fn isolated_nodes_are_unreachable() {
        let a = CsrMatrix::from_triplets(4, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        let (dec, t) = lanczos_hermitian(&a, 0, 4).unwrap();
        assert!(dec.found_invariant_subspace());
        assert_eq!(t.reading(1), TrackedDistance::Exact(1));
        assert_eq!(t.reading(3), TrackedDistance::Unreachable);
    }

    #[test]
    fn nonhermitian_reduces_to_hermitian() {
        let a = path(6);
        let at = Transposed(&a);
        let (h, _) = lanczos_hermitian(&a, 2, 5).unwrap();
        let (nh, _, _) = lanczos_nonhermitian(&a, &at, 2, 2, 5).unwrap();
        for (x, y) in h.diagonal().iter().zip(nh.diagonal()) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in h.upper().iter().zip(nh.upper()) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in h.lower().iter().zip(nh.lower()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn orthogonal_starts_break_down() {
        let a = path(4);
        let at = Transposed(&a);
        let err = lanczos_nonhermitian(&a, &at, 0, 1, 3).unwrap_err();
        assert!(matches!(err, KrylovError::Breakdown { step: 0, .. }));
    }

    #[test]
    fn directed_trackers() {
        // undirected path 0-1-2-3 plus the one-way edge 3 -> 0
        let mut t: Vec<_> = (0..3)
            .flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)])
            .collect();
        t.push((3, 0, 1.0));
        let a = CsrMatrix::from_triplets(4, t);
        let at = Transposed(&a);
        let (dec, right, left) = lanczos_nonhermitian(&a, &at, 0, 0, 4).unwrap();
        // right: dist(m, 0); left: dist(0, m)
        assert_eq!(right.raw(), &[0, 1, 2, 1]);
        assert_eq!(right.reading(2), TrackedDistance::Exact(2));
        // the right space closes after three vectors, ending the run before
        // the left basis reaches node 3
        assert!(dec.found_invariant_subspace());
        assert_eq!(&left.raw()[..3], &[0, 1, 2]);
        assert_eq!(left.reading(3), TrackedDistance::AtLeast(3));
    }
}
