mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::random_graph;
use netstab::graph::{bfs_distances, build_matrix, Graph, MatrixKind};
use netstab::krylov::{
    arnoldi_tracker, estimate_entry, lanczos_hermitian, lanczos_nonhermitian, KrylovDecomposition,
    KrylovError, TrackedDistance,
};
use netstab::oracle::dense_function;
use netstab::sparse::{CsrMatrix, LinearOperator, Transposed};
use netstab::FunctionDescriptor;

fn apply(op: &dyn LinearOperator, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    op.apply(x, &mut y);
    y
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|| op v_j - (next * v_{j+1} + diag * v_j + prev * v_{j-1}) ||` over the
/// interior steps.
fn recurrence_residual(
    op: &dyn LinearOperator,
    basis: &[Vec<f64>],
    diag: &[f64],
    next: &[f64],
    prev: &[f64],
) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..basis.len().saturating_sub(1) {
        let mut r = apply(op, &basis[j]);
        for (ri, (a, b)) in r.iter_mut().zip(basis[j].iter().zip(&basis[j + 1])) {
            *ri -= diag[j] * a + next[j] * b;
        }
        if j > 0 {
            for (ri, c) in r.iter_mut().zip(&basis[j - 1]) {
                *ri -= prev[j - 1] * c;
            }
        }
        worst = worst.max(dot(&r, &r).sqrt());
    }
    worst
}

/// Undirected graph with entries scaled per orientation by `1 +- spread`.
fn nearly_symmetric(g: &Graph, spread: f64, rng: &mut ChaCha8Rng) -> CsrMatrix {
    let triplets: Vec<_> = g
        .adjacency()
        .iter()
        .map(|(i, j, w)| (i, j, w * (1.0 + rng.random_range(-spread..spread))))
        .collect();
    CsrMatrix::from_triplets(g.n_nodes(), triplets)
}

fn hermitian_case() -> impl Strategy<Value = (u64, usize, f64, bool)> {
    (any::<u64>(), 3usize..40, 0.05f64..0.4, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tracker_reads_exact_distances((seed, n, p, weighted) in hermitian_case(), steps in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, false, weighted, &mut rng);
        let a = build_matrix(&g, MatrixKind::PlainAdjacency).unwrap();
        for k in 0..n {
            let (_, t) = lanczos_hermitian(&a, k, steps).unwrap();
            let exact = bfs_distances(&g, k, false);
            for m in 0..n {
                match exact[m] {
                    Some(d) => prop_assert_eq!(t.raw()[m].min(steps), d.min(steps)),
                    None => prop_assert_eq!(t.raw()[m], steps),
                }
                match t.reading(m) {
                    TrackedDistance::Exact(d) => prop_assert_eq!(Some(d), exact[m]),
                    TrackedDistance::AtLeast(d) => prop_assert!(exact[m].is_none_or(|e| e >= d)),
                    TrackedDistance::Unreachable => prop_assert!(exact[m].is_none()),
                }
            }
        }
    }

    #[test]
    fn more_steps_only_refine((seed, n, p, weighted) in hermitian_case(), steps in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, false, weighted, &mut rng);
        let a = build_matrix(&g, MatrixKind::PlainAdjacency).unwrap();
        let k = rng.random_range(0..n);
        let (_, short) = lanczos_hermitian(&a, k, steps).unwrap();
        let (_, long) = lanczos_hermitian(&a, k, steps + 3).unwrap();
        for m in 0..n {
            if short.raw()[m] < steps {
                prop_assert_eq!(long.raw()[m], short.raw()[m]);
            } else {
                prop_assert!(long.raw()[m] >= steps);
            }
        }
    }

    #[test]
    fn arnoldi_tracks_directed_distances((seed, n, p, weighted) in hermitian_case(), steps in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, true, weighted, &mut rng);
        let a = g.adjacency();
        for k in 0..n {
            let t = arnoldi_tracker(&Transposed(a), k, steps).unwrap();
            let exact = bfs_distances(&g, k, false);
            for m in 0..n {
                prop_assert_eq!(t.raw()[m].min(steps), exact[m].map_or(steps, |d| d.min(steps)));
            }
        }
    }

    #[test]
    fn hermitian_basis_is_orthonormal((seed, n, p, weighted) in hermitian_case(), steps in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, false, weighted, &mut rng);
        let a = build_matrix(&g, MatrixKind::PlainAdjacency).unwrap();
        let (dec, _) = lanczos_hermitian(&a, rng.random_range(0..n), steps).unwrap();
        let v = dec.right_basis();
        for i in 0..v.len() {
            for j in 0..v.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(&v[i], &v[j]) - want).abs() < 1e-10);
            }
        }
        let scale = a.norm_inf().max(1.0);
        prop_assert!(recurrence_residual(&a, v, dec.diagonal(), dec.upper(), dec.upper()) < 1e-10 * scale);
    }

    #[test]
    fn two_sided_bases_are_biorthogonal((seed, n, p, _w) in hermitian_case(), steps in 2usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, false, true, &mut rng);
        let a = nearly_symmetric(&g, 0.2, &mut rng);
        let at = Transposed(&a);
        let k = rng.random_range(0..n);
        let dec: KrylovDecomposition = match lanczos_nonhermitian(&a, &at, k, k, steps) {
            Ok((dec, _, _)) => dec,
            Err(KrylovError::Breakdown { partial, .. }) => *partial,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let (v, w) = (dec.right_basis(), dec.left_basis());
        prop_assert_eq!(v.len(), w.len());
        for i in 0..v.len() {
            for j in 0..v.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(&w[i], &v[j]) - want).abs() < 1e-8, "w{}.v{} = {}", i, j, dot(&w[i], &v[j]));
            }
        }
        // two-sided bases are not normalized, so the residual scales with them
        let largest = v.iter().chain(w).map(|x| dot(x, x).sqrt()).fold(1.0, f64::max);
        let scale = a.norm_inf().max(1.0) * largest;
        let right = recurrence_residual(&a, v, dec.diagonal(), dec.lower(), dec.upper());
        let left = recurrence_residual(&at, w, dec.diagonal(), dec.upper(), dec.lower());
        prop_assert!(right < 1e-8 * scale && left < 1e-8 * scale, "residuals {} {} at basis norm {}", right, left, largest);
    }

    #[test]
    fn full_runs_match_dense_functions((seed, n, p, weighted) in hermitian_case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n.min(25);
        let g = random_graph(n, p, false, weighted, &mut rng);
        let a = build_matrix(&g, MatrixKind::PlainAdjacency).unwrap();
        let dense = a.to_dense();
        let fa = dense_function(&dense, &FunctionDescriptor::Exp).unwrap();
        let (k, l) = (rng.random_range(0..n), rng.random_range(0..n));
        let got = estimate_entry(&FunctionDescriptor::Exp, &a, k, l, n).unwrap();
        prop_assert!((got - fa[(k, l)]).abs() <= 1e-9 * fa[(k, l)].abs().max(1.0));
    }
}

#[test]
fn start_outside_range_is_rejected() {
    let a = CsrMatrix::zeros(3);
    assert!(matches!(
        lanczos_hermitian(&a, 5, 2),
        Err(KrylovError::NodeOutOfRange { .. })
    ));
    assert!(matches!(
        lanczos_hermitian(&a, 0, 0),
        Err(KrylovError::NoSteps)
    ));
    assert!(matches!(
        estimate_entry(&FunctionDescriptor::Exp, &a, 0, 9, 3),
        Err(KrylovError::NodeOutOfRange { .. })
    ));
}

#[test]
fn disconnected_nodes_are_unreachable() {
    let g = netstab::graph::parse_edge_list("0 1\n2 3\n".as_bytes(), false, 0).unwrap();
    let (dec, t) = lanczos_hermitian(g.adjacency(), 0, 10).unwrap();
    assert!(dec.found_invariant_subspace());
    assert_eq!(t.reading(1), TrackedDistance::Exact(1));
    assert_eq!(t.reading(3), TrackedDistance::Unreachable);
    assert_eq!(t.hops(3), None);
}

#[test]
fn directed_cycles_fall_back_to_dense_starts() {
    // no reciprocal edges: every unit start breaks down at the first step
    let g = netstab::graph::parse_edge_list("0 1\n1 2\n2 3\n3 4\n4 0\n1 3\n".as_bytes(), true, 0)
        .unwrap();
    let a = g.adjacency();
    assert!(matches!(
        lanczos_nonhermitian(a, &Transposed(a), 0, 0, 5),
        Err(KrylovError::Breakdown { .. })
    ));
    let fa = a.to_dense().exp();
    for (k, l) in [(0, 0), (2, 2), (0, 3), (4, 1)] {
        let got = estimate_entry(&FunctionDescriptor::Exp, a, k, l, 5).unwrap();
        assert!(
            (got - fa[(k, l)]).abs() < 1e-10 * fa[(k, l)].abs().max(1.0),
            "({k}, {l}): {got} vs {}",
            fa[(k, l)]
        );
    }
}
