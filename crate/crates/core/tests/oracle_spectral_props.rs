mod common;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_delta, random_graph};
use netstab::graph::{apply_delta, build_matrix, EdgeDelta, MatrixKind};
use netstab::oracle::{
    dense_expm, dense_function, dense_resolvent, exact_variation, expm_taylor, DenseMatrix,
    OracleError,
};
use netstab::spectral::{enclosing_region, numerical_radius, single_entry_shift_check, Region};
use netstab::FunctionDescriptor;

fn case() -> impl Strategy<Value = (u64, usize, f64, bool, bool)> {
    (
        any::<u64>(),
        2usize..30,
        0.05f64..0.5,
        any::<bool>(),
        any::<bool>(),
    )
}

/// Eigenvalues with a capped Schur iteration. The uncapped one can cycle on
/// sparse 0/1 matrices, so a shifted copy is tried before giving up. The
/// 2x2 blocks are solved here since the library's version can return NaN
/// for a discriminant of -0.
fn spectrum(m: &DMatrix<f64>) -> Vec<Complex64> {
    let n = m.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    for shift in [0.0, 0.37, -0.61, 1.3] {
        let Some(schur) = Schur::try_new(m + &eye * shift, f64::EPSILON, 10_000) else {
            continue;
        };
        let (_, t) = schur.unpack();
        let mut out = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            if i + 1 < n && t[(i + 1, i)] != 0.0 {
                let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
                let half = (a + d) / 2.0;
                let root = Complex64::new((a - d) * (a - d) / 4.0 + b * c, 0.0).sqrt();
                out.push(half + root - shift);
                out.push(half - root - shift);
                i += 2;
            } else {
                out.push(Complex64::new(t[(i, i)] - shift, 0.0));
                i += 1;
            }
        }
        return out;
    }
    panic!("Schur iteration did not converge")
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn radius_matches_hermitian_part((seed, n, p, directed, weighted) in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, directed, weighted, &mut rng);
        let a = g.adjacency();
        let dense = a.to_dense();
        let herm = (&dense + dense.transpose()) * 0.5;
        let want = SymmetricEigen::new(herm).eigenvalues.max().max(0.0);
        let got = numerical_radius(a, 1e-12, n).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{} vs {}", got, want);
        for _ in 0..5 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let xv = nalgebra::DVector::from_vec(x) / nx;
            let q = (xv.transpose() * &dense * &xv)[(0, 0)];
            prop_assert!(q.abs() <= got * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn region_contains_both_spectra((seed, n, p, directed, weighted) in case(), count in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, directed, weighted, &mut rng);
        let d = random_delta(&g, count, weighted, &mut rng);
        let h = apply_delta(&g, &d).unwrap();
        let (a, at) = (g.adjacency(), h.adjacency());
        let region = enclosing_region(a, Some(at), MatrixKind::PlainAdjacency, 1e-12).unwrap();
        for m in [a, at] {
            for lam in spectrum(&m.to_dense()) {
                let shrunk = Complex64::new(lam.re, if matches!(region, Region::Segment { .. }) { 0.0 } else { lam.im });
                let (r, _) = region.semi_axes();
                let inside = region.contains(shrunk / (1.0 + 1e-9)) || lam.norm() <= 1e-9 * r.max(1.0);
                prop_assert!(inside, "{:?} outside {:?}", lam, region);
            }
        }
    }

    #[test]
    fn exponentials_agree((seed, n, p, directed, weighted) in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n.min(20), p, directed, weighted, &mut rng);
        let a = g.adjacency().to_dense();
        let taylor = expm_taylor(&a).unwrap();
        let inverse = expm_taylor(&(-&a)).unwrap();
        let eye = DMatrix::<f64>::identity(a.nrows(), a.nrows());
        prop_assert!(max_abs(&(&taylor * &inverse - &eye)) <= 1e-10 * max_abs(&taylor).max(1.0));
        if !directed {
            let eig = dense_function(&a, &FunctionDescriptor::Exp).unwrap();
            prop_assert!(max_abs(&(&eig - &taylor)) <= 1e-11 * max_abs(&eig));
        }
        let via_dense = dense_expm(&DenseMatrix::new(a.clone()).unwrap()).unwrap();
        prop_assert!(max_abs(&(via_dense.matrix() - &taylor)) <= 1e-11 * max_abs(&taylor));
    }

    #[test]
    fn resolvent_inverts((seed, n, p, directed, weighted) in case(), frac in 0.1f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, directed, weighted, &mut rng);
        let nu = numerical_radius(g.adjacency(), 1e-12, n).unwrap().max(1e-3);
        let alpha = frac / nu;
        let a = g.adjacency().to_dense();
        let r = dense_resolvent(&DenseMatrix::new(a.clone()).unwrap(), alpha).unwrap();
        let eye = DMatrix::<f64>::identity(n, n);
        let back = (&eye - &a * alpha) * r.matrix();
        prop_assert!(max_abs(&(back - &eye)) < 1e-10);
        let f = dense_function(&a, &FunctionDescriptor::resolvent(alpha)).unwrap();
        prop_assert!(max_abs(&(f - r.matrix())) < 1e-10 * max_abs(r.matrix()));
    }

    #[test]
    fn variation_is_entrywise_difference((seed, n, p, directed, weighted) in case(), count in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n.min(20), p, directed, weighted, &mut rng);
        let n = g.n_nodes();
        let d = random_delta(&g, count, weighted, &mut rng);
        let pairs: Vec<_> = (0..n).flat_map(|k| (0..n).map(move |l| (k, l))).collect();
        let got = exact_variation(&g, &d, MatrixKind::PlainAdjacency, &FunctionDescriptor::Exp, &pairs).unwrap();
        let fa = expm_taylor(&g.adjacency().to_dense()).unwrap();
        let h = apply_delta(&g, &d).unwrap();
        let fh = expm_taylor(&build_matrix(&h, MatrixKind::PlainAdjacency).unwrap().to_dense()).unwrap();
        for (&(k, l), v) in pairs.iter().zip(&got) {
            prop_assert!((v - (fa[(k, l)] - fh[(k, l)]).abs()).abs() <= 1e-10 * fa[(k, l)].abs().max(1.0));
        }
        let none = exact_variation(&g, &EdgeDelta::empty(), MatrixKind::PlainAdjacency, &FunctionDescriptor::Exp, &pairs).unwrap();
        prop_assert!(none.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_entry_shift_is_small((seed, n, p, directed, weighted) in case(), eps in 1e-4f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, directed, weighted, &mut rng);
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        prop_assume!(i != j);
        let s = single_entry_shift_check(g.adjacency(), i, j, eps, 1e-13).unwrap();
        prop_assert!(s.shift >= -1e-12);
        prop_assert!(s.shift <= eps / 2.0 + 1e-12);
    }
}

#[test]
fn oracle_rejects_bad_input() {
    let big = DMatrix::<f64>::zeros(5, 5);
    assert!(matches!(
        DenseMatrix::with_cap(big, 4),
        Err(OracleError::TooLarge { dim: 5, cap: 4 })
    ));
    let nan = DMatrix::from_row_slice(2, 2, &[0.0, f64::NAN, 0.0, 0.0]);
    assert!(matches!(DenseMatrix::new(nan), Err(OracleError::NonFinite)));
    let one = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    assert!(matches!(
        dense_function(&one, &FunctionDescriptor::resolvent(1.0)),
        Err(OracleError::Pole { .. }) | Err(OracleError::Singular { .. })
    ));
    let custom = FunctionDescriptor::custom("cos", |z| z.cos());
    let directed = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    assert!(matches!(
        dense_function(&directed, &custom),
        Err(OracleError::Unsupported(_))
    ));
    let sym = dense_function(&one, &custom).unwrap();
    assert!((sym[(0, 0)] - 1f64.cos()).abs() < 1e-14);
}
