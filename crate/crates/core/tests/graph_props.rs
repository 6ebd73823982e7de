mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{floyd_warshall, random_delta, random_graph};
use netstab::graph::{
    apply_delta, bfs_distances, build_matrix, diameter, dist_to_set, distances_to_set,
    parse_edge_list, parse_matrix_market, write_edge_list, Direction, EdgeAction, EdgeChange,
    EdgeDelta, GraphError, MatrixKind,
};

fn graph_case() -> impl Strategy<Value = (u64, usize, f64, bool, bool)> {
    (
        any::<u64>(),
        2usize..25,
        0.05f64..0.5,
        any::<bool>(),
        any::<bool>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip((seed, n, p, directed, weighted) in graph_case(), base in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, directed, weighted, &mut rng);
        let text = write_edge_list(&g, base);
        let back = parse_edge_list(text.as_bytes(), directed, base).unwrap();
        prop_assert_eq!(back.n_nodes(), g.n_nodes());
        prop_assert_eq!(back.n_entries(), g.n_entries());
        for (i, j, w) in g.edges() {
            prop_assert!((back.weight(i, j) - w).abs() <= 1e-14 * w);
        }
    }

    #[test]
    fn bfs_matches_floyd_warshall((seed, n, p, directed, _w) in graph_case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, directed, false, &mut rng);
        let fw = floyd_warshall(&g);
        for k in 0..n {
            prop_assert_eq!(&bfs_distances(&g, k, false), &fw[k]);
            let backwards: Vec<_> = (0..n).map(|m| fw[m][k]).collect();
            prop_assert_eq!(bfs_distances(&g, k, true), backwards);
        }
        let diam = fw.iter().flatten().flatten().copied().max().unwrap_or(0);
        prop_assert_eq!(diameter(&g), diam);
    }

    #[test]
    fn set_distances_match_pairwise((seed, n, p, directed, _w) in graph_case(), picks in prop::collection::btree_set(0usize..25, 1..4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, directed, false, &mut rng);
        let set: std::collections::BTreeSet<usize> = picks.into_iter().map(|s| s % n).collect();
        let fw = floyd_warshall(&g);
        let from = distances_to_set(&g, &set, Direction::FromNode);
        let to = distances_to_set(&g, &set, Direction::ToNode);
        for k in 0..n {
            let want_from = set.iter().filter_map(|&s| fw[k][s]).min();
            let want_to = set.iter().filter_map(|&s| fw[s][k]).min();
            prop_assert_eq!(from[k], want_from);
            prop_assert_eq!(to[k], want_to);
            prop_assert_eq!(dist_to_set(&g, k, &set, Direction::FromNode).unwrap(), want_from);
        }
    }

    #[test]
    fn walk_counts_vanish_below_distance((seed, n, p, directed, _w) in graph_case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n.min(15), p, directed, false, &mut rng);
        let n = g.n_nodes();
        let a = g.adjacency().to_dense();
        let fw = floyd_warshall(&g);
        let mut power = DMatrix::<f64>::identity(n, n);
        for step in 0..n {
            for k in 0..n {
                for l in 0..n {
                    match fw[k][l] {
                        Some(d) if step < d => prop_assert_eq!(power[(k, l)], 0.0),
                        Some(d) if step == d => prop_assert!(power[(k, l)] > 0.0),
                        None => prop_assert_eq!(power[(k, l)], 0.0),
                        _ => {}
                    }
                }
            }
            power = &power * &a;
        }
    }

    #[test]
    fn inverse_delta_restores_graph((seed, n, p, directed, weighted) in graph_case(), count in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, directed, weighted, &mut rng);
        let d = random_delta(&g, count, weighted, &mut rng);
        d.validate(&g).unwrap();
        let h = apply_delta(&g, &d).unwrap();
        let back = apply_delta(&h, &d.inverse(&g)).unwrap();
        prop_assert_eq!(back.n_entries(), g.n_entries());
        for (i, j, w) in g.edges() {
            prop_assert_eq!(back.weight(i, j), w);
        }
    }

    #[test]
    fn scaled_kinds_keep_structure((seed, n, p, _d, weighted) in graph_case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, false, weighted, &mut rng);
        match build_matrix(&g, MatrixKind::TransitionOut) {
            Ok(t) => {
                for i in 0..n {
                    let row: f64 = t.row(i).1.iter().sum();
                    prop_assert!((row - 1.0).abs() < 1e-12);
                }
                let s = build_matrix(&g, MatrixKind::NormalizedSymmetric).unwrap();
                prop_assert!(s.is_symmetric() || s.to_dense().relative_eq(&s.to_dense().transpose(), 1e-15, 1e-15));
                prop_assert_eq!(s.nnz(), g.n_entries());
            }
            Err(GraphError::Dangling { node }) => prop_assert!(g.out_neighbors(node).is_empty()),
            Err(e) => prop_assert!(false, "unexpected {}", e),
        }
    }
}

#[test]
fn matrix_market_symmetric_and_general() {
    let sym = "%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 0.5\n3 2 2\n";
    let g = parse_matrix_market(sym.as_bytes()).unwrap();
    assert!(!g.is_directed());
    assert_eq!(g.weight(0, 1), 0.5);
    assert_eq!(g.weight(1, 0), 0.5);
    assert_eq!(g.weight(2, 1), 2.0);
    let gen = "%%MatrixMarket matrix coordinate pattern general\n% comment\n3 3 1\n1 3\n";
    let g = parse_matrix_market(gen.as_bytes()).unwrap();
    assert!(g.is_directed() && g.has_edge(0, 2) && !g.has_edge(2, 0));
    assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n".as_bytes()).is_err());
    assert!(parse_matrix_market(
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n".as_bytes()
    )
    .is_err());
}

#[test]
fn edge_list_errors() {
    assert!(matches!(
        parse_edge_list("0 1 -2\n".as_bytes(), false, 0),
        Err(GraphError::InvalidWeight { line: 1, .. })
    ));
    assert!(matches!(
        parse_edge_list("0\n".as_bytes(), false, 0),
        Err(GraphError::Parse { line: 1, .. })
    ));
    assert!(matches!(
        parse_edge_list("0 1 1\n1 0 2\n".as_bytes(), false, 0),
        Err(GraphError::Conflict { .. })
    ));
    let merged = parse_edge_list("0 1 1\n0 1 2\n".as_bytes(), true, 0).unwrap();
    assert_eq!(merged.weight(0, 1), 3.0);
    assert_eq!(merged.merged_duplicates(), 1);
    let isolated =
        parse_edge_list("# nodes 5 directed false\n0 1 1\n".as_bytes(), false, 0).unwrap();
    assert_eq!(isolated.n_nodes(), 5);
}

#[test]
fn delta_validation() {
    let g = parse_edge_list("0 1\n1 2\n".as_bytes(), false, 0).unwrap();
    let one_sided = EdgeDelta::new(vec![EdgeChange {
        src: 0,
        dst: 2,
        action: EdgeAction::Add(1.0),
    }]);
    assert!(one_sided.validate(&g).is_err());
    let mirrored = EdgeDelta::symmetric(vec![EdgeChange {
        src: 0,
        dst: 2,
        action: EdgeAction::Add(1.0),
    }]);
    mirrored.validate(&g).unwrap();
    assert_eq!(mirrored.sources().len(), 2);
    let missing = EdgeDelta::symmetric(vec![EdgeChange {
        src: 0,
        dst: 2,
        action: EdgeAction::Remove,
    }]);
    assert!(missing.validate(&g).is_err());
    let bad_weight = EdgeDelta::symmetric(vec![EdgeChange {
        src: 0,
        dst: 1,
        action: EdgeAction::Reweight(0.0),
    }]);
    assert!(bad_weight.validate(&g).is_err());
}
