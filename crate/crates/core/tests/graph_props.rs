mod common;

use common::{any_graph, jacobi_eigenvalues};
use mlcons::Graph;
use nalgebra::DVector;
use proptest::prelude::*;

proptest! {
    #[test]
    fn spectrum_sums_to_twice_edge_count(g in any_graph(8)) {
        let s = g.laplacian_spectrum().unwrap();
        let sum: f64 = s.values.iter().sum();
        prop_assert!((sum - 2.0 * g.edges().len() as f64).abs() < 1e-9);
        prop_assert!(s.values[0].abs() < 1e-9);
    }

    #[test]
    fn algebraic_connectivity_matches_bfs(g in any_graph(8)) {
        let s = g.laplacian_spectrum().unwrap();
        prop_assert_eq!(s.lambda2 > 1e-9, g.is_connected());
        prop_assert_eq!(s.is_connected(), g.is_connected());
    }

    #[test]
    fn laplacian_is_positive_semidefinite(
        g in any_graph(8),
        vs in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 8), 100),
    ) {
        let l = g.laplacian();
        prop_assert_eq!(&l, &l.transpose());
        for v in vs {
            let v = DVector::from_iterator(g.n(), v.into_iter().take(g.n()));
            prop_assert!(v.dot(&(&l * &v)) >= -1e-9);
        }
    }

    #[test]
    fn spectrum_is_invariant_under_relabeling(
        (g, perm) in any_graph(8).prop_flat_map(|g| {
            let n = g.n();
            (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let relabeled = Graph::new(g.n(), g.edges().iter().map(|&(i, j)| (perm[i], perm[j]))).unwrap();
        let a = g.laplacian_spectrum().unwrap();
        let b = relabeled.laplacian_spectrum().unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn spectrum_matches_jacobi(g in any_graph(8)) {
        let s = g.laplacian_spectrum().unwrap();
        let j = jacobi_eigenvalues(&g.laplacian());
        for (x, y) in s.values.iter().zip(&j) {
            prop_assert!((x - y).abs() < 1e-9, "{:?} vs {:?}", s.values, j);
        }
    }
}

#[test]
fn families_have_expected_edge_counts() {
    assert_eq!(Graph::cycle(6).unwrap().edges().len(), 6);
    assert_eq!(Graph::path(6).unwrap().edges().len(), 5);
    assert_eq!(Graph::complete(6).unwrap().edges().len(), 15);
    assert_eq!(Graph::star(6).unwrap().edges().len(), 5);
}
