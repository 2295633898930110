#![allow(dead_code)]

use mlcons::{Graph, InteractionPattern};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Any simple graph on 2..=max_n vertices.
pub fn any_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |mask| {
            let edges = pairs.iter().zip(&mask).filter(|(_, &m)| m).map(|(&e, _)| e);
            Graph::new(n, edges).unwrap()
        })
    })
}

/// A random spanning tree plus random extra edges.
pub fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let parents = (1..n).map(|i| 0..i).collect::<Vec<_>>();
        let extra = proptest::collection::vec((0..n, 0..n), 0..n);
        (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
            let tree = parents.into_iter().enumerate().map(|(i, p)| (i + 1, p));
            let extra = extra.into_iter().filter(|(i, j)| i != j);
            Graph::new(n, tree.chain(extra)).unwrap()
        })
    })
}

/// Unit-diagonal `d x d` pattern with off-diagonal entries in `[-range, range]`.
pub fn pattern(d: usize, range: f64) -> impl Strategy<Value = InteractionPattern> {
    proptest::collection::vec(-range..=range, d * d).prop_map(move |v| {
        let m = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { v[i * d + j] });
        InteractionPattern::new(m).unwrap()
    })
}

/// Two-layer pattern with `|a12 a21| < 0.95`, so `|mu| < 1`.
pub fn two_layer_in_disc() -> impl Strategy<Value = InteractionPattern> {
    (-1.5f64..1.5, -1.5f64..1.5)
        .prop_filter("product inside the unit disc", |(a, b)| (a * b).abs() < 0.95)
        .prop_map(|(a, b)| InteractionPattern::two_layer(a, b))
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    v.sort_by(f64::total_cmp);
    v
}
