//! Undirected, unweighted network graph and its Laplacian spectrum.
//!
//! Vertices are 0-based here; configuration files and reports use 1-based
//! labels and convert at the boundary.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance for "zero" Laplacian eigenvalues.
pub const ZERO_EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Sorted, deduplicated pairs with `i < j`.
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list. Pairs are unordered; duplicates
    /// (including reversed duplicates) collapse into one edge.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n < 2 {
            return Err(Error::TooFewAgents(n));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            for index in [i, j] {
                if index >= n {
                    return Err(Error::IndexOutOfRange { index, n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// Star centred on vertex 0.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (0, i)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbour lists, each sorted ascending.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Breadth-first reachability from vertex 0.
    pub fn is_connected(&self) -> bool {
        let adj = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// `L = diag(W 1) - W` with unit edge weights.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            l[(i, j)] = -1.0;
            l[(j, i)] = -1.0;
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
        }
        l
    }

    pub fn laplacian_spectrum(&self) -> Result<LaplacianSpectrum> {
        let n = self.n;
        let eig = SymmetricEigen::try_new(self.laplacian(), f64::EPSILON, 1000 * n.max(10))
            .ok_or(Error::EigenFailure("symmetric Laplacian"))?;
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(LaplacianSpectrum::from_sorted(values))
    }
}

/// Laplacian eigenvalues sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacianSpectrum {
    pub values: Vec<f64>,
    pub lambda_max: f64,
    pub lambda2: f64,
}

impl LaplacianSpectrum {
    /// Wraps an ascending list of at least two eigenvalues.
    pub fn from_sorted(values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "spectrum needs at least two eigenvalues");
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Self {
            lambda_max: values[values.len() - 1],
            lambda2: values[1],
            values,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.lambda2 > ZERO_EIGEN_TOL
    }

    /// The eigenvalues `lambda_2..lambda_n` that govern disagreement.
    pub fn nonzero(&self) -> &[f64] {
        &self.values[1..]
    }

    /// Every eigenvalue multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_sorted(self.values.iter().map(|v| v * factor).collect())
    }
}
