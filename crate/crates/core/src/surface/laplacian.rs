//! Symmetric Laplacian form stored by its edges.
//!
//! `⟨u, Sv⟩ = Σ_e c_e (u_i − u_j)(v_i − v_j)`, so `S·1 = 0` holds exactly and
//! the form is positive semidefinite whenever all `c_e ≥ 0`.

use crate::error::{domain, Result};
use crate::quadrature::CompensatedSum;
use rayon::prelude::*;

/// Above this many sites, row products run on the rayon pool.
const PARALLEL_SITES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub c: f64,
}

#[derive(Clone, Debug)]
pub struct EdgeLaplacian {
    n: usize,
    edges: Vec<Edge>,
    // adjacency in CSR form, neighbours in increasing order
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl EdgeLaplacian {
    /// Build from `(i, j, c)` with `i ≠ j`; repeated pairs are merged by summing.
    pub fn new(n: usize, raw: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut edges: Vec<Edge> = Vec::new();
        for (i, j, c) in raw {
            if i >= n || j >= n {
                return domain(format!("edge ({i}, {j}) out of range for {n} sites"));
            }
            if i == j {
                return domain(format!("self-loop at site {i}"));
            }
            if !c.is_finite() {
                return domain(format!("non-finite edge weight on ({i}, {j})"));
            }
            let (i, j) = if i < j { (i, j) } else { (j, i) };
            edges.push(Edge { i, j, c });
        }
        edges.sort_by(|x, y| (x.i, x.j).cmp(&(y.i, y.j)));
        edges.dedup_by(|next, kept| {
            if (next.i, next.j) == (kept.i, kept.j) {
                kept.c += next.c;
                true
            } else {
                false
            }
        });
        edges.retain(|e| e.c != 0.0);

        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for k in 0..n {
            row_ptr[k + 1] = row_ptr[k] + degree[k];
        }
        let mut fill = row_ptr.clone();
        let mut cols = vec![0usize; row_ptr[n]];
        let mut vals = vec![0.0; row_ptr[n]];
        for e in &edges {
            for (a, b) in [(e.i, e.j), (e.j, e.i)] {
                cols[fill[a]] = b;
                vals[fill[a]] = e.c;
                fill[a] += 1;
            }
        }
        for k in 0..n {
            let (lo, hi) = (row_ptr[k], row_ptr[k + 1]);
            let mut row: Vec<(usize, f64)> = cols[lo..hi].iter().copied().zip(vals[lo..hi].iter().copied()).collect();
            row.sort_by_key(|p| p.0);
            for (slot, (c, v)) in row.into_iter().enumerate() {
                cols[lo + slot] = c;
                vals[lo + slot] = v;
            }
        }
        Ok(Self { n, edges, row_ptr, cols, vals })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn min_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.c).fold(f64::INFINITY, f64::min)
    }

    /// Diagonal entry `Σ_j c_ij`.
    pub fn diagonal(&self, i: usize) -> f64 {
        self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum()
    }

    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    fn row(&self, i: usize, u: &[f64]) -> f64 {
        let ui = u[i];
        let mut acc = 0.0;
        for (j, c) in self.neighbours(i) {
            acc += c * (ui - u[j]);
        }
        acc
    }

    /// `(Su)_i = Σ_j c_ij (u_i − u_j)`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n, "vector length does not match the surface");
        if self.n >= PARALLEL_SITES {
            (0..self.n).into_par_iter().map(|i| self.row(i, u)).collect()
        } else {
            (0..self.n).map(|i| self.row(i, u)).collect()
        }
    }

    /// `⟨u, Sv⟩`, evaluated edge by edge.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        assert_eq!(u.len(), self.n);
        assert_eq!(v.len(), self.n);
        let mut acc = CompensatedSum::<f64>::default();
        for e in &self.edges {
            acc.add(e.c * (u[e.i] - u[e.j]) * (v[e.i] - v[e.j]));
        }
        acc.value()
    }

    /// `⟨u, Su⟩`; non-negative for non-negative edge weights.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.bilinear(u, u)
    }

    /// Full matrix as `(i, j, value)` triplets: off-diagonal `−c`, diagonal `Σ c`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.n + 2 * self.edges.len());
        for i in 0..self.n {
            out.push((i, i, self.diagonal(i)));
            for (j, c) in self.neighbours(i) {
                out.push((i, j, -c));
            }
        }
        out
    }
}
