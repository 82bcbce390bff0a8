use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::graph::WeightedGraph;

const PARALLEL_ROWS: usize = 20_000;

/// Sparse symmetric matrix: explicit diagonal plus off-diagonal rows.
///
/// Operators on ℓ²(X,m) are stored in the symmetrized form `M^{1/2} T M^{-1/2}`
/// so that the standard inner product plays the role of the m-inner product.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymMatrix {
    /// Symmetrized H: diagonal Σb/m + q, off-diagonal −b/√(m(x)m(y)).
    pub fn from_graph(g: &WeightedGraph) -> Self {
        let n = g.n();
        let m = g.m();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(n);
        for x in 0..n {
            diag.push(g.normalized_degree(x) + g.q()[x]);
            for (y, b) in g.neighbors(x) {
                cols.push(y);
                vals.push(-b / (m[x] * m[y]).sqrt());
            }
            offsets.push(cols.len());
        }
        Self { diag, offsets, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// c·A
    pub fn scaled(mut self, c: f64) -> Self {
        self.diag.iter_mut().for_each(|d| *d *= c);
        self.vals.iter_mut().for_each(|v| *v *= c);
        self
    }

    /// A + diag(d)
    pub fn plus_diag(mut self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n());
        self.diag.iter_mut().zip(d).for_each(|(a, b)| *a += b);
        self
    }

    /// A + c·I
    pub fn shifted(mut self, c: f64) -> Self {
        self.diag.iter_mut().for_each(|a| *a += c);
        self
    }

    fn row(&self, x: usize, v: &[f64]) -> f64 {
        let mut s = self.diag[x] * v[x];
        for k in self.offsets[x]..self.offsets[x + 1] {
            s += self.vals[k] * v[self.cols[k]];
        }
        s
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        if self.n() >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row(i, x);
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for x in 0..n {
            a[(x, x)] = self.diag[x];
            for k in self.offsets[x]..self.offsets[x + 1] {
                a[(x, self.cols[k])] = self.vals[k];
            }
        }
        a
    }

    fn radius(&self, x: usize) -> f64 {
        self.vals[self.offsets[x]..self.offsets[x + 1]].iter().map(|v| v.abs()).sum()
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n())
            .map(|x| self.diag[x] - self.radius(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn gershgorin_upper(&self) -> f64 {
        (0..self.n())
            .map(|x| self.diag[x] + self.radius(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Spectral radius bound max(|lower|, |upper|).
    pub fn norm_bound(&self) -> f64 {
        self.gershgorin_lower().abs().max(self.gershgorin_upper().abs())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() >= PARALLEL_ROWS {
        a.par_iter().zip(b.par_iter()).map(|(x, y)| x * y).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += c·x
pub(crate) fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    if y.len() >= PARALLEL_ROWS {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += c * xi);
    } else {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += c * xi);
    }
}
