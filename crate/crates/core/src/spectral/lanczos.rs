//! Shift-and-invert Lanczos with full reorthogonalization and locking.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::krylov::{pcg, CgOutcome};
use super::matrix::{axpy, dot, norm, SymMatrix};
use super::SpectralOptions;
use crate::error::{Error, Result};

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, w);
            axpy(-c, b, w);
        }
    }
}

struct ShiftInvert<'a> {
    a: &'a SymMatrix,
    sigma: f64,
    max_iter: usize,
}

impl ShiftInvert<'_> {
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match pcg(self.a, -self.sigma, v, 1e-14, self.max_iter) {
            CgOutcome::Converged(x) | CgOutcome::Stalled(x) => Ok(x),
            CgOutcome::Indefinite => Err(Error::SolverFailure(format!(
                "shift {} is not below the spectrum",
                self.sigma
            ))),
        }
    }
}

/// Lowest `k` eigenpairs of `a` (ascending), eigenvectors orthonormal.
pub(crate) fn lowest(a: &SymMatrix, k: usize, opts: &SpectralOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.n();
    let spread = a.norm_bound().max(1.0);
    let sigma = a.gershgorin_lower() - 1e-3 * spread;
    let op = ShiftInvert { a, sigma, max_iter: 20 * n + 1000 };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut locked_vals: Vec<f64> = Vec::with_capacity(k);
    let kdim_max = opts.krylov_dim.max(2);

    while locked.len() < k {
        let free = n - locked.len();
        let kdim = kdim_max.min(free);
        let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut converged = false;
        for _restart in 0..opts.max_restarts {
            orthogonalize(&mut start, &locked);
            let s = norm(&start);
            if s == 0.0 {
                start = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                continue;
            }
            start.iter_mut().for_each(|v| *v /= s);
            let mut basis: Vec<Vec<f64>> = vec![start.clone()];
            let mut alphas: Vec<f64> = Vec::new();
            let mut betas: Vec<f64> = Vec::new();
            for j in 0..kdim {
                let mut w = op.apply(&basis[j])?;
                orthogonalize(&mut w, &locked);
                let alpha = dot(&basis[j], &w);
                alphas.push(alpha);
                orthogonalize(&mut w, &basis);
                let beta = norm(&w);
                if j + 1 == kdim || beta <= 1e-14 * alpha.abs().max(1e-300) {
                    break;
                }
                w.iter_mut().for_each(|v| *v /= beta);
                betas.push(beta);
                basis.push(w);
            }
            let m = alphas.len();
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imax, theta) = eig
                .eigenvalues
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            if theta <= 0.0 {
                return Err(Error::SolverFailure("non-positive Ritz value of the inverse".into()));
            }
            let mut y = vec![0.0; n];
            for i in 0..m {
                axpy(eig.eigenvectors[(i, imax)], &basis[i], &mut y);
            }
            orthogonalize(&mut y, &locked);
            let ny = norm(&y);
            y.iter_mut().for_each(|v| *v /= ny);
            let ay = a.apply(&y);
            let lambda = dot(&y, &ay);
            let res = ay.iter().zip(&y).map(|(p, q)| (p - lambda * q).powi(2)).sum::<f64>().sqrt();
            if res <= opts.tol * (1.0 + lambda.abs()) || m == free {
                locked.push(y);
                locked_vals.push(lambda);
                converged = true;
                break;
            }
            start = y;
        }
        if !converged {
            return Err(Error::SolverFailure(format!(
                "eigenpair {} did not converge after {} restarts",
                locked.len(),
                opts.max_restarts
            )));
        }
    }

    // Rayleigh-Ritz on the locked subspace
    let mut proj = DMatrix::zeros(k, k);
    let av: Vec<Vec<f64>> = locked.iter().map(|v| a.apply(v)).collect();
    for i in 0..k {
        for j in 0..k {
            proj[(i, j)] = dot(&locked[i], &av[j]);
        }
    }
    let proj = (&proj + proj.transpose()) * 0.5;
    let eig = SymmetricEigen::new(proj);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vals = Vec::with_capacity(k);
    let mut vecs = Vec::with_capacity(k);
    for &c in &order {
        let mut v = vec![0.0; n];
        for i in 0..k {
            axpy(eig.eigenvectors[(i, c)], &locked[i], &mut v);
        }
        vals.push(eig.eigenvalues[c]);
        vecs.push(v);
    }
    Ok((vals, vecs))
}
