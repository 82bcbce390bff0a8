//! Eigenpairs of H on ℓ²(X,m), Dirichlet exhaustion estimates of the bottom
//! of the essential spectrum, and linear solves (H − λ)u = f.

mod krylov;
mod lanczos;
mod matrix;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use matrix::SymMatrix;

use crate::error::{Error, Result};
use crate::graph::{dirichlet_restriction, GraphFunction, VertexSet, WeightedGraph};
use crate::report::VerificationReport;
use krylov::{minres, pcg, CgOutcome};
use matrix::{axpy, norm};

#[derive(Debug, Clone)]
pub struct SpectralOptions {
    /// Dense eigensolver / LU up to this many vertices.
    pub dense_threshold: usize,
    /// Residual target ‖Av − λv‖ ≤ tol·(1+|λ|) for iterative eigenpairs.
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 2000,
            tol: 1e-10,
            krylov_dim: 150,
            max_restarts: 60,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// m-orthonormal; the entry of largest magnitude is positive.
    pub eigenvectors: Vec<GraphFunction>,
    /// ‖(H − λ)u‖_m per pair.
    pub residuals: Vec<f64>,
    pub method: Method,
}

/// Lowest `k` eigenpairs of a symmetric matrix (Euclidean-orthonormal vectors).
pub fn lowest_eigenpairs(a: &SymMatrix, k: usize, opts: &SpectralOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>, Method)> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::BadParams(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    if n <= opts.dense_threshold {
        let eig = SymmetricEigen::new(a.to_dense());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let vals = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = order[..k]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        Ok((vals, vecs, Method::Dense))
    } else {
        let (vals, vecs) = lanczos::lowest(a, k, opts)?;
        Ok((vals, vecs, Method::Iterative))
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(a: &SymMatrix, opts: &SpectralOptions) -> Result<f64> {
    Ok(lowest_eigenpairs(a, 1, opts)?.0[0])
}

fn fix_sign(v: &mut [f64]) {
    let big = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn eigensolve_lowest(g: &WeightedGraph, k: usize) -> Result<SpectralResult> {
    eigensolve_lowest_with(g, k, &SpectralOptions::default())
}

/// Lowest `k` eigenpairs of H via the similarity M^{1/2} H M^{-1/2}.
pub fn eigensolve_lowest_with(g: &WeightedGraph, k: usize, opts: &SpectralOptions) -> Result<SpectralResult> {
    let a = SymMatrix::from_graph(g);
    let (vals, vecs, method) = lowest_eigenpairs(&a, k, opts)?;
    let sqrt_m: Vec<f64> = g.m().iter().map(|m| m.sqrt()).collect();
    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (lambda, mut v) in vals.iter().copied().zip(vecs) {
        fix_sign(&mut v);
        let mut r = a.apply(&v);
        axpy(-lambda, &v, &mut r);
        residuals.push(norm(&r));
        let u: Vec<f64> = v.iter().zip(&sqrt_m).map(|(v, s)| v / s).collect();
        eigenvectors.push(GraphFunction::new(g, u)?);
    }
    Ok(SpectralResult { eigenvalues: vals, eigenvectors, residuals, method })
}

/// λ₀(H) of the graph.
pub fn lambda0(g: &WeightedGraph) -> Result<f64> {
    lambda_min(&SymMatrix::from_graph(g), &SpectralOptions::default())
}

/// Bottom of the spectrum of the Dirichlet restriction to `u`.
pub fn lambda0_on(g: &WeightedGraph, u: &VertexSet, opts: &SpectralOptions) -> Result<f64> {
    let r = dirichlet_restriction(g, u)?;
    lambda_min(&SymMatrix::from_graph(&r), opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct EssEstimate {
    /// λ₀ of the restriction to X∖K_j for each level.
    pub sequence: Vec<f64>,
    pub lambda0: f64,
    /// Last element of `sequence`.
    pub estimate: f64,
    /// estimate − λ₀
    pub gap: f64,
}

/// λ₀ of the Dirichlet restrictions to the complements of an increasing
/// exhaustion. The sequence is nondecreasing; its last value estimates the
/// bottom of the essential spectrum from below the truncation scale.
pub fn lambda0_ess_estimate(g: &WeightedGraph, exhaustion: &[VertexSet]) -> Result<EssEstimate> {
    lambda0_ess_estimate_with(g, exhaustion, &SpectralOptions::default())
}

pub fn lambda0_ess_estimate_with(
    g: &WeightedGraph,
    exhaustion: &[VertexSet],
    opts: &SpectralOptions,
) -> Result<EssEstimate> {
    if exhaustion.is_empty() {
        return Err(Error::BadParams("exhaustion is empty".into()));
    }
    for (j, k) in exhaustion.iter().enumerate() {
        k.check(g)?;
        if j > 0 && !exhaustion[j - 1].is_subset(k) {
            return Err(Error::NotNested { level: j });
        }
    }
    let lambda0 = lambda_min(&SymMatrix::from_graph(g), opts)?;
    let mut sequence = Vec::with_capacity(exhaustion.len());
    for (j, k) in exhaustion.iter().enumerate() {
        let comp = k.complement(g)?;
        if comp.is_empty() {
            return Err(Error::EmptyComplement { level: j });
        }
        sequence.push(lambda0_on(g, &comp, opts)?);
    }
    for j in 1..sequence.len() {
        let tol = 1e-9 * crate::report::scale(sequence[j], sequence[j - 1]);
        if sequence[j] < sequence[j - 1] - tol {
            return Err(Error::InvariantViolated(format!(
                "Dirichlet eigenvalue decreased from {} to {} at level {j}",
                sequence[j - 1],
                sequence[j]
            )));
        }
    }
    let estimate = *sequence.last().unwrap();
    Ok(EssEstimate { sequence, lambda0, estimate, gap: estimate - lambda0 })
}

pub fn solve_h_eq(g: &WeightedGraph, f: &GraphFunction, lambda: f64) -> Result<GraphFunction> {
    solve_h_eq_with(g, f, lambda, &SpectralOptions::default())
}

/// Solves (H − λ)u = f with ‖(H − λ)u − f‖_m ≤ 1e−9‖f‖_m.
pub fn solve_h_eq_with(g: &WeightedGraph, f: &GraphFunction, lambda: f64, opts: &SpectralOptions) -> Result<GraphFunction> {
    f.check(g)?;
    let n = g.n();
    let a = SymMatrix::from_graph(g);
    let sqrt_m: Vec<f64> = g.m().iter().map(|m| m.sqrt()).collect();
    let rhs: Vec<f64> = f.values().iter().zip(&sqrt_m).map(|(f, s)| f * s).collect();
    let fnorm = norm(&rhs);
    let psi = if n < opts.dense_threshold {
        let dense = a.to_dense() - DMatrix::identity(n, n) * lambda;
        let lu = dense.lu();
        let smallest = smallest_singular_estimate(&lu, n, opts.seed);
        if smallest < 1e-10 {
            return Err(Error::NearSingular { shift: lambda, estimate: smallest });
        }
        if fnorm == 0.0 {
            vec![0.0; n]
        } else {
            let x = lu
                .solve(&DVector::from_column_slice(&rhs))
                .ok_or(Error::NearSingular { shift: lambda, estimate: 0.0 })?;
            x.iter().copied().collect()
        }
    } else {
        if fnorm == 0.0 {
            vec![0.0; n]
        } else {
            iterative_solve(&a, -lambda, &rhs, fnorm, n)?
        }
    };
    let unorm = norm(&psi);
    if fnorm > 0.0 && unorm > 1e10 * fnorm {
        return Err(Error::NearSingular { shift: lambda, estimate: fnorm / unorm });
    }
    let mut r = a.apply(&psi);
    axpy(-lambda, &psi, &mut r);
    axpy(-1.0, &rhs, &mut r);
    let res = norm(&r);
    if res > 1e-9 * fnorm {
        return Err(Error::SolverFailure(format!("residual {res:e} exceeds 1e-9·‖f‖ = {:e}", 1e-9 * fnorm)));
    }
    GraphFunction::new(g, psi.iter().zip(&sqrt_m).map(|(p, s)| p / s).collect())
}

fn iterative_solve(a: &SymMatrix, shift: f64, rhs: &[f64], fnorm: f64, n: usize) -> Result<Vec<f64>> {
    let max_iter = 20 * n + 1000;
    let definite_diag = a.diag().iter().all(|&d| d + shift > 0.0);
    let mut x = if definite_diag {
        match pcg(a, shift, rhs, 1e-12, max_iter) {
            CgOutcome::Converged(x) | CgOutcome::Stalled(x) => x,
            CgOutcome::Indefinite => minres(a, shift, rhs, 1e-12, max_iter),
        }
    } else {
        minres(a, shift, rhs, 1e-12, max_iter)
    };
    // a few steps of iterative refinement
    for _ in 0..3 {
        let mut r = a.apply(&x);
        axpy(shift, &x, &mut r);
        r.iter_mut().zip(rhs).for_each(|(r, b)| *r = b - *r);
        if norm(&r) <= 1e-11 * fnorm {
            break;
        }
        let dx = minres(a, shift, &r, 1e-12, max_iter);
        axpy(1.0, &dx, &mut x);
    }
    Ok(x)
}

/// Estimate of the smallest |eigenvalue| by inverse iteration on the LU factors.
fn smallest_singular_estimate(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    x /= x.norm();
    let mut est = f64::INFINITY;
    for _ in 0..30 {
        let Some(y) = lu.solve(&x) else { return 0.0 };
        let ny = y.norm();
        if !ny.is_finite() || ny == 0.0 {
            return 0.0;
        }
        est = 1.0 / ny;
        x = y / ny;
    }
    est
}

/// h − w ≥ 0 on C_c(X∖K): smallest eigenvalue of the Dirichlet restriction
/// of the graph with potential q − w to the complement of `k`.
pub fn form_positivity(g: &WeightedGraph, w: &GraphFunction, k: &VertexSet) -> Result<VerificationReport> {
    form_positivity_with(g, w, k, &SpectralOptions::default())
}

pub fn form_positivity_with(
    g: &WeightedGraph,
    w: &GraphFunction,
    k: &VertexSet,
    opts: &SpectralOptions,
) -> Result<VerificationReport> {
    w.check(g)?;
    k.check(g)?;
    let shifted = g.with_potential(g.q().iter().zip(w.values()).map(|(q, w)| q - w).collect())?;
    let comp = k.complement(g)?;
    if comp.is_empty() {
        return Ok(VerificationReport::inequality("form_positivity", 0.0, 0.0, 1e-9)
            .note("complement of the exceptional set is empty"));
    }
    let comp = VertexSet::new(&shifted, comp.indices().to_vec())?;
    let lam = lambda0_on(&shifted, &comp, opts)?;
    Ok(VerificationReport::inequality("form_positivity", 0.0, lam, 1e-9)
        .note(format!("smallest eigenvalue of h - w off K: {lam:.6e}"))
        .note(format!("|K| = {}", k.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_family, gen_lattice_box, Family, Potential};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn path_three_spectrum() {
        let g = gen_family(&Family::Path(3)).unwrap();
        let r = eigensolve_lowest(&g, 3).unwrap();
        assert!(close(&r.eigenvalues, &[0.0, 1.0, 3.0], 1e-12));
        assert_eq!(r.method, Method::Dense);
    }

    #[test]
    fn cycle_four_spectrum() {
        let g = gen_family(&Family::Cycle(4)).unwrap();
        let r = eigensolve_lowest(&g, 4).unwrap();
        assert!(close(&r.eigenvalues, &[0.0, 2.0, 2.0, 4.0], 1e-12));
    }

    #[test]
    fn iterative_matches_dense() {
        let g = gen_lattice_box(2, 5, Potential::Well(-1.5)).unwrap();
        let dense = eigensolve_lowest(&g, 4).unwrap();
        let opts = SpectralOptions { dense_threshold: 0, ..Default::default() };
        let iter = eigensolve_lowest_with(&g, 4, &opts).unwrap();
        assert_eq!(iter.method, Method::Iterative);
        assert!(close(&dense.eigenvalues, &iter.eigenvalues, 1e-8), "{:?} {:?}", dense.eigenvalues, iter.eigenvalues);
        for r in &iter.residuals {
            assert!(*r < 1e-8);
        }
    }

    #[test]
    fn ground_state_is_positive_and_constant_for_free_laplacian() {
        let g = gen_family(&Family::Tree { branching: 2, depth: 3 }).unwrap();
        let r = eigensolve_lowest(&g, 1).unwrap();
        assert!(r.eigenvalues[0].abs() < 1e-12);
        let u = r.eigenvectors[0].values();
        assert!(u.iter().all(|&x| (x - u[0]).abs() < 1e-10 && x > 0.0));
    }

    #[test]
    fn solve_recovers_constructed_solution() {
        let g = gen_lattice_box(2, 4, Potential::Zero).unwrap();
        let v = GraphFunction::from_fn(&g, |x| (x as f64 * 0.37).sin()).unwrap();
        let hv = crate::operator::apply_h(&g, &v).unwrap();
        let f = GraphFunction::from_fn(&g, |x| hv[x] + v[x]).unwrap();
        for threshold in [2000, 0] {
            let opts = SpectralOptions { dense_threshold: threshold, ..Default::default() };
            let u = solve_h_eq_with(&g, &f, -1.0, &opts).unwrap();
            assert!(close(u.values(), v.values(), 1e-8));
        }
    }

    #[test]
    fn solve_with_zero_rhs_is_zero() {
        let g = gen_family(&Family::Path(5)).unwrap();
        let u = solve_h_eq(&g, &GraphFunction::zeros(&g), -1.0).unwrap();
        assert!(u.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn solve_at_eigenvalue_is_near_singular() {
        let g = gen_family(&Family::Path(3)).unwrap();
        let f = GraphFunction::constant(&g, 1.0).unwrap();
        assert!(matches!(solve_h_eq(&g, &f, 1.0), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn constant_potential_bounds_ess_estimates() {
        let g = gen_lattice_box(1, 10, Potential::Constant(0.7)).unwrap();
        let o = g.origin().unwrap();
        let ex: Vec<_> = (1..5).map(|r| g.ball(o, r)).collect();
        let est = lambda0_ess_estimate(&g, &ex).unwrap();
        assert!(est.sequence.iter().all(|&l| l >= 0.7 - 1e-12));
        assert!(est.sequence.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn form_positivity_examples() {
        let g = gen_lattice_box(1, 6, Potential::Zero).unwrap();
        let zero = GraphFunction::zeros(&g);
        assert!(form_positivity(&g, &zero, &VertexSet::empty(&g)).unwrap().pass);
        let l0 = lambda0(&g).unwrap();
        let w = GraphFunction::constant(&g, l0 + 1.0).unwrap();
        assert!(!form_positivity(&g, &w, &VertexSet::empty(&g)).unwrap().pass);
    }
}
