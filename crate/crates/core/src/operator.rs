//! The formal operator, its quadratic form, discrete gradients and the exact
//! identities and inequalities relating them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{dirichlet_restriction, neighborhood, GraphFunction, VertexSet, WeightedGraph};
use crate::report::{scale, VerificationReport};
use crate::spectral::{lambda_min, SpectralOptions, SymMatrix};

const PARALLEL: usize = 20_000;

fn pointwise(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    if n >= PARALLEL {
        (0..n).into_par_iter().map(&f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// 𝓗f(x) = (1/m(x)) Σ_y b(x,y)(f(x) − f(y)) + q(x)f(x)
pub fn apply_h(g: &WeightedGraph, f: &GraphFunction) -> Result<GraphFunction> {
    f.check(g)?;
    let v = f.values();
    let out = pointwise(g.n(), |x| {
        let s: f64 = g.neighbors(x).map(|(y, b)| b * (v[x] - v[y])).sum();
        s / g.m()[x] + g.q()[x] * v[x]
    });
    GraphFunction::new(g, out)
}

/// h(φ,ψ) split into its edge part and its potential part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormValue {
    pub value: f64,
    /// Σ_edges b (φ(x)−φ(y))(ψ(x)−ψ(y)) = Σ ∇φ·∇ψ m
    pub kinetic: f64,
    /// Σ q φ ψ m
    pub potential: f64,
}

/// h(φ,ψ) = Σ_{edges} b Δφ Δψ + Σ_x q φ ψ m
pub fn form_h(g: &WeightedGraph, phi: &GraphFunction, psi: &GraphFunction) -> Result<FormValue> {
    phi.check(g)?;
    psi.check(g)?;
    let (a, b) = (phi.values(), psi.values());
    let kinetic: f64 = g.edges().iter().map(|e| e.b * (a[e.u] - a[e.v]) * (b[e.u] - b[e.v])).sum();
    let potential: f64 = (0..g.n()).map(|x| g.q()[x] * a[x] * b[x] * g.m()[x]).sum();
    Ok(FormValue { value: kinetic + potential, kinetic, potential })
}

/// |∇f|²(x) = (1/2m) Σ_y b (f(x)−f(y))², or with a positive weight `v`,
/// |∇_v f|²(x) = (1/2m) Σ_y b v(x) v(y) (f(x)−f(y))².
pub fn grad_sq(g: &WeightedGraph, f: &GraphFunction, v: Option<&GraphFunction>) -> Result<GraphFunction> {
    f.check(g)?;
    if let Some(v) = v {
        v.check(g)?;
        if let Some((x, &val)) = v.values().iter().enumerate().find(|(_, &t)| t <= 0.0) {
            return Err(Error::NonPositiveWeight { vertex: x, value: val });
        }
    }
    Ok(weighted_grad_sq(g, f.values(), v.map(|v| v.values())))
        .and_then(|vals| GraphFunction::new(g, vals))
}

/// Gradient square with a nonnegative weight (zero allowed), no validation.
pub(crate) fn weighted_grad_sq(g: &WeightedGraph, f: &[f64], v: Option<&[f64]>) -> Vec<f64> {
    pointwise(g.n(), |x| {
        let s: f64 = g
            .neighbors(x)
            .map(|(y, b)| {
                let w = v.map_or(1.0, |v| v[x] * v[y]);
                b * w * (f[x] - f[y]).powi(2)
            })
            .sum();
        s / (2.0 * g.m()[x])
    })
}

/// Green's formula h(u,φ) = Σ u 𝓗φ m, relative tolerance 1e−12.
pub fn greens_check(g: &WeightedGraph, u: &GraphFunction, phi: &GraphFunction) -> Result<VerificationReport> {
    let lhs = form_h(g, u, phi)?;
    let hphi = apply_h(g, phi)?;
    let terms: Vec<f64> = (0..g.n()).map(|x| u[x] * hphi[x] * g.m()[x]).collect();
    let rhs: f64 = terms.iter().sum();
    let edge_mass: f64 = g
        .edges()
        .iter()
        .map(|e| (e.b * (u[e.u] - u[e.v]) * (phi[e.u] - phi[e.v])).abs())
        .sum();
    let mass = terms.iter().map(|t| t.abs()).sum::<f64>() + edge_mass + lhs.potential.abs();
    Ok(VerificationReport::identity("greens_formula", lhs.value, rhs, mass, 1e-12))
}

/// Ground state transform
/// ½ Σ_{x,y} b v(x)v(y)(φ(x)−φ(y))² + Σ v φ² 𝓗v m = h(vφ), relative
/// tolerance 1e−10. With `supersolution_level = Some(λ)` and 𝓗v ≥ λv the
/// consequence Σ|∇_v φ|²m ≤ (h−λ)(vφ) is evaluated and recorded in the notes.
pub fn gst_check(
    g: &WeightedGraph,
    v: &GraphFunction,
    phi: &GraphFunction,
    supersolution_level: Option<f64>,
) -> Result<VerificationReport> {
    v.check(g)?;
    phi.check(g)?;
    if let Some((x, &val)) = v.values().iter().enumerate().find(|(_, &t)| t <= 0.0) {
        return Err(Error::NonPositiveWeight { vertex: x, value: val });
    }
    let (vv, p) = (v.values(), phi.values());
    let grad_terms: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| e.b * vv[e.u] * vv[e.v] * (p[e.u] - p[e.v]).powi(2))
        .collect();
    let grad: f64 = grad_terms.iter().sum();
    let hv = apply_h(g, v)?;
    let pot_terms: Vec<f64> = (0..g.n()).map(|x| vv[x] * p[x] * p[x] * hv[x] * g.m()[x]).collect();
    let pot: f64 = pot_terms.iter().sum();
    let vphi = GraphFunction::from_fn(g, |x| vv[x] * p[x])?;
    let h = form_h(g, &vphi, &vphi)?;
    let mass = grad + pot_terms.iter().map(|t| t.abs()).sum::<f64>() + h.kinetic + h.potential.abs();
    let mut report = VerificationReport::identity("ground_state_transform", grad + pot, h.value, mass, 1e-10);
    if let Some(lambda) = supersolution_level {
        let is_super = (0..g.n()).all(|x| hv[x] - lambda * vv[x] >= -1e-12 * scale(hv[x], lambda * vv[x]));
        let shifted = h.value - lambda * (0..g.n()).map(|x| (vv[x] * p[x]).powi(2) * g.m()[x]).sum::<f64>();
        let ineq = VerificationReport::inequality("gst_supersolution_inequality", grad, shifted, 1e-10);
        report.notes.push(format!(
            "supersolution to {lambda}: {}; {}",
            if is_super { "yes" } else { "no (inequality not implied)" },
            ineq.summary()
        ));
    }
    Ok(report)
}

/// Caccioppoli: h(ψu) ≤ Σ |∇_{|u|}ψ|² m + Σ (𝓗u) ψ² u m, margin ≥ −1e−10·scale.
pub fn caccioppoli_check(g: &WeightedGraph, u: &GraphFunction, psi: &GraphFunction) -> Result<VerificationReport> {
    u.check(g)?;
    psi.check(g)?;
    let psi_u = GraphFunction::from_fn(g, |x| psi[x] * u[x])?;
    let lhs = form_h(g, &psi_u, &psi_u)?.value;
    let abs_u: Vec<f64> = u.values().iter().map(|t| t.abs()).collect();
    let grad = weighted_grad_sq(g, psi.values(), Some(&abs_u));
    let hu = apply_h(g, u)?;
    let rhs: f64 = (0..g.n())
        .map(|x| (grad[x] + hu[x] * psi[x] * psi[x] * u[x]) * g.m()[x])
        .sum();
    Ok(VerificationReport::inequality("caccioppoli", lhs, rhs, 1e-10)
        .note("finite graph: compact and eikonal hypothesis regimes coincide"))
}

/// Membership in the class V: q₋ ≤ (1−ε) h₊ + C, checked as nonnegativity
/// of the smallest eigenvalue of (1−ε)h₊ + C − q₋.
pub fn q_in_v_check(g: &WeightedGraph, eps: f64, c: f64) -> Result<VerificationReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadParams(format!("epsilon {eps} must lie in (0,1)")));
    }
    if g.n() == 0 {
        return Ok(VerificationReport::inequality("q_in_V", 0.0, 0.0, 1e-9));
    }
    let plus = g.with_potential(g.q().iter().map(|q| q.max(0.0)).collect())?;
    let extra: Vec<f64> = g.q().iter().map(|q| c - (-q).max(0.0)).collect();
    let a = SymMatrix::from_graph(&plus).scaled(1.0 - eps).plus_diag(&extra);
    let lam = lambda_min(&a, &SpectralOptions::default())?;
    Ok(VerificationReport::inequality("q_in_V", 0.0, lam, 1e-9)
        .note(format!("epsilon = {eps}, C = {c}, smallest eigenvalue {lam:.6e}")))
}

#[derive(Debug, Clone)]
pub struct BoundaryCorrection {
    /// χ = 2 b_K − λ_K 1_K, supported in N(K).
    pub chi: GraphFunction,
    /// Bottom of h on functions supported in K.
    pub lambda_k: f64,
    pub b_k: GraphFunction,
    /// Smallest eigenvalue of h + χ on the whole graph.
    pub min_eig: f64,
    /// h ≥ 0 on C_c(X∖K), when X∖K is nonempty.
    pub positivity_off_k: Option<VerificationReport>,
    pub warnings: Vec<String>,
}

/// χ with h + χ ≥ 0 whenever h ≥ 0 off the finite set K.
pub fn boundary_correction(g: &WeightedGraph, k: &VertexSet) -> Result<BoundaryCorrection> {
    k.check(g)?;
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    let mask = k.mask(g.n());
    let b_k = GraphFunction::from_fn(g, |x| {
        let s: f64 = g
            .neighbors(x)
            .filter(|&(y, _)| mask[y] != mask[x])
            .map(|(_, b)| b)
            .sum();
        s / g.m()[x]
    })?;
    let opts = SpectralOptions { dense_threshold: 512, ..Default::default() };
    let lambda_k = lambda_min(&SymMatrix::from_graph(&dirichlet_restriction(g, k)?), &opts)?;
    let chi = GraphFunction::from_fn(g, |x| 2.0 * b_k[x] - if mask[x] { lambda_k } else { 0.0 })?;
    let mut warnings = Vec::new();
    let comp = k.complement(g)?;
    let positivity_off_k = if comp.is_empty() {
        None
    } else {
        let lam = lambda_min(&SymMatrix::from_graph(&dirichlet_restriction(g, &comp)?), &SpectralOptions::default())?;
        let r = VerificationReport::inequality("positivity_off_K", 0.0, lam, 1e-9);
        if !r.pass {
            warnings.push(format!("h is not nonnegative off K (smallest eigenvalue {lam:.6e})"));
        }
        Some(r)
    };
    let min_eig = lambda_min(&SymMatrix::from_graph(g).plus_diag(chi.values()), &SpectralOptions::default())?;
    let hypothesis = positivity_off_k.as_ref().is_none_or(|r| r.pass);
    if min_eig < -1e-9 * scale(min_eig, 0.0) {
        if hypothesis {
            return Err(Error::InvariantViolated(format!(
                "h + chi has eigenvalue {min_eig:e} although h >= 0 off K"
            )));
        }
        warnings.push(format!("h + chi is not nonnegative (smallest eigenvalue {min_eig:.6e})"));
    }
    debug_assert!({
        let nk = neighborhood(g, k)?;
        (0..g.n()).all(|x| chi[x] == 0.0 || nk.contains(x))
    });
    Ok(BoundaryCorrection { chi, lambda_k, b_k, min_eig, positivity_off_k, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_family, gen_lattice_box, Family, Potential};

    fn p2() -> WeightedGraph {
        gen_family(&Family::Path(2)).unwrap()
    }

    #[test]
    fn constants_are_harmonic_on_cycle() {
        let g = gen_family(&Family::Cycle(4)).unwrap();
        let f = GraphFunction::constant(&g, 3.5).unwrap();
        assert!(apply_h(&g, &f).unwrap().values().iter().all(|&v| v == 0.0));
        assert_eq!(form_h(&g, &f, &f).unwrap().value, 0.0);
    }

    #[test]
    fn indicator_on_single_edge() {
        let g = p2();
        let f = GraphFunction::new(&g, vec![1.0, 0.0]).unwrap();
        assert_eq!(apply_h(&g, &f).unwrap().values(), &[1.0, -1.0]);
        let h = form_h(&g, &f, &f).unwrap();
        assert_eq!(h.value, 1.0);
        assert_eq!(grad_sq(&g, &f, None).unwrap().values(), &[0.5, 0.5]);
        let r = greens_check(&g, &f, &f).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
    }

    #[test]
    fn well_eigenfunction_away_from_boundary() {
        let g = gen_lattice_box(1, 30, Potential::Well(-1.5)).unwrap();
        let c = g.coords().unwrap();
        let f = GraphFunction::from_fn(&g, |x| 2f64.powi(-(c[x][0].abs() as i32))).unwrap();
        let hf = apply_h(&g, &f).unwrap();
        for x in 0..g.n() {
            if c[x][0].abs() < 30 {
                assert!((hf[x] + 0.5 * f[x]).abs() < 1e-15, "x={x}");
            }
        }
    }

    #[test]
    fn unit_weight_collapses() {
        let g = gen_family(&Family::Star(4)).unwrap();
        let f = GraphFunction::from_fn(&g, |x| x as f64).unwrap();
        let one = GraphFunction::constant(&g, 1.0).unwrap();
        assert_eq!(grad_sq(&g, &f, Some(&one)).unwrap(), grad_sq(&g, &f, None).unwrap());
        let bad = GraphFunction::constant(&g, 0.0).unwrap();
        assert!(matches!(grad_sq(&g, &f, Some(&bad)), Err(Error::NonPositiveWeight { .. })));
    }

    #[test]
    fn gst_trivial_cases() {
        let g = gen_family(&Family::Cycle(5)).unwrap();
        let v = GraphFunction::from_fn(&g, |x| 1.0 + x as f64).unwrap();
        let phi = GraphFunction::constant(&g, 2.0).unwrap();
        assert!(gst_check(&g, &v, &phi, None).unwrap().pass);
        let one = GraphFunction::constant(&g, 1.0).unwrap();
        let phi = GraphFunction::from_fn(&g, |x| (x as f64).cos()).unwrap();
        let r = gst_check(&g, &one, &phi, Some(0.0)).unwrap();
        assert!(r.pass);
        assert_eq!(r.lhs, form_h(&g, &phi, &phi).unwrap().value);
        assert!(r.notes[0].contains("pass"));
    }

    #[test]
    fn caccioppoli_with_constant_cutoff_is_equality() {
        let g = gen_lattice_box(2, 2, Potential::Well(-0.3)).unwrap();
        let u = GraphFunction::from_fn(&g, |x| (x as f64 * 0.7).sin()).unwrap();
        let one = GraphFunction::constant(&g, 1.0).unwrap();
        let r = caccioppoli_check(&g, &u, &one).unwrap();
        assert!(r.pass);
        assert!(r.margin.abs() < 1e-12);
        let zero = GraphFunction::zeros(&g);
        let r = caccioppoli_check(&g, &zero, &one).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn class_v_examples() {
        let g = gen_lattice_box(1, 20, Potential::Zero).unwrap();
        assert!(q_in_v_check(&g, 0.3, 0.0).unwrap().pass);
        let well = gen_lattice_box(1, 20, Potential::Well(-1.5)).unwrap();
        assert!(q_in_v_check(&well, 0.5, 2.0).unwrap().pass);
        let deep = gen_lattice_box(1, 20, Potential::Constant(-1e6)).unwrap();
        assert!(!q_in_v_check(&deep, 0.5, 0.0).unwrap().pass);
    }

    #[test]
    fn boundary_correction_on_path_three() {
        let g = gen_family(&Family::Path(3)).unwrap();
        let k = VertexSet::new(&g, vec![1]).unwrap();
        let bc = boundary_correction(&g, &k).unwrap();
        assert_eq!(bc.b_k.values(), &[1.0, 2.0, 1.0]);
        assert_eq!(bc.lambda_k, 2.0);
        assert_eq!(bc.chi.values(), &[2.0, 2.0, 2.0]);
        assert!(bc.min_eig > 0.0);
    }

    #[test]
    fn boundary_correction_whole_graph() {
        let g = gen_family(&Family::Cycle(5)).unwrap();
        let bc = boundary_correction(&g, &VertexSet::all(&g)).unwrap();
        assert!(bc.b_k.values().iter().all(|&v| v == 0.0));
        assert!(bc.chi.values().iter().all(|&v| (v + bc.lambda_k).abs() < 1e-15));
        assert!(bc.min_eig.abs() < 1e-9);
    }

    #[test]
    fn boundary_correction_support_is_cross() {
        let g = gen_lattice_box(2, 3, Potential::Zero).unwrap();
        let k = VertexSet::new(&g, vec![g.origin().unwrap()]).unwrap();
        let bc = boundary_correction(&g, &k).unwrap();
        let support: Vec<usize> = (0..g.n()).filter(|&x| bc.chi[x] != 0.0).collect();
        assert_eq!(support, neighborhood(&g, &k).unwrap().indices());
        assert_eq!(support.len(), 5);
    }

    #[test]
    fn empty_set_is_rejected() {
        let g = p2();
        assert!(matches!(boundary_correction(&g, &VertexSet::empty(&g)), Err(Error::EmptySet)));
    }
}
