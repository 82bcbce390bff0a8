//! Hardy weights from positive supersolutions, truncated Green functions and
//! the oscillation constant that drives the supersolution decay estimate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{dirichlet_restriction, GraphFunction, VertexSet, WeightedGraph};
use crate::operator::apply_h;
use crate::report::VerificationReport;
use crate::spectral::{form_positivity, solve_h_eq};

/// Smallest admissible value of a supersolution.
pub const MIN_SUPERSOLUTION: f64 = 1e-300;

/// Above this size the internal positivity eigensolve is skipped.
const POSITIVITY_LIMIT: usize = 20_000;

#[derive(Debug, Clone)]
pub struct HardyWeight {
    /// w = 𝓗(v^α)/v^α, clamped at 0 where rounding made it slightly negative.
    pub w: GraphFunction,
    pub v: GraphFunction,
    pub alpha: f64,
    /// Set off which h ≥ w is claimed (empty for the plain construction).
    pub exceptional: VertexSet,
    /// sup over edges of v(x)/v(y).
    pub oscillation: f64,
    pub clamped: usize,
    /// h − w ≥ 0 off the exceptional set, when it was computed.
    pub positivity: Option<VerificationReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct HardyOptions {
    pub alpha: f64,
    /// Accept potentials with negative entries.
    pub allow_general_q: bool,
    pub check_positivity: bool,
}

impl Default for HardyOptions {
    fn default() -> Self {
        Self { alpha: 0.5, allow_general_q: false, check_positivity: true }
    }
}

fn check_positive(v: &GraphFunction) -> Result<()> {
    match v.values().iter().enumerate().find(|(_, &x)| !(x >= MIN_SUPERSOLUTION)) {
        Some((vertex, &value)) => Err(Error::NonPositiveSupersolution { vertex, value }),
        None => Ok(()),
    }
}

fn check_exponent(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadExponent(alpha))
    }
}

fn oscillation(g: &WeightedGraph, v: &[f64]) -> f64 {
    g.edges()
        .iter()
        .map(|e| (v[e.u] / v[e.v]).max(v[e.v] / v[e.u]))
        .fold(1.0, f64::max)
}

/// w_α = 𝓗(v^α)/v^α for a strictly positive supersolution v.
pub fn supersolution_hardy(g: &WeightedGraph, v: &GraphFunction, opts: &HardyOptions) -> Result<HardyWeight> {
    v.check(g)?;
    check_positive(v)?;
    check_exponent(opts.alpha)?;
    let mut warnings = Vec::new();
    if g.q().iter().any(|&q| q < 0.0) {
        if !opts.allow_general_q {
            return Err(Error::BadParams(
                "potential has negative entries; the construction needs q >= 0 (override with allow_general_q)".into(),
            ));
        }
        warnings.push("potential has negative entries: w need not be nonnegative".into());
    }
    let alpha = opts.alpha;
    let va = v.map(|x| x.powf(alpha))?;
    let hva = apply_h(g, &va)?;
    let vv = va.values();
    let mut clamped = 0;
    let mut w = Vec::with_capacity(g.n());
    for x in 0..g.n() {
        let raw = hva[x] / vv[x];
        // size of the summed terms relative to v^α(x)
        let mass = g.neighbors(x).map(|(y, b)| b * (vv[x] + vv[y])).sum::<f64>() / (g.m()[x] * vv[x]) + g.q()[x].abs();
        if raw >= 0.0 {
            w.push(raw);
        } else if raw >= -1e-12 * mass.max(1.0) {
            clamped += 1;
            w.push(0.0);
        } else if opts.allow_general_q {
            w.push(raw);
        } else {
            return Err(Error::BadParams(format!("v is not a supersolution at vertex {x}: w = {raw:e}")));
        }
    }
    let w = GraphFunction::new(g, w)?;
    let exceptional = VertexSet::empty(g);
    let positivity = if !opts.check_positivity {
        None
    } else if g.n() > POSITIVITY_LIMIT {
        warnings.push(format!("positivity check skipped above {POSITIVITY_LIMIT} vertices"));
        None
    } else {
        Some(form_positivity(g, &w, &exceptional)?)
    };
    if positivity.as_ref().is_some_and(|r| !r.pass) {
        warnings.push("h - w is not nonnegative on the truncation".into());
    }
    Ok(HardyWeight {
        oscillation: oscillation(g, v.values()),
        w,
        v: v.clone(),
        alpha,
        exceptional,
        clamped,
        positivity,
        warnings,
    })
}

/// Values prescribed on the boundary layer of a truncation.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    Zero,
    /// κ_d ‖x − root‖^{2−d}, the leading term of the lattice Green function
    /// of ℤ^d (d ≥ 3, unit weights and measure).
    FreeSpaceAsymptotic,
    /// Values on every vertex; only the boundary layer entries are used.
    Custom(Vec<f64>),
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData::Zero
    }
}

/// κ_d = Γ(d/2 − 1)/(4π^{d/2}); only d = 3..=6 are tabulated.
fn lattice_green_constant(d: usize) -> Result<f64> {
    use std::f64::consts::PI;
    let gamma_half_d_minus_1 = match d {
        3 => PI.sqrt(),
        4 => 1.0,
        5 => PI.sqrt() / 2.0,
        6 => 1.0,
        _ => return Err(Error::BadParams(format!("free-space boundary data needs 3 <= d <= 6, got {d}"))),
    };
    Ok(gamma_half_d_minus_1 / (4.0 * PI.powf(d as f64 / 2.0)))
}

/// Solves 𝓗v = 1_root/m(root) on the interior of the truncation with the
/// boundary layer held at the prescribed data. Returns v on the whole graph.
pub fn green_function(g: &WeightedGraph, root: usize, boundary: &BoundaryData) -> Result<GraphFunction> {
    if root >= g.n() {
        return Err(Error::BadParams(format!("root {root} out of range")));
    }
    if g.q().iter().any(|&q| q < 0.0) {
        return Err(Error::BadParams("green function needs q >= 0".into()));
    }
    let layer = g.boundary_layer();
    if layer.contains(root) {
        return Err(Error::BadParams(format!("root {root} lies on the boundary layer")));
    }
    let interior = layer.complement(g)?;
    let mut values = vec![0.0; g.n()];
    match boundary {
        BoundaryData::Zero => {}
        BoundaryData::FreeSpaceAsymptotic => {
            let coords = g
                .coords()
                .ok_or_else(|| Error::BadParams("free-space boundary data needs coordinates".into()))?;
            let d = coords[root].len();
            let kappa = lattice_green_constant(d)?;
            for &x in layer.indices() {
                let r2: i64 = coords[x].iter().zip(&coords[root]).map(|(a, b)| (a - b) * (a - b)).sum();
                values[x] = kappa * (r2 as f64).powf((2.0 - d as f64) / 2.0);
            }
        }
        BoundaryData::Custom(data) => {
            if data.len() != g.n() {
                return Err(Error::GraphMismatch);
            }
            for &x in layer.indices() {
                if !data[x].is_finite() {
                    return Err(Error::NonFinite { what: format!("boundary value at vertex {x}") });
                }
                values[x] = data[x];
            }
        }
    }
    let sub = dirichlet_restriction(g, &interior)?;
    let mut rhs = vec![0.0; sub.n()];
    for (i, &x) in interior.indices().iter().enumerate() {
        let flux: f64 = g.neighbors(x).filter(|&(y, _)| layer.contains(y)).map(|(y, b)| b * values[y]).sum();
        rhs[i] = flux / g.m()[x];
        if x == root {
            rhs[i] += 1.0 / g.m()[x];
        }
    }
    let sol = solve_h_eq(&sub, &GraphFunction::new(&sub, rhs)?, 0.0)?;
    for (i, &x) in interior.indices().iter().enumerate() {
        let s = sol.values()[i];
        if !(s > 0.0) {
            return Err(Error::InvariantViolated(format!("green function not positive at interior vertex {x}")));
        }
        values[x] = s;
    }
    GraphFunction::new(g, values)
}

#[derive(Debug, Clone, Serialize)]
pub struct Oscillation {
    pub eps0: f64,
    pub gamma: f64,
    pub check: VerificationReport,
}

/// γ(ε₀, α) = ((1 − ε₀^α)/(1 − ε₀))², with the limit α² at ε₀ = 1.
pub fn gamma_from_oscillation(eps0: f64, alpha: f64) -> f64 {
    if 1.0 - eps0 < 1e-9 {
        alpha * alpha
    } else {
        ((1.0 - eps0.powf(alpha)) / (1.0 - eps0)).powi(2)
    }
}

/// |t^α − (at)^α|²/t^{2α} − γ(1 − a)²
fn power_excess(a: f64, t: f64, alpha: f64, gamma: f64) -> f64 {
    let ta = t.powf(alpha);
    (ta - (a * t).powf(alpha)).powi(2) / (ta * ta) - gamma * (1.0 - a).powi(2)
}

/// ε₀ = (inf_{x∼y} v(x)/v(y))^{1/2}, the constant γ, and a check of the
/// power inequality on every edge and on a grid of (a, t) with a ≥ ε₀.
pub fn oscillation_and_gamma(g: &WeightedGraph, v: &GraphFunction, alpha: f64) -> Result<Oscillation> {
    v.check(g)?;
    check_positive(v)?;
    check_exponent(alpha)?;
    let vals = v.values();
    let osc = oscillation(g, vals);
    let eps0 = (1.0 / osc).sqrt();
    let gamma = gamma_from_oscillation(eps0, alpha);
    let edge_worst = g
        .edges()
        .par_iter()
        .flat_map_iter(|e| [(e.u, e.v), (e.v, e.u)])
        .map(|(x, y)| power_excess((vals[y] / vals[x]).sqrt(), vals[x].sqrt(), alpha, gamma))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let a_max = (1.0 / (eps0 * eps0)).max(1.0 / eps0 + 1.0);
    let grid_worst = (0..100usize)
        .into_par_iter()
        .map(|i| {
            let a = eps0 + (a_max - eps0) * i as f64 / 99.0;
            (0..100)
                .map(|j| power_excess(a, 10f64.powf(-3.0 + 6.0 * j as f64 / 99.0), alpha, gamma))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let worst = edge_worst.max(grid_worst);
    let check = VerificationReport::inequality("power_inequality", worst, 0.0, 1e-12)
        .note(format!("eps0 = {eps0:.6e}, gamma = {gamma:.6e}"))
        .note(format!("edge excess {edge_worst:.3e}, grid excess {grid_worst:.3e}"));
    Ok(Oscillation { eps0, gamma, check })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Bounded,
    Increasing,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalityTrend {
    /// Σ_{B_j} v·w·m
    pub partial_sums: Vec<f64>,
    pub growth: Growth,
    pub notes: Vec<String>,
}

/// Partial sums of v·w·m over an exhaustion; a diagnostic, never a verdict.
pub fn null_criticality_trend(g: &WeightedGraph, hw: &HardyWeight, exhaustion: &[VertexSet]) -> Result<CriticalityTrend> {
    hw.w.check(g)?;
    let mut notes = Vec::new();
    if (hw.alpha - 0.5).abs() > 1e-15 {
        notes.push(format!("built with alpha = {}, the ground state statement needs 1/2", hw.alpha));
    }
    let (v, w, m) = (hw.v.values(), hw.w.values(), g.m());
    let mut partial_sums: Vec<f64> = Vec::with_capacity(exhaustion.len());
    for b in exhaustion {
        b.check(g)?;
        partial_sums.push(b.indices().iter().map(|&x| v[x] * w[x] * m[x]).sum());
    }
    let growth = match partial_sums.as_slice() {
        [.., prev, last] if *last - *prev > 0.01 * last.abs() => Growth::Increasing,
        _ => Growth::Bounded,
    };
    notes.push("finitely many levels cannot decide summability".into());
    Ok(CriticalityTrend { partial_sums, growth, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_family, gen_lattice_box, Family, Potential};
    use crate::graph::build_graph;

    #[test]
    fn path_weight_closed_form() {
        // half-line 0..=40 with the left end as boundary
        let g = gen_family(&Family::Path(41)).unwrap();
        let interior = VertexSet::new(&g, (1..41).collect()).unwrap();
        let sub = dirichlet_restriction(&g, &interior).unwrap();
        let v = GraphFunction::from_fn(&sub, |i| (i + 1) as f64).unwrap();
        let hw = supersolution_hardy(&sub, &v, &HardyOptions { check_positivity: false, ..Default::default() }).unwrap();
        assert!((hw.w[0] - (2.0 - 2f64.sqrt())).abs() < 1e-14);
        for n in 2..40 {
            let nf = n as f64;
            let exact = 2.0 - (1.0 - 1.0 / nf).sqrt() - (1.0 + 1.0 / nf).sqrt();
            assert!((hw.w[n - 1] - exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn constant_v_gives_zero_weight() {
        let g = gen_family(&Family::Cycle(6)).unwrap();
        let v = GraphFunction::constant(&g, 3.0).unwrap();
        let hw = supersolution_hardy(&g, &v, &HardyOptions::default()).unwrap();
        assert!(hw.w.values().iter().all(|&w| w == 0.0));
        assert!(hw.positivity.unwrap().pass);
        assert_eq!(hw.oscillation, 1.0);
    }

    #[test]
    fn harmonic_v_with_alpha_one_vanishes() {
        let g = gen_family(&Family::Path(10)).unwrap();
        let interior = VertexSet::new(&g, (1..10).collect()).unwrap();
        let sub = dirichlet_restriction(&g, &interior).unwrap();
        let v = GraphFunction::from_fn(&sub, |i| (i + 1) as f64).unwrap();
        let opts = HardyOptions { alpha: 1.0, ..Default::default() };
        let hw = supersolution_hardy(&sub, &v, &opts).unwrap();
        for n in 1..8 {
            assert_eq!(hw.w[n], 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = gen_family(&Family::Path(3)).unwrap();
        let bad = GraphFunction::new(&g, vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            supersolution_hardy(&g, &bad, &HardyOptions::default()),
            Err(Error::NonPositiveSupersolution { vertex: 1, .. })
        ));
        let v = GraphFunction::constant(&g, 1.0).unwrap();
        let opts = HardyOptions { alpha: 1.5, ..Default::default() };
        assert!(matches!(supersolution_hardy(&g, &v, &opts), Err(Error::BadExponent(_))));
        let neg = g.with_potential(vec![-1.0, 0.0, 0.0]).unwrap();
        let v = GraphFunction::constant(&neg, 1.0).unwrap();
        assert!(supersolution_hardy(&neg, &v, &HardyOptions::default()).is_err());
        let opts = HardyOptions { allow_general_q: true, ..Default::default() };
        let hw = supersolution_hardy(&neg, &v, &opts).unwrap();
        assert!(!hw.warnings.is_empty());
    }

    #[test]
    fn green_function_on_path_three() {
        let g = gen_family(&Family::Path(3)).unwrap();
        let v = green_function(&g, 1, &BoundaryData::Zero).unwrap();
        assert_eq!(v.values(), &[0.0, 0.5, 0.0]);
        assert!(green_function(&g, 0, &BoundaryData::Zero).is_err());
    }

    #[test]
    fn green_function_free_space_boundary() {
        let g = gen_lattice_box(3, 8, Potential::Zero).unwrap();
        let o = g.origin().unwrap();
        let v = green_function(&g, o, &BoundaryData::FreeSpaceAsymptotic).unwrap();
        let kappa = 1.0 / (4.0 * std::f64::consts::PI);
        for x in 0..g.n() {
            let r = g.euclidean_norm(x).unwrap();
            if (3.0..=6.0).contains(&r) {
                assert!((v[x] * r / kappa - 1.0).abs() < 0.1, "r = {r}, v r = {}", v[x] * r);
            }
        }
    }

    #[test]
    fn custom_boundary_data_is_harmonic_extension() {
        // constant boundary data with no source gives the constant plus the source term
        let g = gen_family(&Family::Path(5)).unwrap();
        let v = green_function(&g, 2, &BoundaryData::Custom(vec![1.0; 5])).unwrap();
        let plain = green_function(&g, 2, &BoundaryData::Zero).unwrap();
        for x in 0..5 {
            assert!((v[x] - 1.0 - plain[x]).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_examples() {
        let gamma = gamma_from_oscillation(0.5f64.sqrt(), 0.5);
        let exact = ((1.0 - 2f64.powf(-0.25)) / (1.0 - 2f64.powf(-0.5))).powi(2);
        assert!((gamma - exact).abs() < 1e-15);
        assert!((gamma - 0.295).abs() < 1e-3);
        assert_eq!(gamma_from_oscillation(0.3, 1.0), 1.0);
        assert_eq!(power_excess(1.0, 2.0, 0.5, 0.3), 0.0);
    }

    #[test]
    fn power_inequality_on_path() {
        let g = gen_family(&Family::Path(30)).unwrap();
        let v = GraphFunction::from_fn(&g, |i| (i + 1) as f64).unwrap();
        let o = oscillation_and_gamma(&g, &v, 0.5).unwrap();
        assert!((o.eps0 - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(o.check.pass, "{}", o.check.summary());
        let o = oscillation_and_gamma(&g, &v, 1.0).unwrap();
        assert!(o.check.pass);
    }

    #[test]
    fn trend_for_zero_weight_is_bounded() {
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], vec![1.0; 3], vec![0.0; 3], None).unwrap();
        let v = GraphFunction::constant(&g, 1.0).unwrap();
        let hw = supersolution_hardy(&g, &v, &HardyOptions::default()).unwrap();
        let balls: Vec<_> = (0..3).map(|r| g.ball(0, r)).collect();
        let t = null_criticality_trend(&g, &hw, &balls).unwrap();
        assert_eq!(t.partial_sums, vec![0.0; 3]);
        assert_eq!(t.growth, Growth::Bounded);
    }

    #[test]
    fn trend_on_half_line_grows() {
        let g = gen_family(&Family::Path(401)).unwrap();
        let interior = VertexSet::new(&g, (1..401).collect()).unwrap();
        let sub = dirichlet_restriction(&g, &interior).unwrap();
        let v = GraphFunction::from_fn(&sub, |i| (i + 1) as f64).unwrap();
        let hw = supersolution_hardy(&sub, &v, &HardyOptions { check_positivity: false, ..Default::default() }).unwrap();
        let balls: Vec<_> = [50, 100, 200].iter().map(|&r| sub.ball(0, r)).collect();
        let t = null_criticality_trend(&sub, &hw, &balls).unwrap();
        assert_eq!(t.growth, Growth::Increasing);
        // v·w·m ~ 1/(4n): doubling the ball adds about ln(2)/4
        let step = t.partial_sums[2] - t.partial_sums[1];
        assert!((step - 2f64.ln() / 4.0).abs() < 0.01, "{step}");
    }
}
