//! Decay certificates: the exponential lemma, eikonal and Rellich checks,
//! rates from spectral gaps, and the Agmon-type estimates evaluated on an
//! exhaustion of a truncation.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{neighborhood, GraphFunction, VertexSet, WeightedGraph};
use crate::hardy::{oscillation_and_gamma, supersolution_hardy, HardyOptions};
use crate::metrics::{
    agmon_metric, intrinsic_audit, scaled_combinatorial_lengths, shortest_paths, AgmonVariant, EdgeLengths,
};
use crate::operator::{apply_h, boundary_correction, weighted_grad_sq};
use crate::report::{opt_float17, vec_float17, VerificationReport};
use crate::spectral::{form_positivity, lambda0_on, SpectralOptions};

/// r²(1 + e^r)/16
pub fn rate_constant(r: f64) -> f64 {
    r * r * (1.0 + r.exp()) / 16.0
}

fn rel_excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / lhs.abs().max(rhs.abs()).max(1e-300)
}

/// |e^a − e^b|² ≤ (e^{2a} + e^{2b})/2 · |a − b|² on random pairs in [−5, 5]².
pub fn scalar_exp_check(pairs: usize, seed: u64) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let a: f64 = rng.random_range(-5.0..=5.0);
        let b: f64 = rng.random_range(-5.0..=5.0);
        let lhs = (a.exp() - b.exp()).powi(2);
        let rhs = ((2.0 * a).exp() + (2.0 * b).exp()) / 2.0 * (a - b).powi(2);
        worst = worst.max(if lhs == 0.0 && rhs == 0.0 { 0.0 } else { rel_excess(lhs, rhs) });
    }
    VerificationReport::inequality("scalar_exp_inequality", worst.max(-1.0), 0.0, 1e-12)
        .note(format!("{pairs} pairs, largest relative excess {worst:.3e}"))
}

/// |∇e^{θ/2}|² ≤ e^θ (1 + e^r)/8 · |∇θ|² at every vertex, r the largest jump
/// of θ, together with the scalar inequality behind it.
pub fn exp_lemma_check(g: &WeightedGraph, theta: &GraphFunction, seed: u64) -> Result<VerificationReport> {
    theta.check(g)?;
    let t = theta.values();
    let r = g.edges().iter().map(|e| (t[e.u] - t[e.v]).abs()).fold(0.0, f64::max);
    let half: Vec<f64> = t.iter().map(|x| (x / 2.0).exp()).collect();
    let lhs = weighted_grad_sq(g, &half, None);
    let grad = weighted_grad_sq(g, t, None);
    let c = (1.0 + r.exp()) / 8.0;
    let mut worst = 0.0f64;
    let mut at = None;
    for x in 0..g.n() {
        let rhs = t[x].exp() * c * grad[x];
        if lhs[x] == 0.0 && rhs == 0.0 {
            continue;
        }
        let e = rel_excess(lhs[x], rhs);
        if !e.is_finite() || e > worst || at.is_none() {
            worst = if e.is_finite() { e.max(worst) } else { f64::INFINITY };
            at = Some(x);
        }
    }
    let scalar = scalar_exp_check(10_000, seed);
    let total = worst.max(scalar.lhs);
    Ok(VerificationReport::inequality("exp_lemma", total, 0.0, 1e-12)
        .note(format!("largest jump r = {r:.6e}"))
        .note(format!("vertexwise relative excess {worst:.3e}"))
        .note(scalar.summary()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    Bisect,
    ClosedForm,
}

/// A decay rate r with r²(1 + e^r)/16 < a.
pub fn rate_from_gap(a: f64, mode: RateMode) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonPositiveGap(a));
    }
    let r = match mode {
        RateMode::ClosedForm if a <= 1.0 => 2.0 * a * (-a).exp(),
        _ => {
            let target = 0.99 * a;
            let mut hi = 1.0;
            while rate_constant(hi) <= target {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            while hi - lo > 1e-10 * hi.max(1e-300) && hi - lo > 1e-300 {
                let mid = 0.5 * (lo + hi);
                if rate_constant(mid) <= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    if !(rate_constant(r) < a) || r <= 0.0 {
        return Err(Error::InvariantViolated(format!("rate {r} does not satisfy the gap condition for a = {a}")));
    }
    Ok(r)
}

fn check_nonneg(f: &GraphFunction) -> Result<()> {
    match f.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        Some((vertex, &value)) => Err(Error::NegativeWeight { vertex, value }),
        None => Ok(()),
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::BadParams(format!("gamma {gamma} must lie in (0,1)")))
    }
}

/// |∇g^{1/2}|² ≤ γ g w, pointwise.
pub fn eikonal_check(g: &WeightedGraph, gfun: &GraphFunction, w: &GraphFunction, gamma: f64) -> Result<VerificationReport> {
    gfun.check(g)?;
    w.check(g)?;
    check_nonneg(gfun)?;
    check_nonneg(w)?;
    check_gamma(gamma)?;
    let root: Vec<f64> = gfun.values().iter().map(|v| v.sqrt()).collect();
    let num = weighted_grad_sq(g, &root, None);
    let mut worst = 0.0f64;
    let mut at = None;
    let mut degenerate = Vec::new();
    for x in 0..g.n() {
        let denom = gfun[x] * w[x];
        if denom > 0.0 {
            let ratio = num[x] / denom;
            if ratio > worst || at.is_none() {
                worst = worst.max(ratio);
                at = Some(x);
            }
        } else if num[x] > 1e-14 * gfun[x].max(1.0) {
            degenerate.push(x);
        }
    }
    let mut report = VerificationReport::inequality("eikonal", worst, gamma, 0.0);
    report.tol = 1e-10 * gamma;
    report.pass = worst <= gamma + report.tol && degenerate.is_empty();
    if let Some(x) = at {
        report.notes.push(format!("largest ratio at vertex {x}"));
    }
    if !degenerate.is_empty() {
        report.notes.push(format!(
            "{} vertices with g·w = 0 but nonzero gradient, first {}",
            degenerate.len(),
            degenerate[0]
        ));
    }
    Ok(report)
}

fn norm_m(g: &WeightedGraph, f: &[f64]) -> f64 {
    f.iter().zip(g.m()).map(|(f, m)| f * f * m).sum::<f64>().sqrt()
}

fn operator_scale(g: &WeightedGraph) -> f64 {
    g.q().iter().fold(g.degree_bound().max(1.0), |a, q| a.max(q.abs()))
}

/// (1 − γ)² Σ u² g w m ≤ Σ f² g w⁻¹ m for 𝓗u = f, given the eikonal
/// inequality and h ≥ w (the latter is the caller's responsibility).
pub fn rellich_check(
    g: &WeightedGraph,
    w: &GraphFunction,
    gfun: &GraphFunction,
    gamma: f64,
    u: &GraphFunction,
    f: &GraphFunction,
) -> Result<VerificationReport> {
    u.check(g)?;
    f.check(g)?;
    let eik = eikonal_check(g, gfun, w, gamma)?;
    if !eik.pass {
        return Err(Error::EikonalFailed(Box::new(eik)));
    }
    if let Some(x) = (0..g.n()).find(|&x| f[x] != 0.0 && w[x] == 0.0) {
        return Err(Error::SupportViolation { vertex: x });
    }
    let hu = apply_h(g, u)?;
    let diff: Vec<f64> = (0..g.n()).map(|x| hu[x] - f[x]).collect();
    let res = norm_m(g, &diff);
    let allowed = 1e-8 * (norm_m(g, hu.values()) + norm_m(g, f.values()) + operator_scale(g) * norm_m(g, u.values()));
    if res > allowed {
        return Err(Error::BadParams(format!("u does not solve Hu = f (residual {res:e})")));
    }
    let m = g.m();
    let lhs = (1.0 - gamma).powi(2) * (0..g.n()).map(|x| u[x] * u[x] * gfun[x] * w[x] * m[x]).sum::<f64>();
    let rhs: f64 = (0..g.n())
        .filter(|&x| f[x] != 0.0)
        .map(|x| f[x] * f[x] * gfun[x] / w[x] * m[x])
        .sum();
    Ok(VerificationReport::inequality("rellich", lhs, rhs, 1e-10)
        .note(format!("eikonal ratio {:.6e} against gamma {gamma:.6e}", eik.lhs))
        .note(format!("equation residual {res:.3e}")))
}

/// w′ = w_N off K and |∇g_N^{1/2}|²/(γ g_N) on K (0 where g_N vanishes).
pub fn wn_prime_regularization(
    g: &WeightedGraph,
    w_n: &GraphFunction,
    g_n: &GraphFunction,
    gamma: f64,
    k: &VertexSet,
) -> Result<GraphFunction> {
    w_n.check(g)?;
    g_n.check(g)?;
    k.check(g)?;
    check_gamma(gamma)?;
    let root: Vec<f64> = g_n.values().iter().map(|v| v.max(0.0).sqrt()).collect();
    let num = weighted_grad_sq(g, &root, None);
    let mut w = w_n.values().to_vec();
    for &x in k.indices() {
        w[x] = if g_n[x] != 0.0 { num[x] / (gamma * g_n[x]) } else { 0.0 };
        if !w[x].is_finite() {
            return Err(Error::InvariantViolated(format!("regularized weight is not finite at vertex {x}")));
        }
    }
    GraphFunction::new(g, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Metric,
    BelowEss,
    Sparse,
    Cheeger,
    TwoSided,
    Supersolution,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Metric,
        Mode::BelowEss,
        Mode::Sparse,
        Mode::Cheeger,
        Mode::TwoSided,
        Mode::Supersolution,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Metric => "metric",
            Mode::BelowEss => "below_ess",
            Mode::Sparse => "sparse",
            Mode::Cheeger => "cheeger",
            Mode::TwoSided => "two_sided",
            Mode::Supersolution => "supersolution",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::BadParams(format!("unknown mode {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateChoice {
    Bisect,
    ClosedForm,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct CertificateParams {
    /// Spectral parameter; (𝓗 − λ)u is the right-hand side.
    pub lambda: f64,
    /// Exceptional set K; the support of the right-hand side is always added.
    pub exceptional: Option<VertexSet>,
    /// Base point of distances; defaults to the graph origin.
    pub root: Option<usize>,
    /// Intrinsic metric; defaults to the scaled combinatorial one.
    pub lengths: Option<EdgeLengths>,
    /// Hardy weight for the metric mode (h − λ ≥ w off K).
    pub hardy_weight: Option<GraphFunction>,
    /// Positive supersolution for the supersolution mode.
    pub supersolution: Option<GraphFunction>,
    /// Gap a for below_ess and sparse; computed from the spectrum when absent.
    pub gap: Option<f64>,
    /// Cheeger constant at infinity for the cheeger mode.
    pub alpha_inf: Option<f64>,
    /// The cheeger mode uses (1 − slack)·a.
    pub cheeger_slack: f64,
    pub rate: RateChoice,
    /// Exponent for the supersolution and two_sided modes.
    pub alpha: f64,
    pub exhaustion: Vec<VertexSet>,
    pub stability_threshold: f64,
    /// Entries of (𝓗 − λ)u below this multiple of ‖u‖_∞·scale count as zero.
    pub residual_floor: f64,
}

impl CertificateParams {
    pub fn new(lambda: f64, exhaustion: Vec<VertexSet>) -> Self {
        Self {
            lambda,
            exceptional: None,
            root: None,
            lengths: None,
            hardy_weight: None,
            supersolution: None,
            gap: None,
            alpha_inf: None,
            cheeger_slack: 0.1,
            rate: RateChoice::Bisect,
            alpha: 0.5,
            exhaustion,
            stability_threshold: 0.01,
            residual_floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayCertificate {
    pub mode: Mode,
    #[serde(with = "crate::report::float17")]
    pub lambda: f64,
    #[serde(with = "opt_float17")]
    pub gap: Option<f64>,
    #[serde(with = "opt_float17")]
    pub rate: Option<f64>,
    #[serde(with = "opt_float17")]
    pub alpha: Option<f64>,
    #[serde(with = "crate::report::float17")]
    pub gamma: f64,
    pub exceptional: Vec<usize>,
    /// N with g ∧ e^N = g on the truncation.
    pub saturation_level: i64,
    /// Density with respect to m of the weight in the conclusion.
    #[serde(skip)]
    pub weight: Vec<f64>,
    pub level_sizes: Vec<usize>,
    #[serde(with = "vec_float17")]
    pub weighted_norms: Vec<f64>,
    #[serde(with = "crate::report::float17")]
    pub stability: f64,
    #[serde(with = "crate::report::float17")]
    pub threshold: f64,
    pub hypotheses: Vec<VerificationReport>,
    pub checks: Vec<VerificationReport>,
    pub notes: Vec<String>,
    pub pass: bool,
}

fn hypothesis(report: VerificationReport) -> Result<VerificationReport> {
    if report.pass {
        Ok(report)
    } else {
        Err(Error::HypothesisFailed { check: report.check.clone(), report: Box::new(report) })
    }
}

/// (𝓗 − λ)u with entries below the floor set to zero.
fn floored_residual(g: &WeightedGraph, u: &[f64], lambda: f64, floor_rel: f64) -> Result<Vec<f64>> {
    let uf = GraphFunction::new(g, u.to_vec())?;
    let hu = apply_h(g, &uf)?;
    let umax = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = floor_rel * umax * operator_scale(g).max(lambda.abs());
    Ok((0..g.n())
        .map(|x| {
            let f = hu[x] - lambda * u[x];
            if f.abs() <= floor {
                0.0
            } else {
                f
            }
        })
        .collect())
}

fn union_support(g: &WeightedGraph, k: &[usize], f: &[f64]) -> Result<VertexSet> {
    let mut mask = vec![false; g.n()];
    for &x in k {
        mask[x] = true;
    }
    for (x, v) in f.iter().enumerate() {
        if *v != 0.0 {
            mask[x] = true;
        }
    }
    Ok(VertexSet::from_mask(g, &mask))
}

struct Chain {
    hypotheses: Vec<VerificationReport>,
    checks: Vec<VerificationReport>,
    exceptional: Vec<usize>,
    saturation: i64,
    notes: Vec<String>,
}

/// The argument of the general decay theorem on a truncation: regularize w
/// on K, correct the operator near K so that h − λ + χ̃ ≥ w̃ everywhere, and
/// apply the Rellich inequality to the corrected equation.
fn run_chain(
    g: &WeightedGraph,
    lambda: f64,
    u: &[f64],
    w: &[f64],
    gfun: &[f64],
    gamma: f64,
    k: &[usize],
    floor_rel: f64,
) -> Result<Chain> {
    let n = g.n();
    let f = floored_residual(g, u, lambda, floor_rel)?;
    let kset = union_support(g, k, &f)?;
    let shifted = g.shifted(lambda)?;
    let wf = GraphFunction::new(&shifted, w.to_vec())?;
    let kk = VertexSet::new(&shifted, kset.indices().to_vec())?;
    let mut hypotheses = vec![hypothesis(form_positivity(&shifted, &wf, &kk)?)?];
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    let gmax = gfun.iter().copied().fold(0.0, f64::max);
    let saturation = if gmax <= 1.0 { 0 } else { gmax.ln().ceil() as i64 };
    let cap = (saturation as f64).exp();
    let g_n = GraphFunction::new(g, gfun.iter().map(|v| v.min(cap)).collect())?;
    notes.push(format!("g ∧ e^N = g from N = {saturation}"));

    let w_n = GraphFunction::new(g, w.to_vec())?;
    let w_prime = wn_prime_regularization(g, &w_n, &g_n, gamma, &kset)?;
    let (chi_t, w_t) = if kset.is_empty() {
        (vec![0.0; n], w_prime.values().to_vec())
    } else {
        let gp = g.with_potential((0..n).map(|x| g.q()[x] - lambda - w_prime[x]).collect())?;
        let kp = VertexSet::new(&gp, kset.indices().to_vec())?;
        let bc = boundary_correction(&gp, &kp)?;
        checks.push(
            VerificationReport::inequality("boundary_correction", 0.0, bc.min_eig, 1e-9)
                .note(format!("lambda_K = {:.6e}", bc.lambda_k)),
        );
        let nk = neighborhood(g, &kset)?;
        let mut chi: Vec<f64> = bc.chi.values().to_vec();
        let mut wt = w_prime.values().to_vec();
        for &x in nk.indices() {
            chi[x] += 1.0;
            wt[x] += 1.0;
        }
        (chi, wt)
    };
    let op = g.with_potential((0..n).map(|x| g.q()[x] - lambda + chi_t[x]).collect())?;
    let f_t: Vec<f64> = (0..n).map(|x| f[x] + chi_t[x] * u[x]).collect();
    let rel = rellich_check(
        &op,
        &GraphFunction::new(&op, w_t)?,
        &GraphFunction::new(&op, g_n.into_values())?,
        gamma,
        &GraphFunction::new(&op, u.to_vec())?,
        &GraphFunction::new(&op, f_t)?,
    );
    match rel {
        Ok(r) => checks.push(r),
        Err(Error::EikonalFailed(report)) => {
            return Err(Error::HypothesisFailed { check: "eikonal".into(), report });
        }
        Err(e) => return Err(e),
    }
    hypotheses.shrink_to_fit();
    Ok(Chain { hypotheses, checks, exceptional: kset.indices().to_vec(), saturation, notes })
}

fn partial_sums(g: &WeightedGraph, u: &[f64], weight: &[f64], levels: &[VertexSet]) -> Vec<f64> {
    let m = g.m();
    levels
        .iter()
        .map(|b| b.indices().iter().map(|&x| u[x] * u[x] * weight[x] * m[x]).sum())
        .collect()
}

fn pick_rate(choice: RateChoice, a: f64) -> Result<f64> {
    match choice {
        RateChoice::Bisect => rate_from_gap(a, RateMode::Bisect),
        RateChoice::ClosedForm => rate_from_gap(a, RateMode::ClosedForm),
        RateChoice::Fixed(r) => {
            if r > 0.0 && rate_constant(r) < a {
                Ok(r)
            } else {
                Err(Error::BadParams(format!("rate {r} violates r²(1+e^r)/16 < {a}")))
            }
        }
    }
}

fn distances(g: &WeightedGraph, lengths: &EdgeLengths, root: usize) -> Result<Vec<f64>> {
    let d = shortest_paths(g, lengths, &[root])?;
    if d.unreachable > 0 {
        return Err(Error::BadParams(format!("{} vertices unreachable from the root", d.unreachable)));
    }
    Ok(d.dist)
}

/// Evaluates the decay estimate of the chosen mode for u on the exhaustion.
pub fn decay_certificate(g: &WeightedGraph, u: &GraphFunction, mode: Mode, params: &CertificateParams) -> Result<DecayCertificate> {
    u.check(g)?;
    let levels = &params.exhaustion;
    if levels.len() < 3 {
        return Err(Error::InsufficientExhaustion { levels: levels.len() });
    }
    for (j, b) in levels.iter().enumerate() {
        b.check(g)?;
        if j > 0 && !levels[j - 1].is_subset(b) {
            return Err(Error::NotNested { level: j });
        }
    }
    let k_user: Vec<usize> = match &params.exceptional {
        Some(k) => {
            k.check(g)?;
            k.indices().to_vec()
        }
        None => Vec::new(),
    };
    let root = || params.root.or(g.origin()).ok_or(Error::NoOrigin);
    let lambda = params.lambda;
    let uv = u.values();
    let n = g.n();
    let mut notes = Vec::new();

    // K together with the support of the right-hand side, on the original graph
    let f0 = floored_residual(g, uv, lambda, params.residual_floor)?;
    let k_eff = union_support(g, &k_user, &f0)?;
    let gap_off_k = |gg: &WeightedGraph, lam: f64| -> Result<f64> {
        let comp = VertexSet::new(gg, k_eff.indices().to_vec())?.complement(gg)?;
        if comp.is_empty() {
            return Err(Error::EmptyComplement { level: 0 });
        }
        Ok(lambda0_on(gg, &comp, &SpectralOptions::default())? - lam)
    };

    let (chain, weight, gap, rate, alpha, gamma, extra) = match mode {
        Mode::Metric => {
            let w = params
                .hardy_weight
                .as_ref()
                .ok_or_else(|| Error::BadParams("metric mode needs a Hardy weight".into()))?;
            w.check(g)?;
            let sigma = match &params.lengths {
                Some(l) => l.clone(),
                None => scaled_combinatorial_lengths(g)?,
            };
            let audit = hypothesis(intrinsic_audit(g, &sigma)?)?;
            let rho = agmon_metric(g, Some(&sigma), w, root()?, AgmonVariant::Cutoff)?;
            if rho.unreachable > 0 {
                return Err(Error::BadParams("graph is not connected".into()));
            }
            let r = pick_rate(params.rate, 1.0)?;
            let gamma = rate_constant(r);
            let gfun: Vec<f64> = rho.dist.iter().map(|d| (r * d).exp()).collect();
            let weight: Vec<f64> = (0..n).map(|x| gfun[x] * w[x]).collect();
            let mut chain = run_chain(g, lambda, uv, w.values(), &gfun, gamma, &k_user, params.residual_floor)?;
            chain.hypotheses.insert(0, audit);
            (chain, weight, None, Some(r), None, gamma, Vec::new())
        }
        Mode::BelowEss => {
            let a = match params.gap {
                Some(a) => a,
                None => 0.99 * gap_off_k(g, lambda)?,
            };
            let sigma = match &params.lengths {
                Some(l) => l.clone(),
                None => scaled_combinatorial_lengths(g)?,
            };
            let audit = hypothesis(intrinsic_audit(g, &sigma)?)?;
            let r = pick_rate(params.rate, a)?;
            let gamma = r * r * (1.0 + (r * sigma.jump_size().max(1.0)).exp()) / (16.0 * a);
            check_gamma(gamma)?;
            let d = distances(g, &sigma, root()?)?;
            let gfun: Vec<f64> = d.iter().map(|d| (r * d).exp()).collect();
            let w = vec![a; n];
            let mut chain = run_chain(g, lambda, uv, &w, &gfun, gamma, &k_user, params.residual_floor)?;
            chain.hypotheses.insert(0, audit);
            (chain, gfun, Some(a), Some(r), None, gamma, Vec::new())
        }
        Mode::Sparse | Mode::Cheeger => {
            let deg: Vec<f64> = (0..n).map(|x| g.deg(x)).collect();
            if let Some(x) = deg.iter().position(|&d| !(d > 0.0)) {
                return Err(Error::BadParams(format!("vertex {x} has zero degree")));
            }
            // h − λ ≥ a·deg_m is h′ ≥ a for the measure deg and potential (q − λ)m/deg
            let g2 = g
                .with_measure(deg.clone())?
                .with_potential((0..n).map(|x| (g.q()[x] - lambda) * g.m()[x] / deg[x]).collect())?;
            let mut extra = Vec::new();
            let a = if mode == Mode::Cheeger {
                let alpha_inf = params
                    .alpha_inf
                    .ok_or_else(|| Error::BadParams("cheeger mode needs the Cheeger constant at infinity".into()))?;
                if !(alpha_inf > 0.0 && alpha_inf <= 1.0) {
                    return Err(Error::NonPositiveGap(alpha_inf));
                }
                let a = 1.0 - (1.0 - alpha_inf * alpha_inf).sqrt();
                notes.push(format!(
                    "a = 1 - sqrt(1 - alpha_inf^2) = {a:.6e} from alpha_inf = {alpha_inf:.6e}, used with factor {}",
                    1.0 - params.cheeger_slack
                ));
                notes.push("alpha_inf comes from upper bounds on each infimum, so a may be overestimated".into());
                (1.0 - params.cheeger_slack) * a
            } else {
                match params.gap {
                    Some(a) => a,
                    None => 1f64.min(0.99 * gap_off_k(&g2, 0.0)?),
                }
            };
            let unit = EdgeLengths::constant(&g2, 1.0)?;
            let audit = hypothesis(intrinsic_audit(&g2, &unit)?)?;
            let r = pick_rate(params.rate, a)?;
            let gamma = rate_constant(r) / a;
            check_gamma(gamma)?;
            let d = distances(&g2, &unit, root()?)?;
            let gfun: Vec<f64> = d.iter().map(|d| (r * d).exp()).collect();
            let w = vec![a; n];
            let mut chain = run_chain(&g2, 0.0, uv, &w, &gfun, gamma, &k_user, params.residual_floor)?;
            chain.hypotheses.insert(0, audit);
            extra.push(format!("measure changed to deg; gap a = {a:.6e} for h - lambda >= a deg_m"));
            let weight: Vec<f64> = (0..n).map(|x| gfun[x] * deg[x] / g.m()[x]).collect();
            (chain, weight, Some(a), Some(r), None, gamma, extra)
        }
        Mode::Supersolution => {
            let v = params
                .supersolution
                .as_ref()
                .ok_or_else(|| Error::BadParams("supersolution mode needs v".into()))?;
            if lambda != 0.0 {
                return Err(Error::BadParams("supersolution mode works at lambda = 0".into()));
            }
            let alpha = params.alpha;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::BadExponent(alpha));
            }
            let hw = supersolution_hardy(g, v, &HardyOptions { check_positivity: false, ..Default::default() })?;
            let osc = oscillation_and_gamma(g, v, alpha)?;
            let power = hypothesis(osc.check.clone())?;
            let gamma = osc.gamma;
            let gfun: Vec<f64> = v.values().iter().map(|v| v.powf(alpha)).collect();
            let weight: Vec<f64> = (0..n).map(|x| gfun[x] * hw.w[x]).collect();
            let mut chain = run_chain(g, 0.0, uv, hw.w.values(), &gfun, gamma, &k_user, params.residual_floor)?;
            chain.hypotheses.insert(0, power);
            let extra = vec![format!("eps0 = {:.6e}", osc.eps0)];
            (chain, weight, None, None, Some(alpha), gamma, extra)
        }
        Mode::TwoSided => {
            let alpha = params.alpha;
            let kappa = alpha * alpha * alpha.exp() / 8.0;
            if !(alpha > 0.0 && kappa < 1.0) {
                return Err(Error::BadExponent(alpha));
            }
            let gap = gap_off_k(g, lambda)?;
            let spectral = hypothesis(
                VerificationReport::inequality("spectral_gap_off_K", 0.0, gap, 0.0)
                    .note("lambda must lie below the bottom of the spectrum off K"),
            )?;
            if gap <= 0.0 {
                return Err(Error::HypothesisFailed { check: "spectral_gap_off_K".into(), report: Box::new(spectral) });
            }
            let c = 0.99 * gap;
            let sigma = match &params.lengths {
                Some(l) => l.clone(),
                None => scaled_combinatorial_lengths(g)?,
            };
            let audit = hypothesis(intrinsic_audit(g, &sigma)?)?;
            let mut chi_t = vec![0.0; n];
            let mut w_t = vec![c; n];
            let mut checks = Vec::new();
            if !k_eff.is_empty() {
                let gp = g.with_potential(g.q().iter().map(|q| q - lambda - c).collect())?;
                let kp = VertexSet::new(&gp, k_eff.indices().to_vec())?;
                let bc = boundary_correction(&gp, &kp)?;
                checks.push(VerificationReport::inequality("boundary_correction", 0.0, bc.min_eig, 1e-9));
                for &x in neighborhood(g, &k_eff)?.indices() {
                    chi_t[x] = bc.chi[x] + 1.0;
                    w_t[x] += 1.0;
                }
            }
            let wt = GraphFunction::new(g, w_t.clone())?;
            let rho = agmon_metric(g, Some(&sigma), &wt, root()?, AgmonVariant::Cutoff)?;
            if rho.unreachable > 0 {
                return Err(Error::BadParams("graph is not connected".into()));
            }
            let e2: Vec<f64> = rho.dist.iter().map(|d| (2.0 * alpha * d).exp()).collect();
            let m = g.m();
            let lhs: f64 = (0..n).map(|x| uv[x] * uv[x] * e2[x] * w_t[x] * m[x]).sum();
            let big_c = (1.0 - kappa).powi(-2);
            let rhs: f64 = big_c
                * (0..n)
                    .map(|x| {
                        let ft = f0[x] + chi_t[x] * uv[x];
                        ft * ft * e2[x] / w_t[x] * m[x]
                    })
                    .sum::<f64>();
            checks.push(
                VerificationReport::inequality("two_sided_estimate", lhs, rhs, 1e-10)
                    .note(format!("C = (1 - alpha^2 e^alpha/8)^-2 = {big_c:.6e}"))
                    .note(format!("c = {c:.6e}")),
            );
            let root_e: Vec<f64> = e2.iter().map(|v| v.sqrt()).collect();
            let grad = weighted_grad_sq(g, &root_e, None);
            let eik = (0..n).map(|x| grad[x] / (e2[x] * w_t[x])).fold(0.0, f64::max);
            let chain = Chain {
                hypotheses: vec![audit, spectral],
                checks,
                exceptional: k_eff.indices().to_vec(),
                saturation: 0,
                notes: vec![
                    format!("eikonal ratio of e^(2 alpha rho) against the corrected weight: {eik:.6e}"),
                    "u in l2(e^(-alpha rho) w m) is only checked at truncation scale".into(),
                ],
            };
            let weight: Vec<f64> = (0..n).map(|x| e2[x] * w_t[x]).collect();
            (chain, weight, Some(c), None, Some(alpha), kappa, Vec::new())
        }
    };

    let weighted_norms = partial_sums(g, uv, &weight, levels);
    for j in 1..weighted_norms.len() {
        if weighted_norms[j] < weighted_norms[j - 1] {
            return Err(Error::InvariantViolated("weighted partial sums decreased".into()));
        }
    }
    let last = *weighted_norms.last().unwrap();
    let prev = weighted_norms[weighted_norms.len() - 2];
    let stability = if last == 0.0 { 0.0 } else { (last - prev) / last };
    let stable = stability <= params.stability_threshold;
    if !stable {
        notes.push(format!(
            "partial sums change by {stability:.3e} between the two largest levels (threshold {:.1e})",
            params.stability_threshold
        ));
    }
    notes.extend(chain.notes);
    notes.extend(extra);
    let pass = stable && chain.hypotheses.iter().all(|r| r.pass) && chain.checks.iter().all(|r| r.pass);
    Ok(DecayCertificate {
        mode,
        lambda,
        gap,
        rate,
        alpha,
        gamma,
        exceptional: chain.exceptional,
        saturation_level: chain.saturation,
        weight,
        level_sizes: levels.iter().map(|b| b.len()).collect(),
        weighted_norms,
        stability,
        threshold: params.stability_threshold,
        hypotheses: chain.hypotheses,
        checks: chain.checks,
        notes,
        pass,
    })
}
