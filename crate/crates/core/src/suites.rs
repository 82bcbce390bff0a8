//! End-to-end verification suites: build the inputs a theorem needs from a
//! graph, run the certificate, and classify the outcome.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::agmon::{decay_certificate, rellich_check, CertificateParams, DecayCertificate, Mode, RateChoice};
use crate::error::{Error, Result};
use crate::exhaustion::alpha_infinity_estimate;
use crate::fixtures::green_interior;
use crate::graph::{GraphFunction, VertexSet, WeightedGraph};
use crate::hardy::{oscillation_and_gamma, BoundaryData, HardyWeight, Oscillation};
use crate::report::{scale, VerificationReport};
use crate::spectral::{eigensolve_lowest, lambda0_on, solve_h_eq, SpectralOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Rellich,
    AgmonMetric,
    BelowEss,
    Sparse,
    Cheeger,
    Supersolution,
    TwoSided,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Rellich,
        Suite::AgmonMetric,
        Suite::BelowEss,
        Suite::Sparse,
        Suite::Cheeger,
        Suite::Supersolution,
        Suite::TwoSided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rellich => "rellich",
            Suite::AgmonMetric => "agmon-metric",
            Suite::BelowEss => "below-ess",
            Suite::Sparse => "sparse",
            Suite::Cheeger => "cheeger",
            Suite::Supersolution => "supersolution",
            Suite::TwoSided => "two-sided",
        }
    }

    /// The certificate mode behind the suite; the Rellich suite has none.
    pub fn mode(self) -> Option<Mode> {
        match self {
            Suite::Rellich => None,
            Suite::AgmonMetric => Some(Mode::Metric),
            Suite::BelowEss => Some(Mode::BelowEss),
            Suite::Sparse => Some(Mode::Sparse),
            Suite::Cheeger => Some(Mode::Cheeger),
            Suite::Supersolution => Some(Mode::Supersolution),
            Suite::TwoSided => Some(Mode::TwoSided),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('_', "-");
        Suite::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|m| m.name()).collect();
            Error::Config(format!("unknown suite {s:?}, expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    /// Ball radii around the root; a quarter-spaced default is derived from
    /// the eccentricity of the root when absent.
    pub exhaustion: Option<Vec<usize>>,
    /// K is the ball of this radius around the root.
    pub k_radius: usize,
    #[serde(with = "crate::report::float17")]
    pub stability_threshold: f64,
    pub seed: u64,
    pub rate: RateChoice,
    /// Exponent for the supersolution, two-sided and Rellich suites.
    #[serde(with = "crate::report::float17")]
    pub alpha: f64,
    /// Random right-hand sides tried by the Rellich suite.
    pub trials: usize,
    /// Largest connected set enumerated for the Cheeger estimate.
    pub max_exact_size: usize,
    /// Multiplies the right-hand side of every checked inequality. Only
    /// meant for exercising the failure path; 1 leaves reports untouched.
    #[serde(with = "crate::report::float17")]
    pub rhs_scale: f64,
}

impl SuiteConfig {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            exhaustion: None,
            k_radius: 0,
            stability_threshold: 0.01,
            seed: 0,
            rate: RateChoice::ClosedForm,
            alpha: 0.5,
            trials: 20,
            max_exact_size: 8,
            rhs_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Violation,
    HypothesisFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Violation => 1,
            Status::HypothesisFailed => 2,
        }
    }

    /// Violations dominate hypothesis failures.
    pub fn worst(self, other: Status) -> Status {
        match (self, other) {
            (Status::Violation, _) | (_, Status::Violation) => Status::Violation,
            (Status::HypothesisFailed, _) | (_, Status::HypothesisFailed) => Status::HypothesisFailed,
            _ => Status::Pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub status: Status,
    #[serde(with = "crate::report::opt_float17")]
    pub lambda: Option<f64>,
    pub exhaustion: Vec<usize>,
    pub hypotheses: Vec<VerificationReport>,
    pub checks: Vec<VerificationReport>,
    pub certificate: Option<DecayCertificate>,
    /// Message of the failed hypothesis, when there is one.
    pub failure: Option<String>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn empty(suite: Suite, exhaustion: Vec<usize>) -> Self {
        Self {
            suite,
            status: Status::Pass,
            lambda: None,
            exhaustion,
            hypotheses: Vec::new(),
            checks: Vec::new(),
            certificate: None,
            failure: None,
            notes: Vec::new(),
        }
    }

    fn hypothesis_failed(mut self, e: &Error) -> Self {
        self.status = Status::HypothesisFailed;
        if let Error::HypothesisFailed { report, .. } | Error::EikonalFailed(report) = e {
            self.hypotheses.push((**report).clone());
        }
        self.failure = Some(e.to_string());
        self
    }

    fn settle(&mut self) {
        let hyp_ok = self.hypotheses.iter().all(|r| r.pass);
        let cert_checks = self.certificate.iter().flat_map(|c| c.checks.iter());
        let checks_ok = self.checks.iter().chain(cert_checks).all(|r| r.pass);
        let stable = self.certificate.as_ref().is_none_or(|c| c.stability <= c.threshold);
        self.status = if !checks_ok || !stable {
            Status::Violation
        } else if !hyp_ok {
            Status::HypothesisFailed
        } else {
            Status::Pass
        };
    }
}

fn is_hypothesis_error(e: &Error) -> bool {
    matches!(e, Error::HypothesisFailed { .. } | Error::EikonalFailed(_) | Error::NonPositiveGap(_))
}

/// Rebuilds an inequality report with its right-hand side multiplied by `s`.
fn doctor(r: &VerificationReport, s: f64) -> VerificationReport {
    let rel = r.tol / scale(r.lhs, r.rhs);
    let mut out = VerificationReport::inequality(&r.check, r.lhs, r.rhs * s, rel);
    out.notes = r.notes.clone();
    out.notes.push(format!("right-hand side multiplied by {s}"));
    out
}

fn default_root(g: &WeightedGraph) -> usize {
    g.origin().unwrap_or(0)
}

/// Largest hop distance from `root` among reachable vertices.
pub fn eccentricity(g: &WeightedGraph, root: usize) -> usize {
    g.hop_distance(&[root]).into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0)
}

/// Radii R/4, R/2, 3R/4, R for the eccentricity R, without repeats.
pub fn default_radii(g: &WeightedGraph, root: usize) -> Vec<usize> {
    let r = eccentricity(g, root);
    let mut radii: Vec<usize> = (1..=4).map(|j| j * r / 4).collect();
    radii.dedup();
    radii
}

fn balls(g: &WeightedGraph, root: usize, radii: &[usize]) -> Vec<VertexSet> {
    radii.iter().map(|&r| g.ball(root, r)).collect()
}

/// Lowest eigenpair with the eigenvector normalized to positive sum.
pub fn ground_state(g: &WeightedGraph) -> Result<(f64, GraphFunction)> {
    let r = eigensolve_lowest(g, 1)?;
    let u = r.eigenvectors[0].clone();
    let sign = if u.values().iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Ok((r.eigenvalues[0], u.map(|v| sign * v)?))
}

/// Random right-hand sides on `support` (restricted to w > 0), the solutions
/// of 𝓗u = f, and the Rellich inequality with g = v^α and γ from the
/// oscillation of v. Returns the oscillation data and one report per trial.
pub fn rellich_trials(
    g: &WeightedGraph,
    hw: &HardyWeight,
    alpha: f64,
    support: &VertexSet,
    trials: usize,
    seed: u64,
) -> Result<(Oscillation, Vec<VerificationReport>)> {
    support.check(g)?;
    let osc = oscillation_and_gamma(g, &hw.v, alpha)?;
    if !osc.check.pass {
        return Err(Error::HypothesisFailed { check: "power_inequality".into(), report: Box::new(osc.check) });
    }
    let gfun = hw.v.map(|v| v.powf(alpha))?;
    let sites: Vec<usize> = support.indices().iter().copied().filter(|&x| hw.w[x] > 0.0).collect();
    if sites.is_empty() {
        return Err(Error::BadParams("the Hardy weight vanishes on the whole support".into()));
    }
    let mut reports = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let mut f = vec![0.0; g.n()];
        for &x in &sites {
            f[x] = rng.random_range(-1.0..1.0);
        }
        let f = GraphFunction::new(g, f)?;
        let u = solve_h_eq(g, &f, 0.0)?;
        reports.push(rellich_check(g, &hw.w, &gfun, osc.gamma, &u, &f)?.note(format!("trial {t}")));
    }
    Ok((osc, reports))
}

pub fn run_suite(g: &WeightedGraph, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let root = default_root(g);
    let radii = match &cfg.exhaustion {
        Some(r) => r.clone(),
        None => default_radii(g, root),
    };
    let base = SuiteReport::empty(cfg.suite, radii.clone());
    let result = match cfg.suite {
        Suite::Rellich | Suite::Supersolution => green_suite(g, cfg, root, &radii, base.clone()),
        _ => eigen_suite(g, cfg, root, &radii, base.clone()),
    };
    let mut report = match result {
        Ok(r) => r,
        Err(e) if is_hypothesis_error(&e) => return Ok(base.hypothesis_failed(&e)),
        Err(e) => return Err(e),
    };
    if cfg.rhs_scale != 1.0 {
        report.checks = report.checks.iter().map(|r| doctor(r, cfg.rhs_scale)).collect();
        if let Some(c) = report.certificate.as_mut() {
            c.checks = c.checks.iter().map(|r| doctor(r, cfg.rhs_scale)).collect();
            c.pass = c.pass && c.checks.iter().all(|r| r.pass);
        }
    }
    report.settle();
    Ok(report)
}

fn eigen_suite(g: &WeightedGraph, cfg: &SuiteConfig, root: usize, radii: &[usize], mut rep: SuiteReport) -> Result<SuiteReport> {
    let mode = cfg.suite.mode().expect("eigen suites have a mode");
    let (lambda, u) = ground_state(g)?;
    rep.lambda = Some(lambda);
    let k = g.ball(root, cfg.k_radius);
    let mut p = CertificateParams::new(lambda, balls(g, root, radii));
    p.exceptional = Some(k.clone());
    p.root = Some(root);
    p.rate = cfg.rate;
    p.alpha = cfg.alpha;
    p.stability_threshold = cfg.stability_threshold;
    match mode {
        Mode::Metric => {
            let comp = k.complement(g)?;
            if comp.is_empty() {
                return Err(Error::EmptyComplement { level: 0 });
            }
            let a = 0.99 * (lambda0_on(g, &comp, &SpectralOptions::default())? - lambda);
            if !(a > 0.0) {
                return Err(Error::NonPositiveGap(a));
            }
            rep.notes.push(format!("Hardy weight is the constant {a:.6e} = 0.99 (lambda0 off K - lambda)"));
            p.hardy_weight = Some(GraphFunction::constant(g, a)?);
        }
        Mode::Cheeger => {
            let est = alpha_infinity_estimate(g, root, &[cfg.k_radius], cfg.max_exact_size, &[])?;
            rep.notes.push(format!("alpha_inf estimate {:.6e} with K = ball of radius {}", est.estimate, est.radius));
            rep.notes.extend(est.notes);
            p.alpha_inf = Some(est.estimate);
        }
        _ => {}
    }
    let cert = decay_certificate(g, &u, mode, &p)?;
    rep.hypotheses.extend(cert.hypotheses.iter().cloned());
    rep.certificate = Some(cert);
    Ok(rep)
}

fn green_suite(g: &WeightedGraph, cfg: &SuiteConfig, root: usize, radii: &[usize], mut rep: SuiteReport) -> Result<SuiteReport> {
    let gb = match green_interior(g.clone(), root, &BoundaryData::Zero) {
        Ok(gb) => gb,
        Err(e @ (Error::BadParams(_) | Error::InvariantViolated(_) | Error::NearSingular { .. })) => {
            let report = VerificationReport::inequality("positive_supersolution", 1.0, 0.0, 0.0).note(e.to_string());
            return Err(Error::HypothesisFailed { check: "positive_supersolution".into(), report: Box::new(report) });
        }
        Err(e) => return Err(e),
    };
    let sub = &gb.interior;
    let sub_root = sub.origin().unwrap_or(0);
    rep.hypotheses.extend(gb.hardy.positivity.iter().cloned());
    rep.notes.extend(gb.hardy.warnings.iter().cloned());
    rep.notes.push(format!("supersolution: Green function rooted at vertex {root}, zero on the boundary layer"));
    let reach = eccentricity(sub, sub_root);
    let support = sub.ball(sub_root, (reach / 4).max(cfg.k_radius));
    match cfg.suite {
        Suite::Rellich => {
            let (osc, reports) = rellich_trials(sub, &gb.hardy, cfg.alpha, &support, cfg.trials, cfg.seed)?;
            rep.hypotheses.push(osc.check);
            rep.notes.push(format!("gamma = {:.6e} from eps0 = {:.6e}", osc.gamma, osc.eps0));
            rep.checks = reports;
            rep.lambda = Some(0.0);
        }
        Suite::Supersolution => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let f: Vec<f64> = (0..sub.n())
                .map(|x| if support.contains(x) { rng.random_range(0.0..1.0) } else { 0.0 })
                .collect();
            let u = solve_h_eq(sub, &GraphFunction::new(sub, f)?, 0.0)?;
            let sub_radii: Vec<usize> = radii.iter().map(|&r| r.min(reach)).collect();
            let mut p = CertificateParams::new(0.0, balls(sub, sub_root, &sub_radii));
            p.exceptional = Some(sub.ball(sub_root, cfg.k_radius));
            p.root = Some(sub_root);
            p.alpha = cfg.alpha;
            p.supersolution = Some(gb.v.clone());
            p.stability_threshold = cfg.stability_threshold;
            let cert = decay_certificate(sub, &u, Mode::Supersolution, &p)?;
            rep.hypotheses.extend(cert.hypotheses.iter().cloned());
            rep.certificate = Some(cert);
            rep.lambda = Some(0.0);
        }
        _ => unreachable!("only the Green-function suites get here"),
    }
    Ok(rep)
}
