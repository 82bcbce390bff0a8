//! Cut-off sequences, approximability and Følner diagnostics, and the
//! isoperimetric quantities behind sparseness.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphFunction, VertexSet, WeightedGraph};
use crate::metrics::{dist_to_set, MetricField};
use crate::operator::weighted_grad_sq;
use crate::report::{float17, vec_float17, VerificationReport};
use crate::spectral::{lambda_min, SpectralOptions, SymMatrix};

/// Largest size accepted by the brute-force Cheeger search.
pub const MAX_EXACT_SIZE: usize = 14;

/// φ_n = (1 − d(B_n, ·)/ε)₊ with B_n = {d(root, ·) ≤ n}, n = 1..=levels.
pub fn cutoff_sequence(g: &WeightedGraph, base: &MetricField, eps: f64, levels: usize) -> Result<Vec<GraphFunction>> {
    if base.graph_id() != g.id() {
        return Err(Error::GraphMismatch);
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::BadParams(format!("epsilon {eps} must be positive")));
    }
    let mut out: Vec<GraphFunction> = Vec::with_capacity(levels);
    for n in 1..=levels {
        let mask: Vec<bool> = base.dist.iter().map(|&d| d <= n as f64).collect();
        let ball = VertexSet::from_mask(g, &mask);
        let d = dist_to_set(g, &base.lengths, &ball)?;
        let phi = GraphFunction::new(g, d.dist.iter().map(|&t| (1.0 - t / eps).max(0.0)).collect())?;
        if let Some(prev) = out.last() {
            if (0..g.n()).any(|x| phi[x] < prev[x]) {
                return Err(Error::InvariantViolated(format!("cut-off {n} is not above cut-off {}", n - 1)));
            }
        }
        out.push(phi);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    DecreasingTowardZero,
    NotDecreasing,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximabilityReport {
    #[serde(with = "vec_float17")]
    pub values: Vec<f64>,
    pub trend: Trend,
    pub weak: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct TrendOptions {
    /// The last value must be at most this fraction of the largest one.
    pub tail_fraction: f64,
    /// Allowed increase between consecutive tail values, relative to the maximum.
    pub noise: f64,
}

impl Default for TrendOptions {
    fn default() -> Self {
        Self { tail_fraction: 0.1, noise: 1e-12 }
    }
}

/// E_n = Σ u²|∇φ_n|² m, or Σ |∇_{|u|}φ_n|² m in the weak variant.
pub fn approximability_report(
    g: &WeightedGraph,
    u: &GraphFunction,
    cutoffs: &[GraphFunction],
    weak: bool,
    opts: TrendOptions,
) -> Result<ApproximabilityReport> {
    u.check(g)?;
    for (j, phi) in cutoffs.iter().enumerate() {
        phi.check(g)?;
        if phi.values().iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::BadParams(format!("cut-off {j} leaves [0,1]")));
        }
        if j > 0 && (0..g.n()).any(|x| phi[x] < cutoffs[j - 1][x]) {
            return Err(Error::BadParams(format!("cut-off {j} is not monotone")));
        }
    }
    let abs_u: Vec<f64> = u.values().iter().map(|t| t.abs()).collect();
    let m = g.m();
    let values: Vec<f64> = cutoffs
        .iter()
        .map(|phi| {
            if weak {
                let grad = weighted_grad_sq(g, phi.values(), Some(&abs_u));
                grad.iter().zip(m).map(|(a, b)| a * b).sum()
            } else {
                let grad = weighted_grad_sq(g, phi.values(), None);
                (0..g.n()).map(|x| u[x] * u[x] * grad[x] * m[x]).sum()
            }
        })
        .collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    let trend = if max == 0.0 {
        Trend::DecreasingTowardZero
    } else {
        let tail = &values[values.len() / 2..];
        let monotone = tail.windows(2).all(|w| w[1] <= w[0] + opts.noise * max);
        let small = *values.last().unwrap() <= opts.tail_fraction * max;
        if monotone && small {
            Trend::DecreasingTowardZero
        } else {
            Trend::NotDecreasing
        }
    };
    Ok(ApproximabilityReport {
        values,
        trend,
        weak,
        notes: vec!["a truncation sees finitely many annuli; the trend is a diagnostic".into()],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FolnerReport {
    pub set_sizes: Vec<usize>,
    /// b(∂F_n)
    #[serde(with = "vec_float17")]
    pub boundary: Vec<f64>,
    /// m(F_n)
    #[serde(with = "vec_float17")]
    pub measure: Vec<f64>,
    #[serde(with = "vec_float17")]
    pub ratios: Vec<f64>,
    /// max of |u| on the inner vertex boundary of F_n, when u is given.
    pub vertex_boundary_max: Option<Vec<f64>>,
    /// Smallest C with max_{∂_V F_n} |u| ≤ C m(F_n)^{−1/2} for all n.
    pub fitted_constant: Option<f64>,
}

/// Σ_{x∈W, y∉W} b(x,y)
pub fn edge_boundary(g: &WeightedGraph, mask: &[bool]) -> f64 {
    (0..g.n())
        .filter(|&x| mask[x])
        .map(|x| g.neighbors(x).filter(|&(y, _)| !mask[y]).map(|(_, b)| b).sum::<f64>())
        .sum()
}

/// Ratios b(∂F_n)/m(F_n) for nested sets, and the vertex-boundary bound for u.
pub fn folner_report(g: &WeightedGraph, sets: &[VertexSet], u: Option<&GraphFunction>) -> Result<FolnerReport> {
    for (j, s) in sets.iter().enumerate() {
        s.check(g)?;
        if s.is_empty() {
            return Err(Error::EmptySet);
        }
        if j > 0 && !sets[j - 1].is_subset(s) {
            return Err(Error::NotNested { level: j });
        }
    }
    if let Some(u) = u {
        u.check(g)?;
    }
    let mut rep = FolnerReport {
        set_sizes: Vec::new(),
        boundary: Vec::new(),
        measure: Vec::new(),
        ratios: Vec::new(),
        vertex_boundary_max: u.map(|_| Vec::new()),
        fitted_constant: None,
    };
    let mut fitted = 0.0f64;
    for s in sets {
        let mask = s.mask(g.n());
        let b = edge_boundary(g, &mask);
        let mf = s.measure(g);
        rep.set_sizes.push(s.len());
        rep.boundary.push(b);
        rep.measure.push(mf);
        rep.ratios.push(b / mf);
        if let (Some(u), Some(vb)) = (u, rep.vertex_boundary_max.as_mut()) {
            let mx = s
                .indices()
                .iter()
                .filter(|&&x| g.neighbors(x).any(|(y, _)| !mask[y]))
                .map(|&x| u[x].abs())
                .fold(0.0, f64::max);
            vb.push(mx);
            fitted = fitted.max(mx * mf.sqrt());
        }
    }
    if u.is_some() {
        rep.fitted_constant = Some(fitted);
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMethod {
    ExactBruteforce,
    FamilyBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileEntry {
    pub method: ProfileMethod,
    pub vertices: Vec<usize>,
    /// |∂W| = Σ_{W×(X∖W)} b + Σ_W q₊ m
    #[serde(with = "float17")]
    pub boundary: f64,
    /// vol(W) = Σ_W deg
    #[serde(with = "float17")]
    pub volume: f64,
    #[serde(with = "float17")]
    pub measure: f64,
    #[serde(with = "float17")]
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoperimetricProfile {
    pub entries: Vec<ProfileEntry>,
    /// Connected sets of this size or less were searched exhaustively.
    pub max_exact_size: usize,
    /// Number of connected sets examined by the search.
    pub searched: u64,
    /// Vertices excluded from W (the set K of the constant at infinity).
    pub excluded: Vec<usize>,
    pub notes: Vec<String>,
}

impl IsoperimetricProfile {
    pub fn exact(&self) -> Option<&ProfileEntry> {
        self.entries.iter().find(|e| e.method == ProfileMethod::ExactBruteforce)
    }

    /// Smallest ratio over all entries, exact or bound.
    pub fn estimate(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.ratio).reduce(f64::min)
    }

    /// level,set_size,boundary,volume,ratio
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,set_size,boundary,volume,ratio\n");
        for (j, e) in self.entries.iter().enumerate() {
            s.push_str(&format!("{j},{},{:.16e},{:.16e},{:.16e}\n", e.vertices.len(), e.boundary, e.volume, e.ratio));
        }
        s
    }
}

fn entry(g: &WeightedGraph, method: ProfileMethod, vertices: Vec<usize>) -> ProfileEntry {
    let mut mask = vec![false; g.n()];
    vertices.iter().for_each(|&x| mask[x] = true);
    let q_part: f64 = vertices.iter().map(|&x| g.q()[x].max(0.0) * g.m()[x]).sum();
    let boundary = edge_boundary(g, &mask) + q_part;
    let volume: f64 = vertices.iter().map(|&x| g.deg(x)).sum();
    let measure: f64 = vertices.iter().map(|&x| g.m()[x]).sum();
    ProfileEntry { method, boundary, volume, measure, ratio: boundary / volume, vertices }
}

struct Search<'a> {
    g: &'a WeightedGraph,
    max: usize,
    allowed: &'a [bool],
    in_set: Vec<bool>,
    /// number of members of the current set adjacent to (or equal to) each vertex
    touch: Vec<u32>,
    set: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    count: u64,
}

impl Search<'_> {
    fn consider(&mut self, boundary: f64, volume: f64) {
        self.count += 1;
        if self.set.len() == self.g.n() || volume <= 0.0 {
            return;
        }
        let ratio = boundary / volume;
        let better = match &self.best {
            None => true,
            Some((r, s)) => ratio < *r || (ratio == *r && sorted(&self.set) < *s),
        };
        if better {
            self.best = Some((ratio, sorted(&self.set)));
        }
    }

    fn add(&mut self, w: usize) -> (f64, f64) {
        let g = self.g;
        let inside: f64 = g.neighbors(w).filter(|&(y, _)| self.in_set[y]).map(|(_, b)| b).sum();
        self.in_set[w] = true;
        self.set.push(w);
        self.touch[w] += 1;
        for (y, _) in g.neighbors(w) {
            self.touch[y] += 1;
        }
        let db = g.weighted_degree(w) - 2.0 * inside + g.q()[w].max(0.0) * g.m()[w];
        (db, g.deg(w))
    }

    fn remove(&mut self, w: usize) {
        self.in_set[w] = false;
        self.set.pop();
        self.touch[w] -= 1;
        for (y, _) in self.g.neighbors(w) {
            self.touch[y] -= 1;
        }
    }

    /// Connected-set enumeration in which every set is produced once, from its
    /// smallest vertex `root`; `ext` holds candidates larger than `root` that
    /// are adjacent to the set.
    fn extend(&mut self, ext: Vec<usize>, root: usize, boundary: f64, volume: f64) {
        self.consider(boundary, volume);
        if self.set.len() == self.max {
            return;
        }
        let mut ext = ext;
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            // exclusive neighbors of w: not in the set and not adjacent to it
            for (y, _) in self.g.neighbors(w) {
                if y > root && self.allowed[y] && !self.in_set[y] && self.touch[y] == 0 && !next.contains(&y) {
                    next.push(y);
                }
            }
            let (db, dv) = self.add(w);
            self.extend(next, root, boundary + db, volume + dv);
            self.remove(w);
        }
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

/// Exact minimum of |∂W|/vol(W) over connected W ⊆ X∖K with |W| ≤ max_size
/// and W ≠ X, plus the ratios of the supplied family as upper bounds.
pub fn cheeger_report(
    g: &WeightedGraph,
    max_exact_size: usize,
    family: &[VertexSet],
    k: Option<&VertexSet>,
) -> Result<IsoperimetricProfile> {
    if max_exact_size > MAX_EXACT_SIZE {
        return Err(Error::SizeGuard { requested: max_exact_size });
    }
    let mut allowed = vec![true; g.n()];
    if let Some(k) = k {
        k.check(g)?;
        k.indices().iter().for_each(|&x| allowed[x] = false);
    }
    let results: Vec<(Option<(f64, Vec<usize>)>, u64)> = (0..g.n())
        .into_par_iter()
        .filter(|&v| allowed[v] && max_exact_size > 0)
        .map(|v| {
            let mut s = Search {
                g,
                max: max_exact_size,
                allowed: &allowed,
                in_set: vec![false; g.n()],
                touch: vec![0; g.n()],
                set: Vec::with_capacity(max_exact_size),
                best: None,
                count: 0,
            };
            let (b, vol) = s.add(v);
            let ext: Vec<usize> = g.neighbors(v).map(|(y, _)| y).filter(|&y| y > v && allowed[y]).collect();
            s.extend(ext, v, b, vol);
            (s.best, s.count)
        })
        .collect();
    let searched = results.iter().map(|r| r.1).sum();
    let best = results
        .into_iter()
        .filter_map(|r| r.0)
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut entries = Vec::new();
    let mut notes = Vec::new();
    if let Some((_, set)) = best {
        entries.push(entry(g, ProfileMethod::ExactBruteforce, set));
    }
    for f in family {
        f.check(g)?;
        if f.indices().iter().any(|&x| !allowed[x]) {
            notes.push(format!("family set of size {} meets K and was skipped", f.len()));
            continue;
        }
        if f.is_empty() {
            continue;
        }
        entries.push(entry(g, ProfileMethod::FamilyBound, f.indices().to_vec()));
    }
    if let Some(ex) = entries.first().filter(|e| e.method == ProfileMethod::ExactBruteforce) {
        let exact = ex.ratio;
        for e in entries.iter().filter(|e| e.method == ProfileMethod::FamilyBound) {
            let in_class = e.vertices.len() <= max_exact_size && e.vertices.len() < g.n() && is_connected_set(g, &e.vertices);
            if in_class && e.ratio < exact * (1.0 - 1e-12) {
                return Err(Error::InvariantViolated(format!(
                    "family set with ratio {} beats the exhaustive minimum {exact}",
                    e.ratio
                )));
            }
        }
    }
    notes.push("exact: connected sets up to the size limit; family entries are upper bounds".into());
    Ok(IsoperimetricProfile {
        entries,
        max_exact_size,
        searched,
        excluded: k.map(|k| k.indices().to_vec()).unwrap_or_default(),
        notes,
    })
}

fn is_connected_set(g: &WeightedGraph, vs: &[usize]) -> bool {
    if vs.is_empty() {
        return true;
    }
    let mut mask = vec![false; g.n()];
    vs.iter().for_each(|&x| mask[x] = true);
    let mut seen = vec![false; g.n()];
    let mut stack = vec![vs[0]];
    seen[vs[0]] = true;
    let mut count = 0;
    while let Some(x) = stack.pop() {
        count += 1;
        for (y, _) in g.neighbors(x) {
            if mask[y] && !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    count == vs.len()
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaInfinity {
    #[serde(with = "float17")]
    pub estimate: f64,
    /// Radius of the ball K attaining the estimate.
    pub radius: usize,
    #[serde(with = "vec_float17")]
    pub per_radius: Vec<f64>,
    pub notes: Vec<String>,
}

/// α∞ ≈ max over balls K = B(root, r) of the smallest ratio found for
/// W ⊆ X∖K, using connected sets up to `max_exact_size`, the complement X∖K
/// and the supplied family.
pub fn alpha_infinity_estimate(
    g: &WeightedGraph,
    root: usize,
    radii: &[usize],
    max_exact_size: usize,
    family: &[VertexSet],
) -> Result<AlphaInfinity> {
    if radii.is_empty() {
        return Err(Error::BadParams("no radii for the exceptional balls".into()));
    }
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        let k = g.ball(root, r);
        let comp = k.complement(g)?;
        if comp.is_empty() {
            return Err(Error::EmptyComplement { level: r });
        }
        let mut fam: Vec<VertexSet> = family.iter().filter(|f| f.indices().iter().all(|&x| !k.contains(x))).cloned().collect();
        fam.push(comp);
        let p = cheeger_report(g, max_exact_size, &fam, Some(&k))?;
        per_radius.push(p.estimate().unwrap_or(f64::INFINITY));
    }
    let (j, &estimate) = per_radius
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(&a.0)))
        .unwrap();
    Ok(AlphaInfinity {
        estimate,
        radius: radii[j],
        per_radius,
        notes: vec![
            "each inner value is an upper bound on its infimum, while only finitely many K are tried: the estimate has no guaranteed direction".into(),
        ],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SparseFormReport {
    #[serde(with = "float17")]
    pub a_tilde: f64,
    #[serde(with = "float17")]
    pub k_tilde: f64,
    /// (1 − ã)deg_m − k̃ ≤ h
    pub lower: VerificationReport,
    /// h ≤ (1 + ã)deg_m + k̃
    pub upper: VerificationReport,
    pub pass: bool,
}

/// Both form bounds (1 − ã)deg_m − k̃ ≤ h ≤ (1 + ã)deg_m + k̃, each as
/// nonnegativity of the smallest eigenvalue of the difference.
pub fn sparse_form_check(g: &WeightedGraph, a_tilde: f64, k_tilde: f64) -> Result<SparseFormReport> {
    if !(a_tilde > 0.0 && a_tilde < 1.0) {
        return Err(Error::BadParams(format!("a~ = {a_tilde} must lie in (0,1)")));
    }
    if !(k_tilde >= 0.0) {
        return Err(Error::BadParams(format!("k~ = {k_tilde} must be nonnegative")));
    }
    let opts = SpectralOptions::default();
    let n = g.n();
    let degm: Vec<f64> = (0..n).map(|x| g.deg_m(x)).collect();
    let a = SymMatrix::from_graph(g);
    let lower_diag: Vec<f64> = degm.iter().map(|d| k_tilde - (1.0 - a_tilde) * d).collect();
    let lo = lambda_min(&a.clone().plus_diag(&lower_diag), &opts)?;
    let upper_diag: Vec<f64> = degm.iter().map(|d| (1.0 + a_tilde) * d + k_tilde).collect();
    let hi = lambda_min(&a.scaled(-1.0).plus_diag(&upper_diag), &opts)?;
    let s = degm.iter().fold(1.0f64, |m, d| m.max(*d));
    let lower = VerificationReport::inequality("sparse_lower", 0.0, lo / s, 1e-9)
        .note(format!("smallest eigenvalue of h - (1-a~)deg_m + k~: {lo:.6e}"));
    let upper = VerificationReport::inequality("sparse_upper", 0.0, hi / s, 1e-9)
        .note(format!("smallest eigenvalue of (1+a~)deg_m + k~ - h: {hi:.6e}"));
    let pass = lower.pass && upper.pass;
    Ok(SparseFormReport { a_tilde, k_tilde, lower, upper, pass })
}

/// The Cheeger candidate (ã, k̃) = (√(1 − α²), 0).
pub fn cheeger_sparse_parameters(alpha: f64) -> (f64, f64) {
    ((1.0 - alpha * alpha).max(0.0).sqrt(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_family, gen_lattice_box, Family, Potential};
    use crate::graph::build_graph;
    use crate::metrics::{scaled_combinatorial_metric, shortest_paths, EdgeLengths};

    fn complete(n: usize) -> WeightedGraph {
        gen_family(&Family::Complete(n)).unwrap()
    }

    #[test]
    fn k4_cheeger() {
        let g = complete(4);
        let p = cheeger_report(&g, 4, &[], None).unwrap();
        let e = p.exact().unwrap();
        assert_eq!(e.ratio, 1.0 / 3.0);
        assert_eq!(e.vertices.len(), 3);
        // 4 + 6 + 4 proper connected subsets
        assert_eq!(p.searched, 15);
    }

    #[test]
    fn single_vertex_ratio_is_one() {
        let g = gen_family(&Family::Path(4)).unwrap();
        let set = VertexSet::new(&g, vec![1]).unwrap();
        let p = cheeger_report(&g, 0, &[set], None).unwrap();
        assert_eq!(p.entries[0].ratio, 1.0);
        assert!(p.exact().is_none());
    }

    #[test]
    fn size_guard() {
        let g = complete(3);
        assert!(matches!(cheeger_report(&g, 15, &[], None), Err(Error::SizeGuard { requested: 15 })));
    }

    #[test]
    fn enumeration_counts_connected_sets() {
        // connected subsets of a path on 6 vertices: 21 intervals; the whole path is skipped by ratio
        let g = gen_family(&Family::Path(6)).unwrap();
        let p = cheeger_report(&g, 6, &[], None).unwrap();
        assert_eq!(p.searched, 21);
        // cycle C5: 5 sets of each size 1..4 plus the whole cycle
        let c = gen_family(&Family::Cycle(5)).unwrap();
        assert_eq!(cheeger_report(&c, 5, &[], None).unwrap().searched, 21);
    }

    #[test]
    fn z2_folner_ratios() {
        let g = gen_lattice_box(2, 12, Potential::Zero).unwrap();
        let sets: Vec<_> = (1..=10)
            .map(|n| {
                let c = g.coords().unwrap();
                VertexSet::new(&g, (0..g.n()).filter(|&x| c[x].iter().all(|t| t.abs() <= n)).collect()).unwrap()
            })
            .collect();
        let r = folner_report(&g, &sets, None).unwrap();
        for (j, n) in (1..=10).enumerate() {
            assert_eq!(r.boundary[j], (4 * (2 * n + 1)) as f64);
            assert_eq!(r.ratios[j], 4.0 / (2 * n + 1) as f64);
        }
        let bad = vec![sets[1].clone(), sets[0].clone()];
        assert!(matches!(folner_report(&g, &bad, None), Err(Error::NotNested { level: 1 })));
    }

    #[test]
    fn cutoffs_and_approximability() {
        let g = gen_lattice_box(1, 30, Potential::Zero).unwrap();
        let base = shortest_paths(&g, &EdgeLengths::constant(&g, 1.0).unwrap(), &[g.origin().unwrap()]).unwrap();
        let cut = cutoff_sequence(&g, &base, 1.0, 20).unwrap();
        let c = g.coords().unwrap().to_vec();
        for (j, phi) in cut.iter().enumerate() {
            let n = (j + 1) as i64;
            for x in 0..g.n() {
                let r = c[x][0].abs();
                if r <= n {
                    assert_eq!(phi[x], 1.0);
                } else if r > n + 1 {
                    assert_eq!(phi[x], 0.0);
                }
            }
        }
        let decay = GraphFunction::from_fn(&g, |x| 0.5f64.powi(c[x][0].abs() as i32)).unwrap();
        let rep = approximability_report(&g, &decay, &cut, false, TrendOptions::default()).unwrap();
        assert_eq!(rep.trend, Trend::DecreasingTowardZero);
        for w in rep.values.windows(2) {
            assert!((w[1] / w[0] - 0.25).abs() < 1e-12);
        }
        let one = GraphFunction::constant(&g, 1.0).unwrap();
        let rep = approximability_report(&g, &one, &cut, false, TrendOptions::default()).unwrap();
        assert_eq!(rep.trend, Trend::NotDecreasing);
        let zero = GraphFunction::zeros(&g);
        let rep = approximability_report(&g, &zero, &cut, true, TrendOptions::default()).unwrap();
        assert!(rep.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wide_cutoff_interpolates() {
        let g = gen_family(&Family::Path(8)).unwrap();
        let base = shortest_paths(&g, &EdgeLengths::constant(&g, 1.0).unwrap(), &[0]).unwrap();
        let cut = cutoff_sequence(&g, &base, 10.0, 1).unwrap();
        for x in 1..8 {
            assert!((cut[0][x] - (1.0 - (x as f64 - 1.0) / 10.0)).abs() < 1e-15);
        }
        let sm = scaled_combinatorial_metric(&g).unwrap();
        assert!(cutoff_sequence(&g, &sm, 0.0, 1).is_err());
    }

    #[test]
    fn sparse_checks() {
        let g = gen_lattice_box(1, 10, Potential::Zero).unwrap();
        assert!(sparse_form_check(&g, 0.99, 4.0).unwrap().pass);
        let lonely = build_graph(&[], vec![1.0; 3], vec![0.5, 1.0, 2.0], None).unwrap();
        assert!(sparse_form_check(&lonely, 0.3, 0.0).unwrap().pass);
        assert!(sparse_form_check(&g, 1.0, 0.0).is_err());
    }

    #[test]
    fn k4_cheeger_candidate_lower_bound() {
        // constants have zero energy on a finite graph without potential
        let g = complete(4);
        let (a, k) = cheeger_sparse_parameters(1.0 / 3.0);
        let r = sparse_form_check(&g, a, k).unwrap();
        assert!(r.upper.pass);
        assert!(!r.lower.pass);
    }

    #[test]
    fn alpha_infinity_on_line_is_small() {
        let g = gen_lattice_box(1, 20, Potential::Zero).unwrap();
        let a = alpha_infinity_estimate(&g, g.origin().unwrap(), &[0, 2, 4], 6, &[]).unwrap();
        assert!(a.estimate < 0.2, "{a:?}");
    }
}
