//! Edge lengths, path metrics, intrinsic-metric audits and the Agmon metric.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphFunction, VertexSet, WeightedGraph};
use crate::report::VerificationReport;

/// Nonnegative length per undirected edge, indexed like `g.edges()`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengths {
    graph: u64,
    len: Vec<f64>,
}

impl EdgeLengths {
    pub fn new(g: &WeightedGraph, len: Vec<f64>) -> Result<Self> {
        if len.len() != g.num_edges() {
            return Err(Error::GraphMismatch);
        }
        for (k, &l) in len.iter().enumerate() {
            if l.is_nan() || l < 0.0 {
                return Err(Error::NegativeLength { edge: k, value: l });
            }
        }
        Ok(Self { graph: g.id(), len })
    }

    pub fn from_fn(g: &WeightedGraph, f: impl Fn(&Edge) -> f64) -> Result<Self> {
        Self::new(g, g.edges().iter().map(f).collect())
    }

    pub fn constant(g: &WeightedGraph, c: f64) -> Result<Self> {
        Self::new(g, vec![c; g.num_edges()])
    }

    pub fn values(&self) -> &[f64] {
        &self.len
    }

    pub fn check(&self, g: &WeightedGraph) -> Result<()> {
        if self.graph != g.id() || self.len.len() != g.num_edges() {
            return Err(Error::GraphMismatch);
        }
        Ok(())
    }

    /// Largest length over edges (all stored edges have b > 0).
    pub fn jump_size(&self) -> f64 {
        self.len.iter().copied().fold(0.0, f64::max)
    }
}

/// Distances from a root set with the lengths that produced them.
#[derive(Debug, Clone)]
pub struct MetricField {
    graph: u64,
    pub roots: Vec<usize>,
    /// `f64::INFINITY` for unreachable vertices.
    pub dist: Vec<f64>,
    /// Neighbor on a shortest path towards the roots (smallest index among ties).
    pub predecessor: Vec<Option<usize>>,
    pub lengths: EdgeLengths,
    pub jump_size: f64,
    pub unreachable: usize,
}

impl MetricField {
    pub fn graph_id(&self) -> u64 {
        self.graph
    }

    /// Distances as a graph function; unreachable vertices map to `cap`.
    pub fn to_function(&self, g: &WeightedGraph, cap: f64) -> Result<GraphFunction> {
        GraphFunction::new(g, self.dist.iter().map(|&d| if d.is_finite() { d } else { cap }).collect())
    }
}

#[derive(PartialEq)]
struct Item {
    dist: f64,
    vertex: usize,
}

impl Eq for Item {}

impl Ord for Item {
    // reversed so that BinaryHeap pops the smallest (dist, vertex)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source label-setting shortest paths. Ties are broken towards the
/// smaller vertex index, both in the settle order and for predecessors.
pub fn shortest_paths(g: &WeightedGraph, lengths: &EdgeLengths, sources: &[usize]) -> Result<MetricField> {
    lengths.check(g)?;
    let n = g.n();
    let len = lengths.values();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if s >= n {
            return Err(Error::BadParams(format!("source {s} out of range")));
        }
        dist[s] = 0.0;
        heap.push(Item { dist: 0.0, vertex: s });
    }
    while let Some(Item { dist: d, vertex: x }) = heap.pop() {
        if done[x] || d > dist[x] {
            continue;
        }
        done[x] = true;
        for (y, _, k) in g.neighbor_edges(x) {
            if done[y] {
                continue;
            }
            let nd = d + len[k];
            if nd < dist[y] || (nd == dist[y] && pred[y].is_some_and(|p| x < p)) {
                if nd < dist[y] {
                    heap.push(Item { dist: nd, vertex: y });
                }
                dist[y] = nd;
                pred[y] = Some(x);
            }
        }
    }
    for e in g.edges() {
        let l = len[g.neighbor_edges(e.u).find(|&(y, _, _)| y == e.v).map(|t| t.2).unwrap_or(0)];
        let slack = 1e-12 * (1.0 + dist[e.u].abs().min(dist[e.v].abs()));
        let bad = (dist[e.u].is_finite() && dist[e.v] > dist[e.u] + l + slack)
            || (dist[e.v].is_finite() && dist[e.u] > dist[e.v] + l + slack);
        if bad {
            return Err(Error::InvariantViolated(format!("edge ({},{}) is not relaxed", e.u, e.v)));
        }
    }
    let unreachable = dist.iter().filter(|d| d.is_infinite()).count();
    let mut roots = sources.to_vec();
    roots.sort_unstable();
    roots.dedup();
    Ok(MetricField {
        graph: g.id(),
        roots,
        dist,
        predecessor: pred,
        jump_size: lengths.jump_size(),
        lengths: lengths.clone(),
        unreachable,
    })
}

/// max_x Σ_y b(x,y) d(x,y)² / m(x) against 1.
pub fn intrinsic_audit(g: &WeightedGraph, lengths: &EdgeLengths) -> Result<VerificationReport> {
    lengths.check(g)?;
    let len = lengths.values();
    let mut ratio = 0.0f64;
    let mut worst = 0;
    for x in 0..g.n() {
        let s: f64 = g.neighbor_edges(x).map(|(_, b, k)| b * len[k] * len[k]).sum();
        let r = s / g.m()[x];
        if r > ratio {
            ratio = r;
            worst = x;
        }
    }
    Ok(VerificationReport::inequality("intrinsic_metric", ratio, 1.0, 1e-12)
        .note(format!("jump size {:.6e}", lengths.jump_size()))
        .note(format!("largest ratio at vertex {worst}")))
}

/// Combinatorial distance from the origin divided by √D, D = max Σb/m.
pub fn scaled_combinatorial_metric(g: &WeightedGraph) -> Result<MetricField> {
    let o = g.origin().ok_or(Error::NoOrigin)?;
    let lengths = scaled_combinatorial_lengths(g)?;
    shortest_paths(g, &lengths, &[o])
}

/// Constant edge length 1/√D; an intrinsic metric.
pub fn scaled_combinatorial_lengths(g: &WeightedGraph) -> Result<EdgeLengths> {
    let d = g.degree_bound();
    EdgeLengths::constant(g, if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgmonVariant {
    /// ℓ = min(1, √(min(w(x),w(y))) σ(x,y)); jump size at most 1.
    Cutoff,
    /// ℓ = √(min(D, w(x), w(y))) with D the given or computed degree bound.
    Intro { degree_bound: Option<f64> },
}

/// Edge lengths of the Agmon metric.
pub fn agmon_lengths(
    g: &WeightedGraph,
    sigma: Option<&EdgeLengths>,
    w: &GraphFunction,
    variant: AgmonVariant,
) -> Result<EdgeLengths> {
    w.check(g)?;
    if let Some((x, &v)) = w.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::NegativeWeight { vertex: x, value: v });
    }
    let wv = w.values();
    match variant {
        AgmonVariant::Cutoff => {
            let sigma = sigma.ok_or_else(|| Error::BadParams("cutoff variant needs base lengths".into()))?;
            sigma.check(g)?;
            let s = sigma.values();
            let lengths = EdgeLengths::new(
                g,
                g.edges()
                    .iter()
                    .enumerate()
                    .map(|(k, e)| 1f64.min(wv[e.u].min(wv[e.v]).sqrt() * s[k]))
                    .collect(),
            )?;
            if lengths.jump_size() > 1.0 {
                return Err(Error::InvariantViolated("cutoff Agmon metric has jump size above 1".into()));
            }
            Ok(lengths)
        }
        AgmonVariant::Intro { degree_bound } => {
            let d = degree_bound.unwrap_or_else(|| g.degree_bound());
            EdgeLengths::from_fn(g, |e| d.min(wv[e.u]).min(wv[e.v]).sqrt())
        }
    }
}

/// ρ(root, ·) for the Agmon metric.
pub fn agmon_metric(
    g: &WeightedGraph,
    sigma: Option<&EdgeLengths>,
    w: &GraphFunction,
    root: usize,
    variant: AgmonVariant,
) -> Result<MetricField> {
    let lengths = agmon_lengths(g, sigma, w, variant)?;
    shortest_paths(g, &lengths, &[root])
}

/// d(U, ·) = min_{y∈U} d(·, y).
pub fn dist_to_set(g: &WeightedGraph, lengths: &EdgeLengths, u: &VertexSet) -> Result<MetricField> {
    u.check(g)?;
    if u.is_empty() {
        return Err(Error::EmptySet);
    }
    shortest_paths(g, lengths, u.indices())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_family, gen_lattice_box, Family, Potential};

    #[test]
    fn regular_graph_scaled_distance_is_intrinsic() {
        let g = gen_family(&Family::Cycle(7)).unwrap();
        let r = intrinsic_audit(&g, &scaled_combinatorial_lengths(&g).unwrap()).unwrap();
        assert!(r.pass);
        assert!((r.lhs - 1.0).abs() < 1e-15);
        let zero = intrinsic_audit(&g, &EdgeLengths::constant(&g, 0.0).unwrap()).unwrap();
        assert_eq!(zero.lhs, 0.0);
        assert!(zero.pass);
    }

    #[test]
    fn unscaled_distance_on_z_fails() {
        let g = gen_lattice_box(1, 5, Potential::Zero).unwrap();
        let r = intrinsic_audit(&g, &EdgeLengths::constant(&g, 1.0).unwrap()).unwrap();
        assert_eq!(r.lhs, 2.0);
        assert!(!r.pass);
    }

    #[test]
    fn scaled_metric_on_z() {
        let g = gen_lattice_box(1, 6, Potential::Zero).unwrap();
        let m = scaled_combinatorial_metric(&g).unwrap();
        let c = g.coords().unwrap();
        for x in 0..g.n() {
            assert!((m.dist[x] - c[x][0].abs() as f64 / 2f64.sqrt()).abs() < 1e-14);
        }
        assert_eq!(m.dist[g.origin().unwrap()], 0.0);
    }

    #[test]
    fn star_leaves() {
        let g = gen_family(&Family::Star(5)).unwrap();
        let m = scaled_combinatorial_metric(&g).unwrap();
        for x in 1..6 {
            assert!((m.dist[x] - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn agmon_uniform_weight() {
        let g = gen_family(&Family::Path(6)).unwrap();
        let sigma = EdgeLengths::constant(&g, 1.0).unwrap();
        let w = GraphFunction::constant(&g, 0.36).unwrap();
        let m = agmon_metric(&g, Some(&sigma), &w, 0, AgmonVariant::Cutoff).unwrap();
        for k in 0..6 {
            assert!((m.dist[k] - 0.6 * k as f64).abs() < 1e-14);
        }
        let zero = GraphFunction::zeros(&g);
        let m = agmon_metric(&g, Some(&sigma), &zero, 0, AgmonVariant::Cutoff).unwrap();
        assert!(m.dist.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn agmon_path_three() {
        let g = gen_family(&Family::Path(3)).unwrap();
        let sigma = EdgeLengths::constant(&g, 1.0).unwrap();
        let w = GraphFunction::new(&g, vec![4.0, 1.0, 4.0]).unwrap();
        let m = agmon_metric(&g, Some(&sigma), &w, 0, AgmonVariant::Cutoff).unwrap();
        assert_eq!(m.dist[2], 2.0);
        assert_eq!(m.jump_size, 1.0);
        let neg = GraphFunction::new(&g, vec![-1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            agmon_metric(&g, Some(&sigma), &neg, 0, AgmonVariant::Cutoff),
            Err(Error::NegativeWeight { vertex: 0, .. })
        ));
    }

    #[test]
    fn distance_to_set() {
        let g = gen_family(&Family::Path(5)).unwrap();
        let unit = EdgeLengths::constant(&g, 1.0).unwrap();
        let m = dist_to_set(&g, &unit, &VertexSet::new(&g, vec![0]).unwrap()).unwrap();
        assert_eq!(m.dist, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let all = dist_to_set(&g, &unit, &VertexSet::all(&g)).unwrap();
        assert!(all.dist.iter().all(|&d| d == 0.0));
        assert!(matches!(dist_to_set(&g, &unit, &VertexSet::empty(&g)), Err(Error::EmptySet)));
    }

    #[test]
    fn ties_prefer_smaller_predecessor() {
        let g = gen_family(&Family::Cycle(4)).unwrap();
        let unit = EdgeLengths::constant(&g, 1.0).unwrap();
        let m = shortest_paths(&g, &unit, &[0]).unwrap();
        assert_eq!(m.dist[2], 2.0);
        assert_eq!(m.predecessor[2], Some(1));
        assert_eq!(m.predecessor[0], None);
    }

    #[test]
    fn negative_length_rejected() {
        let g = gen_family(&Family::Path(2)).unwrap();
        assert!(matches!(EdgeLengths::new(&g, vec![-1.0]), Err(Error::NegativeLength { edge: 0, .. })));
    }
}
