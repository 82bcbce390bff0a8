//! Weighted graphs `(X, b, m, q)`, functions and vertex sets on them, and
//! Dirichlet truncation.

use std::collections::{HashMap, VecDeque};
use std::ops::Index;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// Undirected edge with `u < v` and `b > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub b: f64,
}

/// Finite, locally finite weighted graph with measure and potential.
///
/// Adjacency is stored in compressed rows sorted by neighbor, each undirected
/// edge appearing once per endpoint. The graph is immutable; the `with_*`
/// helpers return new graphs with a fresh identity.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    id: u64,
    offsets: Vec<usize>,
    nbr: Vec<usize>,
    nbr_b: Vec<f64>,
    nbr_edge: Vec<usize>,
    edges: Vec<Edge>,
    m: Vec<f64>,
    q: Vec<f64>,
    labels: Vec<String>,
    coords: Option<Vec<Vec<i64>>>,
    origin: Option<usize>,
    parent: Option<Vec<usize>>,
    wdeg: Vec<f64>,
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.edges == other.edges
            && self.m == other.m
            && self.q == other.q
            && self.labels == other.labels
            && self.coords == other.coords
            && self.origin == other.origin
    }
}

/// Validates the axioms and builds the adjacency.
///
/// Edges may be given in either orientation. Zero-weight edges are dropped.
/// Listing the same orientation twice is a `DuplicateEdge`; listing both
/// orientations with different weights is `AsymmetricInput` (equal weights
/// are merged).
pub fn build_graph(
    edges: &[(usize, usize, f64)],
    m: Vec<f64>,
    q: Vec<f64>,
    labels: Option<Vec<String>>,
) -> Result<WeightedGraph> {
    let n = m.len();
    if q.len() != n {
        return Err(Error::BadParams(format!("q has length {}, m has {}", q.len(), n)));
    }
    for (x, &mx) in m.iter().enumerate() {
        if mx.is_nan() || mx <= 0.0 {
            return Err(Error::NonPositiveMeasure { vertex: x, value: mx });
        }
        if !mx.is_finite() {
            return Err(Error::NonFinite { what: format!("m({x})") });
        }
    }
    if let Some((x, _)) = q.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { what: format!("q({x})") });
    }
    let labels = match labels {
        Some(l) if l.len() != n => {
            return Err(Error::BadParams(format!("{} labels for {} vertices", l.len(), n)))
        }
        Some(l) => l,
        None => (0..n).map(|i| i.to_string()).collect(),
    };

    let mut seen: HashMap<(usize, usize), (f64, bool)> = HashMap::with_capacity(edges.len());
    let mut list = Vec::with_capacity(edges.len());
    for &(u, v, b) in edges {
        if u >= n || v >= n {
            return Err(Error::InvalidEndpoint { u, v, n });
        }
        if !b.is_finite() {
            return Err(Error::NonFinite { what: format!("b({u},{v})") });
        }
        if b < 0.0 {
            return Err(Error::NegativeEdgeWeight { u, v, b });
        }
        if u == v {
            if b > 0.0 {
                return Err(Error::SelfLoop { vertex: u });
            }
            continue;
        }
        let key = (u.min(v), u.max(v));
        let forward = u < v;
        match seen.get(&key) {
            Some(&(b0, fwd0)) => {
                if fwd0 == forward {
                    return Err(Error::DuplicateEdge { u: key.0, v: key.1 });
                }
                if b0 != b {
                    return Err(Error::AsymmetricInput { u: key.0, v: key.1 });
                }
            }
            None => {
                seen.insert(key, (b, forward));
                if b > 0.0 {
                    list.push(Edge { u: key.0, v: key.1, b });
                }
            }
        }
    }
    list.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
    Ok(assemble(list, m, q, labels, None, None, None))
}

fn assemble(
    edges: Vec<Edge>,
    m: Vec<f64>,
    q: Vec<f64>,
    labels: Vec<String>,
    coords: Option<Vec<Vec<i64>>>,
    origin: Option<usize>,
    parent: Option<Vec<usize>>,
) -> WeightedGraph {
    let n = m.len();
    let mut count = vec![0usize; n];
    for e in &edges {
        count[e.u] += 1;
        count[e.v] += 1;
    }
    let mut offsets = vec![0usize; n + 1];
    for x in 0..n {
        offsets[x + 1] = offsets[x] + count[x];
    }
    let total = offsets[n];
    let mut nbr = vec![0usize; total];
    let mut nbr_b = vec![0f64; total];
    let mut nbr_edge = vec![0usize; total];
    let mut fill = offsets.clone();
    // edges sorted by (u,v): pushing both endpoints in this order leaves every
    // row sorted by neighbor
    let mut rows: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        rows[e.u].push((e.v, e.b, k));
        rows[e.v].push((e.u, e.b, k));
    }
    for (x, row) in rows.iter_mut().enumerate() {
        row.sort_by_key(|r| r.0);
        for &(y, b, k) in row.iter() {
            let s = fill[x];
            nbr[s] = y;
            nbr_b[s] = b;
            nbr_edge[s] = k;
            fill[x] += 1;
        }
    }
    let wdeg = (0..n)
        .map(|x| nbr_b[offsets[x]..offsets[x + 1]].iter().sum())
        .collect();
    WeightedGraph {
        id: fresh_id(),
        offsets,
        nbr,
        nbr_b,
        nbr_edge,
        edges,
        m,
        q,
        labels,
        coords,
        origin,
        parent,
        wdeg,
    }
}

impl WeightedGraph {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `x` with edge weights, ascending by neighbor.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[x]..self.offsets[x + 1];
        self.nbr[r.clone()].iter().copied().zip(self.nbr_b[r].iter().copied())
    }

    /// Neighbors of `x` with weights and undirected edge ids.
    pub fn neighbor_edges(&self, x: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        (self.offsets[x]..self.offsets[x + 1]).map(move |s| (self.nbr[s], self.nbr_b[s], self.nbr_edge[s]))
    }

    pub fn valence(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    /// b(x,y), zero for non-neighbors.
    pub fn b(&self, x: usize, y: usize) -> f64 {
        let r = self.offsets[x]..self.offsets[x + 1];
        match self.nbr[r.clone()].binary_search(&y) {
            Ok(i) => self.nbr_b[r.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[Vec<i64>]> {
        self.coords.as_deref()
    }

    pub fn origin(&self) -> Option<usize> {
        self.origin
    }

    /// Index in the parent graph for each vertex of a truncation.
    pub fn parent(&self) -> Option<&[usize]> {
        self.parent.as_deref()
    }

    /// Σ_y b(x,y)
    pub fn weighted_degree(&self, x: usize) -> f64 {
        self.wdeg[x]
    }

    /// Σ_y b(x,y) / m(x)
    pub fn normalized_degree(&self, x: usize) -> f64 {
        self.wdeg[x] / self.m[x]
    }

    /// deg(x) = Σ_y b(x,y) + q₊(x)m(x)
    pub fn deg(&self, x: usize) -> f64 {
        self.wdeg[x] + self.q[x].max(0.0) * self.m[x]
    }

    /// deg_m(x) = deg(x)/m(x)
    pub fn deg_m(&self, x: usize) -> f64 {
        self.deg(x) / self.m[x]
    }

    /// D = max_x Σ_y b(x,y)/m(x)
    pub fn degree_bound(&self) -> f64 {
        (0..self.n()).map(|x| self.normalized_degree(x)).fold(0.0, f64::max)
    }

    pub fn with_coords(mut self, coords: Vec<Vec<i64>>) -> Result<Self> {
        if coords.len() != self.n() {
            return Err(Error::BadParams(format!("{} coordinate rows for {} vertices", coords.len(), self.n())));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn with_origin(mut self, origin: Option<usize>) -> Result<Self> {
        if let Some(o) = origin {
            if o >= self.n() {
                return Err(Error::BadParams(format!("origin {o} out of range")));
            }
        }
        self.origin = origin;
        Ok(self)
    }

    /// Same graph and measure with a new potential.
    pub fn with_potential(&self, q: Vec<f64>) -> Result<Self> {
        if q.len() != self.n() {
            return Err(Error::BadParams("potential length mismatch".into()));
        }
        if let Some((x, _)) = q.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { what: format!("q({x})") });
        }
        let mut g = self.clone();
        g.q = q;
        g.id = fresh_id();
        Ok(g)
    }

    /// Potential shifted to q − λ.
    pub fn shifted(&self, lambda: f64) -> Result<Self> {
        self.with_potential(self.q.iter().map(|q| q - lambda).collect())
    }

    /// Same edges with a new measure.
    pub fn with_measure(&self, m: Vec<f64>) -> Result<Self> {
        if m.len() != self.n() {
            return Err(Error::BadParams("measure length mismatch".into()));
        }
        for (x, &mx) in m.iter().enumerate() {
            if mx.is_nan() || mx <= 0.0 || !mx.is_finite() {
                return Err(Error::NonPositiveMeasure { vertex: x, value: mx });
            }
        }
        let mut g = self.clone();
        g.m = m;
        g.id = fresh_id();
        g.wdeg = (0..g.n()).map(|x| g.neighbors(x).map(|(_, b)| b).sum()).collect();
        Ok(g)
    }

    /// All edge weights multiplied by `c > 0`.
    pub fn scale_weights(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::BadParams(format!("weight scale {c} must be positive")));
        }
        let edges = self.edges.iter().map(|e| Edge { b: e.b * c, ..*e }).collect();
        Ok(assemble(
            edges,
            self.m.clone(),
            self.q.clone(),
            self.labels.clone(),
            self.coords.clone(),
            self.origin,
            self.parent.clone(),
        ))
    }

    /// Hop distances from `sources`; `usize::MAX` when unreachable.
    pub fn hop_distance(&self, sources: &[usize]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            for (y, _) in self.neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Combinatorial ball {x : hop distance to `root` ≤ r}.
    pub fn ball(&self, root: usize, r: usize) -> VertexSet {
        let d = self.hop_distance(&[root]);
        VertexSet {
            graph: self.id,
            idx: (0..self.n()).filter(|&x| d[x] <= r).collect(),
        }
    }

    /// The implicit Dirichlet boundary of a truncation: the outermost layer
    /// of a lattice box when coordinates are present, otherwise the vertices
    /// whose normalized degree is below the maximum.
    pub fn boundary_layer(&self) -> VertexSet {
        let idx = match &self.coords {
            Some(c) => {
                let sup = |v: &Vec<i64>| v.iter().map(|t| t.abs()).max().unwrap_or(0);
                let radius = c.iter().map(sup).max().unwrap_or(0);
                (0..self.n()).filter(|&x| sup(&c[x]) == radius).collect()
            }
            None => {
                let d = self.degree_bound();
                (0..self.n())
                    .filter(|&x| self.normalized_degree(x) < d * (1.0 - 1e-12))
                    .collect()
            }
        };
        VertexSet { graph: self.id, idx }
    }

    /// Euclidean norm of the coordinates, if present.
    pub fn euclidean_norm(&self, x: usize) -> Option<f64> {
        self.coords
            .as_ref()
            .map(|c| c[x].iter().map(|&t| (t * t) as f64).sum::<f64>().sqrt())
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.hop_distance(&[0]).iter().all(|&d| d != usize::MAX)
    }
}

/// Restriction to `u` with the lost edges absorbed into the potential,
/// q̃(x) = q(x) + Σ_{y∉U} b(x,y)/m(x), so that the restricted form agrees with
/// the original one on functions supported in `u`.
pub fn dirichlet_restriction(g: &WeightedGraph, u: &VertexSet) -> Result<WeightedGraph> {
    u.check(g)?;
    if u.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut new_index = vec![usize::MAX; g.n()];
    for (i, &x) in u.indices().iter().enumerate() {
        new_index[x] = i;
    }
    let mut edges = Vec::new();
    let mut q = Vec::with_capacity(u.len());
    for &x in u.indices() {
        let mut lost = 0.0;
        for (y, b) in g.neighbors(x) {
            if new_index[y] == usize::MAX {
                lost += b;
            } else if x < y {
                edges.push(Edge { u: new_index[x], v: new_index[y], b });
            }
        }
        q.push(g.q[x] + lost / g.m[x]);
    }
    edges.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
    let pick = |v: &[f64]| u.indices().iter().map(|&x| v[x]).collect::<Vec<_>>();
    let labels = u.indices().iter().map(|&x| g.labels[x].clone()).collect();
    let coords = g
        .coords
        .as_ref()
        .map(|c| u.indices().iter().map(|&x| c[x].clone()).collect());
    let origin = g.origin.and_then(|o| (new_index[o] != usize::MAX).then_some(new_index[o]));
    let parent = u
        .indices()
        .iter()
        .map(|&x| g.parent.as_ref().map_or(x, |p| p[x]))
        .collect();
    Ok(assemble(edges, pick(&g.m), q, labels, coords, origin, Some(parent)))
}

/// N(U) = U together with all neighbors of U.
pub fn neighborhood(g: &WeightedGraph, u: &VertexSet) -> Result<VertexSet> {
    u.check(g)?;
    let mut mark = vec![false; g.n()];
    for &x in u.indices() {
        mark[x] = true;
        for (y, _) in g.neighbors(x) {
            mark[y] = true;
        }
    }
    Ok(VertexSet::from_mask(g, &mark))
}

/// Real function on the vertices of one graph; all values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    graph: u64,
    values: Vec<f64>,
}

impl GraphFunction {
    pub fn new(g: &WeightedGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.n() {
            return Err(Error::GraphMismatch);
        }
        if let Some((x, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { what: format!("function value at vertex {x}") });
        }
        Ok(Self { graph: g.id, values })
    }

    pub fn from_fn(g: &WeightedGraph, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(g, (0..g.n()).map(f).collect())
    }

    pub fn constant(g: &WeightedGraph, c: f64) -> Result<Self> {
        Self::new(g, vec![c; g.n()])
    }

    pub fn zeros(g: &WeightedGraph) -> Self {
        Self { graph: g.id, values: vec![0.0; g.n()] }
    }

    pub fn indicator(g: &WeightedGraph, s: &VertexSet) -> Result<Self> {
        s.check(g)?;
        let mut values = vec![0.0; g.n()];
        for &x in s.indices() {
            values[x] = 1.0;
        }
        Ok(Self { graph: g.id, values })
    }

    pub fn graph_id(&self) -> u64 {
        self.graph
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, g: &WeightedGraph) -> Result<()> {
        if self.graph != g.id || self.values.len() != g.n() {
            return Err(Error::GraphMismatch);
        }
        Ok(())
    }

    /// Pointwise image; fails if any value becomes non-finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        if let Some((x, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { what: format!("function value at vertex {x}") });
        }
        Ok(Self { graph: self.graph, values })
    }

    /// Values at the vertices of a truncation `sub` (via its parent map).
    pub fn restrict_to(&self, g: &WeightedGraph, sub: &WeightedGraph) -> Result<Self> {
        self.check(g)?;
        let parent = sub
            .parent()
            .ok_or_else(|| Error::BadParams("target graph is not a truncation".into()))?;
        let direct = g.parent().is_none();
        let values = if direct {
            parent.iter().map(|&x| self.values[x]).collect()
        } else {
            let pos: HashMap<usize, usize> = g.parent().unwrap().iter().enumerate().map(|(i, &p)| (p, i)).collect();
            parent
                .iter()
                .map(|p| pos.get(p).map(|&i| self.values[i]).ok_or(Error::GraphMismatch))
                .collect::<Result<Vec<_>>>()?
        };
        Self::new(sub, values)
    }

    /// Extension by zero from the truncation `sub` to its parent graph `g`.
    pub fn extend_from(sub_fn: &GraphFunction, sub: &WeightedGraph, g: &WeightedGraph) -> Result<Self> {
        sub_fn.check(sub)?;
        let parent = sub
            .parent()
            .ok_or_else(|| Error::BadParams("source graph is not a truncation".into()))?;
        let mut values = vec![0.0; g.n()];
        let lookup: Option<HashMap<usize, usize>> =
            g.parent().map(|p| p.iter().enumerate().map(|(i, &x)| (x, i)).collect());
        for (i, &p) in parent.iter().enumerate() {
            let x = match &lookup {
                None => p,
                Some(map) => *map.get(&p).ok_or(Error::GraphMismatch)?,
            };
            if x >= g.n() {
                return Err(Error::GraphMismatch);
            }
            values[x] = sub_fn.values[i];
        }
        Ok(Self { graph: g.id, values })
    }
}

impl Index<usize> for GraphFunction {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.values[x]
    }
}

/// Strictly increasing list of vertex indices of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    graph: u64,
    idx: Vec<usize>,
}

impl VertexSet {
    pub fn new(g: &WeightedGraph, mut idx: Vec<usize>) -> Result<Self> {
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&x| x >= g.n()) {
            return Err(Error::BadParams(format!("vertex {bad} out of range")));
        }
        Ok(Self { graph: g.id, idx })
    }

    pub fn empty(g: &WeightedGraph) -> Self {
        Self { graph: g.id, idx: Vec::new() }
    }

    pub fn all(g: &WeightedGraph) -> Self {
        Self { graph: g.id, idx: (0..g.n()).collect() }
    }

    pub fn from_mask(g: &WeightedGraph, mask: &[bool]) -> Self {
        Self {
            graph: g.id,
            idx: (0..g.n()).filter(|&x| mask[x]).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.idx.binary_search(&x).is_ok()
    }

    pub fn graph_id(&self) -> u64 {
        self.graph
    }

    pub fn check(&self, g: &WeightedGraph) -> Result<()> {
        if self.graph != g.id || self.idx.last().is_some_and(|&x| x >= g.n()) {
            return Err(Error::GraphMismatch);
        }
        Ok(())
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &x in &self.idx {
            m[x] = true;
        }
        m
    }

    pub fn complement(&self, g: &WeightedGraph) -> Result<Self> {
        self.check(g)?;
        let mask = self.mask(g.n());
        Ok(Self {
            graph: g.id,
            idx: (0..g.n()).filter(|&x| !mask[x]).collect(),
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.graph != other.graph {
            return Err(Error::GraphMismatch);
        }
        let mut idx: Vec<usize> = self.idx.iter().chain(other.idx.iter()).copied().collect();
        idx.sort_unstable();
        idx.dedup();
        Ok(Self { graph: self.graph, idx })
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.graph == other.graph && self.idx.iter().all(|&x| other.contains(x))
    }

    /// m(U) = Σ_{x∈U} m(x)
    pub fn measure(&self, g: &WeightedGraph) -> f64 {
        self.idx.iter().map(|&x| g.m()[x]).sum()
    }
}
