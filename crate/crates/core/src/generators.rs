//! Lattice boxes and small graph families.

use crate::error::{Error, Result};
use crate::graph::{build_graph, WeightedGraph};

pub const DEFAULT_VERTEX_CAP: usize = 500_000;

/// Potential placed on a generated graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Zero,
    Constant(f64),
    /// `c` at the origin, zero elsewhere.
    Well(f64),
}

impl Potential {
    fn values(self, n: usize, origin: usize) -> Vec<f64> {
        match self {
            Potential::Zero => vec![0.0; n],
            Potential::Constant(c) => vec![c; n],
            Potential::Well(c) => {
                let mut q = vec![0.0; n];
                q[origin] = c;
                q
            }
        }
    }
}

/// Box {−n..n}^d in ℤ^d with unit nearest-neighbor weights and m ≡ 1.
/// Vertices are in lexicographic order of their coordinates.
pub fn gen_lattice_box(d: usize, radius: usize, potential: Potential) -> Result<WeightedGraph> {
    gen_lattice_box_capped(d, radius, potential, DEFAULT_VERTEX_CAP)
}

pub fn gen_lattice_box_capped(d: usize, radius: usize, potential: Potential, cap: usize) -> Result<WeightedGraph> {
    if d == 0 {
        return Err(Error::BadParams("dimension must be at least 1".into()));
    }
    let side = 2 * radius + 1;
    let requested = (side as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if requested > cap as u128 {
        return Err(Error::SizeOverflow { requested, cap });
    }
    let n = requested as usize;
    let r = radius as i64;
    let coords: Vec<Vec<i64>> = (0..n)
        .map(|mut k| {
            let mut c = vec![0i64; d];
            for i in (0..d).rev() {
                c[i] = (k % side) as i64 - r;
                k /= side;
            }
            c
        })
        .collect();
    let mut edges = Vec::with_capacity(d * n);
    let mut stride = 1usize;
    for i in (0..d).rev() {
        for (x, c) in coords.iter().enumerate() {
            if c[i] < r {
                edges.push((x, x + stride, 1.0));
            }
        }
        stride *= side;
    }
    let labels = coords.iter().map(|c| lattice_label(c)).collect();
    let origin = n / 2;
    let q = potential.values(n, origin);
    build_graph(&edges, vec![1.0; n], q, Some(labels))?
        .with_coords(coords)?
        .with_origin(Some(origin))
}

pub fn lattice_label(c: &[i64]) -> String {
    let parts: Vec<String> = c.iter().map(|t| t.to_string()).collect();
    format!("({})", parts.join(","))
}

/// Index of a lattice point in a box generated by [`gen_lattice_box`].
pub fn lattice_index(c: &[i64], radius: usize) -> Option<usize> {
    let side = 2 * radius as i64 + 1;
    let mut k = 0i64;
    for &t in c {
        if t.abs() > radius as i64 {
            return None;
        }
        k = k * side + t + radius as i64;
    }
    Some(k as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Path(usize),
    Cycle(usize),
    /// Complete `branching`-ary tree; depth 0 is a single root.
    Tree { branching: usize, depth: usize },
    /// Star with `leaves` leaves around vertex 0.
    Star(usize),
    Complete(usize),
}

/// Unit-weight graph of the requested shape with m ≡ 1, q ≡ 0. Vertex 0 is
/// the origin.
pub fn gen_family(kind: &Family) -> Result<WeightedGraph> {
    let bad = |s: &str| Err(Error::BadParams(s.to_string()));
    let (n, edges): (usize, Vec<(usize, usize, f64)>) = match *kind {
        Family::Path(n) => {
            if n == 0 {
                return bad("path needs at least one vertex");
            }
            (n, (1..n).map(|i| (i - 1, i, 1.0)).collect())
        }
        Family::Cycle(n) => {
            if n < 3 {
                return bad("cycle needs at least three vertices");
            }
            (n, (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect())
        }
        Family::Tree { branching, depth } => {
            if branching == 0 {
                return bad("tree branching must be positive");
            }
            let mut n = 1usize;
            let mut level = 1usize;
            for _ in 0..depth {
                level = level
                    .checked_mul(branching)
                    .ok_or_else(|| Error::BadParams("tree too large".into()))?;
                n = n
                    .checked_add(level)
                    .ok_or_else(|| Error::BadParams("tree too large".into()))?;
            }
            if n > DEFAULT_VERTEX_CAP {
                return Err(Error::SizeOverflow { requested: n as u128, cap: DEFAULT_VERTEX_CAP });
            }
            // breadth-first numbering: children of k are k·β+1 ..= k·β+β
            let edges = (1..n).map(|c| ((c - 1) / branching, c, 1.0)).collect();
            (n, edges)
        }
        Family::Star(k) => {
            if k == 0 {
                return bad("star needs at least one leaf");
            }
            (k + 1, (1..=k).map(|i| (0, i, 1.0)).collect())
        }
        Family::Complete(n) => {
            if n == 0 {
                return bad("complete graph needs at least one vertex");
            }
            let mut e = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    e.push((i, j, 1.0));
                }
            }
            (n, e)
        }
    };
    build_graph(&edges, vec![1.0; n], vec![0.0; n], None)?.with_origin(Some(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_box_radius_one() {
        let g = gen_lattice_box(2, 1, Potential::Zero).unwrap();
        assert_eq!(g.n(), 9);
        assert_eq!(g.num_edges(), 12);
        assert_eq!(g.m().iter().sum::<f64>(), 9.0);
        assert_eq!(g.labels()[g.origin().unwrap()], "(0,0)");
    }

    #[test]
    fn pair_count_matches_brute_force() {
        for (d, r) in [(1, 3), (2, 2), (3, 1), (3, 2)] {
            let g = gen_lattice_box(d, r, Potential::Zero).unwrap();
            let c = g.coords().unwrap();
            let mut count = 0;
            for i in 0..g.n() {
                for j in i + 1..g.n() {
                    let l1: i64 = c[i].iter().zip(&c[j]).map(|(a, b)| (a - b).abs()).sum();
                    if l1 == 1 {
                        count += 1;
                        assert_eq!(g.b(i, j), 1.0);
                    }
                }
            }
            assert_eq!(count, g.num_edges());
            let side = 2 * r + 1;
            assert_eq!(g.num_edges(), d * side.pow(d as u32 - 1) * 2 * r);
        }
    }

    #[test]
    fn single_vertex_box() {
        let g = gen_lattice_box(1, 0, Potential::Zero).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn cap_is_enforced() {
        let e = gen_lattice_box_capped(3, 10, Potential::Zero, 1000).unwrap_err();
        assert!(matches!(e, Error::SizeOverflow { requested: 9261, cap: 1000 }));
    }

    #[test]
    fn well_sits_at_origin() {
        let g = gen_lattice_box(1, 3, Potential::Well(-1.5)).unwrap();
        assert_eq!(g.q()[3], -1.5);
        assert_eq!(g.q().iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(lattice_index(&[0], 3), Some(3));
        assert_eq!(lattice_index(&[4], 3), None);
    }

    #[test]
    fn families() {
        let p = gen_family(&Family::Path(3)).unwrap();
        assert_eq!((0..3).map(|x| p.deg(x)).collect::<Vec<_>>(), vec![1.0, 2.0, 1.0]);
        let c = gen_family(&Family::Cycle(4)).unwrap();
        assert_eq!(c.num_edges(), 4);
        assert!((0..4).all(|x| c.deg(x) == 2.0));
        let t = gen_family(&Family::Tree { branching: 2, depth: 3 }).unwrap();
        assert_eq!(t.n(), 15);
        assert_eq!(t.num_edges(), 14);
        let k = gen_family(&Family::Complete(4)).unwrap();
        assert_eq!(k.num_edges(), 6);
        assert!(gen_family(&Family::Cycle(2)).is_err());
        assert!(gen_family(&Family::Path(0)).is_err());
    }
}
