//! Standard truncations used by the suites, the CLI and the tests.

use crate::error::Result;
use crate::generators::{gen_family, gen_lattice_box, Family, Potential};
use crate::graph::{dirichlet_restriction, GraphFunction, VertexSet, WeightedGraph};
use crate::hardy::{green_function, supersolution_hardy, BoundaryData, HardyOptions, HardyWeight};

/// The half-line {1, …, n} with unit weights and a Dirichlet condition at 0
/// (so q(1) = 1), and the supersolution v(k) = k. Vertex i carries k = i + 1.
pub struct HalfLine {
    pub graph: WeightedGraph,
    pub v: GraphFunction,
    pub hardy: HardyWeight,
}

pub fn half_line(n: usize) -> Result<HalfLine> {
    let path = gen_family(&Family::Path(n + 1))?;
    let interior = VertexSet::new(&path, (1..=n).collect())?;
    let graph = dirichlet_restriction(&path, &interior)?.with_origin(Some(0))?;
    let v = GraphFunction::from_fn(&graph, |i| (i + 1) as f64)?;
    let opts = HardyOptions { check_positivity: n <= 5000, ..Default::default() };
    let hardy = supersolution_hardy(&graph, &v, &opts)?;
    Ok(HalfLine { graph, v, hardy })
}

/// ℤ box [−radius, radius] with q = c·1₀.
pub fn lattice_well(radius: usize, c: f64) -> Result<WeightedGraph> {
    gen_lattice_box(1, radius, Potential::Well(c))
}

/// A lattice box, the truncated Green function v rooted at the origin, and
/// the Hardy weight w_{1/2} of v on the interior (the box without its outer
/// layer, with the lost edges in the potential).
pub struct GreenBox {
    pub boxed: WeightedGraph,
    pub interior: WeightedGraph,
    /// v restricted to the interior.
    pub v: GraphFunction,
    pub hardy: HardyWeight,
}

pub fn green_box(d: usize, radius: usize, boundary: &BoundaryData) -> Result<GreenBox> {
    let boxed = gen_lattice_box(d, radius, Potential::Zero)?;
    let o = boxed.origin().expect("lattice boxes have an origin");
    green_interior(boxed, o, boundary)
}

/// Green function of `boxed` rooted at `root` with the given data on the
/// boundary layer, and its Hardy weight on the interior.
pub fn green_interior(boxed: WeightedGraph, root: usize, boundary: &BoundaryData) -> Result<GreenBox> {
    let full = green_function(&boxed, root, boundary)?;
    let inner = boxed.boundary_layer().complement(&boxed)?;
    let interior = dirichlet_restriction(&boxed, &inner)?;
    let v = full.restrict_to(&boxed, &interior)?;
    let opts = HardyOptions { check_positivity: interior.n() <= 5000, ..Default::default() };
    let hardy = supersolution_hardy(&interior, &v, &opts)?;
    Ok(GreenBox { boxed, interior, v, hardy })
}

/// Complete `branching`-ary tree of the given depth, cut out of the next
/// deeper tree with the lost edges kept as potential on the leaves.
pub fn truncated_tree(branching: usize, depth: usize) -> Result<WeightedGraph> {
    let t = gen_family(&Family::Tree { branching, depth: depth + 1 })?;
    let ball = t.ball(0, depth);
    dirichlet_restriction(&t, &ball)?.with_origin(Some(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_line_weight() {
        let h = half_line(50).unwrap();
        assert!((h.hardy.w[0] - (2.0 - 2f64.sqrt())).abs() < 1e-14);
        assert_eq!(h.graph.q()[0], 1.0);
        assert!(h.hardy.positivity.as_ref().unwrap().pass);
    }

    #[test]
    fn tree_boundary_mass() {
        let t = truncated_tree(2, 5).unwrap();
        assert_eq!(t.n(), 63);
        let q_mass: f64 = t.q().iter().sum();
        assert_eq!(q_mass, 64.0);
        let vol: f64 = (0..t.n()).map(|x| t.deg(x)).sum();
        assert_eq!(vol, 188.0);
    }

    #[test]
    fn small_green_box_is_positive() {
        let gb = green_box(3, 5, &BoundaryData::Zero).unwrap();
        assert_eq!(gb.interior.n(), 9 * 9 * 9);
        assert!(gb.v.values().iter().all(|&v| v > 0.0));
        assert!(gb.hardy.positivity.as_ref().unwrap().pass);
    }
}
