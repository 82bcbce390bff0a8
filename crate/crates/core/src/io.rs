//! JSON graph files.
//!
//! ```json
//! {"vertices":[{"id":0,"label":"a","m":1.0,"q":0.0,"coords":[0]}],
//!  "edges":[{"u":0,"v":1,"b":1.0}], "origin":0}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, WeightedGraph};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexRecord {
    id: usize,
    label: String,
    m: f64,
    q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    u: usize,
    v: usize,
    b: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: Vec<VertexRecord>,
    edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<usize>,
}

pub fn graph_to_json(g: &WeightedGraph) -> String {
    let vertices = (0..g.n())
        .map(|x| VertexRecord {
            id: x,
            label: g.labels()[x].clone(),
            m: g.m()[x],
            q: g.q()[x],
            coords: g.coords().map(|c| c[x].clone()),
        })
        .collect();
    let edges = g.edges().iter().map(|e| EdgeRecord { u: e.u, v: e.v, b: e.b }).collect();
    let file = GraphFile { vertices, edges, origin: g.origin() };
    let mut s = serde_json::to_string_pretty(&file).expect("graph records always serialize");
    s.push('\n');
    s
}

pub fn graph_from_json(text: &str) -> Result<WeightedGraph> {
    let file: GraphFile = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let n = file.vertices.len();
    let mut m = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut coords = Vec::with_capacity(n);
    let with_coords = file.vertices.first().is_some_and(|v| v.coords.is_some());
    for (i, v) in file.vertices.into_iter().enumerate() {
        if v.id != i {
            return Err(Error::parse(format!("vertices[{i}].id"), format!("expected {i}, found {}", v.id)));
        }
        m.push(v.m);
        q.push(v.q);
        labels.push(v.label);
        match (with_coords, v.coords) {
            (true, Some(c)) => coords.push(c),
            (false, None) => {}
            _ => {
                return Err(Error::parse(
                    format!("vertices[{i}].coords"),
                    "coordinates must be given for all vertices or none",
                ))
            }
        }
    }
    if with_coords {
        let d = coords[0].len();
        if let Some(i) = coords.iter().position(|c| c.len() != d) {
            return Err(Error::parse(format!("vertices[{i}].coords"), format!("expected {d} coordinates")));
        }
    }
    let edges: Vec<(usize, usize, f64)> = file.edges.iter().map(|e| (e.u, e.v, e.b)).collect();
    let mut g = build_graph(&edges, m, q, Some(labels))?;
    if with_coords {
        g = g.with_coords(coords)?;
    }
    if let Some(o) = file.origin {
        if o >= n {
            return Err(Error::parse("origin", format!("vertex {o} out of range")));
        }
    }
    g.with_origin(file.origin)
}

pub fn save_graph(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, graph_to_json(g))?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    graph_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_family, gen_lattice_box, Family, Potential};

    #[test]
    fn round_trip_fixtures() {
        let graphs = vec![
            gen_family(&Family::Path(3)).unwrap(),
            gen_family(&Family::Tree { branching: 3, depth: 2 }).unwrap(),
            gen_lattice_box(2, 2, Potential::Well(-1.5)).unwrap(),
            build_graph(&[(0, 2, 0.1), (1, 2, 1.0 / 3.0)], vec![0.7, 1.1, 1e-3], vec![-0.25, 0.0, 3.5], None).unwrap(),
        ];
        for g in graphs {
            let text = graph_to_json(&g);
            let back = graph_from_json(&text).unwrap();
            assert_eq!(back, g);
            assert_eq!(graph_to_json(&back), text);
        }
    }

    #[test]
    fn negative_measure_is_rejected() {
        let text = r#"{"vertices":[{"id":0,"label":"0","m":-1.0,"q":0.0}],"edges":[]}"#;
        assert!(matches!(graph_from_json(text), Err(Error::NonPositiveMeasure { vertex: 0, .. })));
    }

    #[test]
    fn duplicate_edge_is_rejected() {
        let text = r#"{"vertices":[{"id":0,"label":"a","m":1,"q":0},{"id":1,"label":"b","m":1,"q":0}],
            "edges":[{"u":0,"v":1,"b":1.0},{"u":0,"v":1,"b":2.0}]}"#;
        assert!(matches!(graph_from_json(text), Err(Error::DuplicateEdge { u: 0, v: 1 })));
    }

    #[test]
    fn malformed_input_reports_position() {
        let err = graph_from_json("{\"vertices\": [ {\"id\": 0, \"label\": 3 } ]").unwrap_err();
        match err {
            Error::Parse { context, .. } => assert!(context.starts_with("line 1")),
            other => panic!("unexpected {other:?}"),
        }
        let err = graph_from_json(r#"{"vertices":[{"id":1,"label":"a","m":1,"q":0}],"edges":[]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref context, .. } if context == "vertices[0].id"));
    }
}
