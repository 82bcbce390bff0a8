use proptest::collection::vec;
use proptest::prelude::*;

use agmonlab::agmon::{exp_lemma_check, rate_constant, rate_from_gap, RateMode};
use agmonlab::exhaustion::{cheeger_report, cutoff_sequence, edge_boundary};
use agmonlab::io::{graph_from_json, graph_to_json};
use agmonlab::metrics::{intrinsic_audit, scaled_combinatorial_lengths, scaled_combinatorial_metric, shortest_paths, EdgeLengths};
use agmonlab::operator::{form_h, greens_check};
use agmonlab::spectral::eigensolve_lowest;
use agmonlab::{build_graph, dirichlet_restriction, GraphFunction, VertexSet, WeightedGraph};

/// Connected graph on n vertices: a path plus random chords.
fn graph_strategy(max_n: usize, q_lo: f64) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n).prop_flat_map(move |n| {
        (
            vec(0.01f64..2.0, n - 1),
            vec((0..n, 0..n, 0.01f64..2.0), 0..2 * n),
            vec(0.1f64..2.0, n),
            vec(q_lo..1.0, n),
        )
            .prop_map(move |(path_b, chords, m, q)| {
                let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (i - 1, i, path_b[i - 1])).collect();
                for (x, y, b) in chords {
                    let (x, y) = (x.min(y), x.max(y));
                    if x != y && !edges.iter().any(|&(a, c, _)| (a, c) == (x, y)) {
                        edges.push((x, y, b));
                    }
                }
                build_graph(&edges, m, q, None).unwrap().with_origin(Some(0)).unwrap()
            })
    })
}

fn values(g: &WeightedGraph, seed: &[f64]) -> GraphFunction {
    GraphFunction::new(g, (0..g.n()).map(|x| seed[x % seed.len()]).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restriction_preserves_form(g in graph_strategy(20, -1.0), mask in vec(any::<bool>(), 20), seed in vec(-1.0f64..1.0, 1..20)) {
        let mask: Vec<bool> = (0..g.n()).map(|x| mask[x] || x == 0).collect();
        let u = VertexSet::from_mask(&g, &mask);
        let sub = dirichlet_restriction(&g, &u).unwrap();
        let phi = values(&sub, &seed);
        let ext = GraphFunction::extend_from(&phi, &sub, &g).unwrap();
        let a = form_h(&sub, &phi, &phi).unwrap().value;
        let b = form_h(&g, &ext, &ext).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn greens_formula(g in graph_strategy(30, -1.0), s1 in vec(-1.0f64..1.0, 1..30), s2 in vec(-1.0f64..1.0, 1..30)) {
        let r = greens_check(&g, &values(&g, &s1), &values(&g, &s2)).unwrap();
        prop_assert!(r.pass, "{}", r.summary());
    }

    #[test]
    fn bisected_rate_satisfies_constant(a in 1e-6f64..=10.0) {
        let r = rate_from_gap(a, RateMode::Bisect).unwrap();
        prop_assert!(r > 0.0);
        prop_assert!(rate_constant(r) <= 0.99 * a);
    }

    #[test]
    fn distances_respect_edges(g in graph_strategy(25, 0.0), lens in vec(0.0f64..3.0, 1..40)) {
        let l = EdgeLengths::from_fn(&g, |e| lens[(e.u * 31 + e.v) % lens.len()]).unwrap();
        let f = shortest_paths(&g, &l, &[0]).unwrap();
        prop_assert_eq!(f.dist[0], 0.0);
        for (e, &len) in g.edges().iter().zip(l.values()) {
            prop_assert!(f.dist[e.v] <= f.dist[e.u] + len + 1e-12);
            prop_assert!(f.dist[e.u] <= f.dist[e.v] + len + 1e-12);
        }
    }

    #[test]
    fn scaled_combinatorial_is_intrinsic(g in graph_strategy(25, 0.0)) {
        let l = scaled_combinatorial_lengths(&g).unwrap();
        prop_assert!(intrinsic_audit(&g, &l).unwrap().pass);
    }

    #[test]
    fn lowest_eigenvalue_below_rayleigh_quotient(g in graph_strategy(30, -1.0), seed in vec(-1.0f64..1.0, 1..30)) {
        let lambda = eigensolve_lowest(&g, 1).unwrap().eigenvalues[0];
        let phi = values(&g, &seed);
        let norm: f64 = (0..g.n()).map(|x| phi[x] * phi[x] * g.m()[x]).sum();
        prop_assume!(norm > 1e-6);
        let rq = form_h(&g, &phi, &phi).unwrap().value / norm;
        prop_assert!(lambda <= rq + 1e-9 * (1.0 + rq.abs()));
    }

    #[test]
    fn exact_cheeger_below_family_bounds(g in graph_strategy(10, 0.0), picks in vec(vec(any::<bool>(), 10), 1..6)) {
        let n = g.n();
        let family: Vec<VertexSet> = picks
            .iter()
            .map(|p| (0..n).map(|x| p[x]).collect::<Vec<_>>())
            .filter(|m| m.iter().any(|&b| b) && !m.iter().all(|&b| b))
            .map(|m| VertexSet::from_mask(&g, &m))
            .collect();
        let prof = cheeger_report(&g, n, &family, None).unwrap();
        let exact = prof.exact().unwrap().ratio;
        for s in &family {
            let mask = s.mask(n);
            let connected = {
                let sub = dirichlet_restriction(&g, s).unwrap();
                sub.is_connected()
            };
            if connected {
                let vol: f64 = s.indices().iter().map(|&x| g.deg(x)).sum();
                let killed: f64 = s.indices().iter().map(|&x| g.q()[x].max(0.0) * g.m()[x]).sum();
                let ratio = (edge_boundary(&g, &mask) + killed) / vol;
                prop_assert!(exact <= ratio * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn cutoffs_sandwich_balls(g in graph_strategy(25, 0.0), eps in 0.2f64..3.0) {
        let base = scaled_combinatorial_metric(&g).unwrap();
        let cut = cutoff_sequence(&g, &base, eps, 4).unwrap();
        let s = base.jump_size;
        for (j, phi) in cut.iter().enumerate() {
            let n = (j + 1) as f64;
            for x in 0..g.n() {
                prop_assert!((0.0..=1.0).contains(&phi[x]));
                if base.dist[x] <= n {
                    prop_assert_eq!(phi[x], 1.0);
                }
                if base.dist[x] > n + eps + s + 1e-12 {
                    prop_assert_eq!(phi[x], 0.0);
                }
            }
        }
    }

    #[test]
    fn exp_lemma_on_random_theta(g in graph_strategy(25, 0.0), seed in vec(-4.0f64..4.0, 1..25)) {
        prop_assert!(exp_lemma_check(&g, &values(&g, &seed), 9).unwrap().pass);
    }

    #[test]
    fn graph_json_round_trip(g in graph_strategy(15, -1.0)) {
        let text = graph_to_json(&g);
        let back = graph_from_json(&text).unwrap();
        prop_assert_eq!(graph_to_json(&back), text);
    }
}
