use std::f64::consts::PI;

use proptest::prelude::*;

use hyperpants::exploration::{explore, ExploreParams, Mode};
use hyperpants::graph::{sample_graph, HalfEdge, Surface, TrivalentGraph};
use hyperpants::hexagon::Hexagon;
use hyperpants::hyp::{dist, Isometry, Point};
use hyperpants::metric::{midpoint_distances, SearchOptions};
use hyperpants::orbit::{count, OrbitOptions};

fn isometry() -> impl Strategy<Value = Isometry> {
    (-PI..PI, 0.0..4.0f64, -PI..PI).prop_map(|(t1, s, t2)| {
        Isometry::rotate_o(t1)
            .compose(&Isometry::translate_x(s))
            .compose(&Isometry::rotate_o(t2))
    })
}

fn point() -> impl Strategy<Value = Point> {
    (isometry(), 0.0..3.0f64)
        .prop_map(|(g, s)| g.compose(&Isometry::translate_x(s)).apply(&Point::ORIGIN))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isometries_preserve_distance(g in isometry(), p in point(), q in point()) {
        let before = dist(&p, &q).unwrap();
        let after = dist(&g.apply(&p), &g.apply(&q)).unwrap();
        prop_assert!((before - after).abs() <= 1e-8 * before.max(1.0));
        prop_assert!(g.compose(&g.inverse()).max_entry_diff(&Isometry::IDENTITY) <= 1e-8 * g.matrix()[2][2]);
    }

    #[test]
    fn sampled_graphs_are_perfect_matchings(n in 1usize..200, seed in any::<u64>()) {
        let g = sample_graph(n, seed).unwrap();
        for v in 0..2 * n {
            for leg in 0..3 {
                let h = HalfEdge::new(v, leg);
                prop_assert_ne!(g.partner(h), h);
                prop_assert_eq!(g.partner(g.partner(h)), h);
            }
        }
        prop_assert_eq!(TrivalentGraph::read_text(g.to_text().as_bytes()).unwrap(), g);
    }

    #[test]
    fn online_exploration_invariants(n in 2usize..400, seed in any::<u64>(), a in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0])) {
        let hex = Hexagon::build(a).unwrap();
        let p = ExploreParams { trace: true, ..ExploreParams::new(n, 0.1, seed) };
        let rep = explore(&hex, &p, Mode::Online).unwrap();
        prop_assert!(rep.bad_phase1 <= rep.bad_total && rep.bad_total <= rep.steps);
        prop_assert!(rep.vertices_found <= rep.tau_target);
        prop_assert_eq!(rep.steps, rep.vertices_found - 1 + rep.bad_total);
        if rep.disconnected {
            prop_assert!(rep.vertices_found < rep.tau_target);
        }
        let trace = rep.trace.unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1].key >= w[0].key - 1e-9 * w[0].key.max(1.0));
        }
        let mut live = 3i64;
        for s in &trace {
            prop_assert_eq!(s.frontier_before as i64, live);
            live += if s.bad { -2 } else { 1 };
        }
    }

    #[test]
    fn counts_grow_and_ignore_prune_slack(a in prop::sample::select(vec![1.0, 2.0, 4.0]), r in 0.0..6.0f64, slack in 0.0..2.0f64) {
        let h = Hexagon::build(a).unwrap();
        let opts = OrbitOptions::default();
        let c = count(&h, r, &opts).unwrap();
        prop_assert!(c <= count(&h, r + 0.5, &opts).unwrap());
        prop_assert_eq!(c, count(&h, r, &OrbitOptions { prune_slack: slack, ..opts }).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn surface_distances_form_a_metric(n in 2usize..14, seed in any::<u64>(), a in prop::sample::select(vec![1.0, 2.0, 4.0])) {
        let s = Surface::new(sample_graph(n, seed).unwrap(), a).unwrap();
        prop_assume!(s.graph.is_connected());
        let opts = SearchOptions::default();
        let fields: Vec<_> = (0..2 * n).map(|v| midpoint_distances(&s, v, &opts).unwrap()).collect();
        let step = s.hexagon.pants_constants().adjacent_midpoint_distance;
        for (u, fu) in fields.iter().enumerate() {
            prop_assert!(fu.is_complete());
            prop_assert_eq!(fu.dist[u], 0.0);
            let hops = s.graph.bfs(u);
            for v in 0..2 * n {
                prop_assert!((fu.dist[v] - fields[v].dist[u]).abs() <= 1e-6);
                prop_assert!(fu.dist[v] <= step * hops[v].unwrap() as f64 + 1e-9);
                for w in 0..2 * n {
                    prop_assert!(fu.dist[w] <= fu.dist[v] + fields[v].dist[w] + 1e-6);
                }
            }
        }
    }
}
