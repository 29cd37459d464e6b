use std::collections::HashMap;

use hyperpants::experiments::{run_campaign, Campaign};
use hyperpants::exploration::{
    bad_step_prob, explore, explore_revealing, tree_realizable_graph, ExploreParams, KeyMode, Mode,
};
use hyperpants::graph::{sample_graph, HalfEdge, Surface, TrivalentGraph};
use hyperpants::hexagon::Hexagon;
use hyperpants::metric::{
    diameter_bounds, midpoint_diameter, midpoint_distances, SearchOptions, Sources,
};
use hyperpants::orbit::{enumerate_orbit, OrbitOptions};

fn theta() -> TrivalentGraph {
    let he = HalfEdge::new;
    TrivalentGraph::from_pairs(
        1,
        &[
            (he(0, 0), he(1, 0)),
            (he(0, 1), he(1, 1)),
            (he(0, 2), he(1, 2)),
        ],
    )
    .unwrap()
}

#[test]
fn connectivity_is_likely_at_n_ten() {
    let connected = (0..1000u64)
        .filter(|&s| sample_graph(10, s).unwrap().is_connected())
        .count();
    assert!(connected >= 900, "{connected}/1000 connected");
}

#[test]
fn first_step_at_n_one_is_bad_two_fifths_of_the_time() {
    let hex = Hexagon::build(1.0).unwrap();
    let runs = 100_000u64;
    let p = bad_step_prob(3, 1, 0).unwrap();
    assert!((p - 0.4).abs() < 1e-15);
    let bad = (0..runs)
        .filter(|&seed| {
            let params = ExploreParams {
                trace: true,
                ..ExploreParams::new(1, 0.1, seed)
            };
            explore(&hex, &params, Mode::Online).unwrap().trace.unwrap()[0].bad
        })
        .count() as f64;
    let sigma = (runs as f64 * p * (1.0 - p)).sqrt();
    assert!(
        (bad - runs as f64 * p).abs() <= 3.0 * sigma,
        "{bad} bad first steps"
    );
}

#[test]
fn on_graph_exploration_reveals_the_input_pairing() {
    let hex = Hexagon::build(2.0).unwrap();
    for seed in 0..20 {
        let g = sample_graph(60, seed).unwrap();
        if !g.is_connected() {
            continue;
        }
        let p = ExploreParams {
            exhaust: true,
            ..ExploreParams::new(60, 0.1, seed)
        };
        let (_, pairs) = explore_revealing(&hex, &p, Mode::OnGraph(&g)).unwrap();
        let mut got: Vec<_> = pairs
            .into_iter()
            .map(|(x, y)| (x.min(y), x.max(y)))
            .collect();
        got.sort();
        assert_eq!(got, g.pairs());
    }
}

#[test]
fn segment_keys_never_pop_out_of_order() {
    let hex = Hexagon::build(2.0).unwrap();
    for seed in 0..30 {
        let p = ExploreParams {
            key_mode: KeyMode::Segment,
            trace: true,
            ..ExploreParams::new(500, 0.1, seed)
        };
        let trace = explore(&hex, &p, Mode::Online).unwrap().trace.unwrap();
        assert!(trace
            .windows(2)
            .all(|w| w[1].key >= w[0].key - 1e-9 * w[0].key.max(1.0)));
    }
}

#[test]
fn theta_surface_diameter() {
    let s = Surface::new(theta(), 1.0).unwrap();
    let md = midpoint_diameter(&s, Sources::All, &SearchOptions::default()).unwrap();
    assert!(md.certified);
    assert!((md.value - 2.0 * s.hexagon.inradius_a()).abs() < 1e-12);
    let b = diameter_bounds(&s, Sources::All, &SearchOptions::default()).unwrap();
    assert_eq!(b.genus, 2);
    assert!((b.lower - 3f64.acosh()).abs() < 1e-15);
    assert!((b.lower - 1.762747174039086).abs() < 1e-12);
    assert!(b.upper >= b.lower);
}

#[test]
fn adjacent_midpoints_are_two_inradii_apart() {
    for a in [0.5, 2.0, 8.0] {
        let s = Surface::new(sample_graph(20, 4).unwrap(), a).unwrap();
        if !s.graph.is_connected() {
            continue;
        }
        let f = midpoint_distances(&s, 0, &SearchOptions::default()).unwrap();
        let two_rho = 2.0 * s.hexagon.inradius_a();
        for w in s.graph.neighbours(0) {
            if w != 0 {
                assert!(
                    (f.dist[w] - two_rho).abs() < 1e-9,
                    "a={a}: {} vs {two_rho}",
                    f.dist[w]
                );
            }
        }
    }
}

#[test]
fn bounds_hold_on_random_surfaces() {
    let hex = Hexagon::build(2.0).unwrap();
    for seed in 0..100 {
        let s = Surface::with_hexagon(sample_graph(16, seed).unwrap(), hex.clone());
        if !s.graph.is_connected() {
            continue;
        }
        let b = diameter_bounds(&s, Sources::All, &SearchOptions::default()).unwrap();
        assert!(b.lower <= b.upper);
        assert!(b.midpoint_certified);
        let step = hex.pants_constants().adjacent_midpoint_distance;
        assert!(b.midpoint_diameter <= step * b.graph_diameter as f64 + 1e-9);
        let sampled = midpoint_diameter(
            &s,
            Sources::Sample { count: 5, seed },
            &SearchOptions::default(),
        )
        .unwrap();
        assert!(!sampled.certified && sampled.value <= b.midpoint_diameter + 1e-12);
    }
}

#[test]
fn tree_region_distances_match_the_hextree() {
    for a in [1.0, 4.0] {
        let hex = Hexagon::build(a).unwrap();
        let p = ExploreParams {
            trace: true,
            ..ExploreParams::new(400, 0.1, 17)
        };
        let g = tree_realizable_graph(&hex, &p).unwrap();
        let rep = explore(&hex, &p, Mode::OnGraph(&g)).unwrap();
        assert_eq!(rep.bad_total, 0);
        let last_key = rep.trace.as_ref().unwrap().last().unwrap().key;
        let orbit = enumerate_orbit(&hex, rep.radius + 0.5, &OrbitOptions::default()).unwrap();
        let by_word: HashMap<&[u8], f64> =
            orbit.iter().map(|o| (o.word.letters(), o.dist)).collect();

        let s = Surface::with_hexagon(g, hex.clone());
        let field = midpoint_distances(&s, 0, &SearchOptions::default()).unwrap();
        let mut compared = 0;
        for d in rep.discovered.as_ref().unwrap() {
            let od = by_word[d.word.as_slice()];
            // any other route leaves the explored tree through a mirror at least last_key away
            if od < last_key {
                assert!((field.dist[d.vertex] - od).abs() < 1e-8);
                compared += 1;
            } else {
                assert!(field.dist[d.vertex] <= od + 1e-8);
            }
        }
        assert!(compared > 10);
    }
}

#[test]
fn disconnected_fraction_is_small_at_n_64() {
    let c =
        Campaign::parse("a_grid=2\nn_grid=64\nruns=200\nseed=5\nsources=3\n".as_bytes()).unwrap();
    let rows = run_campaign(&c).unwrap();
    let disconnected = rows.iter().filter(|r| !r.connected).count();
    assert!(disconnected < 20, "{disconnected}/200 disconnected");
    for r in &rows {
        assert!(r.error.is_empty(), "{}", r.error);
        if let (Some(l), Some(u)) = (r.lower, r.upper) {
            assert!(l <= u);
        }
    }
}
