//! Shortest paths against exhaustive enumeration of simple paths.

use fpp_core::distributions::{DegreePmf, IntegerLaw};
use fpp_core::fpp::{PathWorkspace, SwgTrace, Stop};
use fpp_core::graph::{LazyCm, MultiGraph};
use fpp_core::stats::ks_two_sample;
use fpp_core::weights::WeightLaw;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimal `(W, H)` over all simple paths, weights summed from the endpoint
/// with the smaller index. Branches whose partial weight already exceeds the
/// best are cut, which cannot discard an optimum since weights are positive.
fn enumerate(g: &MultiGraph, u: u32, v: u32) -> Option<(f64, u32)> {
    let (a, b) = (u.min(v), u.max(v));
    let mut best: Option<(f64, u32)> = None;
    let mut on_path = vec![false; g.vertex_count()];
    fn go(g: &MultiGraph, x: u32, target: u32, w: f64, h: u32, on: &mut Vec<bool>, best: &mut Option<(f64, u32)>) {
        if x == target {
            if best.is_none_or(|(bw, bh)| w < bw || (w == bw && h < bh)) {
                *best = Some((w, h));
            }
            return;
        }
        if best.is_some_and(|(bw, _)| w > bw) {
            return;
        }
        on[x as usize] = true;
        for arc in g.arcs(x) {
            if !on[arc.to as usize] {
                go(g, arc.to, target, w + arc.weight, h + 1, on, best);
            }
        }
        on[x as usize] = false;
    }
    if a == b {
        return Some((0.0, 0));
    }
    go(g, a, b, 0.0, 0, &mut on_path, &mut best);
    best
}

#[test]
fn bidirectional_search_matches_enumeration() {
    let law = WeightLaw::exponential(1.0).unwrap();
    let degrees = DegreePmf::zipf(2.5, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ws = PathWorkspace::new();
    for _ in 0..1000 {
        let n = rng.random_range(2..=12);
        let d: Vec<u64> = (0..n).map(|_| degrees.sample(&mut rng).min(12)).collect();
        let g = MultiGraph::build_cm(&d, &mut rng).unwrap().with_weights(&law, &mut rng);
        let (u, v) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
        let p = ws.shortest_path(&g, u, v);
        match enumerate(&g, u, v) {
            Some((w, h)) => {
                assert!(p.found);
                assert_eq!((p.weight, p.hops), (w, h));
            }
            None => assert!(!p.found),
        }
    }
}

#[test]
fn symmetry_triangle_inequality_and_sandwich() {
    let law = WeightLaw::one_plus_uniform(1.0).unwrap();
    let degrees = DegreePmf::zipf(2.5, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ws = PathWorkspace::new();
    let n = 5000;
    let d = degrees.sample_many(n, &mut rng);
    let g = MultiGraph::build_cm(&d, &mut rng).unwrap().with_weights(&law, &mut rng);
    for _ in 0..300 {
        let [u, v, w] = [0; 3].map(|_| rng.random_range(0..n as u32));
        let uv = ws.shortest_path(&g, u, v);
        let vu = ws.shortest_path(&g, v, u);
        assert_eq!(uv.weight.to_bits(), vu.weight.to_bits());
        assert_eq!(uv.hops, vu.hops);
        let uw = ws.shortest_path(&g, u, w).weight;
        let wv = ws.shortest_path(&g, w, v).weight;
        assert!(uv.weight <= uw + wv + 1e-12);
        if uv.found {
            let dist = ws.graph_distance(&g, u, v).unwrap() as f64;
            assert!(dist <= uv.hops as f64 && uv.hops as f64 <= uv.weight);
        }
    }
}

#[test]
fn single_source_growth_agrees_with_bidirectional_search() {
    let law = WeightLaw::exponential(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = DegreePmf::zipf(2.5, 2).unwrap().sample_many(3000, &mut rng);
    let g = MultiGraph::build_cm(&d, &mut rng).unwrap().with_weights(&law, &mut rng);
    let mut ws = PathWorkspace::new();
    for _ in 0..100 {
        let (u, v) = (rng.random_range(0..3000), rng.random_range(0..3000));
        let mut adj = &g;
        let mut t = SwgTrace::new(&mut adj, u);
        t.grow(&mut adj, Stop::Target(v));
        let p = ws.shortest_path(&g, u, v);
        match t.time_of(v) {
            Some(time) => assert!((time - p.weight).abs() <= 1e-12 * p.weight.max(1.0)),
            None => assert!(!p.found),
        }
    }
}

#[test]
fn lazy_pairing_gives_the_same_passage_time_law() {
    // Small instance, 10^4 replicas each way.
    let degrees = [3u64, 2, 2, 3, 1, 2, 4, 2, 1, 3];
    let (u, v) = (0u32, 6u32);
    let law = WeightLaw::exponential(1.0).unwrap();
    let reps = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ws = PathWorkspace::new();
    let eager: Vec<f64> = (0..reps)
        .map(|_| {
            let g = MultiGraph::build_cm(&degrees, &mut rng).unwrap().with_weights(&law, &mut rng);
            ws.shortest_path(&g, u, v).weight
        })
        .collect();
    let lazy: Vec<f64> = (0..reps)
        .map(|i| {
            let mut cm = LazyCm::new(&degrees, law.clone(), ChaCha8Rng::seed_from_u64(1_000_000 + i)).unwrap();
            let mut t = SwgTrace::new(&mut cm, u);
            t.grow(&mut cm, Stop::Target(v));
            t.time_of(v).unwrap_or(f64::INFINITY)
        })
        .collect();
    let ks = ks_two_sample(&eager, &lazy);
    // 0.1% critical value for two samples of 10^4 is about 0.0276
    assert!(ks <= 0.0276, "KS = {ks}");
}
