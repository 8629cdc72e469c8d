mod common;

use common::{apsp, enumerate_min_walk, instance, noisy_walk, random_point, rng, GRID_TAU_BOUND};
use mapmatch::candidates::GonzalezSequence;
use mapmatch::geom::{
    build_exp_grid, frechet_decide, free_interval, polyline_frechet, segment_frechet, Snapped,
};
use mapmatch::graph::{estimate_density, lanky_check, perturbed_grid, realism_report, DensityMode};
use mapmatch::hierarchy::{build_hierarchy, DEFAULT_LEAF_CUTOFF};
use mapmatch::seggrid::{QueryStats, SplitLine};
use mapmatch::{oracle, GeometricGraph, IndexParams, MapMatchIndex, Point, Segment};
use proptest::prelude::*;
use rand::Rng;

fn pt() -> impl Strategy<Value = Point> {
    (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn seg() -> impl Strategy<Value = Segment> {
    (pt(), pt()).prop_map(|(a, b)| Segment::new(a, b))
}

fn tau_of(g: &GeometricGraph) -> f64 {
    lanky_check(g).max(1) as f64
}

fn small_index(n: usize, seed: u64) -> MapMatchIndex {
    let g = instance(n, seed);
    let params = IndexParams {
        seed,
        ..IndexParams::with_eps(0.25)
    };
    MapMatchIndex::build(g, params).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn segment_frechet_is_a_symmetric_premetric(s in seg(), t in seg()) {
        let d = segment_frechet(&s, &t);
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, segment_frechet(&t, &s));
        prop_assert_eq!(d == 0.0, s.a == t.a && s.b == t.b);
        prop_assert_eq!(segment_frechet(&s, &s), 0.0);
    }

    #[test]
    fn free_intervals_grow_with_delta(w in pt(), s in seg(), d1 in 0.0..40.0f64, extra in 0.0..40.0f64) {
        let small = free_interval(w, &s, d1);
        let big = free_interval(w, &s, d1 + extra);
        if !small.is_empty() {
            prop_assert!(!big.is_empty());
            prop_assert!(big.lo <= small.lo && small.hi <= big.hi);
        }
    }

    #[test]
    fn polyline_frechet_bounds(
        p in prop::collection::vec(pt(), 1..6),
        q in prop::collection::vec(pt(), 1..6),
    ) {
        let d = polyline_frechet(&p, &q);
        let ends = p[0].dist(q[0]).max(p[p.len() - 1].dist(q[q.len() - 1]));
        prop_assert!(d >= ends - 1e-9 * (1.0 + ends));
        prop_assert!(frechet_decide(&p, &q, d * (1.0 + 1e-9) + 1e-12));
    }

    #[test]
    fn two_vertex_polylines_match_segment_frechet(s in seg(), t in seg()) {
        let d = polyline_frechet(&[s.a, s.b], &[t.a, t.b]);
        let e = segment_frechet(&s, &t);
        prop_assert!((d - e).abs() <= 1e-9 * (1.0 + e), "{} vs {}", d, e);
    }

    #[test]
    fn frechet_decision_is_monotone(
        p in prop::collection::vec(pt(), 1..6),
        q in prop::collection::vec(pt(), 1..6),
        d1 in 0.0..80.0f64,
        extra in 0.0..20.0f64,
    ) {
        if frechet_decide(&p, &q, d1) {
            prop_assert!(frechet_decide(&p, &q, d1 + extra));
        }
    }

    #[test]
    fn snapping_error_is_a_quarter_eps_of_the_radius(
        c in pt(),
        base in 0.01..10.0f64,
        eps in 0.01..1.0f64,
        ang in 0.0..std::f64::consts::TAU,
        t in 0.0..1.0f64,
    ) {
        let grid = build_exp_grid(c, base, eps).unwrap();
        let r = grid.r_min * (grid.r_max / grid.r_min).powf(t);
        let w = c + Point::new(ang.cos(), ang.sin()) * r;
        match grid.snap(w) {
            Snapped::Grid { key, point } => {
                prop_assert_eq!(point, grid.key_point(key));
                prop_assert!(point.dist(w) <= eps * w.dist(c) / 4.0 * (1.0 + 1e-9));
                prop_assert_eq!(grid.snap(w), Snapped::Grid { key, point });
            }
            Snapped::OutOfRange => prop_assert!(false, "in-range point {:?} not snapped", w),
        }
    }

    #[test]
    fn sub_segments_share_split_samples(
        a in pt(),
        b in pt(),
        t in 0.0..1.0f64,
        h in 0.05..2.0f64,
        c in pt(),
        radius in 0.0..30.0f64,
    ) {
        let full = Segment::new(a, b);
        let sub = Segment::new(full.at(t), b);
        let outer = SplitLine::new(&full, h).samples_near(c, radius);
        let inner = SplitLine::new(&sub, h).samples_near(c, radius);
        // the first three samples are the endpoints and the foot of c
        for x in &inner[3..] {
            prop_assert!(
                outer[3..].iter().any(|y| y.dist(*x) <= 1e-9 * (1.0 + x.norm())),
                "sample {:?} of the sub-segment is not a sample of the segment", x
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn graph_distance_is_a_metric_above_euclid(seed in 0u64..1000, n in 8usize..40) {
        let g = instance(n, seed);
        let d = apsp(&g);
        let k = g.num_vertices();
        let mut r = rng(seed);
        for _ in 0..200 {
            let (a, b, c) = (r.gen_range(0..k), r.gen_range(0..k), r.gen_range(0..k));
            prop_assert!(d[a][c] <= d[a][b] + d[b][c] + 1e-9);
            prop_assert!(d[a][b] >= g.vertex(a).dist(g.vertex(b)) - 1e-9);
            prop_assert_eq!(d[a][b], g.graph_distance(a, b).unwrap());
        }
    }

    #[test]
    fn density_estimators_are_ordered(seed in 0u64..1000, n in 6usize..30) {
        let g = instance(n, seed);
        let exact = estimate_density(&g, DensityMode::Exact).unwrap();
        let sampled = estimate_density(&g, DensityMode::Sampled { samples: 500, seed }).unwrap();
        prop_assert!(sampled <= exact, "sampled {} > exact {}", sampled, exact);
        // seven disks of radius r / 2 cover a disk of radius r, and every
        // edge of length >= r cut by the big disk meets one of them
        prop_assert!(lanky_check(&g) <= 7 * exact, "lanky {} vs density {}", lanky_check(&g), exact);
    }

    #[test]
    fn perturbed_grids_pass_the_lankiness_gate(seed in 0u64..1000, rows in 2usize..14, cols in 2usize..14) {
        let g = perturbed_grid(rows, cols, 1.0, 0.3, seed).unwrap();
        prop_assert!(lanky_check(&g) <= GRID_TAU_BOUND, "tau {}", lanky_check(&g));
    }

    #[test]
    fn realism_reports_are_deterministic(seed in 0u64..1000) {
        let g = instance(30, seed);
        let a = realism_report(&g, seed);
        prop_assert_eq!(&a, &realism_report(&g, seed));
        prop_assert!(a.t_hat >= 1.0 - 1e-12);
    }

    #[test]
    fn oracle_segment_invariants(seed in 0u64..1000, n in 8usize..30) {
        let g = instance(n, seed);
        let mut r = rng(seed ^ 0x55);
        let k = g.num_vertices();
        for _ in 0..4 {
            let (u, v) = (r.gen_range(0..k), r.gen_range(0..k));
            let pq = Segment::new(random_point(&g, 1.0, &mut r), random_point(&g, 1.0, &mut r));
            let m = oracle::min_segment_frechet(&g, u, v, &pq).unwrap();
            let ends = g.vertex(u).dist(pq.a).max(g.vertex(v).dist(pq.b));
            prop_assert!(m.distance >= ends - 1e-12);
            prop_assert!(g.is_walk(&m.path));
            prop_assert_eq!(m.path[0], u);
            prop_assert_eq!(*m.path.last().unwrap(), v);
            let replay = polyline_frechet(&g.walk_points(&m.path), &[pq.a, pq.b]);
            prop_assert!((replay - m.distance).abs() <= 1e-7 * (1.0 + m.distance));

            let free = oracle::min_curve_frechet(&g, &[pq.a, pq.b]).unwrap();
            prop_assert!(free.distance <= m.distance + 1e-9);

            let d1 = m.distance * r.gen_range(0.5..1.5);
            let d2 = d1 * r.gen_range(1.0..1.5);
            if oracle::decide_segment(&g, u, v, &pq, d1).unwrap() {
                prop_assert!(oracle::decide_segment(&g, u, v, &pq, d2).unwrap());
            }
        }
    }

    #[test]
    fn oracle_curve_walks_replay(seed in 0u64..1000, m in 2usize..5) {
        let g = instance(20, seed);
        let mut r = rng(seed);
        let q = noisy_walk(&g, m, 0.4, &mut r);
        let res = oracle::min_curve_frechet(&g, &q).unwrap();
        prop_assert!(g.is_walk(&res.path));
        let replay = polyline_frechet(&g.walk_points(&res.path), &q);
        prop_assert!((replay - res.distance).abs() <= 1e-7 * (1.0 + res.distance));
        prop_assert!(res.distance >= oracle::curve_lower_bound(&g, &q) - 1e-12);
        prop_assert!(oracle::decide_curve(&g, &q, res.distance * 1.01 + 1e-9).unwrap());
    }

    #[test]
    fn every_vertex_sits_in_exactly_one_separator(seed in 0u64..1000, n in 8usize..60) {
        let g = instance(n, seed);
        let tree = build_hierarchy(&g, tau_of(&g), DEFAULT_LEAF_CUTOFF, seed).unwrap();
        for v in 0..g.num_vertices() {
            let owners: Vec<usize> =
                (0..tree.nodes().len()).filter(|&i| tree.node(i).col_of(v).is_some()).collect();
            prop_assert_eq!(owners, vec![tree.locate(v)]);
        }
    }

    #[test]
    fn optimal_walks_cross_an_examined_separator(seed in 0u64..1000, n in 10usize..50) {
        let g = instance(n, seed);
        let tree = build_hierarchy(&g, tau_of(&g), DEFAULT_LEAF_CUTOFF, seed).unwrap();
        let mut r = rng(seed);
        for _ in 0..5 {
            let (u, v) = (r.gen_range(0..g.num_vertices()), r.gen_range(0..g.num_vertices()));
            let pq = Segment::new(g.vertex(u), g.vertex(v));
            let walk = oracle::min_segment_frechet(&g, u, v, &pq).unwrap().path;
            let lca = tree.lca(tree.locate(u), tree.locate(v));
            let hit = tree.ancestors(lca).any(|i| walk.iter().any(|&w| tree.node(i).col_of(w).is_some()));
            prop_assert!(hit, "walk {:?} misses every transit", walk);
        }
    }

    #[test]
    fn gonzalez_prefixes_are_separated(seed in 0u64..1000, n in 5usize..50) {
        let g = instance(n, seed);
        let d = apsp(&g);
        let gs = GonzalezSequence::build(&g, seed);
        for l in 1..gs.centers.len() {
            for j in 0..l {
                prop_assert!(d[gs.centers[j]][gs.centers[l]] >= gs.radii[l - 1] - 1e-9);
            }
        }
    }

    #[test]
    fn pruned_enumeration_matches_exhaustive(seed in 0u64..1000, m in 2usize..4) {
        let g = instance(9, seed);
        let mut r = rng(seed);
        let q = noisy_walk(&g, m, 0.5, &mut r);
        let (pruned, _) = enumerate_min_walk(&g, &q, 4);
        let mut best = f64::INFINITY;
        let mut stack: Vec<Vec<usize>> = (0..g.num_vertices()).map(|v| vec![v]).collect();
        while let Some(w) = stack.pop() {
            best = best.min(polyline_frechet(&g.walk_points(&w), &q));
            if w.len() < 4 {
                for &(x, _) in g.neighbors(*w.last().unwrap()) {
                    let mut nw = w.clone();
                    nw.push(x);
                    stack.push(nw);
                }
            }
        }
        prop_assert!((pruned - best).abs() <= 1e-12 * (1.0 + best), "{} vs {}", pruned, best);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn segment_queries_are_deterministic_and_bounded(seed in 0u64..1000) {
        let index = small_index(30, seed);
        let g = &index.graph;
        let mut r = rng(seed);
        for _ in 0..4 {
            let (u, v) = (r.gen_range(0..g.num_vertices()), r.gen_range(0..g.num_vertices()));
            let pq = Segment::new(random_point(g, 0.5, &mut r), random_point(g, 0.5, &mut r));
            let opt = oracle::min_segment_frechet(g, u, v, &pq).unwrap().distance;
            let (a1, w1) = index.report_segment(u, v, &pq, &mut QueryStats::default()).unwrap();
            let (a2, w2) = index.report_segment(u, v, &pq, &mut QueryStats::default()).unwrap();
            prop_assert_eq!(a1, a2);
            prop_assert_eq!(&w1, &w2);
            let tol = 1e-9 * (1.0 + opt);
            prop_assert!(a1.value >= opt - tol);
            prop_assert!(a1.value <= (1.0 + index.params.eps_segment()) * opt + tol);
            prop_assert!(g.is_walk(&w1.path));
            prop_assert!(w1.distance <= a1.value + tol);
        }
    }

    #[test]
    fn curve_reports_respect_endpoints(seed in 0u64..1000, m in 2usize..6) {
        let index = small_index(30, seed);
        let g = &index.graph;
        let mut r = rng(seed);
        let q = noisy_walk(g, m, 0.4, &mut r);
        let (ans, res) = index.report_curve(&q).unwrap();
        let opt = oracle::min_curve_frechet(g, &q).unwrap().distance;
        let tol = 1e-9 * (1.0 + opt);
        prop_assert!(ans.lower <= opt + tol && opt <= ans.value + tol);
        prop_assert!(ans.value <= (1.0 + index.params.eps) * opt + tol);
        prop_assert!(g.is_walk(&res.path));
        let bound = (1.0 + index.params.eps) * ans.value + tol;
        prop_assert!(g.vertex(res.path[0]).dist(q[0]) <= bound);
        prop_assert!(g.vertex(*res.path.last().unwrap()).dist(q[m - 1]) <= bound);
        prop_assert!(polyline_frechet(&g.walk_points(&res.path), &q) <= ans.value + tol);
    }
}
