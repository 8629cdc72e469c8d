//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::cmp::Ordering;
use std::io::Write;
use std::time::Instant;

use common::*;
use mapmatch::candidates::{CandidateIndex, GonzalezSequence, Site, Square};
use mapmatch::curvequery::{report_curve_with, QueryConfig};
use mapmatch::geom::{polyline_frechet, Point, Segment};
use mapmatch::graph::lanky_check;
use mapmatch::hierarchy::{build_hierarchy, build_tree, DEFAULT_LEAF_CUTOFF};
use mapmatch::index::{IndexParams, MapMatchIndex};
use mapmatch::oracle;
use mapmatch::seggrid::QueryStats;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn tau_of(g: &mapmatch::GeometricGraph) -> f64 {
    lanky_check(g).max(1) as f64
}

/// Straight queries are 3-approximate.
fn criterion_1() -> Outcome {
    let mut r = rng(101);
    let (mut trials, mut worst, mut bad) = (0, 0.0f64, 0);
    for k in 0..200u64 {
        let g = instance(r.gen_range(10..=60), k);
        let tree = build_hierarchy(&g, tau_of(&g), DEFAULT_LEAF_CUTOFF, k).unwrap();
        for _ in 0..5 {
            let (u, v) = (
                r.gen_range(0..g.num_vertices()),
                r.gen_range(0..g.num_vertices()),
            );
            let seg = Segment::new(g.vertex(u), g.vertex(v));
            let exact = oracle::min_segment_frechet(&g, u, v, &seg)
                .unwrap()
                .distance;
            let got = tree.straight_query(&g, u, v).value;
            trials += 1;
            if !(exact <= got + 1e-9 && got <= 3.0 * exact + 1e-9) {
                bad += 1;
            }
            if exact > 0.0 {
                worst = worst.max(got / exact);
            }
        }
    }
    outcome(
        bad == 0,
        format!("{trials} pairs on 200 graphs, {bad} violations, worst ratio {worst:.4}"),
    )
}

/// Fixed-endpoint segment queries are within `1 + eps`.
fn criterion_2() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (eps, seed) in [(0.5, 201u64), (0.25, 202)] {
        let mut r = rng(seed);
        let (mut trials, mut bad, mut worst) = (0, 0, 1.0f64);
        let mut k = 0u64;
        while trials < 500 {
            let g = instance(r.gen_range(10..=40), seed * 1000 + k);
            k += 1;
            let (idx, _) = MapMatchIndex::build(
                g,
                IndexParams {
                    seed: k,
                    ..IndexParams::with_eps(eps)
                },
            )
            .unwrap();
            let g = &idx.graph;
            for _ in 0..10 {
                let (u, v) = (
                    r.gen_range(0..g.num_vertices()),
                    r.gen_range(0..g.num_vertices()),
                );
                let noise = r.gen_range(0.0..1.5);
                let (p, q) = if r.gen_bool(0.5) {
                    (
                        g.vertex(u) + jitter(&mut r, noise),
                        g.vertex(v) + jitter(&mut r, noise),
                    )
                } else {
                    (random_point(g, 1.0, &mut r), random_point(g, 1.0, &mut r))
                };
                let pq = Segment::new(p, q);
                let exact = oracle::min_segment_frechet(g, u, v, &pq).unwrap().distance;
                let got = idx
                    .segment_query(u, v, &pq, &mut QueryStats::default())
                    .unwrap()
                    .value;
                trials += 1;
                let ok = if exact > 1e-12 {
                    let ratio = got / exact;
                    worst = worst.max(ratio);
                    ratio >= 1.0 - 1e-6 && ratio <= 1.0 + eps + 1e-6
                } else {
                    got <= 1e-9
                };
                if !ok {
                    bad += 1;
                }
            }
        }
        pass &= bad == 0;
        details.push(format!(
            "eps {eps}: {trials} trials, {bad} violations, worst ratio {worst:.5}"
        ));
    }
    outcome(pass, details.join("; "))
}

fn jitter(r: &mut rand_chacha::ChaCha8Rng, radius: f64) -> Point {
    let a = r.gen::<f64>() * std::f64::consts::TAU;
    Point::new(a.cos(), a.sin()) * (radius * r.gen::<f64>().sqrt())
}

struct CurveTrial {
    exact: f64,
    value: f64,
    tol: f64,
    walk_ok: bool,
    walk_distance: f64,
    walk_vertices: usize,
    report_lookups: usize,
    fallbacks: usize,
}

const CURVE_EPS: f64 = 0.25;

/// Shared suite for full curve queries and their reports.
fn curve_suite() -> Vec<CurveTrial> {
    let mut r = rng(301);
    let mut out = Vec::new();
    let mut k = 0u64;
    while out.len() < 200 {
        let g = instance(r.gen_range(10..=40), 3000 + k);
        k += 1;
        let (idx, _) = MapMatchIndex::build(
            g,
            IndexParams {
                seed: k,
                ..IndexParams::with_eps(CURVE_EPS)
            },
        )
        .unwrap();
        let g = &idx.graph;
        for _ in 0..4 {
            let m = r.gen_range(2..=8);
            let q: Vec<Point> = if r.gen_bool(0.75) {
                let noise = r.gen_range(0.0..0.6);
                noisy_walk(g, m, noise, &mut r)
            } else {
                (0..m).map(|_| random_point(g, 0.5, &mut r)).collect()
            };
            let exact = oracle::min_curve_frechet(g, &q).unwrap().distance;
            let cfg = QueryConfig::for_index(&idx, &q);
            let (ans, rep) = report_curve_with(&idx, &q, &cfg).unwrap();
            let walk_ok = g.is_walk(&rep.path);
            let walk_distance = if walk_ok {
                polyline_frechet(&g.walk_points(&rep.path), &q)
            } else {
                f64::INFINITY
            };
            out.push(CurveTrial {
                exact,
                value: ans.value,
                tol: 1e-6 * g.diameter(),
                walk_ok,
                walk_distance,
                walk_vertices: rep.path.len(),
                report_lookups: ans.diagnostics.report_lookups,
                fallbacks: ans.diagnostics.segment.fallbacks,
            });
        }
    }
    out
}

fn criterion_3(suite: &[CurveTrial]) -> Outcome {
    let bad = suite
        .iter()
        .filter(|t| !(t.value >= t.exact - t.tol && t.value <= (1.0 + CURVE_EPS) * t.exact + t.tol))
        .count();
    let worst = suite
        .iter()
        .filter(|t| t.exact > 0.0)
        .map(|t| t.value / t.exact)
        .fold(1.0, f64::max);
    outcome(
        bad == 0,
        format!(
            "{} curves, {bad} outside band, worst ratio {worst:.5}",
            suite.len()
        ),
    )
}

/// Pair lookups allowed per reported walk vertex, times `1 / eps`.
const REPORT_LOOKUP_CONSTANT: f64 = 2.0;

fn criterion_4(suite: &[CurveTrial]) -> Outcome {
    let invalid = suite.iter().filter(|t| !t.walk_ok).count();
    let far = suite
        .iter()
        // NaN counts as too far
        .filter(|t| {
            let bound = (1.0 + CURVE_EPS) * t.exact + t.tol;
            !matches!(
                t.walk_distance.partial_cmp(&bound),
                Some(Ordering::Less | Ordering::Equal)
            )
        })
        .count();
    let per_vertex = suite
        .iter()
        .map(|t| t.report_lookups as f64 / t.walk_vertices.max(1) as f64)
        .fold(0.0, f64::max);
    let bound = REPORT_LOOKUP_CONSTANT / CURVE_EPS;
    let fallbacks: usize = suite.iter().map(|t| t.fallbacks).sum();
    outcome(
        invalid == 0 && far == 0 && per_vertex <= bound,
        format!(
            "{} walks, {invalid} invalid, {far} too far, max {per_vertex:.2} lookups per walk vertex (bound {bound}), {fallbacks} exact fallbacks",
            suite.len()
        ),
    )
}

/// Separator balance and size.
fn criterion_5() -> Outcome {
    let mut r = rng(501);
    let (mut unbalanced, mut c_sep, mut nodes) = (0, 0.0f64, 0);
    for k in 0..100u64 {
        let n = r.gen_range(20..=500);
        let g = instance(n, 5000 + k);
        let tau = tau_of(&g);
        let tree = build_tree(&g, tau, DEFAULT_LEAF_CUTOFF, k).unwrap();
        for nd in tree.nodes() {
            nodes += 1;
            let size = nd.vertices.len();
            if let Some([a, b]) = nd.children {
                let cap = (2 * size).div_ceil(3);
                if tree.node(a).vertices.len() > cap || tree.node(b).vertices.len() > cap {
                    unbalanced += 1;
                }
            }
            c_sep = c_sep.max(nd.separator.len() as f64 / (tau * (size as f64).sqrt()));
        }
    }
    outcome(
        unbalanced == 0 && c_sep <= 8.0,
        format!("{nodes} nodes on 100 graphs, {unbalanced} unbalanced, fitted c_sep {c_sep:.3}"),
    )
}

/// Gonzalez radii, separation and square coverage.
fn criterion_6() -> Outcome {
    let mut r = rng(601);
    let (mut structural, mut separation, mut coverage) = (0, 0, 0);
    let mut trials = 0;
    for k in 0..20u64 {
        let g = instance(r.gen_range(20..=60), 6000 + k);
        let d = apsp(&g);
        let s = GonzalezSequence::build(&g, k);
        let n = g.num_vertices();
        if !s.radii.windows(2).all(|w| w[0] >= w[1]) || s.radii[n - 1] != 0.0 {
            structural += 1;
        }
        for i in 1..n {
            let reach = (0..i)
                .map(|j| d[s.centers[j]][s.centers[i]])
                .fold(f64::INFINITY, f64::min);
            if reach < s.radii[i - 1] - 1e-12 {
                structural += 1;
            }
        }
        let idx = CandidateIndex::with_sequence(&g, 0.1, s);
        for _ in 0..10 {
            trials += 1;
            let sq = Square::new(random_point(&g, 0.5, &mut r), r.gen_range(0.2..4.0));
            let eps = [0.5, 0.25, 0.1][r.gen_range(0..3)];
            let c = idx.vertex_candidates(&sq, eps);
            let rho = eps * sq.half;
            if c.len() > 1 {
                for (i, &a) in c.iter().enumerate() {
                    if c[i + 1..].iter().any(|&b| d[a][b] < rho - 1e-12) {
                        separation += 1;
                    }
                }
            }
            for v in (0..n).filter(|&v| sq.contains(g.vertex(v))) {
                if !c.iter().any(|&z| d[v][z] <= rho + 1e-12) {
                    coverage += 1;
                }
            }
        }
    }
    outcome(
        structural + separation + coverage == 0,
        format!("{trials} square queries, {structural} sequence, {separation} separation, {coverage} coverage violations"),
    )
}

/// Troughs and edge-point candidates.
fn criterion_7() -> Outcome {
    let mut r = rng(701);
    let (mut stab_bad, mut stabs, mut cover_bad, mut samples) = (0, 0, 0, 0);
    let mut worst_growth = 0.0f64;
    for k in 0..100u64 {
        let g = instance(r.gen_range(10..=60), 7000 + k);
        let d = apsp(&g);
        let idx = CandidateIndex::build(&g, 0.125, k);
        for _ in 0..20 {
            let p = random_point(&g, 2.0, &mut r);
            let z = r.gen::<f64>().powi(2) * 20.0;
            let want: Vec<usize> = idx
                .troughs
                .troughs
                .iter()
                .filter(|t| t.contains(p.x, p.y, z))
                .map(|t| t.edge)
                .collect();
            stabs += 1;
            if idx.troughs.stab(p.x, p.y, z) != want {
                stab_bad += 1;
            }
        }
        let sq = Square::new(random_point(&g, 0.0, &mut r), r.gen_range(0.3..4.0));
        let eps = 0.25;
        let cs = idx.point_candidates(&g, &sq, eps);
        let small = idx.point_candidates(&g, &sq, eps / 2.0);
        if !cs.points.is_empty() {
            worst_growth = worst_growth.max(small.points.len() as f64 / cs.points.len() as f64);
        }
        for e in 0..g.num_edges() {
            for i in 0..=16 {
                let x = g.edge_point(e, i as f64 / 16.0);
                if !sq.contains(x.position) {
                    continue;
                }
                samples += 1;
                let best = cs
                    .points
                    .iter()
                    .map(|c| match c.site {
                        Site::Vertex(v) => point_to_vertex(&g, &d, &x, v),
                        Site::Edge(y) => point_to_point(&g, &d, &x, &y),
                    })
                    .fold(f64::INFINITY, f64::min);
                if best > eps * sq.half + 1e-9 {
                    cover_bad += 1;
                }
            }
        }
    }
    outcome(
        stab_bad == 0 && cover_bad == 0 && worst_growth <= 16.0,
        format!(
            "{stabs} stabs ({stab_bad} wrong), {samples} sampled points ({cover_bad} uncovered), worst |T| growth on halving eps {worst_growth:.2} (bound 16)"
        ),
    )
}

/// Scaling slopes of examined transits and table size.
fn criterion_8() -> Outcome {
    let sizes = [100usize, 200, 400, 800];
    let mut r = rng(801);
    let (mut examined, mut pairs) = (Vec::new(), Vec::new());
    for &n in &sizes {
        let (mut ex, mut tp) = (0.0, 0.0);
        let reps = 3;
        for s in 0..reps {
            let g = mapmatch::graph::theta_graph(n, 8, (n as f64).sqrt(), 8000 + s).unwrap();
            let tree = build_tree(&g, tau_of(&g), DEFAULT_LEAF_CUTOFF, s).unwrap();
            tp += tree.transit_pair_count() as f64;
            let q = 200;
            ex += (0..q)
                .map(|_| tree.examined_count(r.gen_range(0..n), r.gen_range(0..n)) as f64)
                .sum::<f64>()
                / q as f64;
        }
        examined.push(ex / reps as f64);
        pairs.push(tp / reps as f64);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let se = loglog_slope(&xs, &examined);
    let sp = loglog_slope(&xs, &pairs);
    outcome(
        (0.3..=0.7).contains(&se) && (1.2..=1.8).contains(&sp),
        format!(
            "examined slope {se:.3} (means {:?}), index size slope {sp:.3} (table entries {:?})",
            examined.iter().map(|x| x.round()).collect::<Vec<_>>(),
            pairs
        ),
    )
}

/// Oracle monotonicity and agreement with walk enumeration.
fn criterion_9() -> Outcome {
    let mut r = rng(901);
    let mut violations = 0;
    for k in 0..100u64 {
        let g = instance(r.gen_range(8..=20), 9000 + k);
        let m = r.gen_range(2..=5);
        let q = noisy_walk(&g, m, r.gen_range(0.0..1.0), &mut r);
        for _ in 0..5 {
            let a = r.gen_range(0.0..2.0);
            let b = a + r.gen_range(0.0..1.0);
            if oracle::decide_curve(&g, &q, a).unwrap() && !oracle::decide_curve(&g, &q, b).unwrap()
            {
                violations += 1;
            }
        }
    }
    let (mut mismatches, mut compared, mut bounded) = (0, 0, 0);
    for k in 0..40u64 {
        let g = instance(r.gen_range(8..=20), 9500 + k);
        let m = r.gen_range(2..=5);
        let q = noisy_walk(&g, m, r.gen_range(0.0..0.8), &mut r);
        let exact = oracle::min_curve_frechet(&g, &q).unwrap();
        let (enumerated, _) = enumerate_min_walk(&g, &q, 9);
        if exact.path.len() <= 9 {
            compared += 1;
            if (exact.distance - enumerated).abs() > 1e-9 {
                mismatches += 1;
            }
        } else {
            bounded += 1;
            if exact.distance > enumerated + 1e-9 {
                mismatches += 1;
            }
        }
    }
    outcome(
        violations == 0 && mismatches == 0,
        format!(
            "500 delta pairs, {violations} monotonicity violations; {compared} exact and {bounded} bounded enumeration comparisons, {mismatches} mismatches"
        ),
    )
}

/// Writes straight to the process stdout, which the test harness does not
/// capture, so the lines show up in passing runs too.
fn report(line: std::fmt::Arguments) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance_criteria() {
    let mut all = true;
    // ACCEPTANCE_ONLY=3,4 restricts the run to the listed criteria
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut run = |n: usize, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(n) {
            return;
        }
        let t = Instant::now();
        let o = f();
        report(format_args!(
            "criterion {n}: {} ({}) [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        ));
        all &= o.pass;
    };
    run(1, &mut criterion_1);
    run(2, &mut criterion_2);
    let t = Instant::now();
    let suite = if wanted(3) || wanted(4) {
        curve_suite()
    } else {
        Vec::new()
    };
    report(format_args!(
        "curve suite built in {:.1}s",
        t.elapsed().as_secs_f64()
    ));
    run(3, &mut || criterion_3(&suite));
    run(4, &mut || criterion_4(&suite));
    run(5, &mut criterion_5);
    run(6, &mut criterion_6);
    run(7, &mut criterion_7);
    run(8, &mut criterion_8);
    run(9, &mut criterion_9);
    assert!(all, "some acceptance criteria failed");
}
