#![allow(dead_code)]

use mapmatch::geom::{polyline_frechet, Point};
use mapmatch::graph::{lanky_check, perturbed_grid, theta_graph, EdgePoint};
use mapmatch::GeometricGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Lankiness bound a perturbed grid (perturbation at most 0.3 of the
/// spacing) must meet before it is used as a test instance.
pub const GRID_TAU_BOUND: usize = 16;

/// A perturbed grid or theta graph with roughly `n` vertices and unit
/// spacing.
pub fn instance(n: usize, seed: u64) -> GeometricGraph {
    if seed.is_multiple_of(2) {
        let rows = ((n as f64).sqrt().floor() as usize).max(2);
        let cols = (n / rows).max(2);
        let g = perturbed_grid(rows, cols, 1.0, 0.3, seed).unwrap();
        let tau = lanky_check(&g);
        assert!(
            tau <= GRID_TAU_BOUND,
            "grid instance with seed {seed} has lankiness {tau}"
        );
        g
    } else {
        let extent = (n as f64).sqrt();
        theta_graph(n, 8, extent, seed).unwrap()
    }
}

/// All-pairs shortest-path distances.
pub fn apsp(g: &GeometricGraph) -> Vec<Vec<f64>> {
    (0..g.num_vertices()).map(|v| g.sssp(v)).collect()
}

/// Graph distance between a point on an edge and a vertex.
pub fn point_to_vertex(g: &GeometricGraph, d: &[Vec<f64>], x: &EdgePoint, v: usize) -> f64 {
    let (a, b) = g.edges()[x.edge];
    let len = g.edge_length(x.edge);
    (x.t * len + d[a][v]).min((1.0 - x.t) * len + d[b][v])
}

/// Graph distance between two points on edges.
pub fn point_to_point(g: &GeometricGraph, d: &[Vec<f64>], x: &EdgePoint, y: &EdgePoint) -> f64 {
    let (c, e) = g.edges()[y.edge];
    let len = g.edge_length(y.edge);
    let mut best = (y.t * len + point_to_vertex(g, d, x, c))
        .min((1.0 - y.t) * len + point_to_vertex(g, d, x, e));
    if x.edge == y.edge {
        best = best.min((x.t - y.t).abs() * len);
    }
    best
}

/// A random walk of `m` vertices with uniform noise of radius `noise`.
pub fn noisy_walk(g: &GeometricGraph, m: usize, noise: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut v = rng.gen_range(0..g.num_vertices());
    let mut pts = Vec::with_capacity(m);
    for _ in 0..m {
        let ang = rng.gen::<f64>() * std::f64::consts::TAU;
        let r = noise * rng.gen::<f64>().sqrt();
        pts.push(g.vertex(v) + Point::new(ang.cos(), ang.sin()) * r);
        let nb = g.neighbors(v);
        v = nb[rng.gen_range(0..nb.len())].0;
    }
    pts
}

/// Uniform random point in the bounding box of the graph, padded by `pad`.
pub fn random_point(g: &GeometricGraph, pad: f64, rng: &mut ChaCha8Rng) -> Point {
    let (mut lo, mut hi) = (
        Point::new(f64::INFINITY, f64::INFINITY),
        Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in g.vertices() {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    Point::new(
        rng.gen_range(lo.x - pad..=hi.x + pad),
        rng.gen_range(lo.y - pad..=hi.y + pad),
    )
}

/// `{t in [0, 1] : |s(t) - w| <= d}` for the segment `a -> b`.
fn free(w: Point, a: Point, b: Point, d: f64) -> Option<(f64, f64)> {
    let v = b - a;
    let l2 = v.dot(v);
    if l2 == 0.0 {
        return (a.dist(w) <= d).then_some((0.0, 1.0));
    }
    let t0 = (w - a).dot(v) / l2;
    let h2 = a.lerp(b, t0).dist2(w);
    if h2 > d * d {
        return None;
    }
    let hw = ((d * d - h2) / l2).sqrt();
    let (lo, hi) = ((t0 - hw).max(0.0), (t0 + hw).min(1.0));
    (lo <= hi).then_some((lo, hi))
}

/// Can a monotone matching at level `d` start at `(p_0, q_0)` and reach the
/// last vertex of `p` somewhere along `q`? Plain free-space propagation, one
/// walk edge at a time.
pub fn prefix_reachable(p: &[Point], q: &[Point], d: f64) -> bool {
    if p[0].dist(q[0]) > d {
        return false;
    }
    if q.len() == 1 {
        return p.iter().all(|x| x.dist(q[0]) <= d);
    }
    let cols = q.len() - 1;
    // bottom[j]: reachable part of the row of the current walk vertex over
    // query segment j
    let mut bottom: Vec<Option<(f64, f64)>> = Vec::with_capacity(cols);
    let mut run = true;
    for j in 0..cols {
        let f = free(p[0], q[j], q[j + 1], d).filter(|&(lo, _)| run && lo == 0.0);
        run = f.is_some_and(|(_, hi)| hi == 1.0);
        bottom.push(f);
    }
    // is the row start at q_0 reachable straight up the first column?
    let mut col0 = true;
    for i in 0..p.len() - 1 {
        let (a, b) = (p[i], p[i + 1]);
        let mut left = if col0 {
            free(q[0], a, b, d).filter(|&(lo, _)| lo == 0.0)
        } else {
            None
        };
        col0 = left.is_some_and(|(_, hi)| hi == 1.0);
        let mut top = Vec::with_capacity(cols);
        for j in 0..cols {
            let rf = free(q[j + 1], a, b, d);
            let tf = free(b, q[j], q[j + 1], d);
            let right = match (left, bottom[j], rf) {
                (_, Some(_), Some(r)) => Some(r),
                (Some((l, _)), None, Some((lo, hi))) if l.max(lo) <= hi => Some((l.max(lo), hi)),
                _ => None,
            };
            top.push(match (left, bottom[j], tf) {
                (Some(_), _, Some(t)) => Some(t),
                (None, Some((l, _)), Some((lo, hi))) if l.max(lo) <= hi => Some((l.max(lo), hi)),
                _ => None,
            });
            left = right;
        }
        if top.iter().all(Option::is_none) {
            return false;
        }
        bottom = top;
    }
    true
}

/// Minimum Fréchet distance to `q` over all walks of at most `max_vertices`
/// vertices, by exhaustive depth-first enumeration. Prefixes that cannot be
/// matched to any prefix of `q` within the best value so far are cut.
pub fn enumerate_min_walk(
    g: &GeometricGraph,
    q: &[Point],
    max_vertices: usize,
) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    let mut walk = Vec::with_capacity(max_vertices);
    fn rec(
        g: &GeometricGraph,
        q: &[Point],
        max: usize,
        walk: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
    ) {
        let pts = g.walk_points(walk);
        if best.0.is_finite() && !prefix_reachable(&pts, q, best.0) {
            return;
        }
        if pts[pts.len() - 1].dist(q[q.len() - 1]) < best.0 {
            let d = polyline_frechet(&pts, q);
            if d < best.0 {
                *best = (d, walk.clone());
            }
        }
        if walk.len() == max {
            return;
        }
        let last = *walk.last().unwrap();
        for &(w, _) in g.neighbors(last) {
            walk.push(w);
            rec(g, q, max, walk, best);
            walk.pop();
        }
    }
    let mut starts: Vec<usize> = (0..g.num_vertices()).collect();
    starts.sort_by(|&a, &b| g.vertex(a).dist(q[0]).total_cmp(&g.vertex(b).dist(q[0])));
    for s in starts {
        if g.vertex(s).dist(q[0]) < best.0 {
            walk.push(s);
            rec(g, q, max_vertices, &mut walk, &mut best);
            walk.pop();
        }
    }
    best
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
