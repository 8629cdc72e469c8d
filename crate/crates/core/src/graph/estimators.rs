use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::GeometricGraph;
use crate::error::GraphError;
use crate::geom::{Point, Segment};

/// Above this many edges the exact density search is refused.
pub const EXACT_DENSITY_EDGE_CAP: usize = 2000;

const ALL_PAIRS_STRETCH_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMode {
    /// Maximum over all critical disks.
    Exact,
    /// Maximum over random disks; a lower bound on the exact value.
    Sampled { samples: usize, seed: u64 },
}

/// Largest number of edges of length at least `2r` meeting a disk of radius `r`.
pub fn estimate_density(g: &GeometricGraph, mode: DensityMode) -> Result<usize, GraphError> {
    match mode {
        DensityMode::Exact => {
            if g.num_edges() > EXACT_DENSITY_EDGE_CAP {
                return Err(GraphError::TooLargeForExact {
                    edges: g.num_edges(),
                    cap: EXACT_DENSITY_EDGE_CAP,
                });
            }
            Ok(exact_density(g))
        }
        DensityMode::Sampled { samples, seed } => Ok(sampled_density(g, samples, seed)),
    }
}

fn covers(s: &Segment, c: Point, r: f64) -> bool {
    s.dist_to_point(c) <= r * (1.0 + 1e-9)
}

/// Edges bucketed on a square grid, each registered in every cell its
/// `r`-neighbourhood touches.
struct Buckets {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl Buckets {
    fn new(segs: &[(usize, Segment)], r: f64) -> Self {
        let cell = (2.0 * r).max(1e-300);
        let mut map: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, (_, s)) in segs.iter().enumerate() {
            let x0 = ((s.a.x.min(s.b.x) - r) / cell).floor() as i64;
            let x1 = ((s.a.x.max(s.b.x) + r) / cell).floor() as i64;
            let y0 = ((s.a.y.min(s.b.y) - r) / cell).floor() as i64;
            let y1 = ((s.a.y.max(s.b.y) + r) / cell).floor() as i64;
            for ix in x0..=x1 {
                for iy in y0..=y1 {
                    if s.dist_to_point(Point::new(
                        (ix as f64 + 0.5) * cell,
                        (iy as f64 + 0.5) * cell,
                    )) <= r + cell
                    {
                        map.entry((ix, iy)).or_default().push(k);
                    }
                }
            }
        }
        Buckets { cell, map }
    }

    fn near(&self, c: Point) -> &[usize] {
        let key = (
            (c.x / self.cell).floor() as i64,
            (c.y / self.cell).floor() as i64,
        );
        self.map.get(&key).map_or(&[], |v| v.as_slice())
    }
}

/// Boundary pieces of the `r`-neighbourhood of a segment.
enum Piece {
    Circle(Point),
    Line(Segment),
}

fn pieces(s: &Segment, r: f64) -> Vec<Piece> {
    let d = s.b - s.a;
    let len = d.norm();
    let mut out = vec![Piece::Circle(s.a), Piece::Circle(s.b)];
    if len > 0.0 {
        let n = Point::new(-d.y / len * r, d.x / len * r);
        out.push(Piece::Line(Segment::new(s.a + n, s.b + n)));
        out.push(Piece::Line(Segment::new(s.a - n, s.b - n)));
    }
    out
}

fn circle_line(c: Point, r: f64, s: &Segment, out: &mut Vec<Point>) {
    let d = s.b - s.a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return;
    }
    let t0 = (c - s.a).dot(d) / len2;
    let h2 = s.at(t0).dist2(c);
    if h2 > r * r * (1.0 + 1e-9) {
        return;
    }
    let hw = ((r * r - h2).max(0.0) / len2).sqrt();
    for t in [t0 - hw, t0 + hw] {
        if (-1e-12..=1.0 + 1e-12).contains(&t) {
            out.push(s.at(t.clamp(0.0, 1.0)));
        }
    }
}

fn piece_intersections(p: &Piece, q: &Piece, r: f64, out: &mut Vec<Point>) {
    match (p, q) {
        (Piece::Circle(a), Piece::Circle(b)) => {
            let d = a.dist(*b);
            if d == 0.0 || d > 2.0 * r * (1.0 + 1e-9) {
                return;
            }
            let mid = a.lerp(*b, 0.5);
            let h = (r * r - d * d / 4.0).max(0.0).sqrt();
            let perp = Point::new(-(b.y - a.y) / d, (b.x - a.x) / d);
            out.push(mid + perp * h);
            out.push(mid - perp * h);
        }
        (Piece::Circle(c), Piece::Line(s)) | (Piece::Line(s), Piece::Circle(c)) => {
            circle_line(*c, r, s, out)
        }
        (Piece::Line(s), Piece::Line(t)) => {
            let d1 = s.b - s.a;
            let d2 = t.b - t.a;
            let den = d1.cross(d2);
            if den == 0.0 {
                return;
            }
            let u = (t.a - s.a).cross(d2) / den;
            let v = (t.a - s.a).cross(d1) / den;
            if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
                out.push(s.at(u));
            }
        }
    }
}

/// For a fixed qualifying edge set the count only grows with `r`, so only
/// radii equal to half an edge length matter. For each such radius the
/// deepest point of the neighbourhood arrangement is a crossing of two
/// neighbourhood boundaries or lies in a neighbourhood contained in the rest.
fn exact_density(g: &GeometricGraph) -> usize {
    let mut lens: Vec<f64> = (0..g.num_edges()).map(|e| g.edge_length(e)).collect();
    crate::geom::sort_dedup(&mut lens);
    let mut best = 0;
    for &len in &lens {
        let r = len / 2.0;
        let segs: Vec<(usize, Segment)> = (0..g.num_edges())
            .filter(|&e| g.edge_length(e) >= len * (1.0 - 1e-12))
            .map(|e| (e, g.edge_segment(e)))
            .collect();
        if segs.len() <= best {
            continue;
        }
        let buckets = Buckets::new(&segs, r);
        let count = |c: Point| {
            buckets
                .near(c)
                .iter()
                .filter(|&&k| covers(&segs[k].1, c, r))
                .count()
        };
        let mut cands = Vec::new();
        for (i, (_, s)) in segs.iter().enumerate() {
            cands.push(s.at(0.5));
            let pi = pieces(s, r);
            for (_, t) in &segs[i + 1..] {
                if s.dist_to_segment(t) > 2.0 * r * (1.0 + 1e-9) {
                    continue;
                }
                let pj = pieces(t, r);
                for a in &pi {
                    for b in &pj {
                        piece_intersections(a, b, r, &mut cands);
                    }
                }
            }
        }
        for c in cands {
            best = best.max(count(c));
        }
    }
    best
}

fn sampled_density(g: &GeometricGraph, samples: usize, seed: u64) -> usize {
    if g.num_edges() == 0 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0;
    for _ in 0..samples {
        let e0 = rng.gen_range(0..g.num_edges());
        let r = g.edge_length(e0) / 2.0 * rng.gen_range(0.5..=1.0f64);
        let a = rng.gen::<f64>() * std::f64::consts::TAU;
        let c = g.edge_segment(e0).at(rng.gen())
            + Point::new(a.cos(), a.sin()) * (r * rng.gen::<f64>());
        let n = (0..g.num_edges())
            .filter(|&e| g.edge_length(e) >= 2.0 * r && g.edge_segment(e).dist_to_point(c) <= r)
            .count();
        best = best.max(n);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StretchEstimate {
    pub value: f64,
    pub pairs: usize,
    /// Some sampled pair was disconnected; `value` is then infinite.
    pub disconnected: bool,
}

/// Largest ratio of graph distance to Euclidean distance over vertex pairs;
/// all pairs for small graphs, otherwise `samples` random pairs.
pub fn estimate_stretch(g: &GeometricGraph, samples: usize, seed: u64) -> StretchEstimate {
    let n = g.num_vertices();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if n <= ALL_PAIRS_STRETCH_CAP {
        for u in 0..n {
            for v in u + 1..n {
                pairs.push((u, v));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            pairs.push((rng.gen_range(0..n), rng.gen_range(0..n)));
        }
        pairs.sort_unstable();
    }
    let mut value: f64 = 1.0;
    let mut disconnected = false;
    let mut cur = usize::MAX;
    let mut dist = Vec::new();
    for &(u, v) in &pairs {
        if u != cur {
            dist = g.sssp(u);
            cur = u;
        }
        let e = g.vertex(u).dist(g.vertex(v));
        if u == v || e == 0.0 {
            continue;
        }
        if !dist[v].is_finite() {
            disconnected = true;
            value = f64::INFINITY;
            continue;
        }
        value = value.max(dist[v] / e);
    }
    StretchEstimate {
        value,
        pairs: pairs.len(),
        disconnected,
    }
}

/// Largest number of edges of length at least `r` cut (exactly one endpoint
/// in the closed disk) by a disk of radius `r` centred at a vertex.
pub fn lanky_check(g: &GeometricGraph) -> usize {
    let mut best = 0;
    let mut events: Vec<(f64, u8, i32)> = Vec::new();
    for v in 0..g.num_vertices() {
        let c = g.vertex(v);
        events.clear();
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            let da = g.vertex(a).dist(c);
            let db = g.vertex(b).dist(c);
            let (lo, hi) = (da.min(db), da.max(db));
            let len = g.edge_length(e);
            if lo >= hi || len < lo || len <= 0.0 {
                continue;
            }
            // order at equal radius: open ends, then starts, then closed ends
            events.push((lo, 1, 1));
            if hi <= len {
                events.push((hi, 0, -1));
            } else {
                events.push((len, 2, -1));
            }
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut cur = 0i32;
        for &(_, _, d) in &events {
            cur += d;
            best = best.max(cur as usize);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealismReport {
    pub vertices: usize,
    pub edges: usize,
    pub lambda_hat: usize,
    pub density_exact: bool,
    pub t_hat: f64,
    pub tau_hat: usize,
    pub max_degree: usize,
    pub disconnected: bool,
}

pub fn realism_report(g: &GeometricGraph, seed: u64) -> RealismReport {
    let exact = g.num_edges() <= EXACT_DENSITY_EDGE_CAP;
    let mode = if exact {
        DensityMode::Exact
    } else {
        DensityMode::Sampled {
            samples: 20_000,
            seed,
        }
    };
    let lambda_hat = estimate_density(g, mode).unwrap_or(0);
    let st = estimate_stretch(g, 2000, seed);
    RealismReport {
        vertices: g.num_vertices(),
        edges: g.num_edges(),
        lambda_hat,
        density_exact: exact,
        t_hat: st.value,
        tau_hat: lanky_check(g),
        max_degree: (0..g.num_vertices())
            .map(|v| g.degree(v))
            .max()
            .unwrap_or(0),
        disconnected: st.disconnected,
    }
}
