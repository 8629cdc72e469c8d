//! Exact reference matchers.
//!
//! Decisions propagate, per query segment, the earliest reachable curve
//! parameter at every vertex (a Dijkstra-style sweep keyed by that
//! parameter). Between query segments the walk may pass a curve vertex either
//! at a graph vertex or somewhere inside an edge; the latter is tracked as an
//! earliest edge parameter per directed edge. Minimization searches the
//! finite set of critical distances at which the decision can change.

use std::collections::BinaryHeap;

use crate::error::OracleError;
use crate::geom::{
    bisector_on_segment, free_interval, slack, smallest_feasible, sort_dedup, Point, Segment,
};
use crate::graph::{GeometricGraph, MinItem};
use crate::MatchResult;

/// Above this many candidate critical values the search falls back to bisection.
const CRITICAL_VALUE_CAP: usize = 400_000;

/// Walk matched to a segment, with the segment parameter reached at each walk vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMatch {
    pub distance: f64,
    pub path: Vec<usize>,
    pub params: Vec<f64>,
}

fn check_vertex(g: &GeometricGraph, v: usize) -> Result<(), OracleError> {
    if v < g.num_vertices() {
        Ok(())
    } else {
        Err(OracleError::NoSuchVertex(v))
    }
}

/// Earliest-parameter sweep for a fixed-endpoint walk `u -> v` against `seg`.
/// Returns the walk and its parameters when feasible.
fn segment_sweep(
    g: &GeometricGraph,
    u: usize,
    v: usize,
    seg: &Segment,
    delta: f64,
    steps: &mut usize,
) -> Option<(Vec<usize>, Vec<f64>)> {
    if g.vertex(u).dist(seg.a) > delta || g.vertex(v).dist(seg.b) > delta {
        return None;
    }
    // sparse state: the sweep stays inside the free space around `seg`
    let mut label: rustc_hash::FxHashMap<usize, (f64, usize)> = rustc_hash::FxHashMap::default();
    let mut heap = BinaryHeap::new();
    label.insert(u, (0.0, usize::MAX));
    heap.push(MinItem(0.0, u));
    while let Some(MinItem(s, x)) = heap.pop() {
        if s > label[&x].0 {
            continue;
        }
        if x == v {
            let mut path = vec![v];
            let mut params = vec![label[&v].0];
            let mut y = v;
            while y != u {
                y = label[&y].1;
                path.push(y);
                params.push(label[&y].0);
            }
            path.reverse();
            params.reverse();
            return Some((path, params));
        }
        for &(w, _) in g.neighbors(x) {
            *steps += 1;
            let iv = free_interval(g.vertex(w), seg, delta);
            if iv.is_empty() {
                continue;
            }
            let c = s.max(iv.lo);
            if c <= iv.hi && label.get(&w).is_none_or(|&(l, _)| c < l) {
                label.insert(w, (c, x));
                heap.push(MinItem(c, w));
            }
        }
    }
    None
}

/// Is there a walk from `u` to `v` within Fréchet distance `delta` of `pq`?
pub fn decide_segment(
    g: &GeometricGraph,
    u: usize,
    v: usize,
    pq: &Segment,
    delta: f64,
) -> Result<bool, OracleError> {
    Ok(decide_segment_counted(g, u, v, pq, delta)?.0)
}

/// As [`decide_segment`], also reporting the number of relaxation steps.
pub fn decide_segment_counted(
    g: &GeometricGraph,
    u: usize,
    v: usize,
    pq: &Segment,
    delta: f64,
) -> Result<(bool, usize), OracleError> {
    check_vertex(g, u)?;
    check_vertex(g, v)?;
    let mut steps = 0;
    let ok = segment_sweep(g, u, v, pq, delta, &mut steps).is_some();
    Ok((ok, steps))
}

fn scale_of(g: &GeometricGraph, pts: &[Point]) -> f64 {
    let corners = g.bbox().map(|(a, b)| [a, b]);
    crate::geom::bbox_diag(corners.iter().flatten().copied().chain(pts.iter().copied()))
}

/// Vertices connected to `u` through vertices within `delta` of `seg`.
fn free_component(g: &GeometricGraph, u: usize, seg: &Segment, delta: f64) -> Vec<usize> {
    let mut seen = rustc_hash::FxHashSet::default();
    let mut stack = Vec::new();
    if seg.dist_to_point(g.vertex(u)) <= delta {
        seen.insert(u);
        stack.push(u);
    }
    let mut out = Vec::new();
    while let Some(x) = stack.pop() {
        out.push(x);
        for &(w, _) in g.neighbors(x) {
            if seg.dist_to_point(g.vertex(w)) <= delta && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Locates the smallest feasible distance in `[lb, ..)` for a monotone
/// decision. `relevant(hi)` lists the critical values that can matter once
/// `hi` is known feasible; they are searched exactly when few enough,
/// otherwise the bracket is bisected down to `tol`.
fn minimize(
    lb: f64,
    cap: f64,
    tol: f64,
    mut feasible: impl FnMut(f64) -> bool,
    relevant: impl Fn(f64) -> Option<Vec<f64>>,
) -> Option<f64> {
    if feasible(lb) {
        return Some(lb);
    }
    // exponential search for a feasible upper end
    let mut lo = lb;
    let mut hi = if lb > 0.0 { 2.0 * lb } else { tol.max(1e-300) };
    loop {
        if hi >= cap {
            hi = cap;
            if !feasible(hi) {
                return None;
            }
            break;
        }
        if feasible(hi) {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    loop {
        if let Some(mut c) = relevant(hi) {
            c.retain(|&x| x > lo && x <= hi);
            c.push(hi);
            sort_dedup(&mut c);
            return smallest_feasible(&c, &mut feasible);
        }
        if hi - lo <= tol {
            return Some(hi);
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Optimal walk from `u` to `v` for the segment `pq`, or `None` when `v` is
/// unreachable from `u`.
pub fn segment_match(
    g: &GeometricGraph,
    u: usize,
    v: usize,
    pq: &Segment,
) -> Result<Option<SegmentMatch>, OracleError> {
    check_vertex(g, u)?;
    check_vertex(g, v)?;
    let pts = [pq.a, pq.b];
    let scale = scale_of(g, &pts);
    let eta = slack(scale);
    let lb = g.vertex(u).dist(pq.a).max(g.vertex(v).dist(pq.b));
    // every vertex lies inside the bounding box, so its far corner bounds
    // any walk value
    let cap = g.bbox().map_or(lb, |(lo, hi)| {
        [lo, hi, Point::new(lo.x, hi.y), Point::new(hi.x, lo.y)]
            .iter()
            .map(|c| c.dist(pq.a).max(c.dist(pq.b)))
            .fold(lb, f64::max)
    });
    let mut steps = 0;
    // only vertices a feasible walk can visit contribute critical values
    let relevant = |hi: f64| {
        let xs: Vec<Point> = free_component(g, u, pq, hi + eta)
            .into_iter()
            .map(|x| g.vertex(x))
            .collect();
        if xs.len() * xs.len() / 2 > CRITICAL_VALUE_CAP {
            return None;
        }
        let mut c = Vec::with_capacity(xs.len() * (xs.len() + 3));
        for (i, &x) in xs.iter().enumerate() {
            c.push(x.dist(pq.a));
            c.push(x.dist(pq.b));
            c.push(pq.dist_to_point(x));
            for &w in &xs[i + 1..] {
                if let Some(z) = bisector_on_segment(x, w, pq) {
                    c.push(z.dist(x));
                }
            }
        }
        Some(c)
    };
    let best = minimize(
        lb,
        cap,
        1e-10 * scale.max(1e-300),
        |d| segment_sweep(g, u, v, pq, d + eta, &mut steps).is_some(),
        relevant,
    );
    Ok(best.map(|d| {
        let (path, params) =
            segment_sweep(g, u, v, pq, d + eta, &mut steps).expect("feasible at minimum");
        SegmentMatch {
            distance: d,
            path,
            params,
        }
    }))
}

/// Exact minimum over walks `u -> v` of the Fréchet distance to `pq`.
pub fn min_segment_frechet(
    g: &GeometricGraph,
    u: usize,
    v: usize,
    pq: &Segment,
) -> Result<MatchResult, OracleError> {
    Ok(match segment_match(g, u, v, pq)? {
        Some(m) => MatchResult {
            distance: m.distance,
            alignment: vec![g.vertex(u), g.vertex(v)],
            path: m.path,
        },
        None => MatchResult {
            distance: f64::INFINITY,
            path: Vec::new(),
            alignment: Vec::new(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VPred {
    None,
    Seed,
    Vertical,
    Step(u32),
    Carry(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CPred {
    FromVertex,
    FromCarry,
}

/// Directed edge id: `2 e` runs from the first endpoint, `2 e + 1` back.
fn dir_ends(g: &GeometricGraph, d: usize) -> (usize, usize) {
    let (a, b) = g.edges()[d / 2];
    if d.is_multiple_of(2) {
        (a, b)
    } else {
        (b, a)
    }
}

fn dir_segment(g: &GeometricGraph, d: usize) -> Segment {
    let (a, b) = dir_ends(g, d);
    Segment::new(g.vertex(a), g.vertex(b))
}

fn dir_id(g: &GeometricGraph, x: usize, e: usize) -> usize {
    if g.edges()[e].0 == x {
        2 * e
    } else {
        2 * e + 1
    }
}

/// Free-endpoint propagation along the whole curve. Returns the walk and the
/// point matched to each curve vertex when feasible.
fn curve_sweep(
    g: &GeometricGraph,
    q: &[Point],
    delta: f64,
    steps: &mut usize,
) -> Option<(Vec<usize>, Vec<Point>)> {
    let n = g.num_vertices();
    let m = q.len();
    let segs = m - 1;
    let nd = 2 * g.num_edges();
    let mut label = vec![vec![f64::INFINITY; n]; segs];
    let mut vpred = vec![vec![VPred::None; n]; segs];
    // carry[j]: earliest edge parameter when the curve is at its vertex j (interior only)
    let mut carry: Vec<Vec<(f64, CPred, u32)>> = vec![Vec::new(); m];
    let mut heap = BinaryHeap::new();
    for j in 0..segs {
        let seg = Segment::new(q[j], q[j + 1]);
        let (lab_prev, lab) = if j == 0 {
            (None, &mut label[0])
        } else {
            let (a, b) = label.split_at_mut(j);
            (Some(&a[j - 1]), &mut b[0])
        };
        let vp = &mut vpred[j];
        heap.clear();
        for x in 0..n {
            let reach_prev = lab_prev.is_none_or(|p| p[x].is_finite());
            if reach_prev && g.vertex(x).dist(q[j]) <= delta {
                lab[x] = 0.0;
                vp[x] = if j == 0 { VPred::Seed } else { VPred::Vertical };
                heap.push(MinItem(0.0, x));
            }
        }
        if j > 0 {
            for (d, &(lam, _, _)) in carry[j].iter().enumerate() {
                if !lam.is_finite() {
                    continue;
                }
                let (_, w) = dir_ends(g, d);
                *steps += 1;
                let iv = free_interval(g.vertex(w), &seg, delta);
                if !iv.is_empty() && iv.lo < lab[w] {
                    lab[w] = iv.lo;
                    vp[w] = VPred::Carry(d as u32);
                    heap.push(MinItem(iv.lo, w));
                }
            }
        }
        while let Some(MinItem(s, x)) = heap.pop() {
            if s > lab[x] {
                continue;
            }
            for &(w, _) in g.neighbors(x) {
                *steps += 1;
                let iv = free_interval(g.vertex(w), &seg, delta);
                if iv.is_empty() {
                    continue;
                }
                let c = s.max(iv.lo);
                if c <= iv.hi && c < lab[w] {
                    lab[w] = c;
                    vp[w] = VPred::Step(x as u32);
                    heap.push(MinItem(c, w));
                }
            }
        }
        if j + 1 < m - 1 {
            let mut next = vec![(f64::INFINITY, CPred::FromVertex, 0u32); nd];
            let qv = q[j + 1];
            for (x, l) in lab.iter().enumerate() {
                if !l.is_finite() {
                    continue;
                }
                for &(_, e) in g.neighbors(x) {
                    *steps += 1;
                    let d = dir_id(g, x, e);
                    let jv = free_interval(qv, &dir_segment(g, d), delta);
                    if !jv.is_empty() && jv.lo < next[d].0 {
                        next[d] = (jv.lo, CPred::FromVertex, x as u32);
                    }
                }
            }
            if j > 0 {
                for d in 0..nd {
                    let lam = carry[j][d].0;
                    if !lam.is_finite() {
                        continue;
                    }
                    *steps += 1;
                    let jv = free_interval(qv, &dir_segment(g, d), delta);
                    let c = lam.max(jv.lo);
                    if !jv.is_empty() && c <= jv.hi && c < next[d].0 {
                        next[d] = (c, CPred::FromCarry, 0);
                    }
                }
            }
            carry[j + 1] = next;
        }
    }
    let last = &label[segs - 1];
    let end = (0..n).find(|&x| last[x].is_finite() && g.vertex(x).dist(q[m - 1]) <= delta)?;

    let mut rev = vec![end];
    let mut align = vec![Point::default(); m];
    align[m - 1] = g.vertex(end);
    enum State {
        V(usize, usize),
        C(usize, usize),
    }
    let mut state = State::V(segs - 1, end);
    loop {
        match state {
            State::V(j, x) => match vpred[j][x] {
                VPred::Seed => {
                    align[0] = g.vertex(x);
                    break;
                }
                VPred::Vertical => {
                    align[j] = g.vertex(x);
                    state = State::V(j - 1, x);
                }
                VPred::Step(y) => {
                    rev.push(y as usize);
                    state = State::V(j, y as usize);
                }
                VPred::Carry(d) => {
                    let (y, _) = dir_ends(g, d as usize);
                    rev.push(y);
                    state = State::C(j, d as usize);
                }
                VPred::None => unreachable!("reached vertex without predecessor"),
            },
            State::C(j, d) => {
                let (lam, how, from) = carry[j][d];
                align[j] = dir_segment(g, d).at(lam);
                state = match how {
                    CPred::FromVertex => State::V(j - 1, from as usize),
                    CPred::FromCarry => State::C(j - 1, d),
                };
            }
        }
    }
    rev.reverse();
    Some((rev, align))
}

fn check_curve(g: &GeometricGraph, q: &[Point]) -> Result<(), OracleError> {
    if q.len() < 2 {
        return Err(OracleError::CurveTooShort(q.len()));
    }
    if g.num_vertices() == 0 {
        return Err(OracleError::EmptyGraph);
    }
    Ok(())
}

/// Is there a walk within Fréchet distance `delta` of the polyline `q`?
pub fn decide_curve(g: &GeometricGraph, q: &[Point], delta: f64) -> Result<bool, OracleError> {
    Ok(decide_curve_counted(g, q, delta)?.0)
}

pub fn decide_curve_counted(
    g: &GeometricGraph,
    q: &[Point],
    delta: f64,
) -> Result<(bool, usize), OracleError> {
    check_curve(g, q)?;
    let mut steps = 0;
    let ok = curve_sweep(g, q, delta, &mut steps).is_some();
    Ok((ok, steps))
}

/// A walk within `delta` of `q`, when one exists.
pub fn curve_witness(
    g: &GeometricGraph,
    q: &[Point],
    delta: f64,
) -> Result<Option<MatchResult>, OracleError> {
    check_curve(g, q)?;
    let mut steps = 0;
    Ok(
        curve_sweep(g, q, delta, &mut steps).map(|(path, alignment)| MatchResult {
            distance: crate::geom::polyline_frechet(&g.walk_points(&path), q),
            path,
            alignment,
        }),
    )
}

/// Certified lower bound: every curve vertex is matched to a point of the
/// embedded graph, and the curve ends are matched to vertices.
pub fn curve_lower_bound(g: &GeometricGraph, q: &[Point]) -> f64 {
    let m = q.len();
    let near = |p: Point| {
        g.vertices()
            .iter()
            .map(|v| v.dist(p))
            .fold(f64::INFINITY, f64::min)
    };
    let mut lb = near(q[0]).max(near(q[m - 1]));
    for &p in &q[1..m - 1] {
        lb = lb.max(g.distance_to_point(p));
    }
    lb
}

/// Exact minimum over all walks of the Fréchet distance to `q`.
pub fn min_curve_frechet(g: &GeometricGraph, q: &[Point]) -> Result<MatchResult, OracleError> {
    check_curve(g, q)?;
    let m = q.len();
    let scale = scale_of(g, q);
    let eta = slack(scale);
    let lb = curve_lower_bound(g, q);
    let cap = g
        .vertices()
        .iter()
        .map(|x| q.iter().map(|p| x.dist(*p)).fold(0.0, f64::max))
        .fold(lb, f64::max);
    let mut steps = 0;
    let relevant = |hi: f64| {
        let near_curve = |x: Point| {
            (0..m - 1).any(|j| Segment::new(q[j], q[j + 1]).dist_to_point(x) <= hi + eta)
        };
        let xs: Vec<Point> = g
            .vertices()
            .iter()
            .copied()
            .filter(|&x| near_curve(x))
            .collect();
        let es: Vec<Segment> = (0..g.num_edges())
            .map(|e| g.edge_segment(e))
            .filter(|s| q[1..m - 1].iter().any(|&p| s.dist_to_point(p) <= hi + eta))
            .collect();
        if xs.len() * xs.len() * (m - 1) / 2 + es.len() * m * m / 2 > CRITICAL_VALUE_CAP {
            return None;
        }
        let mut c = Vec::new();
        for j in 0..m - 1 {
            let seg = Segment::new(q[j], q[j + 1]);
            for (i, &x) in xs.iter().enumerate() {
                c.push(seg.dist_to_point(x));
                for &w in &xs[i + 1..] {
                    if let Some(z) = bisector_on_segment(x, w, &seg) {
                        c.push(z.dist(x));
                    }
                }
            }
        }
        for &x in &xs {
            c.extend(q.iter().map(|p| p.dist(x)));
        }
        for s in &es {
            for i in 1..m - 1 {
                c.push(s.dist_to_point(q[i]));
                for k in i + 1..m - 1 {
                    if let Some(z) = bisector_on_segment(q[i], q[k], s) {
                        c.push(z.dist(q[i]));
                    }
                }
            }
        }
        Some(c)
    };
    let best = minimize(
        lb,
        cap,
        1e-10 * scale.max(1e-300),
        |d| curve_sweep(g, q, d + eta, &mut steps).is_some(),
        relevant,
    );
    Ok(match best {
        Some(d) => {
            let (path, alignment) =
                curve_sweep(g, q, d + eta, &mut steps).expect("feasible at minimum");
            MatchResult {
                distance: d,
                path,
                alignment,
            }
        }
        None => MatchResult {
            distance: f64::INFINITY,
            path: Vec::new(),
            alignment: Vec::new(),
        },
    })
}
