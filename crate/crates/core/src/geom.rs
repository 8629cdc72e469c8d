//! Planar primitives and Fréchet distance kernels.
//!
//! Everything here is exact up to floating point: the polyline distance is
//! found by searching the finite set of critical values of the free-space
//! decision procedure, not by numeric bisection (unless asked for).

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeomError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point { x: a[0], y: a[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        self.dist2(o).sqrt()
    }

    pub fn dist2(self, o: Point) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Directed segment parametrized as `a + t (b - a)`, `t` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn at(&self, t: f64) -> Point {
        self.a.lerp(self.b, t)
    }

    pub fn reversed(&self) -> Segment {
        Segment::new(self.b, self.a)
    }

    /// Parameter of the point of the segment closest to `w`.
    pub fn closest_param(&self, w: Point) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 <= 0.0 {
            return 0.0;
        }
        ((w - self.a).dot(d) / len2).clamp(0.0, 1.0)
    }

    pub fn dist_to_point(&self, w: Point) -> f64 {
        self.at(self.closest_param(w)).dist(w)
    }

    /// Distance between two closed segments.
    pub fn dist_to_segment(&self, o: &Segment) -> f64 {
        if segments_intersect(self, o) {
            return 0.0;
        }
        self.dist_to_point(o.a)
            .min(self.dist_to_point(o.b))
            .min(o.dist_to_point(self.a))
            .min(o.dist_to_point(self.b))
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

pub fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let d1 = orient(t.a, t.b, s.a);
    let d2 = orient(t.a, t.b, s.b);
    let d3 = orient(s.a, s.b, t.a);
    let d4 = orient(s.a, s.b, t.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on(t.a, t.b, s.a))
        || (d2 == 0.0 && on(t.a, t.b, s.b))
        || (d3 == 0.0 && on(s.a, s.b, t.a))
        || (d4 == 0.0 && on(s.a, s.b, t.b))
}

/// Sequence of at least one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    #[serde(rename = "points")]
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeomError> {
        if vertices.is_empty() {
            return Err(GeomError::EmptyPolyline);
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite(i));
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn segment(&self, i: usize) -> Segment {
        Segment::new(self.vertices[i], self.vertices[i + 1])
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

/// Closed sub-interval of `[0, 1]`, or empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ParamInterval {
    pub const EMPTY: ParamInterval = ParamInterval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };
    pub const FULL: ParamInterval = ParamInterval { lo: 0.0, hi: 1.0 };

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    /// The same set, with the segment it parametrizes reversed.
    pub fn flipped(&self) -> ParamInterval {
        if self.is_empty() {
            *self
        } else {
            ParamInterval {
                lo: 1.0 - self.hi,
                hi: 1.0 - self.lo,
            }
        }
    }
}

/// Fréchet distance between two segments: the larger endpoint distance.
pub fn segment_frechet(s1: &Segment, s2: &Segment) -> f64 {
    s1.a.dist(s2.a).max(s1.b.dist(s2.b))
}

/// Parameters `t` with `|s(t) - w| <= delta`.
pub fn free_interval(w: Point, s: &Segment, delta: f64) -> ParamInterval {
    if !(delta >= 0.0) {
        return ParamInterval::EMPTY;
    }
    let d = s.b - s.a;
    let len2 = d.dot(d);
    if len2 <= 0.0 {
        return if s.a.dist2(w) <= delta * delta {
            ParamInterval::FULL
        } else {
            ParamInterval::EMPTY
        };
    }
    let t0 = (w - s.a).dot(d) / len2;
    let h2 = s.a.lerp(s.b, t0).dist2(w);
    let rest = delta * delta - h2;
    if rest < 0.0 {
        return ParamInterval::EMPTY;
    }
    let hw = (rest / len2).sqrt();
    let lo = (t0 - hw).max(0.0);
    let hi = (t0 + hw).min(1.0);
    if lo > hi {
        ParamInterval::EMPTY
    } else {
        ParamInterval { lo, hi }
    }
}

/// Free-space decision: is the Fréchet distance of `p` and `q` at most `delta`?
pub fn frechet_decide(p: &[Point], q: &[Point], delta: f64) -> bool {
    assert!(!p.is_empty() && !q.is_empty());
    if p.len() == 1 {
        return q.iter().all(|x| x.dist(p[0]) <= delta);
    }
    if q.len() == 1 {
        return p.iter().all(|x| x.dist(q[0]) <= delta);
    }
    if p[0].dist(q[0]) > delta || p[p.len() - 1].dist(q[q.len() - 1]) > delta {
        return false;
    }
    let n = p.len();
    let m = q.len();
    // left[j]: reachable part of the boundary at the current p-vertex over q-segment j.
    let mut left = vec![ParamInterval::EMPTY; m - 1];
    let mut full = true;
    for j in 0..m - 1 {
        let f = free_interval(p[0], &Segment::new(q[j], q[j + 1]), delta);
        if full && !f.is_empty() && f.lo == 0.0 {
            left[j] = f;
            full = f.hi == 1.0;
        } else {
            full = false;
        }
    }
    // bottom of the first cell in each column comes from the q[0] boundary.
    let mut bottom_full = true;
    for i in 0..n - 1 {
        let pseg = Segment::new(p[i], p[i + 1]);
        let f = free_interval(q[0], &pseg, delta);
        let mut bottom = if bottom_full && !f.is_empty() && f.lo == 0.0 {
            f
        } else {
            ParamInterval::EMPTY
        };
        bottom_full = !bottom.is_empty() && bottom.hi == 1.0;
        let mut next_left = vec![ParamInterval::EMPTY; m - 1];
        for j in 0..m - 1 {
            let qseg = Segment::new(q[j], q[j + 1]);
            let l = left[j];
            let right = free_interval(p[i + 1], &qseg, delta);
            let top = free_interval(q[j + 1], &pseg, delta);
            next_left[j] = if !bottom.is_empty() {
                right
            } else if !l.is_empty() && !right.is_empty() && l.lo.max(right.lo) <= right.hi {
                ParamInterval {
                    lo: l.lo.max(right.lo),
                    hi: right.hi,
                }
            } else {
                ParamInterval::EMPTY
            };
            bottom = if !l.is_empty() {
                top
            } else if !bottom.is_empty() && !top.is_empty() && bottom.lo.max(top.lo) <= top.hi {
                ParamInterval {
                    lo: bottom.lo.max(top.lo),
                    hi: top.hi,
                }
            } else {
                ParamInterval::EMPTY
            };
        }
        left = next_left;
        if i == n - 2 {
            return left[m - 2].contains(1.0) || bottom.contains(1.0);
        }
    }
    unreachable!()
}

/// How the minimum of a monotone decision problem is located.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchMode {
    /// Binary search over the sorted finite set of critical values (exact).
    Critical,
    /// Numeric bisection to the given absolute tolerance.
    Bisection { tol: f64 },
}

/// Smallest value in `cands` (sorted ascending) accepted by the monotone
/// predicate `ok`, or `None` when none is.
pub fn smallest_feasible(cands: &[f64], mut ok: impl FnMut(f64) -> bool) -> Option<f64> {
    if cands.is_empty() || !ok(cands[cands.len() - 1]) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(cands[lo])
}

/// Bisection between an infeasible `lo` and a feasible `hi`.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut ok: impl FnMut(f64) -> bool) -> f64 {
    let mut iters = 0;
    while hi - lo > tol && iters < 200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iters += 1;
    }
    hi
}

/// Relative slack added to distance thresholds in decision procedures so that
/// critical values themselves are accepted despite rounding.
pub fn slack(scale: f64) -> f64 {
    1e-12 * scale.max(1e-300) + 1e-300
}

/// Point on `s` at equal distance from `x` and `w`, if the bisector crosses it.
pub fn bisector_on_segment(x: Point, w: Point, s: &Segment) -> Option<Point> {
    let d = s.b - s.a;
    let n = w - x;
    let denom = n.dot(d);
    if denom == 0.0 {
        return None;
    }
    let mid = x.lerp(w, 0.5);
    let t = n.dot(mid - s.a) / denom;
    if (0.0..=1.0).contains(&t) {
        Some(s.at(t))
    } else {
        None
    }
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.retain(|x| x.is_finite());
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
}

fn polyline_critical_values(p: &[Point], q: &[Point]) -> Vec<f64> {
    let mut c = Vec::new();
    c.push(p[0].dist(q[0]));
    c.push(p[p.len() - 1].dist(q[q.len() - 1]));
    for (a, b) in [(p, q), (q, p)] {
        if b.len() == 1 {
            c.extend(a.iter().map(|x| x.dist(b[0])));
            continue;
        }
        for w in b.windows(2) {
            let s = Segment::new(w[0], w[1]);
            for (i, &x) in a.iter().enumerate() {
                c.push(s.dist_to_point(x));
                for &y in &a[i + 1..] {
                    if let Some(z) = bisector_on_segment(x, y, &s) {
                        c.push(z.dist(x));
                    }
                }
            }
        }
    }
    sort_dedup(&mut c);
    c
}

/// Fréchet distance between two polylines, located exactly among the critical values.
pub fn polyline_frechet(p: &[Point], q: &[Point]) -> f64 {
    polyline_frechet_with(p, q, SearchMode::Critical)
}

pub fn polyline_frechet_with(p: &[Point], q: &[Point], mode: SearchMode) -> f64 {
    assert!(
        !p.is_empty() && !q.is_empty(),
        "polylines must be non-empty"
    );
    if p.len() == 1 {
        return q.iter().map(|x| x.dist(p[0])).fold(0.0, f64::max);
    }
    if q.len() == 1 {
        return p.iter().map(|x| x.dist(q[0])).fold(0.0, f64::max);
    }
    let scale = bbox_diag(p.iter().chain(q.iter()).copied());
    let eta = slack(scale);
    let lb = p[0].dist(q[0]).max(p[p.len() - 1].dist(q[q.len() - 1]));
    match mode {
        SearchMode::Critical => {
            let mut c = polyline_critical_values(p, q);
            c.retain(|&v| v >= lb);
            smallest_feasible(&c, |d| frechet_decide(p, q, d + eta)).unwrap_or(lb)
        }
        SearchMode::Bisection { tol } => {
            if frechet_decide(p, q, lb + eta) {
                return lb;
            }
            let mut hi = lb.max(tol);
            while !frechet_decide(p, q, hi) {
                hi *= 2.0;
            }
            bisect(lb, hi, tol, |d| frechet_decide(p, q, d + eta))
        }
    }
}

pub fn bbox_diag(pts: impl Iterator<Item = Point>) -> f64 {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut any = false;
    for p in pts {
        any = true;
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if any {
        lo.dist(hi)
    } else {
        0.0
    }
}

/// Key of a point of an exponential grid, as an integer offset from the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridKey {
    Center,
    Lattice { ring: u16, ix: i32, iy: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snapped {
    Grid { key: GridKey, point: Point },
    OutOfRange,
}

/// Exponential grid around `center`: rings `[R_j, 2 R_j]` for
/// `R_j = r_min 2^j`, each covered by an axis-aligned lattice of side
/// `eps R_j / 8`. Points are implicit; [`ExpGrid::points`] enumerates them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpGrid {
    pub center: Point,
    pub base: f64,
    pub eps: f64,
    pub r_min: f64,
    pub r_max: f64,
    rings: u16,
}

pub fn build_exp_grid(center: Point, base: f64, eps: f64) -> Result<ExpGrid, GeomError> {
    if !(base > 0.0 && base.is_finite()) {
        return Err(GeomError::BadGridBase(base));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(GeomError::BadEpsilon(eps));
    }
    let r_min = eps * base / 4.0;
    let r_max = 4.0 * base / eps;
    let ratio = r_max / r_min;
    let mut j = ratio.log2().floor() as i64;
    // guard against log2 rounding either way
    while r_min * 2f64.powi(j as i32 + 1) <= r_max {
        j += 1;
    }
    while j > 0 && r_min * 2f64.powi(j as i32) > r_max {
        j -= 1;
    }
    Ok(ExpGrid {
        center,
        base,
        eps,
        r_min,
        r_max,
        rings: (j + 1) as u16,
    })
}

impl ExpGrid {
    pub fn ring_count(&self) -> usize {
        self.rings as usize
    }

    pub fn ring_radius(&self, j: u16) -> f64 {
        self.r_min * 2f64.powi(j as i32)
    }

    pub fn ring_side(&self, j: u16) -> f64 {
        self.eps * self.ring_radius(j) / 8.0
    }

    fn ring_outer(&self, j: u16) -> f64 {
        (2.0 * self.ring_radius(j)).min(self.r_max)
    }

    /// Position of a lattice key; corners just past `r_max` are pulled radially onto it.
    pub fn key_point(&self, key: GridKey) -> Point {
        match key {
            GridKey::Center => self.center,
            GridKey::Lattice { ring, ix, iy } => {
                let side = self.ring_side(ring);
                let off = Point::new(ix as f64 * side, iy as f64 * side);
                let r = off.norm();
                if r > self.r_max {
                    self.center + off * (self.r_max / r)
                } else {
                    self.center + off
                }
            }
        }
    }

    fn is_member(&self, ring: u16, ix: i32, iy: i32) -> bool {
        let side = self.ring_side(ring);
        let diag = side * std::f64::consts::SQRT_2;
        let (x, y) = (ix as f64 * side, iy as f64 * side);
        let r2 = x * x + y * y;
        let inner = self.ring_radius(ring) - diag;
        let outer = self.ring_outer(ring) + diag;
        r2 >= inner * inner && r2 <= outer * outer
    }

    /// All grid points, center first.
    pub fn points(&self) -> Vec<(GridKey, Point)> {
        let mut out = vec![(GridKey::Center, self.center)];
        for ring in 0..self.rings {
            let side = self.ring_side(ring);
            let reach = ((self.ring_outer(ring) + 2.0 * side) / side).ceil() as i32;
            for ix in -reach..=reach {
                for iy in -reach..=reach {
                    if self.is_member(ring, ix, iy) {
                        let key = GridKey::Lattice { ring, ix, iy };
                        out.push((key, self.key_point(key)));
                    }
                }
            }
        }
        out
    }

    /// Nearest grid point to `w`: the center inside `r_min`, nothing past `r_max`.
    pub fn snap(&self, w: Point) -> Snapped {
        let rho = w.dist(self.center);
        if rho < self.r_min {
            return Snapped::Grid {
                key: GridKey::Center,
                point: self.center,
            };
        }
        if rho > self.r_max {
            return Snapped::OutOfRange;
        }
        let j = ((rho / self.r_min).log2().floor().max(0.0) as u16).min(self.rings - 1);
        // a corner of the ring-j cell holding w is a member within half a
        // diagonal; points pulled onto r_max moved by at most their diagonal
        let bound = self.ring_side(j) * std::f64::consts::FRAC_1_SQRT_2;
        let mut best = (self.center.dist2(w), GridKey::Center, self.center);
        let rel = w - self.center;
        for ring in j.saturating_sub(1)..=(j + 1).min(self.rings - 1) {
            let side = self.ring_side(ring);
            let rad = bound + side * std::f64::consts::SQRT_2;
            let x0 = ((rel.x - rad) / side).floor() as i32;
            let x1 = ((rel.x + rad) / side).ceil() as i32;
            let y0 = ((rel.y - rad) / side).floor() as i32;
            let y1 = ((rel.y + rad) / side).ceil() as i32;
            for ix in x0..=x1 {
                for iy in y0..=y1 {
                    if !self.is_member(ring, ix, iy) {
                        continue;
                    }
                    let key = GridKey::Lattice { ring, ix, iy };
                    let p = self.key_point(key);
                    let d = p.dist2(w);
                    if d < best.0 || (d == best.0 && key < best.1) {
                        best = (d, key, p);
                    }
                }
            }
        }
        Snapped::Grid {
            key: best.1,
            point: best.2,
        }
    }
}
