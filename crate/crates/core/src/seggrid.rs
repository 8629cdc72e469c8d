//! Grid-snapped transit tables and the `(1 + eps)` segment query.
//!
//! For every transit pair `(u, s)` with `Δ = D_us` two exponential grids are
//! laid around `u` and `s` (base `Δ`, precision `eps / 4`). A table entry for
//! grid points `(p', q')` holds the exact best walk value from `u` to `s`
//! against `p'q'` together with the first hop of that walk. Entries are
//! computed on first use and memoized, so only the part of each table that
//! queries actually touch is ever materialized.

use rustc_hash::FxHashMap as HashMap;
use std::sync::Mutex;

use serde::Serialize;

use crate::geom::{build_exp_grid, polyline_frechet, ExpGrid, GridKey, Point, Segment, Snapped};
use crate::graph::GeometricGraph;
use crate::hierarchy::SeparatorTree;
use crate::MatchResult;

/// Split samples along the query segment are spaced by `C_SPLIT * eps * R`.
pub const C_SPLIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPairEntry {
    pub distance: f64,
    pub first_vertex: usize,
    pub first_param: f64,
}

#[derive(Debug)]
pub struct PairGridTable {
    pub u: usize,
    pub s: usize,
    pub delta_us: f64,
    /// Grids around `u` and `s`; absent when `Δ` is zero or infinite.
    pub grids: Option<(ExpGrid, ExpGrid)>,
    pub(crate) entries: Mutex<HashMap<(GridKey, GridKey), GridPairEntry>>,
}

impl PairGridTable {
    pub fn cached_entries(&self) -> usize {
        self.entries.lock().map_or(0, |m| m.len())
    }
}

/// All grid tables of an index, keyed by `(u, s)` with `s` the transit.
#[derive(Debug)]
pub struct SegGrid {
    pub eps: f64,
    pub eps_grid: f64,
    pub(crate) tables: HashMap<(usize, usize), PairGridTable>,
    /// Per tree node, separator columns sorted along the wider axis.
    sweeps: Vec<Sweep>,
}

#[derive(Debug, Default)]
struct Sweep {
    by_y: bool,
    keys: Vec<f64>,
    cols: Vec<u32>,
}

impl Sweep {
    fn new(g: &GeometricGraph, sep: &[usize]) -> Self {
        let span = |f: fn(Point) -> f64| {
            sep.iter()
                .map(|&s| f(g.vertex(s)))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                    (a.min(x), b.max(x))
                })
        };
        let (x0, x1) = span(|p| p.x);
        let (y0, y1) = span(|p| p.y);
        let by_y = y1 - y0 > x1 - x0;
        let key = |s: usize| if by_y { g.vertex(s).y } else { g.vertex(s).x };
        let mut cols: Vec<u32> = (0..sep.len() as u32).collect();
        cols.sort_by(|&a, &b| {
            key(sep[a as usize])
                .total_cmp(&key(sep[b as usize]))
                .then(a.cmp(&b))
        });
        let keys = cols.iter().map(|&c| key(sep[c as usize])).collect();
        Sweep { by_y, keys, cols }
    }

    /// Columns whose vertex lies in the box `lo..=hi`.
    fn window<'a>(
        &'a self,
        g: &'a GeometricGraph,
        sep: &'a [usize],
        lo: Point,
        hi: Point,
    ) -> impl Iterator<Item = usize> + 'a {
        let (a, b) = if self.by_y {
            (lo.y, hi.y)
        } else {
            (lo.x, hi.x)
        };
        let i = self.keys.partition_point(|&k| k < a);
        let j = self.keys.partition_point(|&k| k <= b);
        self.cols[i..j]
            .iter()
            .map(|&c| c as usize)
            .filter(move |&c| {
                let p = g.vertex(sep[c]);
                let o = if self.by_y { p.x } else { p.y };
                let (c0, c1) = if self.by_y {
                    (lo.x, hi.x)
                } else {
                    (lo.y, hi.y)
                };
                c0 <= o && o <= c1
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct QueryStats {
    pub examined: usize,
    pub samples: usize,
    pub lookups: usize,
    pub misses: usize,
    pub hops: usize,
    pub flips: usize,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentAnswer {
    /// Certified upper bound on the optimum, at most `(1 + eps)` times it.
    pub value: f64,
    pub transit: Option<usize>,
    pub split: Option<Point>,
    /// The 3-approximate bound from transit distances alone. Under a
    /// threshold, transits too far to matter are skipped, so a rejected query
    /// may report a larger (even infinite) value here.
    pub coarse: f64,
}

/// Creates (empty) grid tables for every stored transit pair.
pub fn build_pair_grids(
    g: &GeometricGraph,
    tree: &SeparatorTree,
    eps: f64,
) -> Result<SegGrid, crate::GeomError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(crate::GeomError::BadEpsilon(eps));
    }
    let eps_grid = eps / 4.0;
    let total: usize = tree
        .nodes()
        .iter()
        .map(|n| n.vertices.len() * n.separator.len())
        .sum();
    let mut tables = HashMap::with_capacity_and_hasher(total, Default::default());
    for (i, node) in tree.nodes().iter().enumerate() {
        for &u in &node.vertices {
            let row = tree.table_row(i, u);
            for (j, &s) in node.separator.iter().enumerate() {
                let delta = row.map_or(f64::INFINITY, |r| r[j]);
                tables.insert(
                    (u, s),
                    PairGridTable::new(u, s, delta, eps_grid, (g.vertex(u), g.vertex(s))),
                );
            }
        }
    }
    let sweeps = tree
        .nodes()
        .iter()
        .map(|n| Sweep::new(g, &n.separator))
        .collect();
    Ok(SegGrid {
        eps,
        eps_grid,
        tables,
        sweeps,
    })
}

impl PairGridTable {
    pub(crate) fn new(
        u: usize,
        s: usize,
        delta_us: f64,
        eps_grid: f64,
        (cu, cs): (Point, Point),
    ) -> Self {
        let mut grids = None;
        if delta_us > 0.0 && delta_us.is_finite() {
            if let (Ok(a), Ok(b)) = (
                build_exp_grid(cu, delta_us, eps_grid),
                build_exp_grid(cs, delta_us, eps_grid),
            ) {
                grids = Some((a, b));
            }
        }
        PairGridTable {
            u,
            s,
            delta_us,
            grids,
            entries: Mutex::new(HashMap::default()),
        }
    }
}

impl SegGrid {
    pub fn table(&self, u: usize, s: usize) -> Option<&PairGridTable> {
        self.tables.get(&(u, s))
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn cached_entries(&self) -> usize {
        self.tables.values().map(|t| t.cached_entries()).sum()
    }

    fn entry(
        &self,
        g: &GeometricGraph,
        t: &PairGridTable,
        key: (GridKey, GridKey),
        a: Point,
        b: Point,
        stats: &mut QueryStats,
    ) -> GridPairEntry {
        stats.lookups += 1;
        if let Some(e) = t.entries.lock().expect("entry cache poisoned").get(&key) {
            return *e;
        }
        stats.misses += 1;
        let m = crate::oracle::segment_match(g, t.u, t.s, &Segment::new(a, b))
            .expect("table vertices are valid");
        let e = match m {
            Some(m) => GridPairEntry {
                distance: m.distance,
                first_vertex: m.path.get(1).copied().unwrap_or(t.s),
                first_param: m.params.get(1).copied().unwrap_or(1.0),
            },
            None => GridPairEntry {
                distance: f64::INFINITY,
                first_vertex: t.s,
                first_param: 1.0,
            },
        };
        t.entries
            .lock()
            .expect("entry cache poisoned")
            .insert(key, e);
        e
    }

    /// Snapped keys for `(p, q)` on table `t`; the centre pair when a point
    /// leaves the grid or the table has no grid.
    fn keys(
        t: &PairGridTable,
        g: &GeometricGraph,
        p: Point,
        q: Point,
    ) -> ((GridKey, GridKey), Point, Point, f64, bool) {
        let cu = g.vertex(t.u);
        let cs = g.vertex(t.s);
        let centre = ((GridKey::Center, GridKey::Center), cu, cs, 0.0, false);
        let Some((gu, gs)) = &t.grids else {
            return centre;
        };
        match (gu.snap(p), gs.snap(q)) {
            (Snapped::Grid { key: kp, point: pp }, Snapped::Grid { key: kq, point: qq }) => {
                let err = pp.dist(p).max(qq.dist(q));
                ((kp, kq), pp, qq, err, true)
            }
            _ => centre,
        }
    }

    /// Certified upper bound on the best walk value from `u` to `s` against
    /// `pq`, within factor `1 + eps/4`. Returns infinity without a table
    /// lookup as soon as a lower bound reaches `cutoff`.
    pub fn pair_value(
        &self,
        g: &GeometricGraph,
        u: usize,
        s: usize,
        p: Point,
        q: Point,
        cutoff: f64,
        stats: &mut QueryStats,
    ) -> f64 {
        let Some(t) = self.tables.get(&(u, s)) else {
            return f64::INFINITY;
        };
        let delta = t.delta_us;
        let segf = p.dist(g.vertex(u)).max(q.dist(g.vertex(s)));
        if !delta.is_finite() {
            return f64::INFINITY;
        }
        if delta == 0.0 {
            return segf;
        }
        let lower = segf.max(delta - segf);
        if lower >= cutoff {
            return f64::INFINITY;
        }
        let far = delta + segf;
        let (key, pp, qq, err, inside) = Self::keys(t, g, p, q);
        if !inside {
            return far;
        }
        let e = self.entry(g, t, key, pp, qq, stats);
        (e.distance + err).min(far)
    }

    /// Transits examined for `(u, v)`, with their stored distances. With a
    /// `window`, only transits inside that box are listed.
    fn transits(
        &self,
        g: &GeometricGraph,
        tree: &SeparatorTree,
        u: usize,
        v: usize,
        window: Option<(Point, Point)>,
    ) -> Vec<(usize, f64, f64)> {
        let a = tree.lca(tree.locate(u), tree.locate(v));
        let mut out = Vec::new();
        for i in tree.ancestors(a) {
            let sep = &tree.node(i).separator;
            let (ru, rv) = (tree.table_row(i, u), tree.table_row(i, v));
            let mut push = |j: usize| {
                let dus = ru.map_or(f64::INFINITY, |r| r[j]);
                let dvs = rv.map_or(f64::INFINITY, |r| r[j]);
                out.push((sep[j], dus, dvs));
            };
            match window {
                Some((lo, hi)) => self.sweeps[i].window(g, sep, lo, hi).for_each(&mut push),
                None => (0..sep.len()).for_each(&mut push),
            }
        }
        out
    }

    /// `(1 + eps)`-approximate best walk value from `u` to `v` against `pq`.
    /// With a `threshold`, stops at the first split certifying a value at
    /// most the threshold.
    pub fn segment_query(
        &self,
        g: &GeometricGraph,
        tree: &SeparatorTree,
        u: usize,
        v: usize,
        pq: &Segment,
        threshold: Option<f64>,
        stats: &mut QueryStats,
    ) -> SegmentAnswer {
        let (p, q) = (pq.a, pq.b);
        let ends = p.dist(g.vertex(u)).max(q.dist(g.vertex(v)));
        let thr = threshold.unwrap_or(f64::INFINITY);
        // a transit farther than 3 * thr from pq has coarse value above
        // 3 * thr, so it can neither attain the coarse bound nor pass it
        let window = threshold.map(|t| {
            let r = 3.0 * t * (1.0 + 1e-9);
            (
                Point::new(p.x.min(q.x) - r, p.y.min(q.y) - r),
                Point::new(p.x.max(q.x) + r, p.y.max(q.y) + r),
            )
        });
        let all = self.transits(g, tree, u, v, window);
        stats.examined += all.len();
        let mut coarse = f64::INFINITY;
        // (s, D_us, D_vs, coarse value, base lower bound)
        let mut trans: Vec<(usize, f64, f64, f64, f64)> = Vec::with_capacity(all.len());
        for (s, dus, dvs) in all {
            let base = ends.max(pq.dist_to_point(g.vertex(s)));
            let c = dus.max(dvs) + base;
            coarse = coarse.min(c);
            if c.is_finite() && base <= thr {
                trans.push((s, dus, dvs, c, base));
            }
        }
        let mut ans = SegmentAnswer {
            value: f64::INFINITY,
            transit: None,
            split: None,
            coarse,
        };
        if !coarse.is_finite() || coarse / 3.0 > thr * (1.0 + 1e-12) {
            return ans;
        }
        trans.sort_unstable_by(|a, b| a.3.total_cmp(&b.3).then(a.0.cmp(&b.0)));
        let h = if coarse > 0.0 {
            C_SPLIT * self.eps * 2f64.powi(coarse.log2().floor() as i32)
        } else {
            1.0
        };
        let line = SplitLine::new(pq, h);
        for &(s, dus, dvs, _, base) in &trans {
            let sp = g.vertex(s);
            if base >= ans.value || base > thr {
                continue;
            }
            for r in line.samples_by_distance(sp, 2.0 * coarse) {
                let rs = r.dist(sp);
                let lb = ends
                    .max(rs)
                    .max(dus - p.dist(g.vertex(u)).max(rs))
                    .max(dvs - q.dist(g.vertex(v)).max(rs));
                let cut = ans.value.min(thr * (1.0 + 1e-12) + f64::MIN_POSITIVE);
                if rs >= cut {
                    break;
                }
                if lb >= cut {
                    continue;
                }
                stats.samples += 1;
                let t1 = self.pair_value(g, u, s, p, r, cut, stats);
                if t1 >= cut {
                    continue;
                }
                let t2 = self.pair_value(g, v, s, q, r, cut, stats);
                let val = t1.max(t2);
                if val < ans.value {
                    ans.value = val;
                    ans.transit = Some(s);
                    ans.split = Some(r);
                    if threshold.is_some() && val <= thr {
                        return ans;
                    }
                }
            }
        }
        ans
    }

    fn hop(
        &self,
        g: &GeometricGraph,
        a: usize,
        b: usize,
        alpha: Point,
        beta: Point,
        stats: &mut QueryStats,
    ) -> (usize, f64) {
        let t = &self.tables[&(a, b)];
        let (key, pp, qq, _, _) = Self::keys(t, g, alpha, beta);
        let e = self.entry(g, t, key, pp, qq, stats);
        (e.first_vertex, e.first_param)
    }

    /// Walk from `a` to `b` matched to `alpha -> beta`, following stored first
    /// hops. Each step advances whichever end has a table towards the other.
    fn expand(
        &self,
        g: &GeometricGraph,
        tree: &SeparatorTree,
        a0: usize,
        b0: usize,
        alpha0: Point,
        beta0: Point,
        stats: &mut QueryStats,
        depths: &mut Vec<usize>,
    ) -> Vec<usize> {
        let (mut a, mut b, mut alpha, mut beta) = (a0, b0, alpha0, beta0);
        let mut prefix = Vec::new();
        let mut suffix = Vec::new();
        let mut from_a = true;
        let cap = 4 * g.num_vertices() + 16;
        let mut steps = 0;
        loop {
            if a == b {
                prefix.push(a);
                break;
            }
            let fwd = self.tables.contains_key(&(a, b));
            let bwd = self.tables.contains_key(&(b, a));
            if steps >= cap || (!fwd && !bwd) {
                stats.fallbacks += 1;
                match crate::oracle::segment_match(g, a, b, &Segment::new(alpha, beta))
                    .expect("valid vertices")
                {
                    Some(m) => prefix.extend(m.path),
                    None => prefix.push(a),
                }
                break;
            }
            steps += 1;
            stats.hops += 1;
            let use_fwd = if from_a { fwd } else { !bwd };
            if use_fwd != from_a {
                stats.flips += 1;
            }
            from_a = use_fwd;
            let remaining = alpha.dist(beta);
            if use_fwd {
                depths.push(tree.node(tree.locate(b)).depth);
                let (next, t) = self.hop(g, a, b, alpha, beta, stats);
                prefix.push(a);
                alpha = alpha.lerp(beta, t);
                a = next;
            } else {
                depths.push(tree.node(tree.locate(a)).depth);
                let (next, t) = self.hop(g, b, a, beta, alpha, stats);
                suffix.push(b);
                beta = beta.lerp(alpha, t);
                b = next;
            }
            debug_assert!(
                alpha.dist(beta) <= remaining * (1.0 + 1e-12) + 1e-300,
                "remaining sub-segment grew"
            );
        }
        prefix.extend(suffix.into_iter().rev());
        prefix
    }

    /// Reports a walk from `u` to `v` for `pq`. The walk is validated against
    /// the query value; if stored hops drift past it, the exact oracle supplies
    /// the walk instead (counted in `stats.fallbacks`).
    pub fn report_path(
        &self,
        g: &GeometricGraph,
        tree: &SeparatorTree,
        u: usize,
        v: usize,
        pq: &Segment,
        stats: &mut QueryStats,
    ) -> (SegmentAnswer, MatchResult) {
        let ans = self.segment_query(g, tree, u, v, pq, None, stats);
        let res = self.report_for(g, tree, u, v, pq, &ans, stats);
        (ans, res)
    }

    /// Reports the walk behind an already computed answer.
    pub fn report_for(
        &self,
        g: &GeometricGraph,
        tree: &SeparatorTree,
        u: usize,
        v: usize,
        pq: &Segment,
        ans: &SegmentAnswer,
        stats: &mut QueryStats,
    ) -> MatchResult {
        let (Some(s), Some(r)) = (ans.transit, ans.split) else {
            return MatchResult {
                distance: f64::INFINITY,
                path: Vec::new(),
                alignment: Vec::new(),
            };
        };
        let mut depths = Vec::new();
        let mut left = self.expand(g, tree, u, s, pq.a, r, stats, &mut depths);
        let mut d2 = Vec::new();
        let mut right = self.expand(g, tree, v, s, pq.b, r, stats, &mut d2);
        right.reverse();
        left.pop();
        left.extend(right);
        let pts = [pq.a, pq.b];
        let mut distance = polyline_frechet(&g.walk_points(&left), &pts);
        let tol = 1e-9 * (1.0 + ans.value);
        if distance > ans.value + tol {
            stats.fallbacks += 1;
            if let Some(m) = crate::oracle::segment_match(g, u, v, pq).expect("valid vertices") {
                left = m.path;
                distance = m.distance;
            }
        }
        MatchResult {
            distance,
            path: left,
            alignment: vec![g.vertex(u), g.vertex(v)],
        }
    }
}

/// Split samples on a query segment: multiples of `h` along the supporting
/// line, anchored at the foot of the perpendicular from the origin, so that
/// sub-segments of one line share samples.
#[derive(Debug, Clone, Copy)]
pub struct SplitLine {
    seg: Segment,
    anchor: Point,
    dir: Point,
    h: f64,
    t0: f64,
    t1: f64,
}

impl SplitLine {
    pub fn new(seg: &Segment, h: f64) -> Self {
        let d = seg.b - seg.a;
        let len = d.norm();
        let mut dir = if len > 0.0 {
            d * (1.0 / len)
        } else {
            Point::new(1.0, 0.0)
        };
        if dir.x < 0.0 || (dir.x == 0.0 && dir.y < 0.0) {
            dir = dir * -1.0;
        }
        let anchor = seg.a - dir * seg.a.dot(dir);
        let c0 = (seg.a - anchor).dot(dir);
        let c1 = (seg.b - anchor).dot(dir);
        SplitLine {
            seg: *seg,
            anchor,
            dir,
            h,
            t0: c0.min(c1),
            t1: c0.max(c1),
        }
    }

    /// Segment endpoints, the foot of `c`, and lattice points within `radius` of `c`.
    pub fn samples_near(&self, c: Point, radius: f64) -> Vec<Point> {
        let mut out = vec![
            self.seg.a,
            self.seg.b,
            self.seg.at(self.seg.closest_param(c)),
        ];
        if let Some((k0, k1, _)) = self.lattice_range(c, radius) {
            out.extend((k0..=k1).map(|k| self.lattice_point(k)));
        }
        out
    }

    /// The same samples as [`SplitLine::samples_near`], nearest to `c` first.
    pub fn samples_by_distance(&self, c: Point, radius: f64) -> Vec<Point> {
        let mut special = [
            self.seg.a,
            self.seg.b,
            self.seg.at(self.seg.closest_param(c)),
        ];
        special.sort_by(|a, b| a.dist(c).total_cmp(&b.dist(c)));
        let Some((k0, k1, cc)) = self.lattice_range(c, radius) else {
            return special.to_vec();
        };
        let mut out = Vec::with_capacity((k1 - k0 + 4) as usize);
        // lattice distances grow away from the foot of c in both directions
        let split = ((cc / self.h).floor() as i64).clamp(k0 - 1, k1);
        let (mut l, mut r) = (split, split + 1);
        let mut sp = special.iter().peekable();
        while l >= k0 || r <= k1 {
            let take_left = r > k1
                || (l >= k0 && self.lattice_point(l).dist(c) <= self.lattice_point(r).dist(c));
            let next = if take_left {
                self.lattice_point(l)
            } else {
                self.lattice_point(r)
            };
            let d = next.dist(c);
            while let Some(&&p) = sp.peek() {
                if p.dist(c) > d {
                    break;
                }
                out.push(p);
                sp.next();
            }
            out.push(next);
            if take_left {
                l -= 1;
            } else {
                r += 1;
            }
        }
        out.extend(sp);
        out
    }

    fn lattice_point(&self, k: i64) -> Point {
        self.anchor + self.dir * (k as f64 * self.h)
    }

    /// Lattice indices within `radius` of `c`, and the coordinate of `c`
    /// along the line.
    fn lattice_range(&self, c: Point, radius: f64) -> Option<(i64, i64, f64)> {
        let cc = (c - self.anchor).dot(self.dir);
        let off = (c - self.anchor - self.dir * cc).norm();
        if off > radius || self.seg.a == self.seg.b {
            return None;
        }
        let half = (radius * radius - off * off).max(0.0).sqrt();
        let lo = (cc - half).max(self.t0);
        let hi = (cc + half).min(self.t1);
        if lo > hi {
            return None;
        }
        let k0 = (lo / self.h).ceil() as i64;
        let k1 = (hi / self.h).floor() as i64;
        (k0 <= k1).then_some((k0, k1, cc))
    }
}
