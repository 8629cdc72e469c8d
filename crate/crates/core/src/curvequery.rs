//! Polyline queries: layered reachability over candidate points, bisection
//! on the distance guess, and walk reporting.
//!
//! For a guess `delta`, layer `i` holds the candidate vertices within
//! `delta` of `Q_i` and, for interior curve vertices, the long edges whose
//! free interval against `Q_i` is non-empty (in both directions of travel).
//! An arc between consecutive layers is accepted when a segment query from
//! the exit vertex of one node to the entry vertex of the next certifies a
//! value of at most `(1 + eps_seg) delta` on the corresponding piece of the
//! query segment. Every accepted chain yields a walk whose Fréchet distance
//! to the curve is at most the chain's bottleneck value.

use serde::Serialize;

use crate::candidates::Square;
use crate::error::{OracleError, QueryError};
use crate::geom::{bbox_diag, free_interval, polyline_frechet, Point, Segment};
use crate::index::MapMatchIndex;
use crate::seggrid::{QueryStats, SegmentAnswer};
use crate::MatchResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueryConfig {
    /// Target precision; at least the index precision.
    pub eps: f64,
    /// Absolute stopping gap of the bisection.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl QueryConfig {
    /// Defaults for an index: its precision, a tolerance of `1e-9` times the
    /// extent of graph and curve.
    pub fn for_index(index: &MapMatchIndex, q: &[Point]) -> Self {
        let diag = bbox_diag(
            index
                .graph
                .vertices()
                .iter()
                .copied()
                .chain(q.iter().copied()),
        );
        QueryConfig {
            eps: index.params.eps,
            tolerance: (1e-9 * diag).max(f64::MIN_POSITIVE),
            max_iterations: 64,
            seed: index.params.seed,
        }
    }
}

/// A node of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LayerNode {
    Vertex(usize),
    /// Directed edge `from -> to`, with the curve vertex matched inside it.
    Edge {
        edge: usize,
        from: usize,
        to: usize,
    },
}

/// How consecutive witness nodes are connected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ArcKind {
    /// Both curve vertices lie on the same directed edge.
    SameEdge,
    /// A walk from `x` to `y` matched to `rho -> sigma` on the query segment.
    Walk {
        x: usize,
        y: usize,
        rho: Point,
        sigma: Point,
        answer: SegmentAnswer,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub delta: f64,
    pub nodes: Vec<LayerNode>,
    pub arcs: Vec<ArcKind>,
    /// Largest certified piece value along the chain.
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CurveDiagnostics {
    pub decisions: usize,
    pub layer_nodes: usize,
    pub arcs_tested: usize,
    pub arcs_accepted: usize,
    pub segment: QueryStats,
    /// Pair-table lookups spent on reporting only.
    pub report_lookups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveAnswer {
    /// Certified approximation of the optimal distance (never below it).
    pub value: f64,
    /// Certified lower bound on the optimum at termination.
    pub lower: f64,
    pub witness: Option<Witness>,
    pub diagnostics: CurveDiagnostics,
}

/// Threshold factor for accepting an arc at guess `delta`.
fn arc_factor(index: &MapMatchIndex) -> f64 {
    1.0 + index.params.eps_segment()
}

#[derive(Clone, Copy)]
struct Node {
    kind: LayerNode,
    /// Distance from the curve vertex to the node's matched point.
    own: f64,
    /// Free interval of the node's exit vertex on the next segment.
    exit: Option<(usize, f64)>,
    /// Free interval of the node's entry vertex on the previous segment.
    entry: Option<(usize, f64)>,
    /// Free interval of the curve vertex on the edge (edge nodes).
    on_edge: Option<(f64, f64)>,
}

struct Reach {
    value: f64,
    pred: usize,
    arc: ArcKind,
}

fn check(index: &MapMatchIndex, q: &[Point]) -> Result<(), QueryError> {
    if q.len() < 2 {
        return Err(OracleError::CurveTooShort(q.len()).into());
    }
    if let Some(i) = q.iter().position(|p| !p.is_finite()) {
        return Err(crate::GeomError::NonFinite(i).into());
    }
    if index.graph.num_vertices() == 0 {
        return Err(OracleError::EmptyGraph.into());
    }
    Ok(())
}

fn build_layer(index: &MapMatchIndex, q: &[Point], i: usize, delta: f64) -> Vec<Node> {
    let g = &index.graph;
    let m = q.len();
    let qi = q[i];
    let sq = Square::new(qi, delta);
    let (vertices, edges) = index
        .candidates
        .sites(g, &sq, index.params.eps_candidates());
    let prev = (i > 0).then(|| Segment::new(q[i - 1], qi));
    let next = (i + 1 < m).then(|| Segment::new(qi, q[i + 1]));
    let mut out = Vec::new();
    for &z in &vertices {
        let own = g.vertex(z).dist(qi);
        if own <= delta {
            out.push(Node {
                kind: LayerNode::Vertex(z),
                own,
                exit: next.map(|_| (z, 0.0)),
                entry: prev.map(|_| (z, 1.0)),
                on_edge: None,
            });
        }
    }
    if i == 0 || i + 1 == m {
        return out;
    }
    let (prev, next) = (prev.expect("interior"), next.expect("interior"));
    for &(e, _, _) in &edges {
        let seg = g.edge_segment(e);
        let j = free_interval(qi, &seg, delta);
        if j.is_empty() {
            continue;
        }
        let own = seg.dist_to_point(qi);
        let (a, b) = g.edges()[e];
        for (from, to, on) in [(a, b, (j.lo, j.hi)), (b, a, (1.0 - j.hi, 1.0 - j.lo))] {
            let fi = free_interval(g.vertex(from), &prev, delta);
            let ti = free_interval(g.vertex(to), &next, delta);
            out.push(Node {
                kind: LayerNode::Edge { edge: e, from, to },
                own,
                exit: (!ti.is_empty()).then_some((to, ti.lo)),
                entry: (!fi.is_empty()).then_some((from, fi.hi)),
                on_edge: Some(on),
            });
        }
    }
    out
}

/// Decides the guess `delta`: returns a witness chain when every arc is
/// certified within `(1 + eps_seg) delta`, `None` otherwise.
pub fn curve_decision(
    index: &MapMatchIndex,
    q: &[Point],
    delta: f64,
    diag: &mut CurveDiagnostics,
) -> Result<Option<Witness>, QueryError> {
    check(index, q)?;
    diag.decisions += 1;
    if !(delta >= 0.0) {
        return Ok(None);
    }
    let g = &index.graph;
    let m = q.len();
    let thr = arc_factor(index) * delta;
    let mut layers: Vec<Vec<Node>> = Vec::with_capacity(m);
    let mut reach: Vec<Vec<Option<Reach>>> = Vec::with_capacity(m);
    let first = build_layer(index, q, 0, delta);
    diag.layer_nodes += first.len();
    reach.push(
        first
            .iter()
            .map(|n| {
                Some(Reach {
                    value: n.own,
                    pred: usize::MAX,
                    arc: ArcKind::SameEdge,
                })
            })
            .collect(),
    );
    layers.push(first);
    for i in 0..m - 1 {
        let seg = Segment::new(q[i], q[i + 1]);
        let cur = &layers[i];
        let mut order: Vec<usize> = (0..cur.len()).filter(|&a| reach[i][a].is_some()).collect();
        if order.is_empty() {
            return Ok(None);
        }
        order.sort_by(|&a, &b| {
            let (x, y) = (
                reach[i][a].as_ref().unwrap().value,
                reach[i][b].as_ref().unwrap().value,
            );
            x.total_cmp(&y).then(a.cmp(&b))
        });
        let nxt = build_layer(index, q, i + 1, delta);
        diag.layer_nodes += nxt.len();
        let mut row: Vec<Option<Reach>> = Vec::with_capacity(nxt.len());
        for bn in &nxt {
            let mut got: Option<Reach> = None;
            for &a in &order {
                let an = &cur[a];
                let base = reach[i][a].as_ref().unwrap().value.max(bn.own);
                if got.as_ref().is_some_and(|r| r.value <= base) {
                    break;
                }
                // continuing along one directed edge
                if let (
                    LayerNode::Edge {
                        edge: e1, from: f1, ..
                    },
                    LayerNode::Edge {
                        edge: e2, from: f2, ..
                    },
                ) = (an.kind, bn.kind)
                {
                    if e1 == e2 && f1 == f2 && an.on_edge.unwrap().0 <= bn.on_edge.unwrap().1 {
                        got = Some(Reach {
                            value: base,
                            pred: a,
                            arc: ArcKind::SameEdge,
                        });
                        break;
                    }
                }
                let (Some((x, t0)), Some((y, t1))) = (an.exit, bn.entry) else {
                    continue;
                };
                if t0 > t1 {
                    continue;
                }
                diag.arcs_tested += 1;
                let (rho, sigma) = (seg.at(t0), seg.at(t1));
                let sub = Segment::new(rho, sigma);
                let ans = index.seggrid.segment_query(
                    g,
                    &index.tree,
                    x,
                    y,
                    &sub,
                    Some(thr),
                    &mut diag.segment,
                );
                if ans.value <= thr {
                    let value = base.max(ans.value);
                    if got.as_ref().is_none_or(|r| value < r.value) {
                        got = Some(Reach {
                            value,
                            pred: a,
                            arc: ArcKind::Walk {
                                x,
                                y,
                                rho,
                                sigma,
                                answer: ans,
                            },
                        });
                    }
                }
            }
            if got.is_some() {
                diag.arcs_accepted += 1;
            }
            row.push(got);
        }
        layers.push(nxt);
        reach.push(row);
    }
    let last = &reach[m - 1];
    let Some(best) = (0..last.len())
        .filter(|&b| last[b].is_some())
        .min_by(|&a, &b| {
            last[a]
                .as_ref()
                .unwrap()
                .value
                .total_cmp(&last[b].as_ref().unwrap().value)
                .then(a.cmp(&b))
        })
    else {
        return Ok(None);
    };
    let value = last[best].as_ref().unwrap().value;
    let mut nodes = vec![layers[m - 1][best].kind];
    let mut arcs = Vec::with_capacity(m - 1);
    let mut cur = best;
    for i in (1..m).rev() {
        let r = reach[i][cur].as_ref().unwrap();
        arcs.push(r.arc);
        cur = r.pred;
        nodes.push(layers[i - 1][cur].kind);
    }
    nodes.reverse();
    arcs.reverse();
    Ok(Some(Witness {
        delta,
        nodes,
        arcs,
        value,
    }))
}

/// An upper bound on the optimum: a shortest path between the vertices
/// nearest to the curve ends.
fn initial_upper(index: &MapMatchIndex, q: &[Point]) -> f64 {
    let g = &index.graph;
    let (Some(a), Some(b)) = (g.nearest_vertex(q[0]), g.nearest_vertex(q[q.len() - 1])) else {
        return f64::INFINITY;
    };
    match g.shortest_path(a, b) {
        Some(path) => polyline_frechet(&g.walk_points(&path), q),
        None => f64::INFINITY,
    }
}

/// Curve ends sit at vertices and every curve vertex is matched to a point
/// of the graph.
fn lower_bound(index: &MapMatchIndex, q: &[Point]) -> f64 {
    let (g, c) = (&index.graph, &index.candidates);
    let near = |p: Point| c.nearest_vertex(g, p).map_or(f64::INFINITY, |(_, d)| d);
    let mut lb = near(q[0]).max(near(q[q.len() - 1]));
    for &p in &q[1..q.len() - 1] {
        lb = lb.max(c.distance_to_graph(g, p));
    }
    lb
}

/// Approximate minimum over walks of the Fréchet distance to `q`.
pub fn curve_query_with(
    index: &MapMatchIndex,
    q: &[Point],
    cfg: &QueryConfig,
) -> Result<CurveAnswer, QueryError> {
    check(index, q)?;
    if !(cfg.eps > 0.0 && cfg.eps < 1.0 + 1e-12) || !(cfg.tolerance > 0.0) {
        return Err(crate::GeomError::BadEpsilon(cfg.eps).into());
    }
    let mut diag = CurveDiagnostics::default();
    let mut lo = lower_bound(index, q);
    let rel = index.params.eps_bisect().min(cfg.eps / 16.0);
    let shrink = 1.0 - 1.5 * index.params.eps_candidates();
    let done = |diag: CurveDiagnostics, lo: f64, w: Option<Witness>| CurveAnswer {
        value: w.as_ref().map_or(f64::INFINITY, |w| w.value),
        lower: lo,
        witness: w,
        diagnostics: diag,
    };
    if let Some(w) = curve_decision(index, q, lo, &mut diag)? {
        return Ok(done(diag, lo, Some(w)));
    }
    if lo < cfg.tolerance {
        if let Some(w) = curve_decision(index, q, cfg.tolerance, &mut diag)? {
            return Ok(done(diag, lo, Some(w)));
        }
        lo = lo.max(cfg.tolerance * shrink);
    }
    let upper = initial_upper(index, q);
    if !upper.is_finite() {
        return Ok(done(diag, lo, None));
    }
    let cap = (upper / shrink).max(lo);
    // gallop up from the lower bound; small guesses are cheap to decide
    let mut best = None;
    let mut hi = lo;
    let mut step = 1.0 + cfg.eps / 4.0;
    while best.is_none() && hi < cap {
        hi = if lo > 0.0 { (lo * step).min(cap) } else { cap };
        best = curve_decision(index, q, hi, &mut diag)?;
        if best.is_none() {
            lo = hi;
            step *= step;
        }
    }
    let mut grow = 0;
    while best.is_none() && grow < 60 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        best = curve_decision(index, q, hi, &mut diag)?;
    }
    if best.is_none() {
        return Ok(done(diag, lo, None));
    }
    let mut iters = 0;
    while hi - lo > cfg.tolerance && hi > lo * (1.0 + rel) && iters < cfg.max_iterations {
        // already within a quarter of eps of the certified lower bound
        if best
            .as_ref()
            .is_some_and(|w| w.value <= lo * shrink * (1.0 + cfg.eps / 4.0))
        {
            break;
        }
        iters += 1;
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        match curve_decision(index, q, mid, &mut diag)? {
            Some(w) => {
                hi = mid;
                best = Some(w);
            }
            None => lo = mid,
        }
    }
    // The witness value certifies an upper bound; a failed guess `lo` means
    // the optimum exceeds `lo * shrink`.
    Ok(done(diag, lo * shrink, best))
}

pub fn curve_query(index: &MapMatchIndex, q: &[Point]) -> Result<CurveAnswer, QueryError> {
    curve_query_with(index, q, &QueryConfig::for_index(index, q))
}

fn append(walk: &mut Vec<usize>, part: &[usize]) {
    let skip = usize::from(!walk.is_empty() && part.first() == walk.last());
    walk.extend_from_slice(&part[skip..]);
}

/// Stitches the walk behind a witness and validates it against `q`.
pub fn report_witness(
    index: &MapMatchIndex,
    q: &[Point],
    w: &Witness,
    diag: &mut CurveDiagnostics,
) -> MatchResult {
    let g = &index.graph;
    let mut walk: Vec<usize> = Vec::new();
    let start = diag.segment.lookups;
    if let LayerNode::Vertex(z) = w.nodes[0] {
        walk.push(z);
    }
    for (i, arc) in w.arcs.iter().enumerate() {
        if let ArcKind::Walk {
            x,
            y,
            rho,
            sigma,
            answer,
        } = arc
        {
            let sub = Segment::new(*rho, *sigma);
            let part =
                index
                    .seggrid
                    .report_for(g, &index.tree, *x, *y, &sub, answer, &mut diag.segment);
            if part.path.is_empty() {
                walk.clear();
                break;
            }
            append(&mut walk, &part.path);
        }
        if let LayerNode::Edge { from, to, .. } = w.nodes[i + 1] {
            if walk.last() == Some(&from) && !matches!(w.arcs.get(i + 1), Some(ArcKind::SameEdge)) {
                walk.push(to);
            }
        }
    }
    diag.report_lookups += diag.segment.lookups - start;
    let alignment = w
        .nodes
        .iter()
        .zip(q)
        .map(|(n, &p)| match *n {
            LayerNode::Vertex(z) => g.vertex(z),
            LayerNode::Edge { edge, .. } => {
                let s = g.edge_segment(edge);
                s.at(s.closest_param(p))
            }
        })
        .collect();
    let mut result = MatchResult {
        distance: f64::INFINITY,
        path: walk,
        alignment,
    };
    if !result.path.is_empty() && g.is_walk(&result.path) {
        result.distance = polyline_frechet(&g.walk_points(&result.path), q);
    }
    let tol = 1e-9 * (1.0 + w.value);
    if !(result.distance <= w.value + tol) {
        diag.segment.fallbacks += 1;
        if let Some(m) = crate::oracle::curve_witness(g, q, w.value + tol)
            .ok()
            .flatten()
        {
            result = m;
        }
    }
    result
}

/// Curve query followed by walk reporting.
pub fn report_curve_with(
    index: &MapMatchIndex,
    q: &[Point],
    cfg: &QueryConfig,
) -> Result<(CurveAnswer, MatchResult), QueryError> {
    let mut ans = curve_query_with(index, q, cfg)?;
    let res = match ans.witness.clone() {
        Some(w) => report_witness(index, q, &w, &mut ans.diagnostics),
        None => MatchResult {
            distance: f64::INFINITY,
            path: Vec::new(),
            alignment: Vec::new(),
        },
    };
    Ok((ans, res))
}

pub fn report_curve(
    index: &MapMatchIndex,
    q: &[Point],
) -> Result<(CurveAnswer, MatchResult), QueryError> {
    report_curve_with(index, q, &QueryConfig::for_index(index, q))
}
