//! Candidate points near a query vertex.
//!
//! For a square `S` of half side `r`, a small set `T` of points of the
//! embedded graph is produced such that every point of the graph inside `S`
//! is within shortest-path distance `eps r` of some member of `T`. Vertices
//! come from a prefix of a farthest-first traversal; long edges, found by
//! stabbing troughs, are sampled evenly.

mod gonzalez;
mod kdtree;
mod trough;

pub use gonzalez::GonzalezSequence;
pub use kdtree::{RankedKdTree, Square};
pub use trough::{Trough, TroughIndex};

use crate::geom::{Point, Segment};
use crate::graph::{EdgePoint, GeometricGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Site {
    Vertex(usize),
    Edge(EdgePoint),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub point: Point,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateSet {
    /// Vertex candidates (sorted ids).
    pub vertices: Vec<usize>,
    /// Long edges that were sampled (sorted ids).
    pub edges: Vec<usize>,
    /// All candidate points: vertices first, then edge samples.
    pub points: Vec<Candidate>,
}

/// Clustering, rank-aware point index and trough index of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateIndex {
    pub gonzalez: GonzalezSequence,
    pub kd: RankedKdTree,
    pub troughs: TroughIndex,
}

/// Parameter range of `s` inside the square, if any.
pub fn clip_to_square(s: &Segment, sq: &Square) -> Option<(f64, f64)> {
    let d = s.b - s.a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.x, s.a.x - (sq.center.x - sq.half)),
        (d.x, (sq.center.x + sq.half) - s.a.x),
        (-d.y, s.a.y - (sq.center.y - sq.half)),
        (d.y, (sq.center.y + sq.half) - s.a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

impl CandidateIndex {
    /// `eps` is the smallest precision later queries will ask for.
    pub fn build(g: &GeometricGraph, eps: f64, seed: u64) -> Self {
        let gonzalez = GonzalezSequence::build(g, seed);
        Self::with_sequence(g, eps, gonzalez)
    }

    pub fn with_sequence(g: &GeometricGraph, eps: f64, gonzalez: GonzalezSequence) -> Self {
        let kd = RankedKdTree::build(
            (0..g.num_vertices())
                .map(|v| (g.vertex(v), v, gonzalez.rank[v]))
                .collect(),
        );
        CandidateIndex {
            gonzalez,
            kd,
            troughs: TroughIndex::build(g, eps),
        }
    }

    /// Nearest vertex to `p` and its distance.
    pub fn nearest_vertex(&self, g: &GeometricGraph, p: Point) -> Option<(usize, f64)> {
        if g.num_vertices() == 0 {
            return None;
        }
        let mut r = 4.0 * self.troughs.z_base;
        loop {
            let hit = self
                .kd
                .query(&Square::new(p, r), usize::MAX)
                .into_iter()
                .map(|v| (v, g.vertex(v).dist(p)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            match hit {
                // anything closer would lie inside the square
                Some((_, d)) if d <= r => return hit,
                Some((_, d)) => r = d,
                None => r *= 2.0,
            }
        }
    }

    /// Euclidean distance from `p` to the embedded graph.
    pub fn distance_to_graph(&self, g: &GeometricGraph, p: Point) -> f64 {
        let Some((_, dv)) = self.nearest_vertex(g, p) else {
            return f64::INFINITY;
        };
        if dv == 0.0 {
            return 0.0;
        }
        // edges closer than dv are either long enough for their trough to
        // reach height dv/4, or short with both ends near p
        let mut best = dv;
        for e in self.troughs.stab(p.x, p.y, dv / 4.0) {
            best = best.min(g.edge_segment(e).dist_to_point(p));
        }
        let reach = dv * (1.0 + self.troughs.eps / 8.0) * (1.0 + 1e-9);
        for v in self.kd.query(&Square::new(p, reach), usize::MAX) {
            for &(_, e) in g.neighbors(v) {
                best = best.min(g.edge_segment(e).dist_to_point(p));
            }
        }
        best
    }

    /// Vertices covering `V ∩ sq` within graph distance `eps * half`.
    pub fn vertex_candidates(&self, sq: &Square, eps: f64) -> Vec<usize> {
        let seq = &self.gonzalez;
        if seq.is_empty() {
            return Vec::new();
        }
        let rho = eps * sq.half;
        if seq.radii[0] < rho {
            return vec![seq.centers[0]];
        }
        let k = seq.prefix_below(rho).unwrap_or(seq.len());
        self.kd.query(&sq.scaled(2.0), k)
    }

    /// Superset of the edges of length at least `eps * half` meeting the
    /// doubled square (each returned edge has length at least half that).
    pub fn long_edges_near(&self, sq: &Square, eps: f64) -> Vec<usize> {
        debug_assert!(eps >= self.troughs.eps * (1.0 - 1e-12));
        self.troughs.stab(sq.center.x, sq.center.y, sq.half)
    }

    /// Vertex candidates and long edges crossing twice `sq`, without the
    /// sampled edge points.
    pub fn sites(
        &self,
        g: &GeometricGraph,
        sq: &Square,
        eps: f64,
    ) -> (Vec<usize>, Vec<(usize, f64, f64)>) {
        let r = sq.half;
        let vertices = self.vertex_candidates(sq, eps / 2.0);
        let mut edges = Vec::new();
        if r > 0.0 {
            let outer = sq.scaled(2.0);
            for e in self.long_edges_near(sq, eps) {
                if g.edge_length(e) < eps * r {
                    continue;
                }
                if let Some((t0, t1)) = clip_to_square(&g.edge_segment(e), &outer) {
                    edges.push((e, t0, t1));
                }
            }
        }
        (vertices, edges)
    }

    /// The candidate set for `sq` at precision `eps`.
    pub fn point_candidates(&self, g: &GeometricGraph, sq: &Square, eps: f64) -> CandidateSet {
        let r = sq.half;
        let (vertices, clipped) = self.sites(g, sq, eps);
        let mut points: Vec<Candidate> = vertices
            .iter()
            .map(|&v| Candidate {
                point: g.vertex(v),
                site: Site::Vertex(v),
            })
            .collect();
        for &(e, t0, t1) in &clipped {
            let len = g.edge_length(e);
            let k = ((t1 - t0) * len / (eps * r)).ceil().max(1.0) as usize;
            for i in 0..=k {
                let t = t0 + (t1 - t0) * i as f64 / k as f64;
                let ep = g.edge_point(e, t);
                points.push(Candidate {
                    point: ep.position,
                    site: Site::Edge(ep),
                });
            }
        }
        let edges = clipped.into_iter().map(|(e, _, _)| e).collect();
        CandidateSet {
            vertices,
            edges,
            points,
        }
    }
}
