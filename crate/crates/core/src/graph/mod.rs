//! Straight-line embedded graphs, shortest paths, realism estimators and
//! generators.

mod estimators;
mod generate;
mod io;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::GraphError;
use crate::geom::{Point, Segment};

pub use estimators::{
    estimate_density, estimate_stretch, lanky_check, realism_report, DensityMode, RealismReport,
    StretchEstimate, EXACT_DENSITY_EDGE_CAP,
};
pub use generate::{perturbed_grid, theta_graph, GraphKind};
pub use io::{load_curve, load_graph, parse_curve, parse_graph, save_curve, save_graph, GraphFile};

/// Undirected graph embedded with straight edges.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    vertices: Vec<Point>,
    edges: Vec<(usize, usize)>,
    /// `(neighbor, edge id)`, sorted by neighbor.
    adj: Vec<Vec<(usize, usize)>>,
    /// Bounding box corners; inverted (`+inf`, `-inf`) when empty.
    bbox: (Point, Point),
}

/// A point on an edge, `t` measured from the edge's first endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePoint {
    pub edge: usize,
    pub t: f64,
    pub position: Point,
}

impl GeometricGraph {
    /// Validates ids and coordinates; duplicate edges are merged.
    pub fn new(vertices: Vec<Point>, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        if let Some(index) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(GraphError::NonFiniteVertex { index, line: None });
        }
        let n = vertices.len();
        let mut norm = Vec::with_capacity(edges.len());
        for (index, &(u, v)) in edges.iter().enumerate() {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::DanglingVertex {
                        index,
                        vertex: w,
                        line: None,
                    });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop {
                    index,
                    vertex: u,
                    line: None,
                });
            }
            norm.push((u.min(v), u.max(v)));
        }
        let mut seen = std::collections::HashSet::new();
        let edges: Vec<(usize, usize)> = norm.into_iter().filter(|e| seen.insert(*e)).collect();
        let mut adj = vec![Vec::new(); n];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adj[u].push((v, id));
            adj[v].push((u, id));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let mut bbox = (
            Point::new(f64::INFINITY, f64::INFINITY),
            Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in &vertices {
            bbox = (
                Point::new(bbox.0.x.min(p.x), bbox.0.y.min(p.y)),
                Point::new(bbox.1.x.max(p.x), bbox.1.y.max(p.y)),
            );
        }
        Ok(GeometricGraph {
            vertices,
            edges,
            adj,
            bbox,
        })
    }

    /// Lower-left and upper-right corners of the vertex bounding box.
    pub fn bbox(&self) -> Option<(Point, Point)> {
        (!self.vertices.is_empty()).then_some(self.bbox)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Complexity `|V| + |E|`.
    pub fn complexity(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_segment(&self, e: usize) -> Segment {
        let (u, v) = self.edges[e];
        Segment::new(self.vertices[u], self.vertices[v])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_segment(e).length()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_between(u, v).is_some()
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let a = self.adj.get(u)?;
        a.binary_search_by(|&(w, _)| w.cmp(&v)).ok().map(|i| a[i].1)
    }

    /// Diagonal of the vertex bounding box; the natural length scale.
    pub fn diameter(&self) -> f64 {
        crate::geom::bbox_diag(self.vertices.iter().copied())
    }

    pub fn edge_point(&self, edge: usize, t: f64) -> EdgePoint {
        EdgePoint {
            edge,
            t,
            position: self.edge_segment(edge).at(t),
        }
    }

    /// Is `walk` a sequence of vertices joined by edges?
    pub fn is_walk(&self, walk: &[usize]) -> bool {
        !walk.is_empty()
            && walk.iter().all(|&v| v < self.vertices.len())
            && walk.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }

    pub fn walk_points(&self, walk: &[usize]) -> Vec<Point> {
        walk.iter().map(|&v| self.vertices[v]).collect()
    }

    /// Single-source shortest path lengths (infinite when unreachable).
    pub fn sssp(&self, src: usize) -> Vec<f64> {
        self.sssp_with_pred(src).0
    }

    pub fn sssp_with_pred(&self, src: usize) -> (Vec<f64>, Vec<usize>) {
        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(MinItem(0.0, src));
        while let Some(MinItem(d, x)) = heap.pop() {
            if d > dist[x] {
                continue;
            }
            for &(w, e) in &self.adj[x] {
                let nd = d + self.edge_length(e);
                if nd < dist[w] {
                    dist[w] = nd;
                    pred[w] = x;
                    heap.push(MinItem(nd, w));
                }
            }
        }
        (dist, pred)
    }

    /// Shortest-path distance `d_P(u, v)`.
    pub fn graph_distance(&self, u: usize, v: usize) -> Result<f64, GraphError> {
        let n = self.vertices.len();
        if u >= n {
            return Err(GraphError::NoSuchVertex(u));
        }
        if v >= n {
            return Err(GraphError::NoSuchVertex(v));
        }
        Ok(self.sssp(u)[v])
    }

    /// A shortest walk from `u` to `v`, if connected.
    pub fn shortest_path(&self, u: usize, v: usize) -> Option<Vec<usize>> {
        let (dist, pred) = self.sssp_with_pred(u);
        if !dist[v].is_finite() {
            return None;
        }
        let mut path = vec![v];
        let mut x = v;
        while x != u {
            x = pred[x];
            path.push(x);
        }
        path.reverse();
        Some(path)
    }

    /// Shortest-path distance between two points on edges.
    pub fn edge_point_distance(&self, a: &EdgePoint, b: &EdgePoint) -> f64 {
        let (au, av) = self.edges[a.edge];
        let (bu, bv) = self.edges[b.edge];
        let la = self.edge_length(a.edge);
        let lb = self.edge_length(b.edge);
        let mut best = f64::INFINITY;
        if a.edge == b.edge {
            best = (a.t - b.t).abs() * la;
        }
        for (x, dx) in [(au, a.t * la), (av, (1.0 - a.t) * la)] {
            let d = self.sssp(x);
            for (y, dy) in [(bu, b.t * lb), (bv, (1.0 - b.t) * lb)] {
                best = best.min(dx + d[y] + dy);
            }
        }
        best
    }

    /// Vertex ids of the connected component of each vertex.
    pub fn components(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(w, _) in &self.adj[x] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn nearest_vertex(&self, p: Point) -> Option<usize> {
        (0..self.vertices.len()).min_by(|&a, &b| {
            self.vertices[a]
                .dist(p)
                .total_cmp(&self.vertices[b].dist(p))
                .then(a.cmp(&b))
        })
    }

    /// Distance from `p` to the embedded graph (vertices and edges).
    pub fn distance_to_point(&self, p: Point) -> f64 {
        let ev = self
            .vertices
            .iter()
            .map(|v| v.dist(p))
            .fold(f64::INFINITY, f64::min);
        (0..self.edges.len())
            .map(|e| self.edge_segment(e).dist_to_point(p))
            .fold(ev, f64::min)
    }
}

/// Max-heap adapter giving min-first order on `(key, id)`, ties by smaller id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MinItem(pub f64, pub usize);

impl Eq for MinItem {}

impl Ord for MinItem {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for MinItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> GeometricGraph {
        GeometricGraph::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(2.0, 0.0),
            ],
            vec![(0, 1), (1, 2)],
        )
        .unwrap()
    }

    /// Bellman-Ford, used only as an independent check of Dijkstra.
    fn bellman_ford(g: &GeometricGraph, s: usize) -> Vec<f64> {
        let mut d = vec![f64::INFINITY; g.num_vertices()];
        d[s] = 0.0;
        for _ in 0..g.num_vertices() {
            for (e, &(u, v)) in g.edges().iter().enumerate() {
                let l = g.edge_length(e);
                if d[u] + l < d[v] {
                    d[v] = d[u] + l;
                }
                if d[v] + l < d[u] {
                    d[u] = d[v] + l;
                }
            }
        }
        d
    }

    #[test]
    fn rejects_dangling_and_self_loops() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(matches!(
            GeometricGraph::new(v.clone(), vec![(0, 2)]),
            Err(GraphError::DanglingVertex {
                index: 0,
                vertex: 2,
                ..
            })
        ));
        assert!(matches!(
            GeometricGraph::new(v, vec![(1, 1)]),
            Err(GraphError::SelfLoop { .. })
        ));
    }

    #[test]
    fn duplicate_edges_merge() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        let g = GeometricGraph::new(v, vec![(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn distances_match_bellman_ford() {
        let g = perturbed_grid(5, 6, 1.0, 0.3, 11).unwrap();
        for s in [0, 7, 29] {
            let a = g.sssp(s);
            let b = bellman_ford(&g, s);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn path_distance_and_shortest_path() {
        let g = path_graph();
        assert!((g.graph_distance(0, 2).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(g.shortest_path(0, 2).unwrap(), vec![0, 1, 2]);
        assert!(g.graph_distance(0, 9).is_err());
    }

    #[test]
    fn edge_points_on_same_edge() {
        let g = path_graph();
        let a = g.edge_point(0, 0.25);
        let b = g.edge_point(0, 0.75);
        assert!((g.edge_point_distance(&a, &b) - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        let c = g.edge_point(1, 0.5);
        assert!((g.edge_point_distance(&a, &c) - 1.25 * 2f64.sqrt()).abs() < 1e-12);
    }
}
