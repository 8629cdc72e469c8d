use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GeometricGraph;
use crate::error::GraphError;
use crate::geom::Point;

/// Generator families exposed on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    Grid {
        rows: usize,
        cols: usize,
        spacing: f64,
        perturbation: f64,
    },
    Theta {
        points: usize,
        cones: usize,
        extent: f64,
    },
}

impl GraphKind {
    pub fn generate(&self, seed: u64) -> Result<GeometricGraph, GraphError> {
        match *self {
            GraphKind::Grid {
                rows,
                cols,
                spacing,
                perturbation,
            } => perturbed_grid(rows, cols, spacing, perturbation, seed),
            GraphKind::Theta {
                points,
                cones,
                extent,
            } => theta_graph(points, cones, extent, seed),
        }
    }
}

/// `rows x cols` grid with 4-neighbour edges; every coordinate is moved
/// uniformly by at most `perturbation`.
pub fn perturbed_grid(
    rows: usize,
    cols: usize,
    spacing: f64,
    perturbation: f64,
    seed: u64,
) -> Result<GeometricGraph, GraphError> {
    if rows == 0 || cols == 0 {
        return Err(GraphError::BadParameters(
            "grid needs at least one row and column".into(),
        ));
    }
    if !(spacing > 0.0) || !(perturbation >= 0.0) || perturbation >= spacing / 2.0 {
        return Err(GraphError::BadParameters(format!(
            "need spacing > 0 and 0 <= perturbation < spacing/2, got spacing {spacing}, perturbation {perturbation}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut jitter = || {
                if perturbation > 0.0 {
                    rng.gen_range(-perturbation..=perturbation)
                } else {
                    0.0
                }
            };
            let (dx, dy) = (jitter(), jitter());
            vertices.push(Point::new(c as f64 * spacing + dx, r as f64 * spacing + dy));
        }
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    GeometricGraph::new(vertices, edges)
}

/// Theta graph on `points` uniform points in `[0, extent]^2` with `cones` cones.
/// Each point links to the point of each cone with the smallest projection on
/// the cone's bisector.
pub fn theta_graph(
    points: usize,
    cones: usize,
    extent: f64,
    seed: u64,
) -> Result<GeometricGraph, GraphError> {
    if cones < 4 {
        return Err(GraphError::BadParameters(format!(
            "theta graph needs at least 4 cones, got {cones}"
        )));
    }
    if !(extent > 0.0) {
        return Err(GraphError::BadParameters(format!(
            "extent must be positive, got {extent}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<Point> = (0..points)
        .map(|_| Point::new(rng.gen::<f64>() * extent, rng.gen::<f64>() * extent))
        .collect();
    let width = std::f64::consts::TAU / cones as f64;
    let mut edges = Vec::new();
    for (i, &p) in vertices.iter().enumerate() {
        let mut best: Vec<Option<(f64, usize)>> = vec![None; cones];
        for (j, &q) in vertices.iter().enumerate() {
            if i == j || p == q {
                continue;
            }
            let d = q - p;
            let ang = d.y.atan2(d.x).rem_euclid(std::f64::consts::TAU);
            let c = ((ang / width) as usize).min(cones - 1);
            let mid = (c as f64 + 0.5) * width;
            let proj = d.x * mid.cos() + d.y * mid.sin();
            if best[c].is_none_or(|(bp, _)| proj < bp) {
                best[c] = Some((proj, j));
            }
        }
        edges.extend(best.into_iter().flatten().map(|(_, j)| (i, j)));
    }
    GeometricGraph::new(vertices, edges)
}
