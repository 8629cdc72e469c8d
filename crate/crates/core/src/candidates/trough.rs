use std::collections::HashMap;

use crate::geom::{Point, Segment};
use crate::graph::GeometricGraph;

/// The region `{(x, y, z) : d((x, y), e) <= 4z <= 8|e|/eps}` above an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trough {
    pub edge: usize,
    pub seg: Segment,
    pub len: f64,
    pub eps: f64,
}

impl Trough {
    pub fn new(edge: usize, seg: Segment, eps: f64) -> Self {
        Trough {
            edge,
            seg,
            len: seg.length(),
            eps,
        }
    }

    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        let d = self.seg.dist_to_point(Point::new(x, y));
        d <= 4.0 * z && 4.0 * z <= 8.0 * self.len / self.eps
    }

    fn top(&self) -> f64 {
        2.0 * self.len / self.eps
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        let r = 8.0 * self.len / self.eps;
        let (a, b) = (self.seg.a, self.seg.b);
        (
            [a.x.min(b.x) - r, a.y.min(b.y) - r, 0.0],
            [a.x.max(b.x) + r, a.y.max(b.y) + r, self.top()],
        )
    }
}

/// Troughs bucketed by height band. Band `k` covers heights up to
/// `z_base 2^k` (above the previous band) and holds a hashed square grid
/// whose cell side is the trough radius at the top of the band; a trough is
/// registered in every cell of a band its cross-section there can reach.
#[derive(Debug, Clone, PartialEq)]
pub struct TroughIndex {
    pub eps: f64,
    pub troughs: Vec<Trough>,
    pub(crate) origin: [f64; 2],
    pub(crate) z_base: f64,
    pub(crate) cells: HashMap<(u8, i64, i64), Vec<u32>>,
}

const MAX_BAND: u8 = 62;

impl TroughIndex {
    pub fn build(g: &GeometricGraph, eps: f64) -> Self {
        let troughs: Vec<Trough> = (0..g.num_edges())
            .filter(|&e| g.edge_length(e) > 0.0)
            .map(|e| Trough::new(e, g.edge_segment(e), eps))
            .collect();
        let mut lens: Vec<f64> = troughs.iter().map(|t| t.len).collect();
        lens.sort_by(f64::total_cmp);
        let z_base = lens.get(lens.len() / 2).map_or(1.0, |l| l / 4.0);
        let mut origin = [f64::INFINITY; 2];
        for t in &troughs {
            origin[0] = origin[0].min(t.seg.a.x.min(t.seg.b.x));
            origin[1] = origin[1].min(t.seg.a.y.min(t.seg.b.y));
        }
        if troughs.is_empty() {
            origin = [0.0; 2];
        }
        let mut idx = TroughIndex {
            eps,
            troughs,
            origin,
            z_base,
            cells: HashMap::new(),
        };
        for i in 0..idx.troughs.len() {
            idx.insert(i);
        }
        idx
    }

    fn band_top(&self, k: u8) -> f64 {
        self.z_base * 2f64.powi(k as i32)
    }

    /// Smallest band whose top is at least `z`.
    fn band(&self, z: f64) -> Option<u8> {
        if z <= self.z_base {
            return Some(0);
        }
        let mut k = ((z / self.z_base).log2().ceil().max(0.0)).min(MAX_BAND as f64 + 1.0) as u8;
        // guard against log2 rounding either way
        while k > 0 && self.band_top(k - 1) >= z {
            k -= 1;
        }
        while k <= MAX_BAND && self.band_top(k) < z {
            k += 1;
        }
        (k <= MAX_BAND).then_some(k)
    }

    fn side(&self, k: u8) -> f64 {
        4.0 * self.band_top(k)
    }

    fn cell(&self, k: u8, x: f64, y: f64) -> (u8, i64, i64) {
        let s = self.side(k);
        (
            k,
            ((x - self.origin[0]) / s).floor() as i64,
            ((y - self.origin[1]) / s).floor() as i64,
        )
    }

    fn insert(&mut self, i: usize) {
        let t = self.troughs[i];
        let Some(last) = self.band(t.top()) else {
            return;
        };
        for k in 0..=last {
            let r = 4.0 * self.band_top(k).min(t.top());
            let s = self.side(k);
            let reach = r + s * std::f64::consts::FRAC_1_SQRT_2;
            let (a, b) = (t.seg.a, t.seg.b);
            let (_, x0, y0) = self.cell(k, a.x.min(b.x) - r, a.y.min(b.y) - r);
            let (_, x1, y1) = self.cell(k, a.x.max(b.x) + r, a.y.max(b.y) + r);
            for x in x0..=x1 {
                for y in y0..=y1 {
                    let c = Point::new(
                        self.origin[0] + (x as f64 + 0.5) * s,
                        self.origin[1] + (y as f64 + 0.5) * s,
                    );
                    if t.seg.dist_to_point(c) <= reach {
                        self.cells.entry((k, x, y)).or_default().push(i as u32);
                    }
                }
            }
        }
    }

    /// Edges whose trough contains `(x, y, z)`, sorted by edge id.
    pub fn stab(&self, x: f64, y: f64, z: f64) -> Vec<usize> {
        let Some(k) = self.band(z.max(0.0)) else {
            return Vec::new();
        };
        let Some(ids) = self.cells.get(&self.cell(k, x, y)) else {
            return Vec::new();
        };
        let mut out: Vec<usize> = ids
            .iter()
            .map(|&i| &self.troughs[i as usize])
            .filter(|t| t.contains(x, y, z))
            .map(|t| t.edge)
            .collect();
        out.sort_unstable();
        out
    }

    /// Largest number of troughs registered in one cell.
    pub fn max_cell_load(&self) -> usize {
        self.cells.values().map(|v| v.len()).max().unwrap_or(0)
    }

    pub(crate) fn from_parts(
        eps: f64,
        troughs: Vec<Trough>,
        origin: [f64; 2],
        z_base: f64,
        cells: HashMap<(u8, i64, i64), Vec<u32>>,
    ) -> Self {
        TroughIndex {
            eps,
            troughs,
            origin,
            z_base,
            cells,
        }
    }
}
