use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GeometricGraph, MinItem};

/// Farthest-first traversal under shortest-path distance. `radii[i]` is the
/// covering radius of the first `i + 1` centres.
#[derive(Debug, Clone, PartialEq)]
pub struct GonzalezSequence {
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
    /// Position of each vertex in `centers`.
    pub rank: Vec<usize>,
}

impl GonzalezSequence {
    pub fn build(g: &GeometricGraph, seed: u64) -> Self {
        let n = g.num_vertices();
        if n == 0 {
            return GonzalezSequence {
                centers: Vec::new(),
                radii: Vec::new(),
                rank: Vec::new(),
            };
        }
        let first = ChaCha8Rng::seed_from_u64(seed).gen_range(0..n);
        Self::build_from(g, first)
    }

    /// Sequence starting at a chosen first centre.
    pub fn build_from(g: &GeometricGraph, first: usize) -> Self {
        let n = g.num_vertices();
        let mut near = vec![f64::INFINITY; n];
        let mut centers = Vec::with_capacity(n);
        let mut radii = Vec::with_capacity(n);
        let mut rank = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        let mut c = first;
        loop {
            rank[c] = centers.len();
            centers.push(c);
            // relax only where the new centre is strictly closer
            near[c] = 0.0;
            heap.push(MinItem(0.0, c));
            while let Some(MinItem(d, x)) = heap.pop() {
                if d > near[x] {
                    continue;
                }
                for &(w, e) in g.neighbors(x) {
                    let nd = d + g.edge_length(e);
                    if nd < near[w] {
                        near[w] = nd;
                        heap.push(MinItem(nd, w));
                    }
                }
            }
            if centers.len() == n {
                radii.push(0.0);
                break;
            }
            let (far, r) = (0..n)
                .filter(|&v| rank[v] == usize::MAX)
                .map(|v| (v, near[v]))
                .fold((usize::MAX, f64::NEG_INFINITY), |b, x| {
                    if x.1 > b.1 {
                        x
                    } else {
                        b
                    }
                });
            radii.push(r);
            c = far;
        }
        GonzalezSequence {
            centers,
            radii,
            rank,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Number of leading centres needed for covering radius below `rho`:
    /// the smallest `k` with `radii[k - 1] < rho`, or `None` when even all
    /// centres leave radius `>= rho` (only when `rho <= 0`).
    pub fn prefix_below(&self, rho: f64) -> Option<usize> {
        let i = self.radii.partition_point(|&r| r >= rho);
        (i < self.radii.len()).then_some(i + 1)
    }
}
