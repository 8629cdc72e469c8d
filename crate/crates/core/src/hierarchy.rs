//! Balanced separator tree with transit-distance tables.
//!
//! Each node owns a vertex set `V_i` and a separator `S_i ⊆ V_i`; the two
//! children split `V_i \ S_i` with no edge between them. For every
//! `(u, s) ∈ V_i × S_i` the node stores the exact Fréchet distance from the
//! segment `us` to the best walk from `u` to `s` anywhere in the graph.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::HierarchyError;
use crate::geom::{Point, Segment};
use crate::graph::GeometricGraph;

pub const DEFAULT_LEAF_CUTOFF: usize = 8;
const BALL_TRIALS: usize = 20;
const FALLBACK_TRIALS: usize = 200;
/// A ball split is accepted early once `|S| <= SEPARATOR_TARGET * tau * sqrt(k)`.
const SEPARATOR_TARGET: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub separator: Vec<usize>,
    pub side_a: Vec<usize>,
    pub side_b: Vec<usize>,
}

/// Balance cap for a set of `k` vertices: `ceil(2k / 3)`.
pub fn balance_cap(k: usize) -> usize {
    (2 * k).div_ceil(3)
}

struct Local {
    ids: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

fn induced(g: &GeometricGraph, subset: &[usize]) -> Local {
    let index: HashMap<usize, usize> = subset.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let adj = subset
        .iter()
        .map(|&v| {
            g.neighbors(v)
                .iter()
                .filter_map(|(w, _)| index.get(w).copied())
                .collect()
        })
        .collect();
    Local {
        ids: subset.to_vec(),
        adj,
    }
}

fn local_components(l: &Local) -> Vec<Vec<usize>> {
    let k = l.ids.len();
    let mut seen = vec![false; k];
    let mut out = Vec::new();
    for s in 0..k {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            for &w in &l.adj[comp[i]] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            i += 1;
        }
        out.push(comp);
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct BallCut {
    center: usize,
    inside: usize,
    outer_side: bool,
    sep: usize,
    worst: usize,
}

fn ball_order(g: &GeometricGraph, l: &Local, center: Point) -> Vec<usize> {
    let mut order: Vec<usize> = (0..l.ids.len()).collect();
    order.sort_by(|&a, &b| {
        g.vertex(l.ids[a])
            .dist(center)
            .total_cmp(&g.vertex(l.ids[b]).dist(center))
            .then(a.cmp(&b))
    });
    order
}

/// Best cut over all prefixes of the distance order from one centre.
fn sweep_ball(g: &GeometricGraph, l: &Local, center_local: usize) -> Option<BallCut> {
    let k = l.ids.len();
    let cap = balance_cap(k);
    let order = ball_order(g, l, g.vertex(l.ids[center_local]));
    let deg: Vec<usize> = l.adj.iter().map(|a| a.len()).collect();
    let mut in_nbrs = vec![0usize; k];
    let mut inside = vec![false; k];
    let (mut cnt_in, mut cnt_out) = (0usize, 0usize);
    let mut best: Option<BallCut> = None;
    for a in 1..k {
        let w = order[a - 1];
        if in_nbrs[w] > 0 {
            cnt_out -= 1;
        }
        inside[w] = true;
        if deg[w] > in_nbrs[w] {
            cnt_in += 1;
        }
        for &x in &l.adj[w] {
            in_nbrs[x] += 1;
            if inside[x] {
                if deg[x] == in_nbrs[x] {
                    cnt_in -= 1;
                }
            } else if in_nbrs[x] == 1 {
                cnt_out += 1;
            }
        }
        let options = [
            (false, cnt_in, a - cnt_in, k - a),
            (true, cnt_out, a, k - a - cnt_out),
        ];
        for (outer_side, sep, sa, sb) in options {
            if sa > cap || sb > cap {
                continue;
            }
            let cut = BallCut {
                center: center_local,
                inside: a,
                outer_side,
                sep,
                worst: sa.max(sb),
            };
            if best.is_none_or(|b| (cut.sep, cut.worst) < (b.sep, b.worst)) {
                best = Some(cut);
            }
        }
    }
    best
}

fn realize(g: &GeometricGraph, l: &Local, cut: BallCut) -> Separation {
    let k = l.ids.len();
    let order = ball_order(g, l, g.vertex(l.ids[cut.center]));
    let mut inside = vec![false; k];
    for &w in &order[..cut.inside] {
        inside[w] = true;
    }
    let (mut separator, mut side_a, mut side_b) = (Vec::new(), Vec::new(), Vec::new());
    for x in 0..k {
        let crosses = l.adj[x].iter().any(|&y| inside[y] != inside[x]);
        let v = l.ids[x];
        match (inside[x], crosses, cut.outer_side) {
            (true, true, false) | (false, true, true) => separator.push(v),
            (true, _, _) => side_a.push(v),
            (false, _, _) => side_b.push(v),
        }
    }
    separator.sort_unstable();
    side_a.sort_unstable();
    side_b.sort_unstable();
    Separation {
        separator,
        side_a,
        side_b,
    }
}

/// Splits `subset` into two sides of at most `ceil(2k/3)` vertices with no
/// edge between them, removing a small separator. Disconnected sets are split
/// along components when that balances; otherwise random Euclidean balls are
/// grown around vertices and the smallest boundary is kept.
pub fn find_separator(
    g: &GeometricGraph,
    subset: &[usize],
    tau: f64,
    seed: u64,
    leaf_cutoff: usize,
) -> Result<Separation, HierarchyError> {
    let k = subset.len();
    if k <= leaf_cutoff {
        return Err(HierarchyError::TooSmall {
            size: k,
            cutoff: leaf_cutoff,
        });
    }
    let cap = balance_cap(k);
    let l = induced(g, subset);
    let mut comps = local_components(&l);
    if comps.len() > 1 {
        comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for c in comps {
            let dst = if a.len() <= b.len() { &mut a } else { &mut b };
            dst.extend(c.into_iter().map(|x| l.ids[x]));
        }
        if a.len() <= cap && b.len() <= cap {
            a.sort_unstable();
            b.sort_unstable();
            return Ok(Separation {
                separator: Vec::new(),
                side_a: a,
                side_b: b,
            });
        }
    }
    let target = SEPARATOR_TARGET * tau.max(1.0) * (k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ subset[0] as u64,
    );
    let mut best: Option<BallCut> = None;
    let consider = |c: Option<BallCut>, best: &mut Option<BallCut>| {
        if let Some(c) = c {
            if best.is_none_or(|b| (c.sep, c.worst) < (b.sep, b.worst)) {
                *best = Some(c);
            }
        }
    };
    for _ in 0..BALL_TRIALS {
        let c = rng.gen_range(0..k);
        consider(sweep_ball(g, &l, c), &mut best);
        if best.is_some_and(|b| (b.sep as f64) <= target) {
            break;
        }
    }
    if !best.is_some_and(|b| (b.sep as f64) <= target) {
        let stride = (k / FALLBACK_TRIALS).max(1);
        for c in (0..k).step_by(stride) {
            consider(sweep_ball(g, &l, c), &mut best);
        }
    }
    let cut = best.expect("a balanced prefix always exists for k >= 2");
    Ok(realize(g, &l, cut))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorNode {
    pub vertices: Vec<usize>,
    pub separator: Vec<usize>,
    pub children: Option<[usize; 2]>,
    pub parent: Option<usize>,
    pub depth: usize,
}

impl SeparatorNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn row_of(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn col_of(&self, s: usize) -> Option<usize> {
        self.separator.binary_search(&s).ok()
    }
}

/// Separator hierarchy plus, once filled, its transit tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorTree {
    pub(crate) nodes: Vec<SeparatorNode>,
    pub(crate) locator: Vec<usize>,
    up: Vec<Vec<usize>>,
    /// Row-major `|V_i| x |S_i|` per node; empty until filled.
    pub(crate) tables: Vec<Vec<f64>>,
    pub leaf_cutoff: usize,
    pub tau: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StraightAnswer {
    pub value: f64,
    pub transit: Option<usize>,
    pub examined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeStats {
    pub nodes: usize,
    pub depth: usize,
    pub transit_pairs: usize,
    pub max_separator: usize,
    /// Largest `|S_i| / (tau sqrt(|V_i|))` over internal nodes.
    pub c_sep: f64,
}

/// Builds the tree alone, without transit tables.
pub fn build_tree(
    g: &GeometricGraph,
    tau: f64,
    leaf_cutoff: usize,
    seed: u64,
) -> Result<SeparatorTree, HierarchyError> {
    if leaf_cutoff == 0 {
        return Err(HierarchyError::BadLeafCutoff);
    }
    let mut nodes: Vec<SeparatorNode> = Vec::new();
    let mut stack: Vec<(Vec<usize>, Option<usize>, usize, usize)> =
        vec![((0..g.num_vertices()).collect(), None, 0, 0)];
    let mut pending_children: HashMap<usize, [usize; 2]> = HashMap::new();
    while let Some((verts, parent, depth, slot)) = stack.pop() {
        let id = nodes.len();
        if let Some(p) = parent {
            pending_children.entry(p).or_insert([usize::MAX; 2])[slot] = id;
        }
        if verts.len() <= leaf_cutoff {
            nodes.push(SeparatorNode {
                separator: verts.clone(),
                vertices: verts,
                children: None,
                parent,
                depth,
            });
            continue;
        }
        let sep = find_separator(g, &verts, tau, seed.wrapping_add(id as u64), leaf_cutoff)?;
        nodes.push(SeparatorNode {
            vertices: verts,
            separator: sep.separator,
            children: None,
            parent,
            depth,
        });
        stack.push((sep.side_b, Some(id), depth + 1, 1));
        stack.push((sep.side_a, Some(id), depth + 1, 0));
    }
    for (p, ch) in pending_children {
        nodes[p].children = Some(ch);
    }
    SeparatorTree::from_nodes(nodes, g.num_vertices(), leaf_cutoff, tau, seed)
}

/// Builds the tree and fills every transit table with the exact oracle.
pub fn build_hierarchy(
    g: &GeometricGraph,
    tau: f64,
    leaf_cutoff: usize,
    seed: u64,
) -> Result<SeparatorTree, HierarchyError> {
    let mut t = build_tree(g, tau, leaf_cutoff, seed)?;
    t.fill_tables(g)?;
    Ok(t)
}

fn run_in_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new()
        .num_threads(crate::configured_threads())
        .build()
    {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

impl SeparatorTree {
    pub(crate) fn from_nodes(
        nodes: Vec<SeparatorNode>,
        n: usize,
        leaf_cutoff: usize,
        tau: f64,
        seed: u64,
    ) -> Result<Self, HierarchyError> {
        let mut locator = vec![usize::MAX; n];
        for (i, node) in nodes.iter().enumerate() {
            for &s in &node.separator {
                locator[s] = i;
            }
        }
        let levels = (usize::BITS - nodes.len().max(1).leading_zeros()) as usize + 1;
        let mut up = vec![(0..nodes.len())
            .map(|i| nodes[i].parent.unwrap_or(i))
            .collect::<Vec<_>>()];
        for k in 1..levels {
            let prev = &up[k - 1];
            let next = (0..nodes.len()).map(|i| prev[prev[i]]).collect();
            up.push(next);
        }
        let tables = vec![Vec::new(); nodes.len()];
        Ok(SeparatorTree {
            nodes,
            locator,
            up,
            tables,
            leaf_cutoff,
            tau,
            seed,
        })
    }

    pub fn nodes(&self) -> &[SeparatorNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &SeparatorNode {
        &self.nodes[i]
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Node whose separator contains `v`.
    pub fn locate(&self, v: usize) -> usize {
        self.locator[v]
    }

    pub fn has_tables(&self) -> bool {
        self.nodes
            .iter()
            .zip(&self.tables)
            .all(|(n, t)| t.len() == n.vertices.len() * n.separator.len())
    }

    /// Lowest common ancestor by binary lifting.
    pub fn lca(&self, mut a: usize, mut b: usize) -> usize {
        if self.nodes[a].depth < self.nodes[b].depth {
            std::mem::swap(&mut a, &mut b);
        }
        let diff = self.nodes[a].depth - self.nodes[b].depth;
        for (k, row) in self.up.iter().enumerate() {
            if diff >> k & 1 == 1 {
                a = row[a];
            }
        }
        if a == b {
            return a;
        }
        for row in self.up.iter().rev() {
            if row[a] != row[b] {
                a = row[a];
                b = row[b];
            }
        }
        self.nodes[a].parent.unwrap_or(a)
    }

    /// Nodes from `start` up to the root.
    pub fn ancestors(&self, start: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(Some(start), move |&i| self.nodes[i].parent)
    }

    /// Stored `D_us` for `u ∈ V_i`, `s ∈ S_i` at node `i`.
    pub fn table_entry(&self, i: usize, u: usize, s: usize) -> Option<f64> {
        let node = &self.nodes[i];
        let r = node.row_of(u)?;
        let c = node.col_of(s)?;
        self.tables[i].get(r * node.separator.len() + c).copied()
    }

    /// Row of node `i`'s table for `u`, indexed like `separator`.
    pub fn table_row(&self, i: usize, u: usize) -> Option<&[f64]> {
        let node = &self.nodes[i];
        let k = node.separator.len();
        let r = node.row_of(u)?;
        self.tables[i].get(r * k..(r + 1) * k)
    }

    /// `D_us` for a transit `s`, looked up at the node whose separator holds `s`.
    pub fn transit_distance(&self, u: usize, s: usize) -> Option<f64> {
        self.table_entry(self.locator[s], u, s)
    }

    /// Fills every table with the exact oracle, in parallel.
    pub fn fill_tables(&mut self, g: &GeometricGraph) -> Result<(), HierarchyError> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for node in &self.nodes {
            for &u in &node.vertices {
                for &s in &node.separator {
                    if u != s {
                        pairs.push((u.min(s), u.max(s)));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let values: Vec<Result<f64, HierarchyError>> = run_in_pool(|| {
            pairs
                .par_iter()
                .map(|&(a, b)| {
                    let seg = Segment::new(g.vertex(a), g.vertex(b));
                    Ok(crate::oracle::segment_match(g, a, b, &seg)?
                        .map_or(f64::INFINITY, |m| m.distance))
                })
                .collect()
        });
        let mut memo = HashMap::with_capacity(pairs.len());
        for (p, v) in pairs.into_iter().zip(values) {
            memo.insert(p, v?);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let mut t = Vec::with_capacity(node.vertices.len() * node.separator.len());
            for &u in &node.vertices {
                for &s in &node.separator {
                    t.push(if u == s {
                        0.0
                    } else {
                        memo[&(u.min(s), u.max(s))]
                    });
                }
            }
            self.tables[i] = t;
        }
        Ok(())
    }

    pub fn stats(&self) -> TreeStats {
        let mut c_sep: f64 = 0.0;
        for n in &self.nodes {
            if !n.is_leaf() {
                let denom = self.tau.max(1.0) * (n.vertices.len() as f64).sqrt();
                c_sep = c_sep.max(n.separator.len() as f64 / denom);
            }
        }
        TreeStats {
            nodes: self.nodes.len(),
            depth: self.nodes.iter().map(|n| n.depth).max().unwrap_or(0),
            transit_pairs: self.transit_pair_count(),
            max_separator: self
                .nodes
                .iter()
                .map(|n| n.separator.len())
                .max()
                .unwrap_or(0),
            c_sep,
        }
    }

    /// `Σ |V_i| |S_i|`, the number of stored transit distances.
    pub fn transit_pair_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.vertices.len() * n.separator.len())
            .sum()
    }

    /// Number of transit vertices a query between `u` and `v` inspects.
    pub fn examined_count(&self, u: usize, v: usize) -> usize {
        let a = self.lca(self.locator[u], self.locator[v]);
        self.ancestors(a)
            .map(|i| self.nodes[i].separator.len())
            .sum()
    }

    /// 3-approximation of the best walk from `u` to `v` for the segment `uv`:
    /// the minimum over transits `s` at the common ancestor and above of
    /// `max(D_us, D_sv) + dist(s, uv)`.
    pub fn straight_query(&self, g: &GeometricGraph, u: usize, v: usize) -> StraightAnswer {
        let seg = Segment::new(g.vertex(u), g.vertex(v));
        let a = self.lca(self.locator[u], self.locator[v]);
        let mut best = StraightAnswer {
            value: f64::INFINITY,
            transit: None,
            examined: 0,
        };
        for i in self.ancestors(a) {
            let (ru, rv) = (self.table_row(i, u), self.table_row(i, v));
            for (j, &s) in self.nodes[i].separator.iter().enumerate() {
                best.examined += 1;
                let dus = ru.map_or(f64::INFINITY, |r| r[j]);
                let dsv = rv.map_or(f64::INFINITY, |r| r[j]);
                let val = dus.max(dsv) + seg.dist_to_point(g.vertex(s));
                if val < best.value {
                    best.value = val;
                    best.transit = Some(s);
                }
            }
        }
        best
    }
}
