//! The assembled index and its binary file format.
//!
//! File layout (little endian): magic `MMIX`, `u32` version, then sections
//! `PARM`, `GRPH`, `TREE`, `GRID`, `GONZ`, `TRGH`, each framed as a 4-byte
//! tag, a `u64` payload length, the payload and its CRC-32. Grid entries are
//! stored as integer offsets from their grid centre. `PARM` holds the build
//! precision, tau, leaf cutoff, seed, the fitted constants `c_sep` and
//! `c_pairs`, and the precision split of segment, candidate and bisection
//! stages.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::Mutex;
use std::time::Instant;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use serde::Serialize;

use crate::candidates::{CandidateIndex, GonzalezSequence, Trough, TroughIndex};
use crate::curvequery::{self, CurveAnswer};
use crate::error::{HierarchyError, IndexError, QueryError};
use crate::geom::{GridKey, Point, Segment};
use crate::graph::{lanky_check, GeometricGraph};
use crate::hierarchy::{
    build_hierarchy, SeparatorNode, SeparatorTree, StraightAnswer, DEFAULT_LEAF_CUTOFF,
};
use crate::seggrid::{
    build_pair_grids, GridPairEntry, PairGridTable, QueryStats, SegGrid, SegmentAnswer,
};
use crate::MatchResult;

pub const MAGIC: &[u8; 4] = b"MMIX";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexParams {
    pub eps: f64,
    /// Lankiness bound used for separator targets; measured when `None`.
    pub tau: Option<f64>,
    pub leaf_cutoff: usize,
    pub seed: u64,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            eps: 0.25,
            tau: None,
            leaf_cutoff: DEFAULT_LEAF_CUTOFF,
            seed: 0,
        }
    }
}

impl IndexParams {
    pub fn with_eps(eps: f64) -> Self {
        IndexParams {
            eps,
            ..Default::default()
        }
    }

    /// Precision of the candidate sets used by curve queries.
    pub fn eps_candidates(&self) -> f64 {
        self.eps / 20.0
    }

    /// Relative gap at which curve-query bisection stops.
    pub fn eps_bisect(&self) -> f64 {
        self.eps / 16.0
    }

    /// Guaranteed relative error of a segment query at this precision.
    pub fn eps_segment(&self) -> f64 {
        (1.0 + self.eps / 4.0) * (1.0 + 1.5 * crate::seggrid::C_SPLIT * self.eps) - 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildReport {
    pub vertices: usize,
    pub edges: usize,
    pub tau: f64,
    pub tree_nodes: usize,
    pub tree_depth: usize,
    pub transit_pairs: usize,
    pub max_separator: usize,
    pub c_sep: f64,
    /// `Σ |V_i||S_i| / (tau |V|^1.5)`.
    pub c_pairs: f64,
    /// Wall time; kept out of serialized output so it stays deterministic.
    #[serde(skip)]
    pub build_seconds: f64,
}

/// Constants fitted at build time, kept in the file header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuildConstants {
    /// Largest `|S| / (tau sqrt|V|)` over tree nodes.
    pub c_sep: f64,
    /// `Σ |V_i||S_i| / (tau |V|^1.5)`.
    pub c_pairs: f64,
}

#[derive(Debug)]
pub struct MapMatchIndex {
    pub graph: GeometricGraph,
    pub tree: SeparatorTree,
    pub seggrid: SegGrid,
    pub candidates: CandidateIndex,
    pub params: IndexParams,
    pub constants: BuildConstants,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Geom(#[from] crate::GeomError),
}

impl MapMatchIndex {
    pub fn build(
        graph: GeometricGraph,
        params: IndexParams,
    ) -> Result<(Self, BuildReport), BuildError> {
        if !(params.eps > 0.0 && params.eps <= 1.0) {
            return Err(crate::GeomError::BadEpsilon(params.eps).into());
        }
        let start = Instant::now();
        let tau = params
            .tau
            .unwrap_or_else(|| lanky_check(&graph).max(1) as f64);
        let params = IndexParams {
            tau: Some(tau),
            ..params
        };
        let tree = build_hierarchy(&graph, tau, params.leaf_cutoff, params.seed)?;
        let seggrid = build_pair_grids(&graph, &tree, params.eps)?;
        let candidates = CandidateIndex::build(&graph, params.eps_candidates(), params.seed);
        let st = tree.stats();
        let n = graph.num_vertices().max(1) as f64;
        let report = BuildReport {
            vertices: graph.num_vertices(),
            edges: graph.num_edges(),
            tau,
            tree_nodes: st.nodes,
            tree_depth: st.depth,
            transit_pairs: st.transit_pairs,
            max_separator: st.max_separator,
            c_sep: st.c_sep,
            c_pairs: st.transit_pairs as f64 / (tau * n.powf(1.5)),
            build_seconds: start.elapsed().as_secs_f64(),
        };
        let constants = BuildConstants {
            c_sep: report.c_sep,
            c_pairs: report.c_pairs,
        };
        Ok((
            MapMatchIndex {
                graph,
                tree,
                seggrid,
                candidates,
                params,
                constants,
            },
            report,
        ))
    }

    fn check_vertex(&self, v: usize) -> Result<(), QueryError> {
        if v < self.graph.num_vertices() {
            Ok(())
        } else {
            Err(QueryError::NoSuchVertex(v))
        }
    }

    /// 3-approximation for the segment between two vertices.
    pub fn straight_query(&self, u: usize, v: usize) -> Result<StraightAnswer, QueryError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(self.tree.straight_query(&self.graph, u, v))
    }

    /// `(1 + eps)`-approximate best walk value from `u` to `v` against `pq`.
    pub fn segment_query(
        &self,
        u: usize,
        v: usize,
        pq: &Segment,
        stats: &mut QueryStats,
    ) -> Result<SegmentAnswer, QueryError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if !pq.a.is_finite() || !pq.b.is_finite() {
            return Err(QueryError::NonFiniteSegment);
        }
        Ok(self
            .seggrid
            .segment_query(&self.graph, &self.tree, u, v, pq, None, stats))
    }

    pub fn report_segment(
        &self,
        u: usize,
        v: usize,
        pq: &Segment,
        stats: &mut QueryStats,
    ) -> Result<(SegmentAnswer, MatchResult), QueryError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if !pq.a.is_finite() || !pq.b.is_finite() {
            return Err(QueryError::NonFiniteSegment);
        }
        Ok(self
            .seggrid
            .report_path(&self.graph, &self.tree, u, v, pq, stats))
    }

    /// `(1 + eps)`-approximate Fréchet distance from `q` to the closest walk.
    pub fn curve_query(&self, q: &[Point]) -> Result<CurveAnswer, QueryError> {
        curvequery::curve_query(self, q)
    }

    /// As [`Self::curve_query`], also reporting a walk.
    pub fn report_curve(&self, q: &[Point]) -> Result<(CurveAnswer, MatchResult), QueryError> {
        curvequery::report_curve(self, q)
    }

    /// Serialized size in bytes.
    pub fn byte_size(&self) -> usize {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to memory");
        buf.len()
    }

    pub fn save(&self, mut w: impl Write) -> Result<(), IndexError> {
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(VERSION)?;
        write_section(&mut w, b"PARM", &self.encode_params()?)?;
        write_section(&mut w, b"GRPH", &self.encode_graph()?)?;
        write_section(&mut w, b"TREE", &self.encode_tree()?)?;
        write_section(&mut w, b"GRID", &self.encode_grid()?)?;
        write_section(&mut w, b"GONZ", &self.encode_gonzalez()?)?;
        write_section(&mut w, b"TRGH", &self.encode_troughs()?)?;
        Ok(())
    }

    pub fn load(mut r: impl Read) -> Result<Self, IndexError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| IndexError::BadMagic)?;
        if &magic != MAGIC {
            return Err(IndexError::BadMagic);
        }
        let version = r.read_u32::<LE>().map_err(truncated)?;
        if version != VERSION {
            return Err(IndexError::Version {
                found: version,
                expected: VERSION,
            });
        }
        let parm = read_section(&mut r, b"PARM", "PARM")?;
        let grph = read_section(&mut r, b"GRPH", "GRPH")?;
        let tree = read_section(&mut r, b"TREE", "TREE")?;
        let grid = read_section(&mut r, b"GRID", "GRID")?;
        let gonz = read_section(&mut r, b"GONZ", "GONZ")?;
        let trgh = read_section(&mut r, b"TRGH", "TRGH")?;
        let (params, constants) = decode_params(&parm).map_err(corrupt("PARM"))?;
        let graph = decode_graph(&grph).map_err(corrupt("GRPH"))?;
        let tree = decode_tree(&tree, &graph, &params).map_err(corrupt("TREE"))?;
        let seggrid = decode_grid(&grid, &graph, &tree, params.eps).map_err(corrupt("GRID"))?;
        let gonzalez = decode_gonzalez(&gonz, graph.num_vertices()).map_err(corrupt("GONZ"))?;
        let troughs = decode_troughs(&trgh, &graph).map_err(corrupt("TRGH"))?;
        let mut candidates =
            CandidateIndex::with_sequence(&graph, params.eps_candidates(), gonzalez);
        candidates.troughs = troughs;
        Ok(MapMatchIndex {
            graph,
            tree,
            seggrid,
            candidates,
            params,
            constants,
        })
    }

    fn encode_params(&self) -> std::io::Result<Vec<u8>> {
        let mut b = Vec::new();
        b.write_f64::<LE>(self.params.eps)?;
        b.write_f64::<LE>(self.params.tau.unwrap_or(0.0))?;
        b.write_u64::<LE>(self.params.leaf_cutoff as u64)?;
        b.write_u64::<LE>(self.params.seed)?;
        b.write_f64::<LE>(self.constants.c_sep)?;
        b.write_f64::<LE>(self.constants.c_pairs)?;
        for e in [
            self.params.eps_segment(),
            self.params.eps_candidates(),
            self.params.eps_bisect(),
        ] {
            b.write_f64::<LE>(e)?;
        }
        Ok(b)
    }

    fn encode_graph(&self) -> std::io::Result<Vec<u8>> {
        let g = &self.graph;
        let mut b = Vec::new();
        b.write_u64::<LE>(g.num_vertices() as u64)?;
        for p in g.vertices() {
            b.write_f64::<LE>(p.x)?;
            b.write_f64::<LE>(p.y)?;
        }
        b.write_u64::<LE>(g.num_edges() as u64)?;
        for &(u, v) in g.edges() {
            b.write_u32::<LE>(u as u32)?;
            b.write_u32::<LE>(v as u32)?;
        }
        Ok(b)
    }

    fn encode_tree(&self) -> std::io::Result<Vec<u8>> {
        let t = &self.tree;
        let mut b = Vec::new();
        b.write_u64::<LE>(t.nodes.len() as u64)?;
        for (i, n) in t.nodes.iter().enumerate() {
            b.write_u64::<LE>(n.parent.map_or(u64::MAX, |p| p as u64))?;
            let [c0, c1] = n
                .children
                .map_or([u64::MAX; 2], |c| [c[0] as u64, c[1] as u64]);
            b.write_u64::<LE>(c0)?;
            b.write_u64::<LE>(c1)?;
            b.write_u64::<LE>(n.depth as u64)?;
            write_ids(&mut b, &n.vertices)?;
            write_ids(&mut b, &n.separator)?;
            for &d in &t.tables[i] {
                b.write_f64::<LE>(d)?;
            }
        }
        Ok(b)
    }

    fn encode_grid(&self) -> std::io::Result<Vec<u8>> {
        let mut keys: Vec<&(usize, usize)> = self.seggrid.tables.keys().collect();
        keys.sort_unstable();
        let mut b = Vec::new();
        b.write_f64::<LE>(self.seggrid.eps)?;
        b.write_u64::<LE>(keys.len() as u64)?;
        for k in keys {
            let t = &self.seggrid.tables[k];
            b.write_u32::<LE>(t.u as u32)?;
            b.write_u32::<LE>(t.s as u32)?;
            let entries = t.entries.lock().expect("entry cache poisoned");
            let mut es: Vec<(&(GridKey, GridKey), &GridPairEntry)> = entries.iter().collect();
            es.sort_by(|a, b| a.0.cmp(b.0));
            b.write_u64::<LE>(es.len() as u64)?;
            for ((kp, kq), e) in es {
                write_key(&mut b, kp)?;
                write_key(&mut b, kq)?;
                b.write_f64::<LE>(e.distance)?;
                b.write_u32::<LE>(e.first_vertex as u32)?;
                b.write_f64::<LE>(e.first_param)?;
            }
        }
        Ok(b)
    }

    fn encode_gonzalez(&self) -> std::io::Result<Vec<u8>> {
        let s = &self.candidates.gonzalez;
        let mut b = Vec::new();
        b.write_u64::<LE>(s.centers.len() as u64)?;
        for (&c, &r) in s.centers.iter().zip(&s.radii) {
            b.write_u32::<LE>(c as u32)?;
            b.write_f64::<LE>(r)?;
        }
        Ok(b)
    }

    fn encode_troughs(&self) -> std::io::Result<Vec<u8>> {
        let t = &self.candidates.troughs;
        let mut b = Vec::new();
        b.write_f64::<LE>(t.eps)?;
        for k in 0..2 {
            b.write_f64::<LE>(t.origin[k])?;
        }
        b.write_f64::<LE>(t.z_base)?;
        b.write_u64::<LE>(t.troughs.len() as u64)?;
        for tr in &t.troughs {
            b.write_u32::<LE>(tr.edge as u32)?;
        }
        let mut cells: Vec<_> = t.cells.iter().collect();
        cells.sort_by(|a, b| a.0.cmp(b.0));
        b.write_u64::<LE>(cells.len() as u64)?;
        for (&(l, x, y), ids) in cells {
            b.write_u8(l)?;
            b.write_i64::<LE>(x)?;
            b.write_i64::<LE>(y)?;
            b.write_u32::<LE>(ids.len() as u32)?;
            for &i in ids {
                b.write_u32::<LE>(i)?;
            }
        }
        Ok(b)
    }
}

fn truncated(_: std::io::Error) -> IndexError {
    IndexError::Corrupt("truncated file".into())
}

fn corrupt(section: &'static str) -> impl Fn(String) -> IndexError {
    move |m| IndexError::Corrupt(format!("section {section}: {m}"))
}

fn write_section(w: &mut impl Write, tag: &[u8; 4], payload: &[u8]) -> Result<(), IndexError> {
    w.write_all(tag)?;
    w.write_u64::<LE>(payload.len() as u64)?;
    w.write_all(payload)?;
    w.write_u32::<LE>(crc32fast::hash(payload))?;
    Ok(())
}

fn read_section(
    r: &mut impl Read,
    tag: &[u8; 4],
    name: &'static str,
) -> Result<Vec<u8>, IndexError> {
    let mut t = [0u8; 4];
    r.read_exact(&mut t).map_err(truncated)?;
    if &t != tag {
        return Err(IndexError::Corrupt(format!("expected section {name}")));
    }
    let len = r.read_u64::<LE>().map_err(truncated)?;
    if len > (1 << 40) {
        return Err(IndexError::Corrupt(format!("section {name} too large")));
    }
    let mut payload = Vec::new();
    r.take(len).read_to_end(&mut payload).map_err(truncated)?;
    if payload.len() as u64 != len {
        return Err(truncated(std::io::ErrorKind::UnexpectedEof.into()));
    }
    let crc = r.read_u32::<LE>().map_err(truncated)?;
    if crc != crc32fast::hash(&payload) {
        return Err(IndexError::Checksum(name));
    }
    Ok(payload)
}

fn write_ids(b: &mut Vec<u8>, ids: &[usize]) -> std::io::Result<()> {
    b.write_u64::<LE>(ids.len() as u64)?;
    for &i in ids {
        b.write_u32::<LE>(i as u32)?;
    }
    Ok(())
}

fn write_key(b: &mut Vec<u8>, k: &GridKey) -> std::io::Result<()> {
    match *k {
        GridKey::Center => {
            b.write_u16::<LE>(u16::MAX)?;
            b.write_i32::<LE>(0)?;
            b.write_i32::<LE>(0)
        }
        GridKey::Lattice { ring, ix, iy } => {
            b.write_u16::<LE>(ring)?;
            b.write_i32::<LE>(ix)?;
            b.write_i32::<LE>(iy)
        }
    }
}

type Dec<T> = Result<T, String>;

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Dec<[u8; N]> {
        if self.0.len() < N {
            return Err("unexpected end of section".into());
        }
        let (a, rest) = self.0.split_at(N);
        self.0 = rest;
        Ok(a.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Dec<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn u16(&mut self) -> Dec<u16> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    fn u32(&mut self) -> Dec<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn i32(&mut self) -> Dec<i32> {
        Ok(i32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Dec<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn i64(&mut self) -> Dec<i64> {
        Ok(i64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Dec<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    /// A count that must fit in what is left, at `unit` bytes per item.
    fn count(&mut self, unit: usize) -> Dec<usize> {
        let n = self.u64()?;
        if n > (self.0.len() / unit.max(1)) as u64 {
            return Err(format!("count {n} exceeds remaining data"));
        }
        Ok(n as usize)
    }
    fn ids(&mut self, bound: usize) -> Dec<Vec<usize>> {
        let n = self.count(4)?;
        (0..n)
            .map(|_| {
                let v = self.u32()? as usize;
                if v >= bound {
                    Err(format!("id {v} out of range"))
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
    fn key(&mut self) -> Dec<GridKey> {
        let ring = self.u16()?;
        let ix = self.i32()?;
        let iy = self.i32()?;
        Ok(if ring == u16::MAX {
            GridKey::Center
        } else {
            GridKey::Lattice { ring, ix, iy }
        })
    }
    fn done(&self) -> Dec<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err("trailing bytes".into())
        }
    }
}

fn decode_params(b: &[u8]) -> Dec<(IndexParams, BuildConstants)> {
    let mut c = Cursor(b);
    let eps = c.f64()?;
    let tau = c.f64()?;
    let leaf_cutoff = c.u64()? as usize;
    let seed = c.u64()?;
    let constants = BuildConstants {
        c_sep: c.f64()?,
        c_pairs: c.f64()?,
    };
    let budget = [c.f64()?, c.f64()?, c.f64()?];
    c.done()?;
    if !(eps > 0.0 && eps <= 1.0) || !(tau > 0.0) || leaf_cutoff == 0 {
        return Err("invalid parameters".into());
    }
    let p = IndexParams {
        eps,
        tau: Some(tau),
        leaf_cutoff,
        seed,
    };
    if budget != [p.eps_segment(), p.eps_candidates(), p.eps_bisect()] {
        return Err("precision budget does not match this version".into());
    }
    Ok((p, constants))
}

fn decode_graph(b: &[u8]) -> Dec<GeometricGraph> {
    let mut c = Cursor(b);
    let n = c.count(16)?;
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        let x = c.f64()?;
        let y = c.f64()?;
        vs.push(Point::new(x, y));
    }
    let m = c.count(8)?;
    let mut es = Vec::with_capacity(m);
    for _ in 0..m {
        es.push((c.u32()? as usize, c.u32()? as usize));
    }
    c.done()?;
    GeometricGraph::new(vs, es).map_err(|e| e.to_string())
}

fn decode_tree(b: &[u8], g: &GeometricGraph, p: &IndexParams) -> Dec<SeparatorTree> {
    let n = g.num_vertices();
    let mut c = Cursor(b);
    let k = c.count(48)?;
    let opt = |v: u64| -> Dec<Option<usize>> {
        if v == u64::MAX {
            Ok(None)
        } else if (v as usize) < k {
            Ok(Some(v as usize))
        } else {
            Err(format!("node reference {v} out of range"))
        }
    };
    let mut nodes = Vec::with_capacity(k);
    let mut tables = Vec::with_capacity(k);
    for _ in 0..k {
        let parent = opt(c.u64()?)?;
        let c0 = opt(c.u64()?)?;
        let c1 = opt(c.u64()?)?;
        let depth = c.u64()? as usize;
        let vertices = c.ids(n)?;
        let separator = c.ids(n)?;
        let cells = vertices.len() * separator.len();
        if cells > c.0.len() / 8 {
            return Err("table larger than section".into());
        }
        let t: Vec<f64> = (0..cells).map(|_| c.f64()).collect::<Dec<_>>()?;
        let children = match (c0, c1) {
            (Some(a), Some(b)) => Some([a, b]),
            (None, None) => None,
            _ => return Err("node with one child".into()),
        };
        nodes.push(SeparatorNode {
            vertices,
            separator,
            children,
            parent,
            depth,
        });
        tables.push(t);
    }
    c.done()?;
    let mut covered = vec![0u8; n];
    for nd in &nodes {
        for &s in &nd.separator {
            covered[s] = covered[s].saturating_add(1);
        }
    }
    if covered.iter().any(|&x| x != 1) {
        return Err("separators do not partition the vertices".into());
    }
    let mut t = SeparatorTree::from_nodes(nodes, n, p.leaf_cutoff, p.tau.unwrap_or(1.0), p.seed)
        .map_err(|e| e.to_string())?;
    t.tables = tables;
    Ok(t)
}

fn decode_grid(b: &[u8], g: &GeometricGraph, tree: &SeparatorTree, eps: f64) -> Dec<SegGrid> {
    let mut sg = build_pair_grids(g, tree, eps).map_err(|e| e.to_string())?;
    let mut c = Cursor(b);
    let stored_eps = c.f64()?;
    if stored_eps != eps {
        return Err("grid precision differs from parameters".into());
    }
    let k = c.count(16)?;
    if k != sg.tables.len() {
        return Err("table count mismatch".into());
    }
    for _ in 0..k {
        let u = c.u32()? as usize;
        let s = c.u32()? as usize;
        let t: &mut PairGridTable = sg.tables.get_mut(&(u, s)).ok_or("unknown transit pair")?;
        let ne = c.count(40)?;
        let mut map = rustc_hash::FxHashMap::with_capacity_and_hasher(ne, Default::default());
        for _ in 0..ne {
            let kp = c.key()?;
            let kq = c.key()?;
            let distance = c.f64()?;
            let first_vertex = c.u32()? as usize;
            let first_param = c.f64()?;
            if first_vertex >= g.num_vertices() {
                return Err("entry hop out of range".into());
            }
            map.insert(
                (kp, kq),
                GridPairEntry {
                    distance,
                    first_vertex,
                    first_param,
                },
            );
        }
        t.entries = Mutex::new(map);
    }
    c.done()?;
    Ok(sg)
}

fn decode_gonzalez(b: &[u8], n: usize) -> Dec<GonzalezSequence> {
    let mut c = Cursor(b);
    let k = c.count(12)?;
    if k != n {
        return Err("sequence length differs from vertex count".into());
    }
    let mut centers = Vec::with_capacity(k);
    let mut radii = Vec::with_capacity(k);
    let mut rank = vec![usize::MAX; n];
    for i in 0..k {
        let v = c.u32()? as usize;
        if v >= n || rank[v] != usize::MAX {
            return Err("invalid centre".into());
        }
        rank[v] = i;
        centers.push(v);
        radii.push(c.f64()?);
    }
    c.done()?;
    Ok(GonzalezSequence {
        centers,
        radii,
        rank,
    })
}

fn decode_troughs(b: &[u8], g: &GeometricGraph) -> Dec<TroughIndex> {
    let mut c = Cursor(b);
    let eps = c.f64()?;
    let origin = [c.f64()?, c.f64()?];
    let z_base = c.f64()?;
    if !(z_base > 0.0 && z_base.is_finite()) {
        return Err("bad trough band base".into());
    }
    let k = c.count(4)?;
    let mut troughs = Vec::with_capacity(k);
    for _ in 0..k {
        let e = c.u32()? as usize;
        if e >= g.num_edges() {
            return Err("trough edge out of range".into());
        }
        troughs.push(Trough::new(e, g.edge_segment(e), eps));
    }
    let nc = c.count(21)?;
    let mut cells = HashMap::with_capacity(nc);
    for _ in 0..nc {
        let l = c.u8()?;
        let x = c.i64()?;
        let y = c.i64()?;
        let m = c.u32()? as usize;
        if m > c.0.len() / 4 {
            return Err("cell larger than section".into());
        }
        let ids: Vec<u32> = (0..m)
            .map(|_| {
                c.u32().and_then(|i| {
                    if (i as usize) < k {
                        Ok(i)
                    } else {
                        Err("trough id out of range".into())
                    }
                })
            })
            .collect::<Dec<_>>()?;
        cells.insert((l, x, y), ids);
    }
    c.done()?;
    Ok(TroughIndex::from_parts(eps, troughs, origin, z_base, cells))
}
