//! Commands behind the `mapmatch` binary.
//!
//! Exit codes: 0 success, 2 input error, 3 index version or corruption,
//! 4 internal invariant violation.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::curvequery::{report_curve_with, QueryConfig};
use crate::geom::{polyline_frechet, Point, Polyline, Segment};
use crate::graph::{load_curve, load_graph, realism_report, save_curve, save_graph, GraphKind};
use crate::index::{IndexParams, MapMatchIndex};
use crate::{GeometricGraph, IndexError};

#[derive(Debug, Parser)]
#[command(
    name = "mapmatch",
    version,
    about = "Approximate Fréchet map matching on road-network graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index for a graph and write it to a file.
    Build {
        graph: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Lankiness bound; measured from the graph when omitted.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = crate::hierarchy::DEFAULT_LEAF_CUTOFF)]
        leaf_cutoff: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Match a curve against an indexed graph.
    Query {
        index: PathBuf,
        curve: PathBuf,
        /// Also report the matched walk.
        #[arg(long)]
        report: bool,
        /// Write the reported walk and the curve as GeoJSON.
        #[arg(long)]
        geojson: Option<PathBuf>,
    },
    /// Exact reference matching without an index.
    Oracle {
        graph: PathBuf,
        curve: PathBuf,
        /// Fixed start and end vertex; the curve must be a single segment.
        #[arg(long, num_args = 2, value_names = ["U", "V"])]
        segment: Option<Vec<usize>>,
        /// Fréchet distance of a given walk (JSON list or object with "path").
        #[arg(long)]
        validate: Option<PathBuf>,
    },
    /// Realism estimates for a graph.
    Stats {
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a graph or a query curve.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Time index queries against the exact oracle.
    Bench {
        index: PathBuf,
        #[arg(long, default_value_t = 5)]
        queries: usize,
        /// Curve vertex count.
        #[arg(long, default_value_t = 4)]
        length: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Perturbed grid graph.
    Grid {
        #[arg(long, default_value_t = 10)]
        rows: usize,
        #[arg(long, default_value_t = 10)]
        cols: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = 0.2)]
        perturbation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Theta graph over uniform random points.
    Theta {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 8)]
        cones: usize,
        #[arg(long, default_value_t = 10.0)]
        extent: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Noisy copy of a random walk in a graph.
    Curve {
        graph: PathBuf,
        #[arg(long, default_value_t = 4)]
        length: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError {
            code: 2,
            message: e.to_string(),
        }
    }
    fn internal(e: impl std::fmt::Display) -> Self {
        CliError {
            code: 4,
            message: e.to_string(),
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        let code = match e {
            IndexError::Io(_) => 2,
            _ => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Runs a parsed command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Build {
            graph,
            eps,
            tau,
            leaf_cutoff,
            seed,
            out: path,
        } => cmd_build(
            &graph,
            IndexParams {
                eps,
                tau,
                leaf_cutoff,
                seed,
            },
            &path,
            out,
        ),
        Command::Query {
            index,
            curve,
            report,
            geojson,
        } => cmd_query(&index, &curve, report, geojson.as_deref(), out),
        Command::Oracle {
            graph,
            curve,
            segment,
            validate,
        } => cmd_oracle(
            &graph,
            &curve,
            segment.map(|s| (s[0], s[1])),
            validate.as_deref(),
            out,
        ),
        Command::Stats { graph, seed } => cmd_stats(&graph, seed, out),
        Command::Gen { kind } => cmd_gen(kind, out),
        Command::Bench {
            index,
            queries,
            length,
            noise,
            seed,
        } => cmd_bench(&index, queries, length, noise, seed, out),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn emit(out: &mut dyn Write, v: &Value) -> CliResult {
    let s = serde_json::to_string_pretty(v).map_err(CliError::internal)?;
    writeln!(out, "{s}").map_err(CliError::input)
}

fn load_index(path: &Path) -> Result<MapMatchIndex, CliError> {
    let f = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(MapMatchIndex::load(BufReader::new(f))?)
}

fn read_graph(path: &Path) -> Result<GeometricGraph, CliError> {
    load_graph(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn read_curve(path: &Path) -> Result<Polyline, CliError> {
    load_curve(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn cmd_build(graph: &Path, params: IndexParams, path: &Path, out: &mut dyn Write) -> CliResult {
    let g = read_graph(graph)?;
    if !(params.eps > 0.0 && params.eps < 1.0) {
        return Err(CliError::input(format!(
            "--eps must lie in (0, 1), got {}",
            params.eps
        )));
    }
    if params.tau.is_some_and(|t| !(t > 0.0)) || params.leaf_cutoff == 0 {
        return Err(CliError::input(
            "--tau must be positive and --leaf-cutoff at least 1",
        ));
    }
    let (idx, report) = MapMatchIndex::build(g, params).map_err(CliError::input)?;
    let mut w = create(path)?;
    idx.save(&mut w)?;
    w.flush().map_err(CliError::input)?;
    eprintln!("built in {:.3}s", report.build_seconds);
    let bytes = std::fs::metadata(path).map(|m| m.len()).unwrap_or(0);
    let mut v = serde_json::to_value(&report).map_err(CliError::internal)?;
    v["index_bytes"] = json!(bytes);
    v["eps_budget"] = json!({
        "segment": idx.params.eps_segment(),
        "candidates": idx.params.eps_candidates(),
        "bisection": idx.params.eps_bisect(),
    });
    emit(out, &v)
}

fn geojson(g: &GeometricGraph, path: &[usize], q: &[Point]) -> Value {
    let line = |pts: Vec<Point>| json!({"type": "LineString", "coordinates": pts.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>()});
    json!({
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "properties": {"role": "walk", "vertices": path}, "geometry": line(g.walk_points(path))},
            {"type": "Feature", "properties": {"role": "curve"}, "geometry": line(q.to_vec())},
        ]
    })
}

pub fn cmd_query(
    index: &Path,
    curve: &Path,
    report: bool,
    geo: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult {
    let idx = load_index(index)?;
    let q = read_curve(curve)?;
    let q = q.vertices();
    if q.len() < 2 {
        return Err(CliError::input("query curve needs at least two vertices"));
    }
    let cfg = QueryConfig::for_index(&idx, q);
    let (ans, res) = if report || geo.is_some() {
        let (a, r) = report_curve_with(&idx, q, &cfg).map_err(CliError::input)?;
        (a, Some(r))
    } else {
        (
            crate::curvequery::curve_query_with(&idx, q, &cfg).map_err(CliError::input)?,
            None,
        )
    };
    let mut v =
        json!({ "distance": ans.value, "lower_bound": ans.lower, "diagnostics": ans.diagnostics });
    if let Some(r) = &res {
        let valid = idx.graph.is_walk(&r.path) && r.distance <= ans.value * (1.0 + 1e-9) + 1e-12;
        if !valid && ans.value.is_finite() {
            return Err(CliError::internal(format!(
                "reported walk fails validation ({} > {})",
                r.distance, ans.value
            )));
        }
        v["path"] = json!(r.path);
        v["walk_distance"] = json!(r.distance);
        v["alignment"] = json!(r.alignment);
        v["valid"] = json!(valid);
        if let Some(p) = geo {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, &geojson(&idx.graph, &r.path, q))
                .map_err(CliError::internal)?;
            w.flush().map_err(CliError::input)?;
        }
    }
    emit(out, &v)
}

fn read_walk(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let list = v.get("path").unwrap_or(&v);
    serde_json::from_value(list.clone())
        .map_err(|e| CliError::input(format!("{}: expected a vertex list: {e}", path.display())))
}

pub fn cmd_oracle(
    graph: &Path,
    curve: &Path,
    segment: Option<(usize, usize)>,
    validate: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult {
    let g = read_graph(graph)?;
    let q = read_curve(curve)?;
    let q = q.vertices();
    if let Some(p) = validate {
        let walk = read_walk(p)?;
        let valid = g.is_walk(&walk);
        let distance = if valid {
            polyline_frechet(&g.walk_points(&walk), q)
        } else {
            f64::INFINITY
        };
        return emit(
            out,
            &json!({ "distance": distance, "path": walk, "valid": valid }),
        );
    }
    let res = match segment {
        Some((u, v)) => {
            if q.len() != 2 {
                return Err(CliError::input(
                    "--segment needs a curve with exactly two vertices",
                ));
            }
            crate::oracle::min_segment_frechet(&g, u, v, &Segment::new(q[0], q[1]))
                .map_err(CliError::input)?
        }
        None => crate::oracle::min_curve_frechet(&g, q).map_err(CliError::input)?,
    };
    emit(
        out,
        &json!({ "distance": res.distance, "path": res.path, "alignment": res.alignment, "valid": g.is_walk(&res.path) }),
    )
}

pub fn cmd_stats(graph: &Path, seed: u64, out: &mut dyn Write) -> CliResult {
    let g = read_graph(graph)?;
    let r = realism_report(&g, seed);
    emit(out, &serde_json::to_value(r).map_err(CliError::internal)?)
}

/// A random walk of `length` vertices with Gaussian-free uniform noise of
/// radius `noise` on each vertex.
pub fn noisy_walk(g: &GeometricGraph, length: usize, noise: f64, seed: u64) -> Option<Vec<Point>> {
    if g.num_vertices() == 0 || length < 2 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = rng.gen_range(0..g.num_vertices());
    let mut pts = Vec::with_capacity(length);
    for i in 0..length {
        let ang = rng.gen::<f64>() * std::f64::consts::TAU;
        let rad = noise * rng.gen::<f64>().sqrt();
        pts.push(g.vertex(v) + Point::new(ang.cos(), ang.sin()) * rad);
        if i + 1 < length {
            let nb = g.neighbors(v);
            if !nb.is_empty() {
                v = nb[rng.gen_range(0..nb.len())].0;
            }
        }
    }
    Some(pts)
}

pub fn cmd_gen(kind: GenKind, out: &mut dyn Write) -> CliResult {
    let (g, seed, path) = match kind {
        GenKind::Grid {
            rows,
            cols,
            spacing,
            perturbation,
            seed,
            out: p,
        } => (
            GraphKind::Grid {
                rows,
                cols,
                spacing,
                perturbation,
            },
            seed,
            p,
        ),
        GenKind::Theta {
            points,
            cones,
            extent,
            seed,
            out: p,
        } => (
            GraphKind::Theta {
                points,
                cones,
                extent,
            },
            seed,
            p,
        ),
        GenKind::Curve {
            graph,
            length,
            noise,
            seed,
            out: p,
        } => {
            let g = read_graph(&graph)?;
            let pts = noisy_walk(&g, length, noise, seed)
                .ok_or_else(|| CliError::input("need a non-empty graph and length >= 2"))?;
            let c = Polyline::new(pts).map_err(CliError::input)?;
            let mut w = create(&p)?;
            save_curve(&c, &mut w).map_err(CliError::input)?;
            w.flush().map_err(CliError::input)?;
            return emit(out, &json!({ "curve": p, "vertices": c.len() }));
        }
    };
    let graph = g.generate(seed).map_err(CliError::input)?;
    let mut w = create(&path)?;
    save_graph(&graph, &mut w).map_err(CliError::input)?;
    w.flush().map_err(CliError::input)?;
    emit(
        out,
        &json!({ "graph": path, "vertices": graph.num_vertices(), "edges": graph.num_edges() }),
    )
}

pub fn cmd_bench(
    index: &Path,
    queries: usize,
    length: usize,
    noise: f64,
    seed: u64,
    out: &mut dyn Write,
) -> CliResult {
    let idx = load_index(index)?;
    let mut rows = Vec::new();
    let (mut t_index, mut t_oracle) = (0.0, 0.0);
    for k in 0..queries {
        let Some(q) = noisy_walk(&idx.graph, length, noise, seed.wrapping_add(k as u64)) else {
            return Err(CliError::input(
                "bench needs a non-empty graph and length >= 2",
            ));
        };
        let cfg = QueryConfig::for_index(&idx, &q);
        let t0 = Instant::now();
        let a = crate::curvequery::curve_query_with(&idx, &q, &cfg).map_err(CliError::internal)?;
        let ti = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let o = crate::oracle::min_curve_frechet(&idx.graph, &q).map_err(CliError::internal)?;
        let to = t1.elapsed().as_secs_f64();
        if a.value < o.distance * (1.0 - 1e-9) - 1e-12 {
            return Err(CliError::internal(format!(
                "index value {} below exact {}",
                a.value, o.distance
            )));
        }
        t_index += ti;
        t_oracle += to;
        rows.push(json!({
            "query": k,
            "index": a.value,
            "oracle": o.distance,
            "index_seconds": ti,
            "oracle_seconds": to,
            "decisions": a.diagnostics.decisions,
            "arcs_tested": a.diagnostics.arcs_tested,
            "entry_misses": a.diagnostics.segment.misses,
        }));
    }
    let speedup = if t_index > 0.0 {
        t_oracle / t_index
    } else {
        f64::INFINITY
    };
    emit(
        out,
        &json!({
            "vertices": idx.graph.num_vertices(),
            "queries": rows,
            "index_seconds": t_index,
            "oracle_seconds": t_oracle,
            "speedup": speedup,
        }),
    )
}
