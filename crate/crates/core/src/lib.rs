//! Approximate Fréchet map matching on realistic road-network graphs.
//!
//! A [`index::MapMatchIndex`] is built once per graph and answers
//! `(1 + eps)`-approximate queries for the walk in the graph closest to a
//! query polyline under the Fréchet distance. The pieces, bottom-up:
//!
//! - [`geom`]: points, segments, free intervals, exponential grids, exact
//!   polyline Fréchet distance.
//! - [`graph`]: embedded graphs, shortest paths, realism estimators
//!   (density, stretch, lankiness) and generators.
//! - [`oracle`]: exact reference matchers by free-space propagation.
//! - [`hierarchy`]: balanced separator tree with transit-distance tables and
//!   a 3-approximate query for straight segments.
//! - [`seggrid`]: grid-snapped transit tables and the `(1 + eps)` segment
//!   query with path reporting.
//! - [`candidates`]: Gonzalez clustering, trough stabbing and candidate
//!   point sets near a query vertex.
//! - [`curvequery`]: the full polyline query by layered reachability and
//!   bisection.
//! - [`index`]: the assembled index and its binary file format.
//! - [`cli`]: the commands behind the `mapmatch` binary.
//!
//! Runnable tours of each capability live in `examples/`
//! (`cargo run --release --example <name>`):
//! `exact_oracle`, `realism_stats`, `separator_tree`, `segment_query`,
//! `candidates`, `curve_matching`, `index_file`.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod candidates;
pub mod cli;
pub mod curvequery;
pub mod error;
pub mod geom;
pub mod graph;
pub mod hierarchy;
pub mod index;
pub mod oracle;
pub mod seggrid;

pub use error::{GeomError, GraphError, HierarchyError, IndexError, OracleError, QueryError};
pub use geom::{Point, Polyline, Segment};
pub use graph::GeometricGraph;
pub use index::{IndexParams, MapMatchIndex};

/// Result of a matching query: the distance, the walk realizing it, and the
/// point of the walk matched to each query vertex.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MatchResult {
    pub distance: f64,
    pub path: Vec<usize>,
    pub alignment: Vec<Point>,
}

/// Number of worker threads for index construction (`MAPMATCH_THREADS`).
pub fn configured_threads() -> usize {
    std::env::var("MAPMATCH_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
