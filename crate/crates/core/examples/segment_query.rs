//! `(1 + eps)`-approximate fixed-endpoint segment queries with path
//! reporting, against the exact oracle.

use mapmatch::graph::perturbed_grid;
use mapmatch::seggrid::QueryStats;
use mapmatch::{oracle, IndexParams, MapMatchIndex, Point, Segment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = perturbed_grid(12, 12, 1.0, 0.3, 2)?;
    let (index, report) = MapMatchIndex::build(g, IndexParams::with_eps(0.25))?;
    println!(
        "index: {} transit pairs, eps_segment {:.4}",
        report.transit_pairs,
        index.params.eps_segment()
    );

    let g = &index.graph;
    let queries = [(0, 143), (5, 100), (77, 12)];
    for (u, v) in queries {
        let pq = Segment::new(
            g.vertex(u) + Point::new(0.4, 0.2),
            g.vertex(v) + Point::new(-0.1, 0.5),
        );
        let mut stats = QueryStats::default();
        let (ans, walk) = index.report_segment(u, v, &pq, &mut stats)?;
        let exact = oracle::min_segment_frechet(g, u, v, &pq)?.distance;
        println!(
            "{u} -> {v}: value {:.4} (exact {:.4}), walk of {} vertices at {:.4}, {} lookups",
            ans.value,
            exact,
            walk.path.len(),
            walk.distance,
            stats.lookups
        );
    }
    Ok(())
}
