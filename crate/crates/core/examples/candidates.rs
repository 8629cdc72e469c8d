//! Candidate points near a query vertex: Gonzalez prefix, vertex
//! candidates and clipped long edges found by trough stabbing.

use mapmatch::candidates::{CandidateIndex, Square};
use mapmatch::graph::theta_graph;
use mapmatch::Point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = theta_graph(400, 8, 20.0, 11)?;
    let index = CandidateIndex::build(&g, 0.25, 11);
    let c = Point::new(10.0, 10.0);
    println!("nearest vertex to {c:?}: {:?}", index.nearest_vertex(&g, c));
    println!(
        "distance to the graph: {:.4}",
        index.distance_to_graph(&g, c)
    );

    for half in [0.5, 1.0, 2.0] {
        for eps in [0.5, 0.25] {
            let set = index.point_candidates(&g, &Square::new(c, half), eps);
            println!(
                "half side {half}, eps {eps}: {} vertices, {} long edges, {} points",
                set.vertices.len(),
                set.edges.len(),
                set.points.len()
            );
        }
    }
    Ok(())
}
