//! Exact reference matching: the best walk for a fixed segment, and the
//! best walk with free endpoints for a polyline.

use mapmatch::graph::perturbed_grid;
use mapmatch::{oracle, Point, Segment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = perturbed_grid(5, 5, 1.0, 0.2, 7)?;
    println!(
        "graph: {} vertices, {} edges",
        g.num_vertices(),
        g.num_edges()
    );

    let (u, v) = (0, g.num_vertices() - 1);
    let pq = Segment::new(
        g.vertex(u) + Point::new(0.1, -0.2),
        g.vertex(v) + Point::new(-0.3, 0.1),
    );
    let m = oracle::min_segment_frechet(&g, u, v, &pq)?;
    println!(
        "segment {u} -> {v}: distance {:.4} along {:?}",
        m.distance, m.path
    );
    for delta in [m.distance * 0.99, m.distance * 1.01] {
        println!(
            "  decide at {delta:.4}: {}",
            oracle::decide_segment(&g, u, v, &pq, delta)?
        );
    }

    let q = vec![
        Point::new(0.2, 0.3),
        Point::new(2.1, 0.6),
        Point::new(2.4, 3.2),
        Point::new(3.9, 3.7),
    ];
    let c = oracle::min_curve_frechet(&g, &q)?;
    println!(
        "curve: distance {:.4}, lower bound {:.4}",
        c.distance,
        oracle::curve_lower_bound(&g, &q)
    );
    println!("  walk {:?}", c.path);
    Ok(())
}
