//! Separator hierarchy with transit tables, and the 3-approximate query for
//! straight segments between two vertices.

use mapmatch::graph::{lanky_check, theta_graph};
use mapmatch::hierarchy::{build_hierarchy, DEFAULT_LEAF_CUTOFF};
use mapmatch::{oracle, Segment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = theta_graph(300, 8, 17.0, 5)?;
    let tau = lanky_check(&g).max(1) as f64;
    let tree = build_hierarchy(&g, tau, DEFAULT_LEAF_CUTOFF, 5)?;
    println!("{}", serde_json::to_string_pretty(&tree.stats())?);

    for (u, v) in [(0, 1), (10, 250), (42, 199)] {
        let ans = tree.straight_query(&g, u, v);
        let exact = oracle::min_segment_frechet(&g, u, v, &Segment::new(g.vertex(u), g.vertex(v)))?
            .distance;
        println!(
            "{u} -> {v}: approx {:.4}, exact {:.4}, ratio {:.3}, {} transits examined",
            ans.value,
            exact,
            ans.value / exact.max(f64::MIN_POSITIVE),
            ans.examined
        );
    }
    Ok(())
}
