//! Matching noisy polylines against an index, compared with the exact
//! oracle.

use mapmatch::graph::perturbed_grid;
use mapmatch::{oracle, IndexParams, MapMatchIndex, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = perturbed_grid(10, 10, 1.0, 0.3, 4)?;
    let (index, _) = MapMatchIndex::build(g, IndexParams::with_eps(0.25))?;
    let g = &index.graph;
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    for _ in 0..5 {
        // a random walk of five vertices, each moved by up to 0.4 per axis
        let mut v = rng.gen_range(0..g.num_vertices());
        let mut q = Vec::new();
        for _ in 0..5 {
            q.push(g.vertex(v) + Point::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)));
            let nb = g.neighbors(v);
            v = nb[rng.gen_range(0..nb.len())].0;
        }
        let (ans, walk) = index.report_curve(&q)?;
        let exact = oracle::min_curve_frechet(g, &q)?.distance;
        println!(
            "approx {:.4} (certified lower bound {:.4}), exact {:.4}, {} decisions, walk {:?}",
            ans.value, ans.lower, exact, ans.diagnostics.decisions, walk.path
        );
    }
    Ok(())
}
