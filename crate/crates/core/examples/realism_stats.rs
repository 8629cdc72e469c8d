//! Realism estimates (density, stretch, lankiness) for the two generators.

use mapmatch::graph::{
    estimate_density, lanky_check, perturbed_grid, realism_report, theta_graph, DensityMode,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graphs = [
        ("perturbed grid 8x8", perturbed_grid(8, 8, 1.0, 0.3, 1)?),
        ("theta graph, 64 points", theta_graph(64, 8, 8.0, 1)?),
    ];
    for (name, g) in &graphs {
        let exact = estimate_density(g, DensityMode::Exact)?;
        let sampled = estimate_density(
            g,
            DensityMode::Sampled {
                samples: 2000,
                seed: 3,
            },
        )?;
        println!(
            "{name}: density exact {exact}, sampled {sampled}, lankiness {}",
            lanky_check(g)
        );
        println!("  {}", serde_json::to_string(&realism_report(g, 3))?);
    }
    Ok(())
}
