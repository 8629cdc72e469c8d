//! Saving an index to its binary format and loading it back.

use mapmatch::graph::theta_graph;
use mapmatch::{IndexParams, MapMatchIndex, Point};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = theta_graph(200, 8, 14.0, 8)?;
    let (index, report) = MapMatchIndex::build(
        g,
        IndexParams {
            seed: 8,
            ..IndexParams::with_eps(0.25)
        },
    )?;
    println!("{}", serde_json::to_string(&report)?);

    let q = [
        Point::new(2.0, 2.0),
        Point::new(6.0, 3.0),
        Point::new(9.0, 8.0),
    ];
    let before = index.curve_query(&q)?;

    let mut bytes = Vec::new();
    index.save(&mut bytes)?;
    println!("index file: {} bytes", bytes.len());
    let loaded = MapMatchIndex::load(bytes.as_slice())?;
    let after = loaded.curve_query(&q)?;
    println!(
        "query before saving {:.6}, after loading {:.6}",
        before.value, after.value
    );
    assert_eq!(before.value.to_bits(), after.value.to_bits());
    Ok(())
}
