use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GeometricGraph;
use crate::error::{GeomError, GraphError};
use crate::geom::{Point, Polyline};

/// On-disk graph layout: `{"vertices": [[x, y], ...], "edges": [[u, v], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<[f64; 2]>,
    pub edges: Vec<[usize; 2]>,
}

pub fn parse_graph(text: &str) -> Result<GeometricGraph, GraphError> {
    let f: GraphFile = serde_json::from_str(text)?;
    let vertices = f.vertices.iter().map(|&a| Point::from(a)).collect();
    let edges = f.edges.iter().map(|e| (e[0], e[1])).collect();
    GeometricGraph::new(vertices, edges).map_err(|e| match e {
        GraphError::DanglingVertex { index, vertex, .. } => GraphError::DanglingVertex {
            index,
            vertex,
            line: element_line(text, "edges", index),
        },
        GraphError::SelfLoop { index, vertex, .. } => GraphError::SelfLoop {
            index,
            vertex,
            line: element_line(text, "edges", index),
        },
        GraphError::NonFiniteVertex { index, .. } => GraphError::NonFiniteVertex {
            index,
            line: element_line(text, "vertices", index),
        },
        other => other,
    })
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<GeometricGraph, GraphError> {
    let mut s = String::new();
    std::fs::File::open(path)?.read_to_string(&mut s)?;
    parse_graph(&s)
}

/// Writes the graph; coordinates round-trip exactly.
pub fn save_graph(g: &GeometricGraph, mut w: impl Write) -> Result<(), GraphError> {
    let f = GraphFile {
        vertices: g.vertices().iter().map(|&p| p.into()).collect(),
        edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
    };
    serde_json::to_writer(&mut w, &f)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn parse_curve(text: &str) -> Result<Polyline, GraphError> {
    let p: Polyline = serde_json::from_str(text)?;
    Polyline::new(p.vertices().to_vec()).map_err(|e| match e {
        GeomError::NonFinite(index) => GraphError::NonFiniteVertex {
            index,
            line: element_line(text, "points", index),
        },
        other => GraphError::BadParameters(other.to_string()),
    })
}

pub fn load_curve(path: impl AsRef<Path>) -> Result<Polyline, GraphError> {
    let mut s = String::new();
    std::fs::File::open(path)?.read_to_string(&mut s)?;
    parse_curve(&s)
}

pub fn save_curve(c: &Polyline, mut w: impl Write) -> Result<(), GraphError> {
    serde_json::to_writer(&mut w, c)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// 1-based line of the `index`-th element of the top-level array under `key`.
fn element_line(text: &str, key: &str, index: usize) -> Option<usize> {
    let needle = format!("\"{key}\"");
    let start = text.find(&needle)? + needle.len();
    let bytes = text.as_bytes();
    let mut i = start;
    while i < bytes.len() && bytes[i] != b'[' {
        i += 1;
    }
    let mut depth = 0usize;
    let mut count = 0usize;
    let mut expect_elem = false;
    while i < bytes.len() {
        match bytes[i] {
            b'[' => {
                depth += 1;
                if depth == 2 {
                    if count == index {
                        return Some(text[..i].matches('\n').count() + 1);
                    }
                    count += 1;
                }
                expect_elem = depth == 1;
            }
            b']' => {
                if depth == 1 {
                    return None;
                }
                depth -= 1;
            }
            c if depth == 1 && expect_elem && !c.is_ascii_whitespace() && c != b',' => {
                if count == index {
                    return Some(text[..i].matches('\n').count() + 1);
                }
                count += 1;
                expect_elem = false;
            }
            b',' if depth == 1 => expect_elem = true,
            _ => {}
        }
        i += 1;
    }
    None
}
