use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("polyline has no points")]
    EmptyPolyline,
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("grid base must be positive and finite, got {0}")]
    BadGridBase(f64),
    #[error("epsilon must lie in (0, 1], got {0}")]
    BadEpsilon(f64),
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("edge {index} references missing vertex {vertex}{}", line_suffix(*.line))]
    DanglingVertex {
        index: usize,
        vertex: usize,
        line: Option<usize>,
    },
    #[error("edge {index} is a self-loop on vertex {vertex}{}", line_suffix(*.line))]
    SelfLoop {
        index: usize,
        vertex: usize,
        line: Option<usize>,
    },
    #[error("vertex {index} has a non-finite coordinate{}", line_suffix(*.line))]
    NonFiniteVertex { index: usize, line: Option<usize> },
    #[error("vertex {0} is out of range")]
    NoSuchVertex(usize),
    #[error("invalid generator parameters: {0}")]
    BadParameters(String),
    #[error("graph has {edges} edges; exact density estimation is capped at {cap}")]
    TooLargeForExact { edges: usize, cap: usize },
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("vertex {0} is out of range")]
    NoSuchVertex(usize),
    #[error("curve must have at least two points, got {0}")]
    CurveTooShort(usize),
    #[error("graph has no vertices")]
    EmptyGraph,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HierarchyError {
    #[error("vertex set of size {size} is at or below the leaf cutoff {cutoff}")]
    TooSmall { size: usize, cutoff: usize },
    #[error("leaf cutoff must be at least 1")]
    BadLeafCutoff,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("vertex {0} is out of range")]
    NoSuchVertex(usize),
    #[error("segment endpoints must be finite")]
    NonFiniteSegment,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("checksum mismatch in section {0}")]
    Checksum(&'static str),
    #[error("corrupt index: {0}")]
    Corrupt(String),
}
