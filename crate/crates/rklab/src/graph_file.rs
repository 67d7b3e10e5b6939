//! Graph files: `{"vertices": [...], "x0": id, "edges": [{"u": id, "v": id, "w": num}, ...]}`.
//!
//! Vertex ids may be JSON strings or integers; integers are kept as their
//! decimal text. A handful of reference graphs are built in and can be named
//! as `builtin:<name>` wherever a graph path is expected.

use std::fmt;
use std::path::Path;

use rklab_core::{GraphDescription, GraphError, WeightedGraph};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphFileError {
    #[error("cannot read graph file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
    #[error("unknown builtin graph {0:?} (known: single-edge, triangle, chain, cycle-chord)")]
    UnknownBuiltin(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Name(String),
    Number(u64),
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Name(s) => f.write_str(s),
            VertexId::Number(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<VertexId>,
    pub x0: VertexId,
    pub edges: Vec<EdgeEntry>,
}

impl GraphFile {
    pub fn description(&self) -> GraphDescription {
        GraphDescription {
            vertices: self.vertices.iter().map(ToString::to_string).collect(),
            x0: self.x0.to_string(),
            edges: self
                .edges
                .iter()
                .map(|e| (e.u.to_string(), e.v.to_string(), e.w))
                .collect(),
        }
    }

    pub fn build(&self) -> Result<WeightedGraph, GraphError> {
        self.description().build()
    }

    pub fn from_graph(g: &WeightedGraph) -> Self {
        let d = g.description();
        GraphFile {
            vertices: d.vertices.into_iter().map(VertexId::Name).collect(),
            x0: VertexId::Name(d.x0),
            edges: d
                .edges
                .into_iter()
                .map(|(u, v, w)| EdgeEntry {
                    u: VertexId::Name(u),
                    v: VertexId::Name(v),
                    w,
                })
                .collect(),
        }
    }
}

pub fn parse_graph(json: &str) -> Result<WeightedGraph, GraphFileError> {
    let file: GraphFile = serde_json::from_str(json)?;
    Ok(file.build()?)
}

/// Loads a graph from a path, or from `builtin:<name>`.
pub fn load_graph(source: &str) -> Result<WeightedGraph, GraphFileError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return builtin(name).ok_or_else(|| GraphFileError::UnknownBuiltin(name.to_string()));
    }
    let text = std::fs::read_to_string(Path::new(source)).map_err(|source_err| GraphFileError::Io {
        path: source.to_string(),
        source: source_err,
    })?;
    parse_graph(&text)
}

/// Reference graphs: `single-edge` (W = 2), `triangle` (unit weights),
/// `chain` (x0 - a - b, unit weights) and `cycle-chord` (4-cycle plus a chord).
pub fn builtin(name: &str) -> Option<WeightedGraph> {
    let d = match name {
        "single-edge" => GraphDescription::new(["x0", "a"], "x0").edge("x0", "a", 2.0),
        "triangle" => GraphDescription::new(["x0", "a", "b"], "x0")
            .edge("x0", "a", 1.0)
            .edge("x0", "b", 1.0)
            .edge("a", "b", 1.0),
        "chain" => GraphDescription::new(["x0", "a", "b"], "x0")
            .edge("x0", "a", 1.0)
            .edge("a", "b", 1.0),
        "cycle-chord" => GraphDescription::new(["x0", "a", "b", "c"], "x0")
            .edge("x0", "a", 1.0)
            .edge("a", "b", 2.0)
            .edge("b", "c", 0.5)
            .edge("c", "x0", 1.0)
            .edge("a", "c", 2.0),
        _ => return None,
    };
    Some(d.build().expect("builtin graphs are valid"))
}
