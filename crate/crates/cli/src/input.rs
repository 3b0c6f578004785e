//! Loading graph descriptions from disk or the built-in catalog.

use std::path::{Path, PathBuf};

use pimsner::{catalog, GraphBimodule, GraphSpec};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        source: pimsner::Error,
    },

    #[error("unknown built-in graph `{0}` (known: {known})", known = catalog::NAMES.join(", "))]
    UnknownBuiltin(String),

    #[error("give either a graph file or --builtin, not both")]
    Ambiguous,

    #[error("no graph given: pass a file or --builtin NAME")]
    Missing,
}

/// Where a graph came from, echoed into reports.
#[derive(Debug, Clone)]
pub enum Source {
    File(PathBuf),
    Builtin(String),
}

impl Source {
    pub fn describe(&self) -> String {
        match self {
            Source::File(p) => p.display().to_string(),
            Source::Builtin(n) => format!("builtin:{n}"),
        }
    }
}

/// Parses a graph description. Positions in errors are 1-based.
pub fn parse_graph(text: &str, path: &Path) -> Result<GraphBimodule, InputError> {
    let spec: GraphSpec = serde_json::from_str(text).map_err(|e| InputError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let invalid = |source| InputError::Invalid {
        path: path.to_path_buf(),
        source,
    };
    let module = GraphBimodule::from_spec(&spec).map_err(invalid)?;
    module.require_no_sources_or_sinks().map_err(invalid)?;
    Ok(module)
}

// serde_json appends " at line L column C"; the position is reported separately
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn load(file: Option<&Path>, builtin: Option<&str>) -> Result<(GraphBimodule, Source), InputError> {
    match (file, builtin) {
        (Some(_), Some(_)) => Err(InputError::Ambiguous),
        (None, None) => Err(InputError::Missing),
        (None, Some(name)) => catalog::by_name(name)
            .map(|m| (m, Source::Builtin(name.to_string())))
            .ok_or_else(|| InputError::UnknownBuiltin(name.to_string())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            Ok((parse_graph(&text, path)?, Source::File(path.to_path_buf())))
        }
    }
}
