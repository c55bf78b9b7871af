use thiserror::Error;

use crate::ims::ImsError;
use crate::provenance::ProvenanceError;
use crate::transform::TransformError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("SyntaxError at {line}:{column}: expected {expected}, found {found}")]
    SyntaxError { line: usize, column: usize, expected: String, found: String },
    #[error("UnresolvedReference: {name} (line {line})")]
    UnresolvedReference { name: String, line: usize },
    #[error("DuplicateName: {name} (line {line})")]
    DuplicateName { name: String, line: usize },
    #[error("InvalidDeclaration at line {line}: {message}")]
    InvalidDeclaration { line: usize, message: String },
    #[error("IoError: {path}: {message}")]
    IoError { path: String, message: String },
    #[error("MalformedLine: line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("MalformedTable: {source_name} line {line}: {message}")]
    MalformedTable { source_name: String, line: usize, message: String },
    #[error("MalformedGraph: {0}")]
    MalformedGraph(String),
    #[error("VersionMismatch: found {found}, expected {expected}")]
    VersionMismatch { found: String, expected: u32 },
    #[error("CorruptSnapshot at byte {offset}: {message}")]
    CorruptSnapshot { offset: usize, message: String },
    #[error("UnknownName: no {kind} named {name}")]
    UnknownName { kind: &'static str, name: String },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
    #[error(transparent)]
    Ims(#[from] ImsError),
}

impl ScenarioError {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        ScenarioError::IoError { path: path.display().to_string(), message: err.to_string() }
    }
}
