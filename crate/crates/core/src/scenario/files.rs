//! Lookup tables and relations as CSV; provenance graphs as JSON.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::associations::Association;
use crate::model::{EntityId, Identifier, Scheme};
use crate::provenance::{IdentityGraph, IdentityNode, Source};
use crate::ratio::Proportion;
use crate::transform::TransformTable;

use super::error::ScenarioError;

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))
}

/// Reads CSV records, requiring the leading columns of the header to be
/// exactly `columns`. Yields (line, fields).
fn records(text: &str, source_name: &str, columns: &[&str]) -> Result<Vec<(usize, Vec<String>)>, ScenarioError> {
    let malformed = |line: usize, message: String| ScenarioError::MalformedTable {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < columns.len() || names[..columns.len()] != *columns {
        return Err(malformed(1, format!("header must begin with {}", columns.join(","))));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            malformed(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

/// A `from,to` CSV lookup table; values may be in display form.
pub fn parse_table(text: &str, name: &str, from: &Scheme, to: &Scheme) -> Result<TransformTable, ScenarioError> {
    let rows = records(text, name, &["from", "to"])?;
    Ok(TransformTable::new(name, from, to, rows.iter().map(|(_, r)| (r[0].as_str(), r[1].as_str())))?)
}

pub fn load_table(path: &Path, name: &str, from: &Scheme, to: &Scheme) -> Result<TransformTable, ScenarioError> {
    parse_table(&read(path)?, name, from, to)
}

/// An `identifier,entity` CSV relation. Values are taken verbatim; an
/// optional third `scheme` column tags each identifier.
pub fn parse_pairs(text: &str, label: &str) -> Result<Association, ScenarioError> {
    let rows = records(text, label, &["identifier", "entity"])?;
    let mut pairs = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let entity = EntityId::new(r[1].clone()).map_err(|e| ScenarioError::MalformedTable {
            source_name: label.to_string(),
            line,
            message: e.to_string(),
        })?;
        let scheme = r.get(2).cloned().unwrap_or_default();
        pairs.push((Identifier::new(scheme, r[0].clone()), entity));
    }
    Ok(Association::from_pairs(label, pairs))
}

pub fn load_pairs(path: &Path) -> Result<Association, ScenarioError> {
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_pairs(&read(path)?, &label)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: String,
    source: String,
    /// A JSON number or a decimal/fraction string.
    weight: Value,
    #[serde(default = "yes")]
    valid: bool,
    #[serde(default)]
    supports: Vec<String>,
}

fn yes() -> bool {
    true
}

/// A JSON array of `{id, source, weight, valid, supports}` records.
pub fn parse_graph(text: &str) -> Result<IdentityGraph, ScenarioError> {
    let records: Vec<NodeRecord> = serde_json::from_str(text).map_err(|e| ScenarioError::MalformedGraph(e.to_string()))?;
    let mut nodes = Vec::with_capacity(records.len());
    for r in records {
        let weight = match &r.weight {
            Value::Number(n) => n.to_string(),
            Value::String(s) => s.clone(),
            other => return Err(ScenarioError::MalformedGraph(format!("node {}: weight {other} is not a number", r.id))),
        };
        let weight: Proportion = weight
            .parse()
            .map_err(|e| ScenarioError::MalformedGraph(format!("node {}: {e}", r.id)))?;
        let source: Source = r.source.parse()?;
        let mut node = IdentityNode::new(r.id, source, weight, r.valid);
        node.supports = r.supports;
        nodes.push(node);
    }
    Ok(IdentityGraph::from_nodes(nodes)?)
}

pub fn load_graph(path: &Path) -> Result<IdentityGraph, ScenarioError> {
    parse_graph(&read(path)?)
}
