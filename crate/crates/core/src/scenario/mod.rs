//! Scenario files and everything read or written alongside them: event
//! streams, lookup tables, provenance graphs, reports and snapshots.

mod dsl;
mod error;
mod events;
mod files;
mod report;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ims::IdentityManagementSystem;
use crate::model::{Entity, EntityId, Scheme};
use crate::provenance::IdentityGraph;
use crate::surveillance::{AttributeDef, SurveillanceContext};
use crate::transform::TransformTable;

pub use dsl::{parse_scenario, to_dsl};
pub use error::ScenarioError;
pub use events::{load_events, parse_events};
pub use files::{load_graph, load_pairs, load_table, parse_graph, parse_pairs, parse_table};
pub use report::{render_report, write_report, ReportFormat, REPORT_SCHEMA};
pub use snapshot::{Snapshot, SNAPSHOT_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImsDecl {
    pub name: String,
    pub scheme: String,
    /// Entity and identifier value as written.
    pub binds: Vec<(EntityId, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDecl {
    pub name: String,
    pub from: String,
    pub to: String,
    /// Relative paths resolve against the scenario's directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceDecl {
    pub name: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveilDecl {
    /// Payload key carrying the identifier.
    pub key: String,
    pub scheme: String,
}

/// A parsed, reference-checked scenario. Files it names are not read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScenarioModel {
    pub schemes: BTreeMap<String, Scheme>,
    pub entities: BTreeMap<String, Entity>,
    pub systems: BTreeMap<String, ImsDecl>,
    pub attributes: BTreeMap<String, AttributeDef>,
    pub tables: BTreeMap<String, TableDecl>,
    pub provenance: BTreeMap<String, ProvenanceDecl>,
    pub surveil: Option<SurveilDecl>,
    pub sort_keys: Vec<BTreeSet<String>>,
}

impl ScenarioModel {
    pub fn scheme(&self, name: &str) -> Result<&Scheme, ScenarioError> {
        self.schemes.get(name).ok_or_else(|| ScenarioError::UnknownName { kind: "scheme", name: name.to_string() })
    }

    /// The surveillance context declared by the `surveil` block, with
    /// attributes in name order.
    pub fn context(&self) -> Result<SurveillanceContext, ScenarioError> {
        let decl = self
            .surveil
            .as_ref()
            .ok_or_else(|| ScenarioError::UnknownName { kind: "declaration", name: "surveil".into() })?;
        Ok(SurveillanceContext {
            attributes: self.attributes.values().cloned().collect(),
            key: decl.key.clone(),
            scheme: self.scheme(&decl.scheme)?.clone(),
            stream_end: None,
        })
    }

    /// Instantiates every declared system with its bindings applied in order.
    pub fn build_systems(&self) -> Result<BTreeMap<String, IdentityManagementSystem>, ScenarioError> {
        let mut out = BTreeMap::new();
        for decl in self.systems.values() {
            let mut ims = IdentityManagementSystem::new(&decl.name, self.scheme(&decl.scheme)?.clone());
            for (entity, value) in &decl.binds {
                ims.bind(entity, value)?;
            }
            out.insert(decl.name.clone(), ims);
        }
        Ok(out)
    }
}

/// A scenario together with the tables and graphs its declarations name.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: ScenarioModel,
    pub tables: BTreeMap<String, TransformTable>,
    pub graphs: BTreeMap<String, IdentityGraph>,
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn table(&self, name: &str) -> Result<&TransformTable, ScenarioError> {
        self.tables.get(name).ok_or_else(|| ScenarioError::UnknownName { kind: "table", name: name.to_string() })
    }

    pub fn graph(&self, name: &str) -> Result<&IdentityGraph, ScenarioError> {
        self.graphs.get(name).ok_or_else(|| ScenarioError::UnknownName { kind: "provenance graph", name: name.to_string() })
    }
}

/// Reads a scenario file and every table and graph file it declares.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    let model = parse_scenario(&text)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut tables = BTreeMap::new();
    for decl in model.tables.values() {
        let table = load_table(&base_dir.join(&decl.file), &decl.name, model.scheme(&decl.from)?, model.scheme(&decl.to)?)?;
        tables.insert(decl.name.clone(), table);
    }
    let mut graphs = BTreeMap::new();
    for decl in model.provenance.values() {
        graphs.insert(decl.name.clone(), load_graph(&base_dir.join(&decl.file))?);
    }
    Ok(Scenario { model, tables, graphs, base_dir })
}
