//! Versioned JSON snapshots of a scenario and the live state of its
//! identity management systems.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ims::IdentityManagementSystem;

use super::dsl::{parse_scenario, to_dsl};
use super::error::ScenarioError;
use super::ScenarioModel;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub model: ScenarioModel,
    pub systems: BTreeMap<String, IdentityManagementSystem>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stored {
    version: u32,
    scenario: String,
    systems: BTreeMap<String, IdentityManagementSystem>,
}

/// Byte offset of a 1-based line/column position reported by serde_json.
fn offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let before: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (before + column.saturating_sub(1)).min(text.len())
}

fn corrupt(text: &str, e: &serde_json::Error) -> ScenarioError {
    ScenarioError::CorruptSnapshot { offset: offset(text, e.line(), e.column()), message: e.to_string() }
}

impl Snapshot {
    /// Instantiates the model's systems in their declared state.
    pub fn from_model(model: ScenarioModel) -> Result<Self, ScenarioError> {
        let systems = model.build_systems()?;
        Ok(Self { model, systems })
    }

    pub fn system(&self, name: &str) -> Result<&IdentityManagementSystem, ScenarioError> {
        self.systems.get(name).ok_or_else(|| ScenarioError::UnknownName { kind: "system", name: name.to_string() })
    }

    pub fn to_json(&self) -> String {
        let stored = Stored { version: SNAPSHOT_VERSION, scenario: to_dsl(&self.model), systems: self.systems.clone() };
        let mut s = serde_json::to_string_pretty(&stored).expect("snapshots serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let value: Value = serde_json::from_str(text).map_err(|e| corrupt(text, &e))?;
        match value.get("version") {
            Some(Value::Number(n)) if n.as_u64() == Some(SNAPSHOT_VERSION as u64) => {}
            Some(other) => return Err(ScenarioError::VersionMismatch { found: other.to_string(), expected: SNAPSHOT_VERSION }),
            None => return Err(ScenarioError::VersionMismatch { found: "none".into(), expected: SNAPSHOT_VERSION }),
        }
        let stored: Stored = serde_json::from_str(text).map_err(|e| corrupt(text, &e))?;
        let model = parse_scenario(&stored.scenario)?;
        Ok(Self { model, systems: stored.systems })
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        std::fs::write(path, self.to_json()).map_err(|e| ScenarioError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
        Self::from_json(&text)
    }
}
