use std::path::Path;

use crate::model::ObservationEvent;

use super::error::ScenarioError;

/// Parses one JSON event per line. Blank lines are skipped; the first bad
/// line aborts with its 1-based number. File order is preserved.
pub fn parse_events(text: &str) -> Result<Vec<ObservationEvent>, ScenarioError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| ScenarioError::MalformedLine { line: n + 1, message };
        let ev: ObservationEvent = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if ev.payload.is_empty() {
            return Err(bad("empty payload".into()));
        }
        out.push(ev);
    }
    Ok(out)
}

pub fn load_events(path: &Path) -> Result<Vec<ObservationEvent>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    parse_events(&text)
}
