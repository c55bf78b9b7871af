//! Identity trees: identifiers whose validity rests on pre-existing
//! identifiers.
//!
//! Shared supports are allowed, so the structure is a DAG; "tree" refers
//! to its unfolding into paths. Validity of a node is its own flag in
//! conjunction with the validity of every support. Reliability is
//! `weight × min(support reliabilities)`, which equals the minimum over
//! maximal paths of the product of weights along the path.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::Proportion;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProvenanceError {
    #[error("UnknownNode: {0}")]
    UnknownNode(String),
    #[error("DuplicateNode: {0}")]
    DuplicateNode(String),
    #[error("CycleDetected: {parent} -> {child} would close a cycle")]
    CycleDetected { parent: String, child: String },
    #[error("InvalidNode: {0} is not valid, so it has no reliability")]
    InvalidNode(String),
    #[error("UnknownSource: {0:?}")]
    UnknownSource(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    StateGuaranteed,
    Biometric,
    Commercial,
    SelfAsserted,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::StateGuaranteed => "state-guaranteed",
            Source::Biometric => "biometric",
            Source::Commercial => "commercial",
            Source::SelfAsserted => "self-asserted",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = ProvenanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "state-guaranteed" | "state" => Source::StateGuaranteed,
            "biometric" => Source::Biometric,
            "commercial" => Source::Commercial,
            "self-asserted" => Source::SelfAsserted,
            other => return Err(ProvenanceError::UnknownSource(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityNode {
    pub id: String,
    pub source: Source,
    pub weight: Proportion,
    pub valid: bool,
    /// Supporting (child) node ids, in declaration order.
    pub supports: Vec<String>,
}

impl IdentityNode {
    pub fn new(id: impl Into<String>, source: Source, weight: Proportion, valid: bool) -> Self {
        Self { id: id.into(), source, weight, valid, supports: Vec::new() }
    }
}

/// A DAG of identity nodes; every support reference resolves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdentityGraph {
    nodes: BTreeMap<String, IdentityNode>,
}

impl IdentityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from complete node records, checking references and acyclicity.
    pub fn from_nodes(nodes: impl IntoIterator<Item = IdentityNode>) -> Result<Self, ProvenanceError> {
        let mut graph = Self::new();
        let mut edges = Vec::new();
        for mut node in nodes {
            edges.extend(node.supports.drain(..).map(|c| (node.id.clone(), c)));
            graph.add_node(node)?;
        }
        for (parent, child) in edges {
            graph.add_support(&parent, &child)?;
        }
        Ok(graph)
    }

    /// Adds a node without supports; any listed supports are ignored.
    pub fn add_node(&mut self, mut node: IdentityNode) -> Result<(), ProvenanceError> {
        if self.nodes.contains_key(&node.id) {
            return Err(ProvenanceError::DuplicateNode(node.id));
        }
        node.supports.clear();
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn node(&self, id: &str) -> Result<&IdentityNode, ProvenanceError> {
        self.nodes.get(id).ok_or_else(|| ProvenanceError::UnknownNode(id.to_string()))
    }

    fn node_mut(&mut self, id: &str) -> Result<&mut IdentityNode, ProvenanceError> {
        self.nodes.get_mut(id).ok_or_else(|| ProvenanceError::UnknownNode(id.to_string()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &IdentityNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.values().map(|n| n.supports.len()).sum()
    }

    pub fn set_valid(&mut self, id: &str, valid: bool) -> Result<(), ProvenanceError> {
        self.node_mut(id)?.valid = valid;
        Ok(())
    }

    pub fn set_weight(&mut self, id: &str, weight: Proportion) -> Result<(), ProvenanceError> {
        self.node_mut(id)?.weight = weight;
        Ok(())
    }

    fn reaches(&self, from: &str, target: &str) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(id) = stack.pop() {
            if id == target {
                return true;
            }
            if !seen.insert(id) {
                continue;
            }
            if let Some(n) = self.nodes.get(id) {
                stack.extend(n.supports.iter().map(String::as_str));
            }
        }
        false
    }

    /// Records that `parent` is established using `child`. Rejects edges
    /// that would close a cycle, leaving the graph unchanged. Adding an
    /// existing edge is a no-op.
    pub fn add_support(&mut self, parent: &str, child: &str) -> Result<(), ProvenanceError> {
        self.node(parent)?;
        self.node(child)?;
        if parent == child || self.reaches(child, parent) {
            return Err(ProvenanceError::CycleDetected { parent: parent.to_string(), child: child.to_string() });
        }
        let node = self.node_mut(parent)?;
        if !node.supports.iter().any(|c| c == child) {
            node.supports.push(child.to_string());
        }
        Ok(())
    }

    /// Every maximal downward path from `id`, in depth-first support order.
    pub fn provenance_paths(&self, id: &str) -> Result<Vec<Vec<String>>, ProvenanceError> {
        self.node(id)?;
        let mut out = Vec::new();
        let mut path = vec![id.to_string()];
        self.collect_paths(id, &mut path, &mut out);
        Ok(out)
    }

    fn collect_paths(&self, id: &str, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        let node = &self.nodes[id];
        if node.supports.is_empty() {
            out.push(path.clone());
            return;
        }
        for child in &node.supports {
            path.push(child.clone());
            self.collect_paths(child, path, out);
            path.pop();
        }
    }

    pub fn evaluate_validity(&self, id: &str) -> Result<bool, ProvenanceError> {
        self.node(id)?;
        let mut memo = BTreeMap::new();
        Ok(self.validity_memo(id, &mut memo))
    }

    fn validity_memo<'a>(&'a self, id: &'a str, memo: &mut BTreeMap<&'a str, bool>) -> bool {
        if let Some(&v) = memo.get(id) {
            return v;
        }
        let node = &self.nodes[id];
        let v = node.valid && node.supports.iter().all(|c| self.validity_memo(c, memo));
        memo.insert(id, v);
        v
    }

    pub fn evaluate_reliability(&self, id: &str) -> Result<Proportion, ProvenanceError> {
        if !self.evaluate_validity(id)? {
            return Err(ProvenanceError::InvalidNode(id.to_string()));
        }
        let mut memo = BTreeMap::new();
        Ok(self.reliability_memo(id, &mut memo))
    }

    fn reliability_memo<'a>(&'a self, id: &'a str, memo: &mut BTreeMap<&'a str, Proportion>) -> Proportion {
        if let Some(v) = memo.get(id) {
            return v.clone();
        }
        let node = &self.nodes[id];
        let weakest = node.supports.iter().map(|c| self.reliability_memo(c, memo)).min();
        let v = match weakest {
            Some(w) => &node.weight * &w,
            None => node.weight.clone(),
        };
        memo.insert(id, v.clone());
        v
    }

    /// Node records with their supports, for serialization.
    pub fn to_nodes(&self) -> Vec<IdentityNode> {
        self.nodes.values().cloned().collect()
    }
}

/// An identity tree shaped like the bank-account example: ID1 is backed by
/// ID2..ID6, and the biometric ID3 is itself backed by ID6.
pub fn reference_tree() -> IdentityGraph {
    let w = |s: &str| s.parse::<Proportion>().expect("static weight");
    let nodes = [
        ("ID1", Source::Commercial, "0.9"),
        ("ID2", Source::Commercial, "0.8"),
        ("ID3", Source::Biometric, "0.95"),
        ("ID4", Source::StateGuaranteed, "1"),
        ("ID5", Source::SelfAsserted, "0.7"),
        ("ID6", Source::SelfAsserted, "0.85"),
    ];
    let mut g = IdentityGraph::new();
    for (id, src, weight) in nodes {
        g.add_node(IdentityNode::new(id, src, w(weight), true)).expect("distinct ids");
    }
    for child in ["ID2", "ID3", "ID4", "ID5", "ID6"] {
        g.add_support("ID1", child).expect("acyclic");
    }
    g.add_support("ID3", "ID6").expect("acyclic");
    g
}
