//! Finite relations between identifiers and entities.
//!
//! An [`Association`] is classified by two numbers: `p`, the largest number
//! of identifiers held by one entity, and `q`, the largest number of
//! entities sharing one identifier. The class names say which side is
//! shared instead of reusing the ambiguous "many-one"/"one-many" labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EntityId, Identifier};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssociationError {
    #[error("NotFound: no entity is associated with {0}")]
    NotFound(Identifier),
    #[error("Ambiguous: {identifier} is associated with {count} entities")]
    Ambiguous { identifier: Identifier, count: usize },
    #[error("PreconditionViolated: entity {entity} holds {count} identifiers")]
    PreconditionViolated { entity: EntityId, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CardinalityClass {
    /// p ≤ 1 and q ≤ 1.
    OneOne,
    /// Some entity holds several identifiers; no identifier is shared.
    SharedEntityManyIds,
    /// Some identifier is shared by several entities; each entity holds one.
    SharedIdManyEntities,
    ManyMany,
}

impl CardinalityClass {
    /// Position of the class in the source model's four-way list:
    /// 1 many-one, 2 one-one, 3 one-many, 4 many-many.
    pub fn case_number(self) -> u8 {
        match self {
            CardinalityClass::SharedEntityManyIds => 1,
            CardinalityClass::OneOne => 2,
            CardinalityClass::SharedIdManyEntities => 3,
            CardinalityClass::ManyMany => 4,
        }
    }

    /// The source model's label for the class.
    pub fn legacy_label(self) -> &'static str {
        match self {
            CardinalityClass::SharedEntityManyIds => "many-one",
            CardinalityClass::OneOne => "one-one",
            CardinalityClass::SharedIdManyEntities => "one-many",
            CardinalityClass::ManyMany => "many-many",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CardinalityClass::OneOne => "OneOne",
            CardinalityClass::SharedEntityManyIds => "SharedEntityManyIds",
            CardinalityClass::SharedIdManyEntities => "SharedIdManyEntities",
            CardinalityClass::ManyMany => "ManyMany",
        }
    }
}

impl fmt::Display for CardinalityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labelled finite set of `(identifier, entity)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub label: String,
    pairs: BTreeSet<(Identifier, EntityId)>,
}

impl Association {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into(), pairs: BTreeSet::new() }
    }

    pub fn from_pairs(
        label: impl Into<String>,
        pairs: impl IntoIterator<Item = (Identifier, EntityId)>,
    ) -> Self {
        Self { label: label.into(), pairs: pairs.into_iter().collect() }
    }

    /// Returns false when the pair was already present.
    pub fn insert(&mut self, identifier: Identifier, entity: EntityId) -> bool {
        self.pairs.insert((identifier, entity))
    }

    /// Removes every pair containing `identifier`; returns the entities it was bound to.
    pub fn remove_identifier(&mut self, identifier: &Identifier) -> BTreeSet<EntityId> {
        let removed: BTreeSet<EntityId> = self.search(identifier);
        self.pairs.retain(|(i, _)| i != identifier);
        removed
    }

    pub fn contains(&self, identifier: &Identifier, entity: &EntityId) -> bool {
        self.pairs.contains(&(identifier.clone(), entity.clone()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(Identifier, EntityId)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn identifiers(&self) -> BTreeSet<&Identifier> {
        self.pairs.iter().map(|(i, _)| i).collect()
    }

    pub fn entities(&self) -> BTreeSet<&EntityId> {
        self.pairs.iter().map(|(_, e)| e).collect()
    }

    /// Identifiers held by `entity`.
    pub fn identifiers_of(&self, entity: &EntityId) -> BTreeSet<Identifier> {
        self.pairs.iter().filter(|(_, e)| e == entity).map(|(i, _)| i.clone()).collect()
    }

    /// All entities paired with `identifier`; empty when unknown.
    pub fn search(&self, identifier: &Identifier) -> BTreeSet<EntityId> {
        self.pairs.iter().filter(|(i, _)| i == identifier).map(|(_, e)| e.clone()).collect()
    }

    /// The single entity paired with `identifier`.
    pub fn unique_entity(&self, identifier: &Identifier) -> Result<EntityId, AssociationError> {
        let found = self.search(identifier);
        match found.len() {
            0 => Err(AssociationError::NotFound(identifier.clone())),
            1 => Ok(found.into_iter().next().expect("len 1")),
            count => Err(AssociationError::Ambiguous { identifier: identifier.clone(), count }),
        }
    }

    /// `(p, q)`: max identifiers per entity, max entities per identifier.
    pub fn degrees(&self) -> (usize, usize) {
        let mut per_entity: BTreeMap<&EntityId, usize> = BTreeMap::new();
        let mut per_id: BTreeMap<&Identifier, usize> = BTreeMap::new();
        for (i, e) in &self.pairs {
            *per_entity.entry(e).or_default() += 1;
            *per_id.entry(i).or_default() += 1;
        }
        (
            per_entity.values().copied().max().unwrap_or(0),
            per_id.values().copied().max().unwrap_or(0),
        )
    }

    pub fn classify(&self) -> CardinalityClass {
        classify_cardinality(self)
    }
}

pub fn classify_cardinality(a: &Association) -> CardinalityClass {
    let (p, q) = a.degrees();
    match (p > 1, q > 1) {
        (false, false) => CardinalityClass::OneOne,
        (true, false) => CardinalityClass::SharedEntityManyIds,
        (false, true) => CardinalityClass::SharedIdManyEntities,
        (true, true) => CardinalityClass::ManyMany,
    }
}

pub fn search(a: &Association, identifier: &Identifier) -> BTreeSet<EntityId> {
    a.search(identifier)
}

pub fn unique_entity(a: &Association, identifier: &Identifier) -> Result<EntityId, AssociationError> {
    a.unique_entity(identifier)
}

/// Suffix separator for enumerated identifiers; outside every mask alphabet.
pub const ENUMERATION_SEPARATOR: char = '#';

/// Makes a shared-name association injective by numbering the entities
/// that share each identifier: `(i, e)` becomes `(i#k, e)` where `k`
/// counts from 1 in entity-id order. Requires every entity to hold exactly
/// one identifier.
pub fn enumerate(a: &Association) -> Result<Association, AssociationError> {
    let mut per_entity: BTreeMap<&EntityId, usize> = BTreeMap::new();
    for (_, e) in a.pairs() {
        *per_entity.entry(e).or_default() += 1;
    }
    if let Some((entity, count)) = per_entity.into_iter().find(|(_, n)| *n > 1) {
        return Err(AssociationError::PreconditionViolated { entity: entity.clone(), count });
    }
    let mut out = Association::new(a.label.clone());
    // pairs are ordered by identifier, then entity id
    let mut current: Option<&Identifier> = None;
    let mut k = 0usize;
    for (i, e) in a.pairs() {
        if current != Some(i) {
            current = Some(i);
            k = 0;
        }
        k += 1;
        let value = format!("{}{}{}", i.value(), ENUMERATION_SEPARATOR, k);
        out.insert(Identifier::new(i.scheme(), value), e.clone());
    }
    Ok(out)
}
