//! Translating identifiers between schemes through lookup tables, and
//! scoring how faithfully one identity management system reduces to
//! another.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ims::IdentityManagementSystem;
use crate::model::{Identifier, Scheme};
use crate::ratio::Proportion;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("NotFound: {value} has no row in table {table} (step {step})")]
    NotFound { step: usize, table: String, value: String },
    #[error("SchemeMismatch: {context} expects scheme {expected}, got {found}")]
    SchemeMismatch { context: String, expected: String, found: String },
    #[error("InvalidRow: table {table} row {row}: {value:?} does not match scheme {scheme}")]
    InvalidRow { table: String, row: usize, value: String, scheme: String },
    #[error("DuplicateRow: table {table} maps {value} twice")]
    DuplicateRow { table: String, value: String },
}

/// A total lookup from identifiers of one scheme to identifiers of another.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformTable {
    pub name: String,
    from_scheme: String,
    to_scheme: String,
    rows: BTreeMap<String, String>,
}

impl TransformTable {
    /// Canonicalizes every row against the two schemes. `rows` may use
    /// display forms; row numbers in errors are 1-based.
    pub fn new<'a>(
        name: impl Into<String>,
        from: &Scheme,
        to: &Scheme,
        rows: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, TransformError> {
        let name = name.into();
        let mut out = BTreeMap::new();
        for (n, (k, v)) in rows.into_iter().enumerate() {
            let row = n + 1;
            let bad = |value: &str, scheme: &Scheme| TransformError::InvalidRow {
                table: name.clone(),
                row,
                value: value.to_string(),
                scheme: scheme.name().to_string(),
            };
            let key = from.canonicalize(k).ok_or_else(|| bad(k, from))?;
            let value = to.canonicalize(v).ok_or_else(|| bad(v, to))?;
            if out.insert(key.clone(), value).is_some() {
                return Err(TransformError::DuplicateRow { table: name, value: key });
            }
        }
        Ok(Self { name, from_scheme: from.name().to_string(), to_scheme: to.name().to_string(), rows: out })
    }

    /// Maps every identifier of `scheme` to itself over the given values.
    pub fn identity<'a>(name: impl Into<String>, scheme: &Scheme, values: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            name: name.into(),
            from_scheme: scheme.name().to_string(),
            to_scheme: scheme.name().to_string(),
            rows: values.into_iter().map(|v| (v.to_string(), v.to_string())).collect(),
        }
    }

    pub fn from_scheme(&self) -> &str {
        &self.from_scheme
    }

    pub fn to_scheme(&self) -> &str {
        &self.to_scheme
    }

    pub fn rows(&self) -> &BTreeMap<String, String> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn lookup(&self, identifier: &Identifier, step: usize) -> Result<Identifier, TransformError> {
        if identifier.scheme() != self.from_scheme {
            return Err(TransformError::SchemeMismatch {
                context: format!("table {}", self.name),
                expected: self.from_scheme.clone(),
                found: identifier.scheme().to_string(),
            });
        }
        self.rows
            .get(identifier.value())
            .map(|v| Identifier::new(&self.to_scheme, v))
            .ok_or_else(|| TransformError::NotFound {
                step,
                table: self.name.clone(),
                value: identifier.value().to_string(),
            })
    }
}

/// One lookup performed while translating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub table: String,
    pub input: Identifier,
    pub output: Identifier,
}

pub fn translate(identifier: &Identifier, table: &TransformTable) -> Result<Identifier, TransformError> {
    table.lookup(identifier, 1)
}

/// Result of running a chain: final identifier and the per-table trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub result: Identifier,
    pub trace: Vec<TraceStep>,
}

/// Scheme-compatible sequence of tables applied left to right.
#[derive(Debug, Clone)]
pub struct TransformChain<'a> {
    steps: Vec<&'a TransformTable>,
}

impl<'a> TransformChain<'a> {
    pub fn new(steps: Vec<&'a TransformTable>) -> Result<Self, TransformError> {
        for pair in steps.windows(2) {
            if pair[0].to_scheme != pair[1].from_scheme {
                return Err(TransformError::SchemeMismatch {
                    context: format!("chain step {} -> {}", pair[0].name, pair[1].name),
                    expected: pair[1].from_scheme.clone(),
                    found: pair[0].to_scheme.clone(),
                });
            }
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[&'a TransformTable] {
        &self.steps
    }

    /// Applies every step; an empty chain is the identity.
    pub fn compose(&self, identifier: &Identifier) -> Result<Translation, TransformError> {
        let mut current = identifier.clone();
        let mut trace = Vec::with_capacity(self.steps.len());
        for (n, table) in self.steps.iter().enumerate() {
            let next = table.lookup(&current, n + 1)?;
            trace.push(TraceStep { table: table.name.clone(), input: current, output: next.clone() });
            current = next;
        }
        Ok(Translation { result: current, trace })
    }
}

pub fn compose(chain: &TransformChain<'_>, identifier: &Identifier) -> Result<Translation, TransformError> {
    chain.compose(identifier)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    /// Share of the source system's identifiers whose translation is live in the target.
    pub coverage: Proportion,
    /// Pairs on which the two systems disagree about identity authentication.
    pub conflicts: usize,
    pub missing: Vec<Identifier>,
}

/// Scores translating system `a` into system `b` through `table`.
///
/// A pair of translatable identifiers conflicts when `a` says they belong
/// to the same entity and `b` says their translations do not, or the
/// reverse.
pub fn reduce_ims(
    a: &IdentityManagementSystem,
    b: &IdentityManagementSystem,
    table: &TransformTable,
) -> Result<Reduction, TransformError> {
    for (side, system, expected) in [("source", a, &table.from_scheme), ("target", b, &table.to_scheme)] {
        if system.scheme().name() != expected {
            return Err(TransformError::SchemeMismatch {
                context: format!("{side} system {}", system.name()),
                expected: expected.clone(),
                found: system.scheme().name().to_string(),
            });
        }
    }
    let source: BTreeSet<&Identifier> = a.association().identifiers();
    let target: BTreeSet<&Identifier> = b.association().identifiers();
    let mut mapped: Vec<(&Identifier, Identifier)> = Vec::new();
    let mut missing = Vec::new();
    for id in &source {
        match table.lookup(id, 1) {
            Ok(t) if target.contains(&t) => mapped.push((id, t)),
            _ => missing.push((*id).clone()),
        }
    }
    let coverage = if source.is_empty() {
        Proportion::one()
    } else {
        Proportion::from_fraction(mapped.len() as u64, source.len() as u64).expect("count ≤ total")
    };
    let mut conflicts = 0;
    for (x, (i1, t1)) in mapped.iter().enumerate() {
        for (i2, t2) in &mapped[x + 1..] {
            if a.identity_authenticate(i1, i2) != b.identity_authenticate(t1, t2) {
                conflicts += 1;
            }
        }
    }
    Ok(Reduction { coverage, conflicts, missing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EntityId;

    fn reg() -> Scheme {
        Scheme::new("REG", "LLDDLLL", None).unwrap()
    }
    fn keeper() -> Scheme {
        Scheme::new("KEEPER", "LD{4}", None).unwrap()
    }
    fn postcode() -> Scheme {
        Scheme::new("ADDRESS", "LLDDLL", Some(vec![3, 3])).unwrap()
    }

    fn dvla() -> TransformTable {
        TransformTable::new("dvla", &reg(), &keeper(), [("AB12 CDE", "K-0042"), ("CD56 FGH", "K-0107")]).unwrap()
    }

    fn addresses() -> TransformTable {
        TransformTable::new("post", &keeper(), &postcode(), [("K0042", "SA2 8PP")]).unwrap()
    }

    #[test]
    fn translate_plate_to_keeper() {
        let plate = reg().identifier("AB12CDE").unwrap();
        assert_eq!(translate(&plate, &dvla()).unwrap(), Identifier::new("KEEPER", "K0042"));
        let unknown = reg().identifier("ZZ99ZZZ").unwrap();
        assert!(matches!(translate(&unknown, &dvla()), Err(TransformError::NotFound { .. })));
        let ni = crate::model::schemes::national_insurance().identifier("AB123456C").unwrap();
        assert!(matches!(translate(&ni, &dvla()), Err(TransformError::SchemeMismatch { .. })));
    }

    #[test]
    fn table_rows_are_checked() {
        assert!(matches!(
            TransformTable::new("t", &reg(), &keeper(), [("AB12CDE", "nope")]),
            Err(TransformError::InvalidRow { row: 1, .. })
        ));
        assert!(matches!(
            TransformTable::new("t", &reg(), &keeper(), [("AB12CDE", "K0001"), ("ab12 cde", "K0002")]),
            Err(TransformError::DuplicateRow { .. })
        ));
    }

    #[test]
    fn chains() {
        let (d, p) = (dvla(), addresses());
        let chain = TransformChain::new(vec![&d, &p]).unwrap();
        let plate = reg().identifier("AB12CDE").unwrap();
        let out = chain.compose(&plate).unwrap();
        assert_eq!(out.result, Identifier::new("ADDRESS", "SA28PP"));
        assert_eq!(out.trace.len(), 2);
        assert_eq!(out.trace[0].output, out.trace[1].input);

        let empty = TransformChain::new(vec![]).unwrap();
        assert_eq!(empty.compose(&plate).unwrap().result, plate);

        let other = reg().identifier("CD56FGH").unwrap();
        assert!(matches!(chain.compose(&other), Err(TransformError::NotFound { step: 2, .. })));
        assert!(TransformChain::new(vec![&p, &d]).is_err());
    }

    #[test]
    fn reduction_examples() {
        let s = Scheme::new("S", "D{2}", None).unwrap();
        let e = |v: &str| EntityId::new(v).unwrap();
        let mut a = IdentityManagementSystem::new("a", s.clone());
        for ent in ["e1", "e2", "e3", "e4"] {
            a.generate(&e(ent)).unwrap();
        }
        let values: Vec<String> = a.association().identifiers().iter().map(|i| i.value().to_string()).collect();
        let ident = TransformTable::identity("id", &s, values.iter().map(String::as_str));
        let r = reduce_ims(&a, &a, &ident).unwrap();
        assert!(r.coverage.is_one());
        assert_eq!(r.conflicts, 0);

        let partial = TransformTable::identity("id", &s, values[..3].iter().map(String::as_str));
        let r = reduce_ims(&a, &a, &partial).unwrap();
        assert_eq!(r.coverage.to_string(), "0.75");
        assert_eq!(r.missing.len(), 1);

        let other = Scheme::new("T", "D{2}", None).unwrap();
        let b = IdentityManagementSystem::new("b", other);
        assert!(matches!(reduce_ims(&a, &b, &ident), Err(TransformError::SchemeMismatch { .. })));
    }
}
