//! Identity management systems: generation and revocation of identifiers,
//! entity authentication and identity authentication, plus a binary-feature
//! biometric matcher.

use std::collections::BTreeSet;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::associations::Association;
use crate::model::{EntityId, Identifier, ModelError, Scheme};
use crate::ratio::Proportion;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImsError {
    #[error("SchemeExhausted: scheme {scheme} has no fresh identifiers left (capacity {capacity})")]
    SchemeExhausted { scheme: String, capacity: u128 },
    #[error("AlreadyIssued: {0} was issued before and cannot be rebound")]
    AlreadyIssued(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Record of one revocation, for provenance hooks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revocation {
    /// Position in the system's mutation sequence.
    pub seq: u64,
    pub identifier: Identifier,
    pub entities: BTreeSet<EntityId>,
}

/// Number of distinct canonical values a scheme can hold, saturating.
pub fn scheme_capacity(scheme: &Scheme) -> u128 {
    scheme
        .symbols()
        .iter()
        .map(|s| s.alphabet().len() as u128)
        .try_fold(1u128, |acc, r| acc.checked_mul(r))
        .unwrap_or(u128::MAX)
}

/// Renders `serial mod capacity` as a mixed-radix numeral over the mask,
/// most significant position first; each position's radix is the size of
/// its character class. Under `D{3}` serial 1 is `"001"` and serial 1000
/// wraps to `"000"`.
pub fn render_serial(scheme: &Scheme, serial: u64) -> String {
    let capacity = scheme_capacity(scheme);
    let mut rest = serial as u128 % capacity;
    let symbols = scheme.symbols();
    let mut out: Vec<char> = Vec::with_capacity(symbols.len());
    for sym in symbols.iter().rev() {
        let alphabet = sym.alphabet();
        let radix = alphabet.len() as u128;
        out.push(alphabet[(rest % radix) as usize]);
        rest /= radix;
    }
    out.reverse();
    out.into_iter().collect()
}

/// An identity management system over one scheme.
///
/// A single-writer state machine: `generate`, `bind` and `revoke` take
/// `&mut self`, queries take `&self`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityManagementSystem {
    name: String,
    scheme: Scheme,
    assoc: Association,
    serial: u64,
    /// Every canonical value ever bound, revoked or not.
    issued: BTreeSet<String>,
    revocations: Vec<Revocation>,
    seq: u64,
}

impl IdentityManagementSystem {
    pub fn new(name: impl Into<String>, scheme: Scheme) -> Self {
        let name = name.into();
        Self {
            assoc: Association::new(name.clone()),
            name,
            scheme,
            serial: 0,
            issued: BTreeSet::new(),
            revocations: Vec::new(),
            seq: 0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn association(&self) -> &Association {
        &self.assoc
    }

    pub fn serial(&self) -> u64 {
        self.serial
    }

    pub fn revocations(&self) -> &[Revocation] {
        &self.revocations
    }

    pub fn capacity(&self) -> u128 {
        scheme_capacity(&self.scheme)
    }

    /// Issues a fresh identifier for `entity`.
    ///
    /// Serials advance monotonically; values already issued (for example by
    /// [`bind`](Self::bind)) are skipped, so no identifier is ever reused.
    pub fn generate(&mut self, entity: &EntityId) -> Result<Identifier, ImsError> {
        let capacity = self.capacity();
        let mut serial = self.serial;
        loop {
            if serial as u128 >= capacity {
                return Err(ImsError::SchemeExhausted { scheme: self.scheme.name().to_string(), capacity });
            }
            serial += 1;
            let value = render_serial(&self.scheme, serial);
            if !self.issued.contains(&value) {
                self.serial = serial;
                self.seq += 1;
                self.issued.insert(value.clone());
                let id = Identifier::new(self.scheme.name(), value);
                self.assoc.insert(id.clone(), entity.clone());
                return Ok(id);
            }
        }
    }

    /// Binds an externally supplied identifier value to `entity`.
    ///
    /// Rebinding a live identifier to another entity is allowed (shared
    /// identifiers exist); rebinding a revoked one is not.
    pub fn bind(&mut self, entity: &EntityId, raw: &str) -> Result<Identifier, ImsError> {
        let id = self.scheme.identifier(raw)?;
        let live = !self.assoc.search(&id).is_empty();
        if self.issued.contains(id.value()) && !live {
            return Err(ImsError::AlreadyIssued(id.value().to_string()));
        }
        self.issued.insert(id.value().to_string());
        self.seq += 1;
        self.assoc.insert(id.clone(), entity.clone());
        Ok(id)
    }

    /// Deletes `identifier` from the system. Returns whether anything was removed.
    pub fn revoke(&mut self, identifier: &Identifier) -> bool {
        let entities = self.assoc.remove_identifier(identifier);
        if entities.is_empty() {
            return false;
        }
        self.seq += 1;
        self.revocations.push(Revocation { seq: self.seq, identifier: identifier.clone(), entities });
        true
    }

    pub fn entity_authenticate(&self, entity: &EntityId, identifier: &Identifier) -> bool {
        self.assoc.contains(identifier, entity)
    }

    /// True when the two identifiers share at least one entity.
    pub fn identity_authenticate(&self, first: &Identifier, second: &Identifier) -> bool {
        let a = self.assoc.search(first);
        if a.is_empty() {
            return false;
        }
        self.assoc.search(second).iter().any(|e| a.contains(e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BiometricError {
    #[error("LengthMismatch: profiles have {left} and {right} features")]
    LengthMismatch { left: usize, right: usize },
    #[error("EmptyProfile: a profile needs at least one feature")]
    EmptyProfile,
}

/// Fixed-length binary feature vector for one subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiometricProfile {
    pub subject: EntityId,
    features: Vec<bool>,
}

impl BiometricProfile {
    /// `declared_len` is the scenario's feature count.
    pub fn new(subject: EntityId, features: Vec<bool>, declared_len: usize) -> Result<Self, BiometricError> {
        if declared_len == 0 {
            return Err(BiometricError::EmptyProfile);
        }
        if features.len() != declared_len {
            return Err(BiometricError::LengthMismatch { left: features.len(), right: declared_len });
        }
        Ok(Self { subject, features })
    }

    pub fn features(&self) -> &[bool] {
        &self.features
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiometricMatch {
    pub score: Proportion,
    pub matched: bool,
}

/// `score = 1 - hamming / n`; a match when `score >= threshold`.
pub fn biometric_match(
    p: &BiometricProfile,
    q: &BiometricProfile,
    threshold: &Proportion,
) -> Result<BiometricMatch, BiometricError> {
    let n = p.features.len();
    if n != q.features.len() {
        return Err(BiometricError::LengthMismatch { left: n, right: q.features.len() });
    }
    let differing = p.features.iter().zip(&q.features).filter(|(a, b)| a != b).count();
    let score = Proportion::new(BigRational::new(((n - differing) as u64).into(), (n as u64).into()))
        .expect("hamming score lies in [0, 1]");
    let matched = &score >= threshold;
    Ok(BiometricMatch { score, matched })
}
