//! Entities, identifier schemes, identifiers, observation events and the
//! two account shapes (customer and social-media).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Characters stripped from raw input before matching a mask.
pub const DISPLAY_SEPARATORS: [char; 2] = [' ', '-'];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("InvalidMask: {mask:?}: {reason}")]
    InvalidMask { mask: String, reason: String },
    #[error("InvalidGroups: groups {groups:?} do not partition a mask of length {len}")]
    InvalidGroups { groups: Vec<usize>, len: usize },
    #[error("EmptyEntityId")]
    EmptyEntityId,
    #[error("UnknownEntityKind: {0:?}")]
    UnknownEntityKind(String),
    #[error("EmptyPayload: observation at t={0} carries no payload")]
    EmptyPayload(u64),
    #[error("FormatMismatch: {value:?} does not match scheme {scheme}")]
    FormatMismatch { scheme: String, value: String },
    #[error("DuplicateCredentials: user name {0:?} already registered")]
    DuplicateCredentials(String),
    #[error("UnknownAccount: no account for user name {0:?}")]
    UnknownAccount(String),
}

/// Opaque entity token, unique within a scenario.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyEntityId);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntityKind {
    Person,
    Vehicle,
    Device,
    AccountHolder,
    Other,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Person => "person",
            EntityKind::Vehicle => "vehicle",
            EntityKind::Device => "device",
            EntityKind::AccountHolder => "account-holder",
            EntityKind::Other => "other",
        }
    }
}

impl FromStr for EntityKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "person" => EntityKind::Person,
            "vehicle" => EntityKind::Vehicle,
            "device" => EntityKind::Device,
            // the DSL's NAME token has no hyphen
            "account-holder" | "account_holder" => EntityKind::AccountHolder,
            "other" => EntityKind::Other,
            _ => return Err(ModelError::UnknownEntityKind(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
}

/// One position of an expanded mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskSymbol {
    /// `L`: uppercase ASCII letter.
    Letter,
    /// `D`: ASCII digit.
    Digit,
    /// `A`: uppercase ASCII letter or digit.
    Alphanumeric,
    Literal(char),
}

impl MaskSymbol {
    pub fn accepts(self, c: char) -> bool {
        match self {
            MaskSymbol::Letter => c.is_ascii_uppercase(),
            MaskSymbol::Digit => c.is_ascii_digit(),
            MaskSymbol::Alphanumeric => c.is_ascii_uppercase() || c.is_ascii_digit(),
            MaskSymbol::Literal(l) => c == l,
        }
    }

    /// Characters of this class in generation order.
    pub fn alphabet(self) -> Vec<char> {
        match self {
            MaskSymbol::Letter => ('A'..='Z').collect(),
            MaskSymbol::Digit => ('0'..='9').collect(),
            MaskSymbol::Alphanumeric => ('0'..='9').chain('A'..='Z').collect(),
            MaskSymbol::Literal(l) => vec![l],
        }
    }
}

fn expand_mask(mask: &str) -> Result<Vec<MaskSymbol>, ModelError> {
    let err = |reason: &str| ModelError::InvalidMask { mask: mask.to_string(), reason: reason.to_string() };
    let mut out: Vec<MaskSymbol> = Vec::new();
    let mut chars = mask.chars().peekable();
    let mut last_was_symbol = false;
    while let Some(c) = chars.next() {
        match c {
            '{' => {
                let prev = match (last_was_symbol, out.last()) {
                    (true, Some(&p)) => p,
                    _ => return Err(err("repetition without a preceding symbol")),
                };
                let mut digits = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some(d) if d.is_ascii_digit() => digits.push(d),
                        _ => return Err(err("malformed {n} repetition")),
                    }
                }
                let n: usize = digits.parse().map_err(|_| err("malformed {n} repetition"))?;
                if n == 0 {
                    return Err(err("repetition count must be at least 1"));
                }
                out.extend(std::iter::repeat_n(prev, n - 1));
                last_was_symbol = false;
            }
            '}' => return Err(err("unbalanced '}'")),
            'L' => {
                out.push(MaskSymbol::Letter);
                last_was_symbol = true;
            }
            'D' => {
                out.push(MaskSymbol::Digit);
                last_was_symbol = true;
            }
            'A' => {
                out.push(MaskSymbol::Alphanumeric);
                last_was_symbol = true;
            }
            c if DISPLAY_SEPARATORS.contains(&c) => {
                return Err(err("separator characters cannot appear as literals"))
            }
            '#' => return Err(err("'#' is reserved for enumeration suffixes")),
            c if c.is_lowercase() => return Err(err("lowercase literals can never match folded input")),
            c if c.is_control() => return Err(err("control characters are not allowed")),
            c => {
                out.push(MaskSymbol::Literal(c));
                last_was_symbol = true;
            }
        }
    }
    if out.is_empty() {
        return Err(err("mask expands to zero positions"));
    }
    Ok(out)
}

/// Outcome of [`validate_format`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatCheck {
    pub valid: bool,
    pub canonical: Option<String>,
}

/// A named identifier format: a mask plus optional display grouping.
///
/// Mask symbols are `L` (uppercase letter), `D` (digit), `A` (letter or
/// digit); any other character is a literal. `X{n}` repeats the preceding
/// symbol so that it occurs `n` times in total, e.g. `D{9}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SchemeSpec", into = "SchemeSpec")]
pub struct Scheme {
    name: String,
    mask: String,
    groups: Option<Vec<usize>>,
    expanded: Vec<MaskSymbol>,
}

#[derive(Serialize, Deserialize)]
struct SchemeSpec {
    name: String,
    mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    groups: Option<Vec<usize>>,
}

impl TryFrom<SchemeSpec> for Scheme {
    type Error = ModelError;

    fn try_from(spec: SchemeSpec) -> Result<Self, Self::Error> {
        Scheme::new(spec.name, spec.mask, spec.groups)
    }
}

impl From<Scheme> for SchemeSpec {
    fn from(s: Scheme) -> Self {
        SchemeSpec { name: s.name, mask: s.mask, groups: s.groups }
    }
}

impl Scheme {
    pub fn new(
        name: impl Into<String>,
        mask: impl Into<String>,
        groups: Option<Vec<usize>>,
    ) -> Result<Self, ModelError> {
        let mask = mask.into();
        let expanded = expand_mask(&mask)?;
        if let Some(g) = &groups {
            if g.is_empty() || g.contains(&0) || g.iter().sum::<usize>() != expanded.len() {
                return Err(ModelError::InvalidGroups { groups: g.clone(), len: expanded.len() });
            }
        }
        Ok(Self { name: name.into(), mask, groups, expanded })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The mask as written, before expansion.
    pub fn mask(&self) -> &str {
        &self.mask
    }

    pub fn display_groups(&self) -> Option<&[usize]> {
        self.groups.as_deref()
    }

    pub fn symbols(&self) -> &[MaskSymbol] {
        &self.expanded
    }

    /// Length of every valid canonical value.
    pub fn len(&self) -> usize {
        self.expanded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expanded.is_empty()
    }

    /// Strip separators, fold case, and match against the expanded mask.
    pub fn canonicalize(&self, raw: &str) -> Option<String> {
        let folded: String = raw
            .chars()
            .filter(|c| !DISPLAY_SEPARATORS.contains(c))
            .flat_map(char::to_uppercase)
            .collect();
        let n = folded.chars().count();
        if n != self.expanded.len() {
            return None;
        }
        if folded.chars().zip(&self.expanded).all(|(c, sym)| sym.accepts(c)) {
            Some(folded)
        } else {
            None
        }
    }

    /// Build a checked identifier from raw (possibly display-formatted) input.
    pub fn identifier(&self, raw: &str) -> Result<Identifier, ModelError> {
        self.canonicalize(raw)
            .map(|value| Identifier { scheme: self.name.clone(), value })
            .ok_or_else(|| ModelError::FormatMismatch { scheme: self.name.clone(), value: raw.to_string() })
    }

    /// Regroups a canonical value with single spaces per the display groups.
    pub fn display(&self, canonical: &str) -> String {
        let Some(groups) = &self.groups else {
            return canonical.to_string();
        };
        let chars: Vec<char> = canonical.chars().collect();
        let mut out = String::with_capacity(chars.len() + groups.len());
        let mut at = 0;
        for (i, g) in groups.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let end = (at + g).min(chars.len());
            out.extend(&chars[at..end]);
            at = end;
        }
        out.extend(&chars[at..]);
        out
    }
}

/// Checks `value` against `scheme`, returning its canonical form when valid.
pub fn validate_format(value: &str, scheme: &Scheme) -> FormatCheck {
    let canonical = scheme.canonicalize(value);
    FormatCheck { valid: canonical.is_some(), canonical }
}

/// Display form of an identifier under its scheme.
pub fn format_for_display(identifier: &Identifier, scheme: &Scheme) -> String {
    debug_assert_eq!(identifier.scheme(), scheme.name());
    scheme.display(identifier.value())
}

/// The reference schemes: national insurance, passport, NHS and driving
/// licence numbers.
pub mod schemes {
    use super::Scheme;

    pub fn national_insurance() -> Scheme {
        Scheme::new("NI", "LLDDDDDDL", None).expect("static mask")
    }

    pub fn passport() -> Scheme {
        Scheme::new("PASSPORT", "D{9}", None).expect("static mask")
    }

    /// Alphanumeric, as described in the source model; real NHS numbers are digits.
    pub fn nhs() -> Scheme {
        Scheme::new("NHS", "A{10}", Some(vec![3, 3, 4])).expect("static mask")
    }

    pub fn driving_licence() -> Scheme {
        Scheme::new("LICENCE", "A{18}", None).expect("static mask")
    }

    pub fn builtin() -> Vec<Scheme> {
        vec![national_insurance(), passport(), nhs(), driving_licence()]
    }

    pub fn by_name(name: &str) -> Option<Scheme> {
        builtin().into_iter().find(|s| s.name().eq_ignore_ascii_case(name))
    }
}

/// A symbol-string name bound to a scheme. `value` is canonical.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Identifier {
    scheme: String,
    value: String,
}

impl Identifier {
    /// An identifier whose value is taken as already canonical. Use
    /// [`Scheme::identifier`] when the input still needs checking.
    pub fn new(scheme: impl Into<String>, value: impl Into<String>) -> Self {
        Self { scheme: scheme.into(), value: value.into() }
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.value)
    }
}

/// A timestamped, located raw observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationEvent {
    /// Milliseconds since the scenario epoch.
    pub t: u64,
    pub loc: String,
    pub payload: BTreeMap<String, String>,
    /// Ground truth for tests. Nothing in the pipeline reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
}

impl ObservationEvent {
    pub fn new(
        t: u64,
        loc: impl Into<String>,
        payload: BTreeMap<String, String>,
    ) -> Result<Self, ModelError> {
        if payload.is_empty() {
            return Err(ModelError::EmptyPayload(t));
        }
        Ok(Self { t, loc: loc.into(), payload, truth: None })
    }

    pub fn with_truth(mut self, truth: impl Into<String>) -> Self {
        self.truth = Some(truth.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credentials {
    pub user_name: String,
    /// Opaque; no hashing policy is implied.
    pub password_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub t: u64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub t: u64,
    pub kind: String,
    pub target: Option<String>,
}

/// Anything keyed by user-name credentials at a provider.
pub trait Account {
    fn credentials(&self) -> &Credentials;
}

/// Customer account: access key, account details, account history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomerAccount {
    credentials: Credentials,
    pub details: BTreeMap<String, String>,
    history: Vec<TransactionRecord>,
}

impl CustomerAccount {
    pub fn new(credentials: Credentials, details: BTreeMap<String, String>) -> Self {
        Self { credentials, details, history: Vec::new() }
    }

    pub fn record(&mut self, tx: TransactionRecord) {
        self.history.push(tx);
    }

    pub fn history(&self) -> &[TransactionRecord] {
        &self.history
    }
}

impl Account for CustomerAccount {
    fn credentials(&self) -> &Credentials {
        &self.credentials
    }
}

/// Social-media account: here the credentials together with the basic
/// profile form the identifier, and the interaction history replaces the
/// customer account's transaction history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialMediaAccount {
    credentials: Credentials,
    pub profile: BTreeMap<String, String>,
    interactions: Vec<InteractionRecord>,
}

impl SocialMediaAccount {
    pub fn new(credentials: Credentials, profile: BTreeMap<String, String>) -> Self {
        Self { credentials, profile, interactions: Vec::new() }
    }

    pub fn interact(&mut self, record: InteractionRecord) {
        self.interactions.push(record);
    }

    pub fn interactions(&self) -> &[InteractionRecord] {
        &self.interactions
    }

    /// User name followed by the profile fields in key order.
    pub fn identity_key(&self) -> Vec<(&str, &str)> {
        std::iter::once(("user_name", self.credentials.user_name.as_str()))
            .chain(self.profile.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .collect()
    }
}

impl Account for SocialMediaAccount {
    fn credentials(&self) -> &Credentials {
        &self.credentials
    }
}

/// A provider's accounts; user names are unique within one provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provider<A> {
    pub name: String,
    accounts: BTreeMap<String, A>,
}

impl<A: Account> Provider<A> {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), accounts: BTreeMap::new() }
    }

    pub fn register(&mut self, account: A) -> Result<(), ModelError> {
        let user = account.credentials().user_name.clone();
        if self.accounts.contains_key(&user) {
            return Err(ModelError::DuplicateCredentials(user));
        }
        self.accounts.insert(user, account);
        Ok(())
    }

    pub fn get(&self, user_name: &str) -> Option<&A> {
        self.accounts.get(user_name)
    }

    pub fn get_mut(&mut self, user_name: &str) -> Result<&mut A, ModelError> {
        self.accounts.get_mut(user_name).ok_or_else(|| ModelError::UnknownAccount(user_name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }
}
