//! Observation → identifier extraction → behaviour assembly → attribute
//! recognition → report, and social sorting of the reported identifiers.
//!
//! The whole pipeline is a pure function of the time-sorted event list.
//! Events that cannot be attributed to an identifier, and end events with
//! no open session, are quarantined and counted instead of failing the run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Identifier, ObservationEvent, Scheme};
use crate::ratio::parse_decimal;

/// Payload key naming the kind of event ("arrive", "depart", ...).
pub const EVENT_KIND_KEY: &str = "event";

/// Instant attributes on this key fall back to the event location when the
/// payload does not carry it.
pub const LOCATION_KEY: &str = "loc";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("MissingField: payload has no {0:?} field")]
    MissingField(String),
    #[error("FormatMismatch: {value:?} does not match scheme {scheme}")]
    FormatMismatch { scheme: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttributeError {
    #[error("NonNumericThreshold: attribute {name} compares against {value:?}")]
    NonNumericThreshold { name: String, value: String },
    #[error("EmptySet: attribute {0} tests membership in an empty set")]
    EmptySet(String),
    #[error("SameBoundaries: attribute {0} uses one event kind to start and end sessions")]
    SameBoundaries(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("UnknownAttribute: {0}")]
    UnknownAttribute(String),
}

/// Test applied to one payload value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Eq(String),
    Ne(String),
    /// Numeric; non-numeric payload values never satisfy it.
    Lt(String),
    Gt(String),
    In(BTreeSet<String>),
}

impl Predicate {
    pub fn holds(&self, value: &str) -> bool {
        match self {
            Predicate::Eq(r) => value == r,
            Predicate::Ne(r) => value != r,
            Predicate::Lt(r) | Predicate::Gt(r) => {
                let (Some(v), Some(r_num)) = (parse_decimal(value), parse_decimal(r)) else {
                    return false;
                };
                if matches!(self, Predicate::Lt(_)) {
                    v < r_num
                } else {
                    v > r_num
                }
            }
            Predicate::In(set) => set.contains(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationTest {
    LongerThan,
    ShorterThan,
}

/// Sessions open on a `start` event and close on the next `end` event for
/// the same identifier; the rule holds when a duration passes the test.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionRule {
    pub start: String,
    pub end: String,
    pub test: DurationTest,
    pub threshold_ms: u64,
}

impl SessionRule {
    pub fn holds(&self, duration_ms: u64) -> bool {
        match self.test {
            DurationTest::LongerThan => duration_ms > self.threshold_ms,
            DurationTest::ShorterThan => duration_ms < self.threshold_ms,
        }
    }

    fn boundaries(&self) -> (&str, &str) {
        (&self.start, &self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Instant { key: String, predicate: Predicate },
    Session(SessionRule),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeDef {
    pub fn instant(name: impl Into<String>, key: impl Into<String>, predicate: Predicate) -> Result<Self, AttributeError> {
        let name = name.into();
        match &predicate {
            Predicate::Lt(r) | Predicate::Gt(r) if parse_decimal(r).is_none() => {
                return Err(AttributeError::NonNumericThreshold { name, value: r.clone() })
            }
            Predicate::In(set) if set.is_empty() => return Err(AttributeError::EmptySet(name)),
            _ => {}
        }
        Ok(Self { name, kind: AttributeKind::Instant { key: key.into(), predicate } })
    }

    pub fn session(
        name: impl Into<String>,
        start: impl Into<String>,
        end: impl Into<String>,
        test: DurationTest,
        threshold_ms: u64,
    ) -> Result<Self, AttributeError> {
        let (name, start, end) = (name.into(), start.into(), end.into());
        if start == end {
            return Err(AttributeError::SameBoundaries(name));
        }
        Ok(Self { name, kind: AttributeKind::Session(SessionRule { start, end, test, threshold_ms }) })
    }
}

/// Interval between a start event and its paired end event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub start_event: String,
    pub end_event: String,
    pub start: u64,
    /// `None` while still open at the end of the stream.
    pub end: Option<u64>,
    pub loc: String,
}

impl Session {
    pub fn is_open(&self) -> bool {
        self.end.is_none()
    }

    /// Open sessions are measured up to `stream_end`.
    pub fn duration(&self, stream_end: u64) -> u64 {
        self.end.unwrap_or(stream_end).saturating_sub(self.start)
    }
}

/// Everything observed for one identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub identifier: Identifier,
    pub sessions: Vec<Session>,
    /// All non-quarantined events for the identifier, in time order.
    pub instants: Vec<ObservationEvent>,
}

impl BehaviorRecord {
    fn new(identifier: Identifier) -> Self {
        Self { identifier, sessions: Vec::new(), instants: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarantineCounts {
    pub missing_field: u64,
    pub format_mismatch: u64,
    pub unmatched_end: u64,
    /// A start event while a session is already open for the identifier.
    pub duplicate_start: u64,
}

impl QuarantineCounts {
    pub fn total(&self) -> u64 {
        self.missing_field + self.format_mismatch + self.unmatched_end + self.duplicate_start
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamStats {
    pub input: u64,
    pub processed: u64,
    pub quarantined: QuarantineCounts,
}

/// Pulls the identifier out of `payload[key]` and canonicalizes it.
pub fn extract_identifier(ev: &ObservationEvent, key: &str, scheme: &Scheme) -> Result<Identifier, ExtractError> {
    let raw = ev.payload.get(key).ok_or_else(|| ExtractError::MissingField(key.to_string()))?;
    scheme
        .identifier(raw)
        .map_err(|_| ExtractError::FormatMismatch { scheme: scheme.name().to_string(), value: raw.clone() })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Unused,
    Accepted,
    Rejected(Rejection),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rejection {
    UnmatchedEnd,
    DuplicateStart,
}

/// Result of behaviour assembly over a stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembly {
    pub records: BTreeMap<Identifier, BehaviorRecord>,
    pub stats: StreamStats,
    /// Time of the last event in the stream (0 for an empty stream).
    pub stream_end: u64,
}

fn stable_time_order(events: &[ObservationEvent]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by_key(|&i| events[i].t);
    order
}

/// Extracts identifiers and assembles sessions for every distinct
/// `(start, end)` pair in `rules`.
fn assemble(
    events: &[ObservationEvent],
    rules: &[&SessionRule],
    key: &str,
    scheme: &Scheme,
    stream_end: Option<u64>,
) -> Assembly {
    let order = stable_time_order(events);
    let mut stats = StreamStats { input: events.len() as u64, ..Default::default() };
    let end_of_stream = stream_end.unwrap_or_else(|| order.last().map_or(0, |&i| events[i].t));

    // extraction
    let mut ids: Vec<Option<Identifier>> = vec![None; events.len()];
    for &i in &order {
        match extract_identifier(&events[i], key, scheme) {
            Ok(id) => ids[i] = Some(id),
            Err(ExtractError::MissingField(_)) => stats.quarantined.missing_field += 1,
            Err(ExtractError::FormatMismatch { .. }) => stats.quarantined.format_mismatch += 1,
        }
    }

    let boundaries: BTreeSet<(&str, &str)> = rules.iter().map(|r| r.boundaries()).collect();
    let mut roles: Vec<Role> = vec![Role::Unused; events.len()];
    let mut sessions: BTreeMap<&Identifier, Vec<(usize, Session)>> = BTreeMap::new();

    for (start_kind, end_kind) in boundaries {
        let mut open: BTreeMap<&Identifier, usize> = BTreeMap::new();
        for &i in &order {
            let Some(id) = &ids[i] else { continue };
            let kind = events[i].payload.get(EVENT_KIND_KEY).map(String::as_str);
            if kind == Some(start_kind) {
                if open.contains_key(id) {
                    mark(&mut roles[i], Role::Rejected(Rejection::DuplicateStart));
                } else {
                    open.insert(id, i);
                    mark(&mut roles[i], Role::Accepted);
                }
            } else if kind == Some(end_kind) {
                match open.remove(id) {
                    Some(s) => {
                        mark(&mut roles[i], Role::Accepted);
                        sessions.entry(id).or_default().push((
                            s,
                            Session {
                                start_event: start_kind.to_string(),
                                end_event: end_kind.to_string(),
                                start: events[s].t,
                                end: Some(events[i].t),
                                loc: events[s].loc.clone(),
                            },
                        ));
                    }
                    None => mark(&mut roles[i], Role::Rejected(Rejection::UnmatchedEnd)),
                }
            }
        }
        for (id, s) in open {
            sessions.entry(id).or_default().push((
                s,
                Session {
                    start_event: start_kind.to_string(),
                    end_event: end_kind.to_string(),
                    start: events[s].t,
                    end: None,
                    loc: events[s].loc.clone(),
                },
            ));
        }
    }

    let mut records: BTreeMap<Identifier, BehaviorRecord> = BTreeMap::new();
    for &i in &order {
        let Some(id) = &ids[i] else { continue };
        match roles[i] {
            Role::Rejected(Rejection::UnmatchedEnd) => stats.quarantined.unmatched_end += 1,
            Role::Rejected(Rejection::DuplicateStart) => stats.quarantined.duplicate_start += 1,
            Role::Unused | Role::Accepted => {
                records
                    .entry(id.clone())
                    .or_insert_with(|| BehaviorRecord::new(id.clone()))
                    .instants
                    .push(events[i].clone());
            }
        }
    }
    for (id, mut list) in sessions {
        // start index order is time order; ties fall back to session kind
        list.sort_by(|a, b| (a.1.start, a.0, &a.1.start_event).cmp(&(b.1.start, b.0, &b.1.start_event)));
        let rec = records.entry(id.clone()).or_insert_with(|| BehaviorRecord::new(id.clone()));
        rec.sessions = list.into_iter().map(|(_, s)| s).collect();
    }
    stats.processed = stats.input - stats.quarantined.total();
    Assembly { records, stats, stream_end: end_of_stream }
}

/// An event accepted under any session pairing is not quarantined.
fn mark(role: &mut Role, new: Role) {
    *role = match (*role, new) {
        (Role::Accepted, _) | (_, Role::Accepted) => Role::Accepted,
        (Role::Rejected(r), _) => Role::Rejected(r),
        (Role::Unused, n) => n,
    };
}

/// FIFO arrival/departure pairing per identifier for one session rule.
///
/// Unmatched end events and starts that arrive while a session is open are
/// quarantined; starts still open at the end of the stream become open
/// sessions.
pub fn assemble_sessions(events: &[ObservationEvent], rule: &SessionRule, key: &str, scheme: &Scheme) -> Assembly {
    assemble(events, &[rule], key, scheme, None)
}

/// Where and when an attribute was first witnessed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub t: u64,
    pub loc: String,
    /// Witnessed only by a session still open at the end of the stream.
    pub provisional: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Recognition {
    pub attributes: BTreeMap<String, Witness>,
}

impl Recognition {
    pub fn names(&self) -> BTreeSet<String> {
        self.attributes.keys().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }
}

fn instant_value<'a>(ev: &'a ObservationEvent, key: &str) -> Option<&'a str> {
    match ev.payload.get(key) {
        Some(v) => Some(v),
        None if key == LOCATION_KEY => Some(&ev.loc),
        None => None,
    }
}

/// Which of `attrs` the record exhibits, each with its earliest witness.
pub fn recognize_attributes(rec: &BehaviorRecord, attrs: &[AttributeDef], stream_end: u64) -> Recognition {
    let mut out = Recognition::default();
    for attr in attrs {
        let witness = match &attr.kind {
            AttributeKind::Instant { key, predicate } => rec
                .instants
                .iter()
                .filter(|ev| instant_value(ev, key).is_some_and(|v| predicate.holds(v)))
                .map(|ev| Witness { t: ev.t, loc: ev.loc.clone(), provisional: false })
                .min_by(|a, b| (a.t, &a.loc).cmp(&(b.t, &b.loc))),
            AttributeKind::Session(rule) => rec
                .sessions
                .iter()
                .filter(|s| s.start_event == rule.start && s.end_event == rule.end)
                .filter(|s| rule.holds(s.duration(stream_end)))
                .map(|s| Witness { t: s.start, loc: s.loc.clone(), provisional: s.is_open() })
                // closed witnesses first
                .min_by(|a, b| (a.provisional, a.t, &a.loc).cmp(&(b.provisional, b.t, &b.loc))),
        };
        if let Some(w) = witness {
            out.attributes.insert(attr.name.clone(), w);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub identifier: Identifier,
    pub attributes: BTreeSet<String>,
    pub t: u64,
    pub loc: String,
    pub provisional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveillanceReport {
    /// Ordered by identifier.
    pub entries: Vec<ReportEntry>,
    /// Every attribute the context declared, recognized or not.
    pub declared: BTreeSet<String>,
    pub stats: StreamStats,
    pub stream_end: u64,
}

/// The attributes to recognize and how to identify what was observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveillanceContext {
    pub attributes: Vec<AttributeDef>,
    /// Payload key carrying the identifier.
    pub key: String,
    pub scheme: Scheme,
    /// Overrides the time of the last event as the end of the stream.
    pub stream_end: Option<u64>,
}

/// Runs the pipeline and reports every identifier that exhibits at least
/// one attribute.
pub fn surveil(events: &[ObservationEvent], ctx: &SurveillanceContext) -> SurveillanceReport {
    let rules: Vec<&SessionRule> = ctx
        .attributes
        .iter()
        .filter_map(|a| match &a.kind {
            AttributeKind::Session(r) => Some(r),
            AttributeKind::Instant { .. } => None,
        })
        .collect();
    let assembly = assemble(events, &rules, &ctx.key, &ctx.scheme, ctx.stream_end);
    let entries = assembly
        .records
        .values()
        .filter_map(|rec| {
            let found = recognize_attributes(rec, &ctx.attributes, assembly.stream_end);
            let first = found.attributes.values().min_by(|a, b| (a.t, &a.loc).cmp(&(b.t, &b.loc)))?;
            Some(ReportEntry {
                identifier: rec.identifier.clone(),
                t: first.t,
                loc: first.loc.clone(),
                provisional: found.attributes.values().any(|w| w.provisional),
                attributes: found.names(),
            })
        })
        .collect();
    SurveillanceReport {
        entries,
        declared: ctx.attributes.iter().map(|a| a.name.clone()).collect(),
        stats: assembly.stats,
        stream_end: assembly.stream_end,
    }
}

/// Identifiers whose behaviour exhibited every attribute in `key`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub key: BTreeSet<String>,
    pub members: BTreeSet<Identifier>,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let key: Vec<&str> = self.key.iter().map(String::as_str).collect();
        write!(f, "{{{}}}", key.join(", "))
    }
}

/// One category per key; categories may overlap and empty ones are kept.
pub fn social_sort(report: &SurveillanceReport, keys: &[BTreeSet<String>]) -> Result<Vec<Category>, SortError> {
    keys.iter()
        .map(|key| {
            if let Some(unknown) = key.iter().find(|a| !report.declared.contains(*a)) {
                return Err(SortError::UnknownAttribute(unknown.clone()));
            }
            let members = report
                .entries
                .iter()
                .filter(|e| key.is_subset(&e.attributes))
                .map(|e| e.identifier.clone())
                .collect();
            Ok(Category { key: key.clone(), members })
        })
        .collect()
}

/// A stricter key makes a subcategory: true iff `key(c1) ⊇ key(c2)`.
pub fn is_subcategory(c1: &Category, c2: &Category) -> bool {
    c1.key.is_superset(&c2.key)
}

/// A surveillance report together with its social sorting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortingReport {
    pub report: SurveillanceReport,
    pub categories: Vec<Category>,
}

pub fn surveil_and_sort(
    events: &[ObservationEvent],
    ctx: &SurveillanceContext,
    keys: &[BTreeSet<String>],
) -> Result<SortingReport, SortError> {
    let report = surveil(events, ctx);
    let categories = social_sort(&report, keys)?;
    Ok(SortingReport { report, categories })
}
