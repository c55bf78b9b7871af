//! Random generators and brute-force oracles shared by the property and
//! acceptance suites. Oracles are written from the definitions, not from
//! the library code.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surveil_core::provenance::{IdentityNode, Source};
use surveil_core::surveillance::DurationTest;
use surveil_core::{
    AttributeDef, EntityId, IdentityGraph, IdentityManagementSystem, ObservationEvent, Proportion, Scheme,
    SurveillanceContext,
};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn entity(name: &str) -> EntityId {
    EntityId::new(name).unwrap()
}

// ---------------------------------------------------------------- systems

/// A system over `D{2}` built from a random mix of generate, shared binds
/// and revocations, with at most `max_entities` entities and `max_ids`
/// identifiers ever issued.
pub fn random_ims(rng: &mut impl Rng, max_entities: usize, max_ids: usize) -> (IdentityManagementSystem, Vec<EntityId>) {
    let scheme = Scheme::new("S", "D{2}", None).unwrap();
    let mut ims = IdentityManagementSystem::new("random", scheme);
    let n_entities = rng.gen_range(1..=max_entities);
    let entities: Vec<EntityId> = (0..n_entities).map(|i| entity(&format!("e{i}"))).collect();
    let mut issued = 0;
    for _ in 0..rng.gen_range(0..3 * max_ids) {
        let e = entities.choose(rng).unwrap();
        let live: Vec<_> = ims.association().identifiers().into_iter().cloned().collect();
        match rng.gen_range(0..10) {
            0..=4 if issued < max_ids => {
                ims.generate(e).unwrap();
                issued += 1;
            }
            5..=7 if !live.is_empty() => {
                let id = live.choose(rng).unwrap();
                ims.bind(e, id.value()).unwrap();
            }
            8 if !live.is_empty() => {
                ims.revoke(live.choose(rng).unwrap());
            }
            _ => {}
        }
    }
    (ims, entities)
}

// ------------------------------------------------------------- provenance

/// A random DAG: node `i` may be supported only by nodes `j > i`.
pub fn random_dag(rng: &mut impl Rng, max_nodes: usize) -> Vec<IdentityNode> {
    let n = rng.gen_range(1..=max_nodes);
    let sources = [Source::StateGuaranteed, Source::Biometric, Source::Commercial, Source::SelfAsserted];
    let density = rng.gen_range(0.05..0.4);
    (0..n)
        .map(|i| {
            let weight = Proportion::from_fraction(rng.gen_range(0..=20), 20).unwrap();
            let mut node = IdentityNode::new(format!("N{i}"), *sources.choose(rng).unwrap(), weight, rng.gen_bool(0.85));
            node.supports = (i + 1..n).filter(|_| rng.gen_bool(density)).map(|j| format!("N{j}")).collect();
            node
        })
        .collect()
}

fn by_id(nodes: &[IdentityNode]) -> BTreeMap<&str, &IdentityNode> {
    nodes.iter().map(|n| (n.id.as_str(), n)).collect()
}

/// Valid iff every node reachable from `id`, itself included, is flagged valid.
pub fn validity_oracle(nodes: &[IdentityNode], id: &str) -> bool {
    let map = by_id(nodes);
    let mut seen = BTreeSet::new();
    let mut stack = vec![id];
    while let Some(cur) = stack.pop() {
        if !seen.insert(cur) {
            continue;
        }
        let node = map[cur];
        if !node.valid {
            return false;
        }
        stack.extend(node.supports.iter().map(String::as_str));
    }
    true
}

/// Minimum over maximal support paths of the product of weights.
pub fn reliability_oracle(nodes: &[IdentityNode], id: &str) -> Proportion {
    let map = by_id(nodes);
    let mut paths: Vec<Vec<&str>> = Vec::new();
    fn walk<'a>(map: &BTreeMap<&'a str, &'a IdentityNode>, path: &mut Vec<&'a str>, out: &mut Vec<Vec<&'a str>>) {
        let node = map[*path.last().unwrap()];
        if node.supports.is_empty() {
            out.push(path.clone());
            return;
        }
        for s in &node.supports {
            path.push(s.as_str());
            walk(map, path, out);
            path.pop();
        }
    }
    walk(&map, &mut vec![id], &mut paths);
    paths
        .iter()
        .map(|p| p.iter().fold(Proportion::one(), |acc, n| &acc * &map[n].weight))
        .min()
        .unwrap()
}

pub fn graph(nodes: &[IdentityNode]) -> IdentityGraph {
    IdentityGraph::from_nodes(nodes.to_vec()).unwrap()
}

// ----------------------------------------------------------- surveillance

pub const STREAM_KEY: &str = "id";
pub const LONG_MS: u64 = 50;

/// The attributes used with [`random_stream`]: a session rule and two instants.
pub fn stream_context() -> SurveillanceContext {
    use surveil_core::surveillance::Predicate;
    SurveillanceContext {
        attributes: vec![
            AttributeDef::session("Long", "arrive", "depart", DurationTest::LongerThan, LONG_MS).unwrap(),
            AttributeDef::instant("Fast", "speed", Predicate::Gt("70".into())).unwrap(),
            AttributeDef::instant("Zone", "loc", Predicate::In(BTreeSet::from(["zone".to_string()]))).unwrap(),
        ],
        key: STREAM_KEY.into(),
        scheme: Scheme::new("P", "D{2}", None).unwrap(),
        stream_end: None,
    }
}

/// Events with strictly increasing timestamps over a handful of
/// identifiers, with some malformed and missing identifiers mixed in.
pub fn random_stream(rng: &mut impl Rng, max_len: usize) -> Vec<ObservationEvent> {
    let mut t = 0u64;
    (0..rng.gen_range(0..=max_len))
        .map(|_| {
            t += rng.gen_range(1..40);
            let mut payload = BTreeMap::new();
            let kind = ["arrive", "depart", "ping"].choose(rng).unwrap();
            payload.insert("event".to_string(), kind.to_string());
            match rng.gen_range(0..20) {
                0 => {}
                1 => {
                    payload.insert(STREAM_KEY.into(), "X1".into());
                }
                _ => {
                    payload.insert(STREAM_KEY.into(), format!("{:02}", rng.gen_range(0..6)));
                }
            }
            if rng.gen_bool(0.5) {
                payload.insert("speed".into(), rng.gen_range(0..100).to_string());
            }
            let loc = ["a", "b", "zone"].choose(rng).unwrap();
            ObservationEvent::new(t, *loc, payload).unwrap()
        })
        .collect()
}

/// Attributes recognized per identifier for [`stream_context`], computed
/// by walking each identifier's events directly.
pub fn recognition_oracle(events: &[ObservationEvent]) -> BTreeMap<String, BTreeSet<String>> {
    let mut per_id: BTreeMap<String, Vec<&ObservationEvent>> = BTreeMap::new();
    for ev in events {
        if let Some(v) = ev.payload.get(STREAM_KEY) {
            if v.len() == 2 && v.chars().all(|c| c.is_ascii_digit()) {
                per_id.entry(v.clone()).or_default().push(ev);
            }
        }
    }
    let end = events.iter().map(|e| e.t).max().unwrap_or(0);
    let mut out = BTreeMap::new();
    for (id, evs) in per_id {
        let mut attrs = BTreeSet::new();
        let mut open: Option<u64> = None;
        for ev in evs {
            let kind = ev.payload["event"].as_str();
            let kept = match (kind, open) {
                ("arrive", None) => {
                    open = Some(ev.t);
                    true
                }
                ("arrive", Some(_)) => false,
                ("depart", Some(s)) => {
                    if ev.t - s > LONG_MS {
                        attrs.insert("Long".to_string());
                    }
                    open = None;
                    true
                }
                ("depart", None) => false,
                _ => true,
            };
            if kept {
                if ev.payload.get("speed").is_some_and(|s| s.parse::<u64>().unwrap() > 70) {
                    attrs.insert("Fast".to_string());
                }
                if ev.loc == "zone" {
                    attrs.insert("Zone".to_string());
                }
            }
        }
        if let Some(s) = open {
            if end - s > LONG_MS {
                attrs.insert("Long".to_string());
            }
        }
        if !attrs.is_empty() {
            out.insert(id, attrs);
        }
    }
    out
}

/// Every subset of the attribute names of [`stream_context`].
pub fn all_keys() -> Vec<BTreeSet<String>> {
    let names = ["Fast", "Long", "Zone"];
    (0..8u8)
        .map(|m| names.iter().enumerate().filter(|(i, _)| m & (1 << i) != 0).map(|(_, n)| n.to_string()).collect())
        .collect()
}

/// Shuffles lines while keeping timestamps attached to their events.
pub fn shuffled(events: &[ObservationEvent], rng: &mut impl Rng) -> Vec<ObservationEvent> {
    let mut v = events.to_vec();
    v.shuffle(rng);
    v
}
