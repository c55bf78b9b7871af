mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use surveil_core::associations::unique_entity;
use surveil_core::model::schemes;
use surveil_core::provenance::ProvenanceError;
use surveil_core::scenario::{parse_scenario, render_report, to_dsl, ReportFormat};
use surveil_core::surveillance::{DurationTest, Predicate};
use surveil_core::transform::TransformChain;
use surveil_core::{
    enumerate, surveil_and_sort, AttributeDef, Association, AssociationError, CardinalityClass, Entity, EntityKind,
    IdentityGraph, IdentityManagementSystem, Identifier, ImsError, Scheme, ScenarioModel, Snapshot, TransformTable,
};

fn licence_oracle(raw: &str) -> Option<String> {
    let kept: String = raw.chars().filter(|c| *c != ' ' && *c != '-').collect();
    let upper = kept.to_uppercase();
    (upper.chars().count() == 18 && upper.chars().all(|c| c.is_ascii_digit() || c.is_ascii_uppercase())).then_some(upper)
}

fn assoc_strategy(max_ids: usize, max_ents: usize) -> impl Strategy<Value = Association> {
    prop::collection::btree_set((0..max_ids, 0..max_ents), 0..=max_ids * max_ents).prop_map(|pairs| {
        Association::from_pairs(
            "p",
            pairs.into_iter().map(|(i, e)| (Identifier::new("T", format!("i{i}")), entity(&format!("e{e}")))),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn licence_mask_matches_oracle(raw in "[a-zA-Z0-9 \\-_#!é]{0,20}") {
        let scheme = schemes::driving_licence();
        prop_assert_eq!(scheme.canonicalize(&raw), licence_oracle(&raw));
    }

    #[test]
    fn canonical_forms_are_fixed_points(raw in "[A-Z0-9]{10}") {
        let nhs = schemes::nhs();
        let c = nhs.canonicalize(&raw).unwrap();
        prop_assert_eq!(nhs.canonicalize(&c), Some(c.clone()));
        prop_assert_eq!(nhs.canonicalize(&nhs.display(&c)), Some(c.clone()));
        prop_assert_eq!(nhs.canonicalize(&c.to_lowercase()), Some(c));
    }

    #[test]
    fn enumeration_is_injective_or_refused(a in assoc_strategy(4, 5)) {
        let (p, _) = a.degrees();
        match enumerate(&a) {
            Ok(out) => {
                prop_assert!(p <= 1);
                prop_assert_eq!(out.classify(), CardinalityClass::OneOne);
                prop_assert_eq!(out.entities(), a.entities());
                for (id, e) in out.pairs() {
                    prop_assert_eq!(&unique_entity(&out, id).unwrap(), e);
                }
            }
            Err(AssociationError::PreconditionViolated { count, .. }) => prop_assert!(p > 1 && count > 1),
            Err(other) => prop_assert!(false, "unexpected {other}"),
        }
    }

    #[test]
    fn search_and_uniqueness_agree(a in assoc_strategy(3, 3), i in 0..4usize) {
        let id = Identifier::new("T", format!("i{i}"));
        let found = a.search(&id);
        match unique_entity(&a, &id) {
            Ok(e) => prop_assert_eq!(found, BTreeSet::from([e])),
            Err(AssociationError::NotFound(_)) => prop_assert!(found.is_empty()),
            Err(AssociationError::Ambiguous { count, .. }) => prop_assert_eq!(count, found.len()),
            Err(other) => prop_assert!(false, "unexpected {other}"),
        }
    }

    #[test]
    fn identifiers_are_never_reused(ops in prop::collection::vec((0..3u8, 0..4usize), 0..150)) {
        let scheme = Scheme::new("S", "D{2}", None).unwrap();
        let mut ims = IdentityManagementSystem::new("s", scheme);
        let mut ever: BTreeSet<String> = BTreeSet::new();
        for (op, n) in ops {
            let e = entity(&format!("e{n}"));
            match op {
                0 | 1 => match ims.generate(&e) {
                    Ok(id) => prop_assert!(ever.insert(id.value().to_string()), "{} reissued", id),
                    Err(ImsError::SchemeExhausted { capacity, .. }) => prop_assert_eq!(capacity, 100),
                    Err(other) => prop_assert!(false, "unexpected {other}"),
                },
                _ => {
                    let live: Vec<_> = ims.association().identifiers().into_iter().cloned().collect();
                    if let Some(id) = live.get(n % live.len().max(1)) {
                        prop_assert!(ims.revoke(id));
                        prop_assert!(ims.bind(&e, id.value()).is_err());
                    }
                }
            }
        }
    }

    #[test]
    fn accepted_supports_keep_the_graph_acyclic(
        n in 2..12usize,
        edges in prop::collection::vec((0..12usize, 0..12usize), 0..40),
    ) {
        let mut g = IdentityGraph::new();
        for i in 0..n {
            let node = surveil_core::IdentityNode::new(
                format!("N{i}"), surveil_core::Source::Commercial, surveil_core::Proportion::one(), true);
            g.add_node(node).unwrap();
        }
        for (a, b) in edges {
            let (a, b) = (format!("N{}", a % n), format!("N{}", b % n));
            let snapshot = g.to_nodes();
            let closes_cycle = a == b || reaches(&snapshot, &b, &a);
            match g.add_support(&a, &b) {
                Ok(()) => prop_assert!(!closes_cycle),
                Err(ProvenanceError::CycleDetected { .. }) => {
                    prop_assert!(closes_cycle);
                    prop_assert_eq!(g.to_nodes(), snapshot);
                }
                Err(other) => prop_assert!(false, "unexpected {other}"),
            }
        }
    }

    #[test]
    fn chains_compose_associatively(
        rows in prop::collection::vec(prop::collection::btree_map(0..10u8, 0..10u8, 0..10), 3),
        start in 0..10u8,
    ) {
        let schemes: Vec<Scheme> = (0..4).map(|k| Scheme::new(format!("S{k}"), "D", None).unwrap()).collect();
        let tables: Vec<TransformTable> = rows.iter().enumerate().map(|(k, r)| {
            let pairs: Vec<(String, String)> = r.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
            TransformTable::new(format!("t{k}"), &schemes[k], &schemes[k + 1],
                pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))).unwrap()
        }).collect();
        let x = Identifier::new("S0", start.to_string());
        let all = TransformChain::new(tables.iter().collect()).unwrap().compose(&x).map(|t| t.result);
        let left = TransformChain::new(vec![&tables[0], &tables[1]]).unwrap().compose(&x)
            .and_then(|t| TransformChain::new(vec![&tables[2]]).unwrap().compose(&t.result)).map(|t| t.result);
        let right = TransformChain::new(vec![&tables[0]]).unwrap().compose(&x)
            .and_then(|t| TransformChain::new(vec![&tables[1], &tables[2]]).unwrap().compose(&t.result)).map(|t| t.result);
        prop_assert_eq!(all.as_ref().ok(), left.as_ref().ok());
        prop_assert_eq!(all.ok(), right.ok());
    }

    #[test]
    fn stripping_truth_changes_nothing(seed in any::<u64>()) {
        let mut r = rng(seed);
        let events = random_stream(&mut r, 40);
        let labelled: Vec<_> = events.iter().cloned().map(|e| e.with_truth("someone")).collect();
        let ctx = stream_context();
        let render = |evs: &[_]| render_report(&surveil_and_sort(evs, &ctx, &all_keys()).unwrap(), ReportFormat::Structured);
        prop_assert_eq!(render(&labelled), render(&events));
    }

    #[test]
    fn reports_ignore_line_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let events = random_stream(&mut r, 40);
        let ctx = stream_context();
        let render = |evs: &[_]| render_report(&surveil_and_sort(evs, &ctx, &all_keys()).unwrap(), ReportFormat::Structured);
        prop_assert_eq!(render(&shuffled(&events, &mut r)), render(&events));
    }

    #[test]
    fn scenarios_round_trip(model in model_strategy()) {
        let text = to_dsl(&model);
        let again = parse_scenario(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(again, model);
    }

    #[test]
    fn snapshots_round_trip(seed in any::<u64>()) {
        let (ims, _) = random_ims(&mut rng(seed), 5, 8);
        let mut model = ScenarioModel::default();
        model.schemes.insert("S".into(), ims.scheme().clone());
        let snap = Snapshot { model, systems: BTreeMap::from([("random".to_string(), ims)]) };
        prop_assert_eq!(Snapshot::from_json(&snap.to_json()).unwrap(), snap);
    }
}

fn reaches(nodes: &[surveil_core::IdentityNode], from: &str, to: &str) -> bool {
    let map: BTreeMap<&str, &surveil_core::IdentityNode> = nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let mut stack = vec![from];
    let mut seen = BTreeSet::new();
    while let Some(cur) = stack.pop() {
        if cur == to {
            return true;
        }
        if seen.insert(cur) {
            stack.extend(map[cur].supports.iter().map(String::as_str));
        }
    }
    false
}

fn name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}".prop_filter("keyword", |s| s != "in")
}

fn value() -> impl Strategy<Value = String> {
    "[ -~]{1,8}"
}

fn attribute_strategy() -> impl Strategy<Value = AttributeDef> {
    prop_oneof![
        (name(), name(), value()).prop_map(|(n, k, v)| AttributeDef::instant(n, k, Predicate::Eq(v)).unwrap()),
        (name(), name(), value()).prop_map(|(n, k, v)| AttributeDef::instant(n, k, Predicate::Ne(v)).unwrap()),
        (name(), name(), -1000i64..1000).prop_map(|(n, k, v)| AttributeDef::instant(n, k, Predicate::Lt(v.to_string())).unwrap()),
        (name(), name(), 0u32..1000).prop_map(|(n, k, v)| AttributeDef::instant(n, k, Predicate::Gt(format!("{v}.5"))).unwrap()),
        (name(), name(), prop::collection::btree_set(value(), 1..4))
            .prop_map(|(n, k, s)| AttributeDef::instant(n, k, Predicate::In(s)).unwrap()),
        (name(), value(), value(), any::<bool>(), any::<u64>()).prop_filter_map("same boundaries", |(n, s, e, longer, t)| {
            let test = if longer { DurationTest::LongerThan } else { DurationTest::ShorterThan };
            AttributeDef::session(n, s, e, test, t).ok()
        }),
    ]
}

fn model_strategy() -> impl Strategy<Value = ScenarioModel> {
    let scheme = ("[A-Z]{1,4}", "[LDA]{1,6}").prop_map(|(n, m)| Scheme::new(n, m, None).unwrap());
    (
        prop::collection::vec(scheme, 1..4),
        prop::collection::btree_set(name(), 0..4),
        prop::collection::vec(attribute_strategy(), 0..5),
        any::<bool>(),
    )
        .prop_map(|(schemes, entities, attrs, with_surveil)| {
            let mut m = ScenarioModel::default();
            for s in schemes {
                m.schemes.insert(s.name().to_string(), s);
            }
            for e in entities {
                let kinds = [EntityKind::Person, EntityKind::Vehicle, EntityKind::AccountHolder];
                let kind = kinds[e.len() % kinds.len()];
                m.entities.insert(e.clone(), Entity { id: entity(&e), kind });
            }
            for a in attrs {
                m.attributes.insert(a.name.clone(), a);
            }
            let first = m.schemes.keys().next().unwrap().clone();
            if with_surveil {
                m.surveil = Some(surveil_core::scenario::SurveilDecl { key: "plate".into(), scheme: first.clone() });
                m.sort_keys = vec![m.attributes.keys().take(2).cloned().collect(), BTreeSet::new()];
            }
            m.systems.insert(
                "sys".into(),
                surveil_core::scenario::ImsDecl { name: "sys".into(), scheme: first, binds: Vec::new() },
            );
            m
        })
}

#[test]
fn shared_types_are_thread_safe() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<Scheme>();
    assert_send_sync::<Association>();
    assert_send_sync::<IdentityManagementSystem>();
    assert_send_sync::<IdentityGraph>();
    assert_send_sync::<ScenarioModel>();
    assert_send_sync::<Snapshot>();
    assert_send_sync::<TransformTable>();
}
