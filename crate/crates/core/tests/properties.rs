use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use forge_core::engine::DEFAULT_AUTHOR;
use forge_core::idea::Taxonomy;
use forge_core::model::{
    BuildPurpose, BuildSpec, Characteristic, Decision, DecisionRecord, EncounterRecord, InsertSpec,
    MergeTarget, Observations, Property, Registry, Signature, TaxonomyNode, ValueDomain,
};
use forge_core::notational::{check_hospitality, check_synonym_homonym};
use forge_core::percept::ApperceptionMass;
use forge_core::verbal::{project_language, Lexicon};
use forge_core::violation::Canon;
use forge_core::Store;

const CHARS: usize = 5;
const TAG: &str = "p";

fn registry() -> Vec<Characteristic> {
    (0..CHARS)
        .map(|i| Characteristic {
            name: format!("c{i}"),
            value_domain: ValueDomain::Enumerated {
                tokens: (0..4).map(|v| format!("v{v}")).collect(),
            },
            ascertainable: true,
            permanent: true,
            relevance_tags: [TAG.to_string()].into(),
        })
        .collect()
}

fn sig_strategy() -> impl Strategy<Value = Vec<Option<u8>>> {
    prop::collection::vec(prop::option::weighted(0.8, 0u8..3), CHARS)
}

fn to_sig(v: &[Option<u8>]) -> Signature {
    v.iter()
        .enumerate()
        .filter_map(|(i, x)| x.map(|x| (format!("c{i}"), format!("v{x}"))))
        .collect()
}

fn record(id: &str, profile: &[u8]) -> EncounterRecord {
    let obs: Observations = profile
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("c{i}"), format!("v{v}").as_str().into()))
        .collect::<Vec<(String, forge_core::model::ObservedValue)>>()
        .into_iter()
        .collect();
    EncounterRecord::new(id, format!("media/{id}.jpg"), 0, obs)
}

/// Species profiles, each observed one or more times.
fn corpus() -> impl Strategy<Value = Vec<(Vec<u8>, usize)>> {
    prop::collection::vec((prop::collection::vec(0u8..3, CHARS), 1usize..3), 2..8)
}

fn random_store(species: &[(Vec<u8>, usize)]) -> Store {
    let mut records = Vec::new();
    for (i, (profile, n)) in species.iter().enumerate() {
        for k in 0..*n {
            records.push(record(&format!("s{i}-{k}"), profile));
        }
    }
    let mut s = Store::new();
    s.submit(
        Decision::Ingest {
            encounter_ids: records.iter().map(|r| r.encounter_id.clone()).collect(),
            threshold: 1.0,
            auto_only: true,
            registry: registry(),
        },
        DEFAULT_AUTHOR,
        &records,
    )
    .unwrap();
    s.submit(
        Decision::Build {
            spec: BuildSpec {
                purpose: BuildPurpose {
                    purpose_id: "p".into(),
                    relevance_tag: TAG.into(),
                    succession: Vec::new(),
                },
                ..Default::default()
            },
        },
        DEFAULT_AUTHOR,
        &[],
    )
    .unwrap();
    s.submit(Decision::MintIds {}, DEFAULT_AUTHOR, &[]).unwrap();
    s
}

fn record_for(s: &Store, decision: Decision) -> DecisionRecord {
    s.next_record(decision, DEFAULT_AUTHOR)
}

proptest! {
    #[test]
    fn jaccard_is_symmetric_and_bounded(a in sig_strategy(), b in sig_strategy()) {
        let (a, b) = (to_sig(&a), to_sig(&b));
        let ab = a.jaccard(&b);
        prop_assert_eq!(ab, b.jaccard(&a));
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            prop_assert_eq!(a.jaccard(&a), 1.0);
        }
    }

    #[test]
    fn merging_is_order_insensitive_and_only_shrinks_intension(
        profiles in prop::collection::vec(prop::collection::vec(0u8..3, CHARS), 2..7),
        seed in any::<u64>(),
    ) {
        let registry = Registry::from_list(registry()).unwrap();
        let records: Vec<_> = profiles.iter().enumerate().map(|(i, p)| record(&format!("e{i}"), p)).collect();
        let mut order: Vec<usize> = (0..records.len()).collect();
        let mut x = seed;
        for i in (1..order.len()).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (x >> 33) as usize % (i + 1));
        }

        let merge_all = |order: &[usize]| -> (Signature, BTreeSet<String>) {
            let mut mass = ApperceptionMass::new();
            let mut store = Store::new();
            let mut target: Option<String> = None;
            let mut last: Option<Signature> = None;
            for &i in order {
                let p = mass.ingest_encounter(&records[i], &registry).unwrap();
                let t = target.clone().map_or(MergeTarget::New, MergeTarget::Existing);
                let rec = record_for(&store, Decision::ApproveMerge { percept_id: p.percept_id.clone(), target: t.clone() });
                store.decisions.push(rec.clone());
                mass.apply_merge(&p.percept_id, &t, &rec).unwrap();
                let sc_id = target.get_or_insert_with(|| format!("sc-{}", records[i].encounter_id)).clone();
                let now = mass.concepts[&sc_id].intension.clone();
                if let Some(prev) = &last {
                    assert!(now.is_subset(prev));
                }
                last = Some(now);
            }
            let sc = mass.concepts.values().next().unwrap();
            assert_eq!(mass.concepts.len(), 1);
            (sc.intension.clone(), sc.extension.clone())
        };
        let natural: Vec<usize> = (0..records.len()).collect();
        let a = merge_all(&natural);
        let b = merge_all(&order);
        prop_assert_eq!(&a, &b);
        let expected = Signature::intersect_all(records.iter().map(|r| {
            forge_core::percept::perceive(r, &registry).unwrap().signature
        }).collect::<Vec<_>>().iter()).unwrap();
        prop_assert_eq!(a.0, expected);
    }

    #[test]
    fn random_stores_are_valid_and_round_trip(species in corpus()) {
        let s = random_store(&species);
        prop_assert!(s.validate_store().is_empty(), "{:?}", s.validate_store());
        let text = s.export().unwrap();
        let back = Store::import(&text).unwrap();
        prop_assert_eq!(&back.export().unwrap(), &text);
        let replayed = Store::replay(&s.decisions, &s.encounters).unwrap();
        prop_assert_eq!(replayed.export().unwrap(), text);
    }

    #[test]
    fn built_stores_satisfy_structural_canons(species in corpus()) {
        let s = random_store(&species);
        let r = s.audit();
        prop_assert_eq!(r.count(Canon::Exhaustiveness), 0);
        prop_assert_eq!(r.count(Canon::DecreasingExtension), 0);
        prop_assert_eq!(r.count(Canon::Synonym) + r.count(Canon::Homonym) + r.count(Canon::Hospitality), 0);
    }

    #[test]
    fn validation_catches_mutations(species in corpus(), pick in 0usize..6, which in any::<prop::sample::Index>()) {
        let mut s = random_store(&species);
        prop_assume!(s.taxonomy.nodes.len() > 1);
        let non_root: Vec<String> = s.taxonomy.nodes.values().filter(|n| n.parent.is_some()).map(|n| n.node_id.clone()).collect();
        let victim = which.get(&non_root).clone();
        match pick {
            0 => { s.taxonomy.nodes.remove(&victim); }
            1 => { s.taxonomy.nodes.get_mut(&victim).unwrap().parent = None; }
            2 => {
                let sc = s.mass.concepts.values_mut().next().unwrap();
                sc.extension.insert("media/ghost.jpg".into());
            }
            3 => {
                let sc = s.mass.concepts.values_mut().next().unwrap();
                sc.intension.insert("c0", "v3");
            }
            4 => { s.concepts.concepts[0].node_ref = "nowhere".into(); }
            _ => {
                let d = s.decisions.last().unwrap().clone();
                s.decisions.push(d);
            }
        }
        let found = s.validate_store();
        prop_assert!(!found.is_empty(), "mutation {} went unnoticed", pick);
        prop_assert!(found.iter().all(|v| v.canon == Canon::Integrity));
    }

    #[test]
    fn concept_ids_stay_bijective_and_stable(species in corpus(), ops in prop::collection::vec((0u8..3, any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..12)) {
        let mut s = random_store(&species);
        let mut ever: BTreeMap<u64, String> = BTreeMap::new();
        let names: Vec<String> = (0..CHARS).map(|i| format!("c{i}")).collect();
        let mut fresh = 0;
        for (op, a, b) in ops {
            let before = s.concepts.pairs();
            let decision = match op {
                0 => Decision::MintIds {},
                1 => {
                    let nodes: Vec<&TaxonomyNode> = s.taxonomy.nodes.values().collect();
                    let parent = a.get(&nodes);
                    let characteristic = parent.split.clone().unwrap_or_else(|| b.get(&names).clone());
                    fresh += 1;
                    Decision::InsertConcept {
                        spec: InsertSpec {
                            parent: parent.node_id.clone(),
                            differentia: Property::new(characteristic, format!("n{fresh}")),
                            sc_ref: None,
                            adopt: Vec::new(),
                        },
                    }
                }
                _ => {
                    let mut succession = names.clone();
                    let k = a.index(succession.len());
                    succession.rotate_left(k);
                    succession.truncate(1 + b.index(CHARS));
                    Decision::SetSuccession { purpose_id: "p".into(), succession }
                }
            };
            let inserting = matches!(decision, Decision::InsertConcept { .. });
            if s.submit(decision, DEFAULT_AUTHOR, &[]).is_err() {
                prop_assert_eq!(s.concepts.pairs(), before);
                continue;
            }
            let after = s.concepts.pairs();
            prop_assert!(check_synonym_homonym(&s.concepts).is_empty());
            prop_assert!(check_hospitality(&s.concepts).is_empty());
            for (node, id) in &before {
                if s.taxonomy.nodes.contains_key(node) {
                    prop_assert!(after.contains(&(node.clone(), *id)));
                }
            }
            if inserting {
                let new: Vec<_> = after.difference(&before).collect();
                prop_assert_eq!(new.len(), 1);
                prop_assert_eq!(new[0].1, before.iter().map(|p| p.1).chain(s.concepts.retired.iter().copied()).max().unwrap_or(0) + 1);
            }
            for (node, id) in after {
                let prev = ever.entry(id).or_insert_with(|| node.clone());
                prop_assert_eq!(&*prev, &node, "id {} was recycled", id);
            }
        }
    }

    #[test]
    fn projection_preserves_ancestry(parents in prop::collection::vec(any::<prop::sample::Index>(), 1..200), labeled in prop::collection::vec(any::<bool>(), 200)) {
        let mut t = Taxonomy::default();
        let n = parents.len() + 1;
        let id = |i: usize| format!("n{i}");
        for i in 0..n {
            let parent = (i > 0).then(|| parents[i - 1].index(i));
            t.nodes.insert(id(i), TaxonomyNode {
                node_id: id(i),
                sc_ref: String::new(),
                parent: parent.map(id),
                differentia: parent.map(|_| Property::new("c", id(i))),
                rank: 0,
                rank_label: String::new(),
                children: Vec::new(),
                split: None,
                basic_category: false,
            });
            if let Some(p) = parent {
                t.nodes.get_mut(&id(p)).unwrap().children.push(id(i));
            }
        }
        // Reference closure from parent indices alone.
        let mut up: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for i in 1..n {
            let p = parents[i - 1].index(i);
            let mut set = up[p].clone();
            set.insert(p);
            up[i] = set;
        }
        let mut lex = Lexicon::new("xx");
        let keep: Vec<usize> = (0..n).filter(|&i| i == 0 || labeled[i]).collect();
        for &i in &keep {
            lex.synsets.insert(id(i), forge_core::model::Synset::new("xx", vec![format!("w{i}")], "g").unwrap());
        }
        let p = project_language(&t, &lex, "xx").unwrap();
        prop_assert_eq!(p.nodes.len(), keep.len());
        prop_assert_eq!(p.gaps.len(), n - keep.len());
        for &a in &keep {
            let anc: BTreeSet<String> = p.ancestors(&id(a)).into_iter().collect();
            for &b in &keep {
                prop_assert_eq!(anc.contains(&id(b)), up[a].contains(&b));
            }
        }
    }
}
