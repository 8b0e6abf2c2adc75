#![allow(dead_code)]

use std::path::PathBuf;

use forge_core::engine::DEFAULT_AUTHOR;
use forge_core::model::{Decision, EncounterRecord};
use forge_core::store::{self, PlanFile};
use forge_core::Store;

pub const PELAGIC: &str = "root/habitat_stratum=pelagic";
pub const SALMON: &str = "root/habitat_stratum=pelagic/tail_shape=concave";
pub const TROUT: &str = "root/habitat_stratum=pelagic/tail_shape=convex";
pub const RAINBOW: &str = "root/habitat_stratum=pelagic/tail_shape=convex/parr_marks=round";
pub const STEELHEAD: &str = "root/habitat_stratum=pelagic/tail_shape=convex/parr_marks=absent";
pub const CHINOOK: &str = "root/habitat_stratum=pelagic/tail_shape=concave/parr_marks=oval";
pub const BLUEBACK: &str = "root/habitat_stratum=pelagic/tail_shape=concave/parr_marks=absent";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/fish")
        .join(name)
}

pub fn encounters() -> Vec<EncounterRecord> {
    store::read_encounters(&fixture("encounters.jsonl")).unwrap()
}

pub fn ingested() -> Store {
    let records = encounters();
    let registry = store::read_registry(&fixture("characteristics.json")).unwrap().to_list();
    let mut s = Store::new();
    s.submit(
        Decision::Ingest {
            encounter_ids: records.iter().map(|r| r.encounter_id.clone()).collect(),
            threshold: 0.8,
            auto_only: false,
            registry,
        },
        DEFAULT_AUTHOR,
        &records,
    )
    .unwrap();
    s
}

pub fn built_with(plan: &str) -> Store {
    let mut s = ingested();
    let spec = PlanFile::read(&fixture(plan)).unwrap().spec(Some("fish-id")).unwrap();
    s.submit(Decision::Build { spec }, DEFAULT_AUTHOR, &[]).unwrap();
    s
}

pub fn built() -> Store {
    built_with("plan.json")
}

pub fn label(s: &mut Store, lang: &str, rows: &[(&str, &[&str])]) {
    let mut rows = rows.to_vec();
    rows.sort_by_key(|(n, _)| s.taxonomy.ancestors(n).len());
    for (node, lemmas) in rows {
        s.submit(
            Decision::AssignLabel {
                node_id: node.to_string(),
                language: lang.to_string(),
                lemmas: lemmas.iter().map(|l| l.to_string()).collect(),
                gloss: None,
                supersede: false,
            },
            DEFAULT_AUTHOR,
            &[],
        )
        .unwrap();
    }
}

pub fn english(s: &mut Store) {
    label(
        s,
        "en",
        &[
            ("root", &["aquatic vertebrate"]),
            (PELAGIC, &["fish"]),
            ("root/habitat_stratum=benthic", &["placoderm"]),
            ("root/habitat_stratum=demersal", &["agnathan", "jawless fish"]),
            (SALMON, &["salmon"]),
            (TROUT, &["trout"]),
            (CHINOOK, &["chinook salmon", "king salmon"]),
            (BLUEBACK, &["blueback salmon", "sockeye salmon"]),
            (RAINBOW, &["rainbow trout"]),
            (STEELHEAD, &["steelhead trout", "steelhead"]),
        ],
    );
}

pub fn full() -> Store {
    let mut s = built();
    english(&mut s);
    s.submit(Decision::MintIds {}, DEFAULT_AUTHOR, &[]).unwrap();
    s
}
