//! Notational plane: opaque numeric concept ids, the one-to-one mapping
//! between substance and classification concepts, and insertion of new
//! classes without disturbing existing ids.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::idea::{child_id, rank_label, BuildOptions, Taxonomy};
use crate::model::{
    ClassificationConcept, Decision, DecisionRecord, InsertSpec, Signature, SubstanceConcept,
    TaxonomyNode,
};
use crate::percept::ApperceptionMass;
use crate::violation::{Canon, CanonViolation, Location};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptStore {
    /// Next id to hand out; ids start at 1.
    pub next_id: u64,
    #[serde(default)]
    pub concepts: Vec<ClassificationConcept>,
    /// Ids whose nodes were removed. They are never handed out again.
    #[serde(default)]
    pub retired: BTreeSet<u64>,
}

impl Default for ConceptStore {
    fn default() -> Self {
        ConceptStore {
            next_id: 1,
            concepts: Vec::new(),
            retired: BTreeSet::new(),
        }
    }
}

impl ConceptStore {
    pub fn by_node(&self, node_id: &str) -> Option<&ClassificationConcept> {
        self.concepts.iter().find(|c| c.node_ref == node_id)
    }

    pub fn by_id(&self, id: u64) -> Option<&ClassificationConcept> {
        self.concepts.iter().find(|c| c.concept_id == id)
    }

    pub fn max_id(&self) -> u64 {
        self.concepts
            .iter()
            .map(|c| c.concept_id)
            .chain(self.retired.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// (node, id) pairs sorted by node.
    pub fn pairs(&self) -> BTreeSet<(String, u64)> {
        self.concepts
            .iter()
            .map(|c| (c.node_ref.clone(), c.concept_id))
            .collect()
    }

    fn mint(&mut self, node_id: &str) -> u64 {
        // Never go below anything seen, even if the counter was tampered with.
        let id = self.next_id.max(self.max_id() + 1);
        self.next_id = id + 1;
        self.concepts.push(ClassificationConcept {
            concept_id: id,
            node_ref: node_id.to_string(),
            mapped_sc: None,
        });
        id
    }

    /// Tombstones concepts whose node no longer exists.
    pub fn retire_missing(&mut self, taxonomy: &Taxonomy) -> Vec<u64> {
        let mut gone = Vec::new();
        self.concepts.retain(|c| {
            let keep = taxonomy.nodes.contains_key(&c.node_ref);
            if !keep {
                gone.push(c.concept_id);
            }
            keep
        });
        self.retired.extend(gone.iter().copied());
        gone
    }
}

/// Gives every node without a concept a fresh id, in node-id order.
pub fn mint_ids(taxonomy: &Taxonomy, store: &mut ConceptStore) -> Vec<(String, u64)> {
    let have: BTreeSet<&str> = store.concepts.iter().map(|c| c.node_ref.as_str()).collect();
    let missing: Vec<String> = taxonomy
        .nodes
        .keys()
        .filter(|n| !have.contains(n.as_str()))
        .cloned()
        .collect();
    missing
        .into_iter()
        .map(|n| {
            let id = store.mint(&n);
            (n, id)
        })
        .collect()
}

/// One id per node and one node per id.
pub fn check_synonym_homonym(store: &ConceptStore) -> Vec<CanonViolation> {
    let mut by_node: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    let mut by_id: BTreeMap<u64, Vec<&str>> = BTreeMap::new();
    for c in &store.concepts {
        by_node.entry(&c.node_ref).or_default().push(c.concept_id);
        by_id.entry(c.concept_id).or_default().push(&c.node_ref);
    }
    let mut out = Vec::new();
    for (node, ids) in by_node {
        let distinct: BTreeSet<u64> = ids.iter().copied().collect();
        if distinct.len() > 1 {
            out.push(CanonViolation::error(
                Canon::Synonym,
                Location::Node(node.to_string()),
                format!("{node} is represented by several ids: {distinct:?}"),
            ));
        }
    }
    for (id, nodes) in by_id {
        if nodes.len() > 1 {
            out.push(CanonViolation::error(
                Canon::Homonym,
                Location::Concept(id),
                format!("id {id} represents several entries: {}", nodes.join(", ")),
            ));
        }
    }
    out
}

/// Ids must never be recycled and the counter must stay ahead of them.
pub fn check_hospitality(store: &ConceptStore) -> Vec<CanonViolation> {
    let mut out = Vec::new();
    for c in &store.concepts {
        if store.retired.contains(&c.concept_id) {
            out.push(CanonViolation::error(
                Canon::Hospitality,
                Location::Concept(c.concept_id),
                format!("retired id {} was reused for {}", c.concept_id, c.node_ref),
            ));
        }
        if c.concept_id >= store.next_id {
            out.push(CanonViolation::error(
                Canon::Hospitality,
                Location::Concept(c.concept_id),
                format!(
                    "id {} is not below the id counter {}; a later insertion could collide",
                    c.concept_id, store.next_id
                ),
            ));
        }
    }
    out
}

/// Where an inserted class sits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inserted {
    pub node_id: String,
    pub concept_id: u64,
}

pub fn placeholder_id(node_id: &str) -> String {
    format!("ins:{node_id}")
}

/// Adds a class as a new sibling under `spec.parent`, or as a new link
/// between the parent and the children listed in `spec.adopt`. Exactly one
/// id is minted; no existing id changes.
pub fn insert_concept(
    taxonomy: &mut Taxonomy,
    mass: &ApperceptionMass,
    store: &mut ConceptStore,
    spec: &InsertSpec,
    options: &BuildOptions,
) -> Result<Inserted> {
    let parent = taxonomy.node(&spec.parent)?.clone();
    let d = &spec.differentia;
    if let Some(split) = &parent.split {
        if *split != d.characteristic && spec.adopt.is_empty() {
            return Err(ForgeError::InvalidInput(format!(
                "{} splits on `{split}`, not `{}`",
                parent.node_id, d.characteristic
            )));
        }
    }
    for sib in taxonomy.children_of(&parent) {
        if sib.differentia.as_ref() == Some(d) {
            return Err(ForgeError::DuplicateDifferentia {
                differentia: d.to_string(),
                sibling: sib.node_id.clone(),
            });
        }
    }
    for a in &spec.adopt {
        if !parent.children.contains(a) {
            return Err(ForgeError::InvalidInput(format!(
                "{a} is not a child of {}",
                parent.node_id
            )));
        }
    }
    let node_id = child_id(&parent.node_id, d);
    if taxonomy.nodes.contains_key(&node_id) {
        return Err(ForgeError::DuplicateDifferentia {
            differentia: d.to_string(),
            sibling: node_id,
        });
    }

    let sc_ref = match &spec.sc_ref {
        Some(sc) => {
            if !mass.concepts.contains_key(sc) && !taxonomy.superordinates.contains_key(sc) {
                return Err(ForgeError::UnknownSubstanceConcept(sc.clone()));
            }
            sc.clone()
        }
        None => {
            let parent_sc = taxonomy.concept(&parent, mass);
            let mut intension: Signature = parent_sc.map(|p| p.intension.clone()).unwrap_or_default();
            intension.insert(&d.characteristic, &d.value);
            let mut placeholder = SubstanceConcept {
                sc_id: placeholder_id(&node_id),
                visual_objects: BTreeSet::new(),
                intension,
                extension: BTreeSet::new(),
                provenance: Vec::new(),
                asserted: Signature::new(),
            };
            for a in &spec.adopt {
                if let Some(sc) = taxonomy.nodes.get(a).and_then(|n| taxonomy.concept(n, mass)) {
                    placeholder.visual_objects.extend(sc.visual_objects.iter().cloned());
                    placeholder.extension.extend(sc.extension.iter().cloned());
                }
            }
            let id = placeholder.sc_id.clone();
            taxonomy.superordinates.insert(id.clone(), placeholder);
            id
        }
    };

    let rank = parent.rank + 1;
    let node = TaxonomyNode {
        node_id: node_id.clone(),
        sc_ref,
        parent: Some(parent.node_id.clone()),
        differentia: Some(d.clone()),
        rank,
        rank_label: rank_label(options, &node_id, rank),
        children: spec.adopt.clone(),
        split: None,
        basic_category: options
            .node_metadata
            .get(&node_id)
            .is_some_and(|m| m.basic_category),
    };
    let mut split = None;
    for a in &spec.adopt {
        let child = taxonomy.nodes.get_mut(a).expect("checked above");
        child.parent = Some(node_id.clone());
        split = split.or_else(|| child.differentia.as_ref().map(|p| p.characteristic.clone()));
    }
    let parent_mut = taxonomy.nodes.get_mut(&parent.node_id).expect("exists");
    parent_mut.children.retain(|c| !spec.adopt.contains(c));
    parent_mut.children.push(node_id.clone());
    if parent_mut.split.is_none() {
        parent_mut.split = Some(d.characteristic.clone());
    }
    taxonomy.nodes.insert(node_id.clone(), TaxonomyNode { split, ..node });

    let concept_id = store.mint(&node_id);
    Ok(Inserted {
        node_id,
        concept_id,
    })
}

/// Links a substance concept to a classification concept, keeping both
/// directions one-to-one.
pub fn confirm_mapping(
    store: &mut ConceptStore,
    known_sc: &dyn Fn(&str) -> bool,
    decision: &DecisionRecord,
) -> Result<()> {
    let Decision::ConfirmMapping {
        sc_id,
        concept_id,
        supersede,
    } = &decision.decision
    else {
        return Err(ForgeError::WrongDecisionKind {
            expected: "confirm-mapping".into(),
            got: decision.decision.kind().to_string(),
        });
    };
    if !known_sc(sc_id) {
        return Err(ForgeError::UnknownSubstanceConcept(sc_id.clone()));
    }
    let target = store
        .concepts
        .iter()
        .position(|c| c.concept_id == *concept_id)
        .ok_or(ForgeError::UnknownConcept(*concept_id))?;
    if store.concepts[target].mapped_sc.as_deref() == Some(sc_id.as_str()) {
        return Ok(());
    }
    let conflicts: Vec<(String, u64)> = store
        .concepts
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match &c.mapped_sc {
            Some(sc) if i == target => Some((sc.clone(), c.concept_id)),
            Some(sc) if sc == sc_id => Some((sc.clone(), c.concept_id)),
            _ => None,
        })
        .collect();
    if let Some((conflict_sc, conflict_concept)) = conflicts.first().cloned() {
        if !supersede {
            return Err(ForgeError::MappingConflict {
                sc_id: sc_id.clone(),
                concept_id: *concept_id,
                conflict_sc,
                conflict_concept,
            });
        }
        for c in store.concepts.iter_mut() {
            if c.mapped_sc.as_deref() == Some(sc_id.as_str()) {
                c.mapped_sc = None;
            }
        }
    }
    store.concepts[target].mapped_sc = Some(sc_id.clone());
    Ok(())
}
