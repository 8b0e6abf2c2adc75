//! The store as a fold over the decision log.
//!
//! Every state change is a [`DecisionRecord`]. Applying a decision works on
//! a copy of the store, so a failing decision leaves the original untouched.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ForgeError, Result};
use crate::idea::{self, AuditReport, BuildOptions, SuccessionPlan, Taxonomy};
use crate::model::{
    BuildSpec, Decision, DecisionRecord, EncounterRecord, InsertSpec, MergeTarget, Registry,
    Resolution, Signature, SubstanceConcept, Synset, ValueDomain,
};
use crate::notational::{self, ConceptStore};
use crate::percept::{ApperceptionMass, Placement};
use crate::verbal::{self, Lexicon};
use crate::violation::{Canon, CanonViolation, Location, Severity};

pub const DEFAULT_AUTHOR: &str = "forge";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Acknowledged {
    pub canon: Canon,
    pub location: Location,
}

/// Curator choices that shape the build, accumulated from decisions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Curation {
    #[serde(default)]
    pub spec: Option<BuildSpec>,
    /// Decided successions per purpose id.
    #[serde(default)]
    pub successions: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
    #[serde(default)]
    pub inserts: Vec<InsertSpec>,
    #[serde(default)]
    pub acknowledged: BTreeSet<Acknowledged>,
    /// Plan used by the latest build.
    #[serde(default)]
    pub plan: Option<SuccessionPlan>,
}

impl Curation {
    pub fn options(&self) -> BuildOptions {
        self.spec
            .as_ref()
            .map(|s| BuildOptions {
                rank_scheme: s.rank_scheme.clone(),
                node_metadata: s.node_metadata.clone(),
            })
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Store {
    pub registry: Registry,
    pub encounters: Vec<EncounterRecord>,
    pub mass: ApperceptionMass,
    pub curation: Curation,
    pub taxonomy: Taxonomy,
    pub lexicons: BTreeMap<String, Lexicon>,
    /// Curator-maintained non-domain terms per language.
    pub deprecated: BTreeMap<String, BTreeSet<String>>,
    pub concepts: ConceptStore,
    pub decisions: Vec<DecisionRecord>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    /// Number of decisions applied so far.
    pub fn revision(&self) -> u64 {
        self.decisions.len() as u64
    }

    pub fn next_record(&self, decision: Decision, author: &str) -> DecisionRecord {
        let seq = self.decisions.len() + 1;
        DecisionRecord {
            decision_id: format!("d-{seq:06}"),
            decision,
            author: author.to_string(),
            timestamp: seq as i64,
        }
    }

    /// Applies a new decision atomically and appends it to the log.
    pub fn submit(
        &mut self,
        decision: Decision,
        author: &str,
        inputs: &[EncounterRecord],
    ) -> Result<(DecisionRecord, Value)> {
        let record = self.next_record(decision, author);
        let outcome = self.commit(record.clone(), inputs)?;
        Ok((record, outcome))
    }

    /// Applies an already-formed record atomically and appends it.
    pub fn commit(&mut self, record: DecisionRecord, inputs: &[EncounterRecord]) -> Result<Value> {
        if self.decisions.iter().any(|d| d.decision_id == record.decision_id) {
            return Err(ForgeError::Stale(format!(
                "decision id {} already in the log",
                record.decision_id
            )));
        }
        let mut next = self.clone();
        let outcome = next.apply(&record, inputs)?;
        next.decisions.push(record);
        *self = next;
        Ok(outcome)
    }

    /// Rebuilds a store from scratch by replaying a decision log.
    pub fn replay(log: &[DecisionRecord], inputs: &[EncounterRecord]) -> Result<Store> {
        let mut store = Store::new();
        for record in log {
            store.commit(record.clone(), inputs).map_err(|e| {
                ForgeError::InvalidInput(format!("replaying {}: {e}", record.decision_id))
            })?;
        }
        Ok(store)
    }

    fn apply(&mut self, record: &DecisionRecord, inputs: &[EncounterRecord]) -> Result<Value> {
        let rebuild;
        let outcome = match &record.decision {
            Decision::Ingest {
                encounter_ids,
                threshold,
                auto_only,
                registry,
            } => {
                rebuild = true;
                self.apply_ingest(record, encounter_ids, *threshold, *auto_only, registry, inputs)?
            }
            Decision::ApproveMerge { percept_id, target } => {
                rebuild = true;
                let out = self.mass.apply_merge(percept_id, target, record)?;
                serde_json::to_value(out).expect("plain data")
            }
            Decision::Build { spec } => {
                if self.mass.concepts.is_empty() && self.mass.pending.is_empty() {
                    return Err(ForgeError::EmptyMass);
                }
                self.curation.spec = Some(spec.clone());
                rebuild = true;
                json!({})
            }
            Decision::SetSuccession {
                purpose_id,
                succession,
            } => {
                self.check_succession(succession)?;
                self.curation
                    .successions
                    .insert(purpose_id.clone(), succession.clone());
                rebuild = true;
                json!({})
            }
            Decision::ResolveViolation {
                canon,
                location,
                resolution,
            } => {
                rebuild = !matches!(resolution, Resolution::Acknowledge);
                self.apply_resolution(*canon, location, resolution)?;
                json!({})
            }
            Decision::AssignLabel {
                node_id,
                language,
                lemmas,
                gloss,
                supersede,
            } => {
                rebuild = false;
                let synset = Synset::new(
                    language.clone(),
                    lemmas.clone(),
                    gloss.clone().unwrap_or_default(),
                )?;
                let lexicon = self
                    .lexicons
                    .entry(language.clone())
                    .or_insert_with(|| Lexicon::new(language.clone()));
                let changed = verbal::assign_label(
                    node_id,
                    language,
                    synset,
                    &self.taxonomy,
                    lexicon,
                    *supersede,
                )?;
                // A new genus label may change the glosses below it.
                lexicon.refresh(&self.taxonomy);
                if lexicon.synsets.is_empty() {
                    self.lexicons.remove(language);
                }
                json!({ "changed": changed })
            }
            Decision::ConfirmMapping { .. } => {
                rebuild = false;
                let mass = &self.mass;
                let taxonomy = &self.taxonomy;
                let known = |sc: &str| {
                    mass.concepts.contains_key(sc) || taxonomy.superordinates.contains_key(sc)
                };
                notational::confirm_mapping(&mut self.concepts, &known, record)?;
                json!({})
            }
            Decision::MintIds {} => {
                rebuild = false;
                if self.taxonomy.is_empty() {
                    return Err(ForgeError::NoTaxonomy);
                }
                let minted = notational::mint_ids(&self.taxonomy, &mut self.concepts);
                json!({ "minted": minted.into_iter().map(|(n, id)| json!({"node_id": n, "concept_id": id})).collect::<Vec<_>>() })
            }
            Decision::InsertConcept { spec } => {
                rebuild = false;
                if self.taxonomy.is_empty() {
                    return Err(ForgeError::NoTaxonomy);
                }
                let options = self.curation.options();
                let inserted = notational::insert_concept(
                    &mut self.taxonomy,
                    &self.mass,
                    &mut self.concepts,
                    spec,
                    &options,
                )?;
                self.curation.inserts.push(spec.clone());
                for lexicon in self.lexicons.values_mut() {
                    lexicon.refresh(&self.taxonomy);
                }
                serde_json::to_value(inserted).expect("plain data")
            }
        };
        if rebuild && self.curation.spec.is_some() {
            self.rebuild()?;
        }
        Ok(outcome)
    }

    fn apply_ingest(
        &mut self,
        record: &DecisionRecord,
        encounter_ids: &[String],
        threshold: f64,
        auto_only: bool,
        registry: &[crate::model::Characteristic],
        inputs: &[EncounterRecord],
    ) -> Result<Value> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ForgeError::InvalidThreshold(threshold));
        }
        for c in registry {
            self.registry.register(c.clone())?;
        }
        let by_id: BTreeMap<&str, &EncounterRecord> =
            inputs.iter().map(|r| (r.encounter_id.as_str(), r)).collect();
        let mut outcomes = Vec::new();
        for id in encounter_ids {
            let rec = *by_id
                .get(id.as_str())
                .ok_or_else(|| ForgeError::InvalidInput(format!("encounter `{id}` not supplied")))?;
            let mut out = self.mass.ingest_and_place(rec, &self.registry, threshold)?;
            if let (Placement::Pending { candidates }, false) = (&out.placement, auto_only) {
                // The ingest decision itself approves the best candidate.
                let top = candidates[0].sc_id.clone();
                out = self.mass.place(
                    &out.percept_id,
                    &MergeTarget::Existing(top),
                    Some(&record.decision_id),
                )?;
            }
            self.encounters.push(rec.clone());
            outcomes.push(out);
        }
        Ok(json!({
            "outcomes": outcomes,
            "pending": self.mass.pending.len(),
            "concepts": self.mass.concepts.len(),
        }))
    }

    fn check_succession(&self, succession: &[String]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in succession {
            self.registry.require(c)?;
            if !seen.insert(c) {
                return Err(ForgeError::InvalidInput(format!(
                    "`{c}` appears twice in the succession"
                )));
            }
        }
        Ok(())
    }

    fn apply_resolution(&mut self, canon: Canon, location: &Location, resolution: &Resolution) -> Result<()> {
        let report = self.audit();
        let Some(target) = report
            .violations
            .iter()
            .find(|v| v.canon == canon && v.location == *location)
        else {
            return Err(ForgeError::Stale(format!(
                "no current {canon} violation at {location}"
            )));
        };
        match resolution {
            Resolution::Acknowledge => {
                if target.severity != Severity::Warning {
                    return Err(ForgeError::InvalidInput(
                        "only warnings can be acknowledged".into(),
                    ));
                }
                self.curation.acknowledged.insert(Acknowledged {
                    canon,
                    location: location.clone(),
                });
            }
            Resolution::ReplaceCharacteristic { from, to } => {
                self.registry.require(to)?;
                let (purpose_id, mut succession) = self.active_succession()?;
                let Some(i) = succession.iter().position(|c| c == from) else {
                    return Err(ForgeError::Stale(format!("`{from}` is not in the succession")));
                };
                if succession.contains(to) {
                    succession.remove(i);
                } else {
                    succession[i] = to.clone();
                }
                self.check_succession(&succession)?;
                self.curation.successions.insert(purpose_id, succession);
                self.curation.overrides.retain(|_, c| c != from);
            }
            Resolution::DropCharacteristic { characteristic } => {
                let (purpose_id, mut succession) = self.active_succession()?;
                succession.retain(|c| c != characteristic);
                if succession.is_empty() {
                    return Err(ForgeError::EmptyPlan);
                }
                self.curation.successions.insert(purpose_id, succession);
                self.curation.overrides.retain(|_, c| c != characteristic);
            }
            Resolution::OverrideSplit {
                node_id,
                characteristic,
            } => {
                self.taxonomy.node(node_id)?;
                self.registry.require(characteristic)?;
                self.curation
                    .overrides
                    .insert(node_id.clone(), characteristic.clone());
            }
            Resolution::AssertProperty {
                sc_id,
                characteristic,
                value,
            } => {
                let c = self.registry.require(characteristic)?;
                let valid = match &c.value_domain {
                    ValueDomain::Enumerated { tokens } => tokens.contains(value),
                    ValueDomain::Numeric { buckets } => buckets.iter().any(|b| b.label == *value),
                };
                if !valid {
                    return Err(ForgeError::ValueOutOfDomain {
                        characteristic: characteristic.clone(),
                        value: value.clone(),
                    });
                }
                let sc = self
                    .mass
                    .concepts
                    .get_mut(sc_id)
                    .ok_or_else(|| ForgeError::UnknownSubstanceConcept(sc_id.clone()))?;
                sc.asserted.insert(characteristic, value);
            }
        }
        Ok(())
    }

    fn active_succession(&self) -> Result<(String, Vec<String>)> {
        let plan = self.curation.plan.as_ref().ok_or(ForgeError::NoTaxonomy)?;
        Ok((plan.purpose.purpose_id.clone(), plan.characteristics.clone()))
    }

    fn plan(&self, spec: &BuildSpec) -> Result<(SuccessionPlan, Vec<CanonViolation>)> {
        let purpose = spec.purpose.clone();
        let decided = self
            .curation
            .successions
            .get(&purpose.purpose_id)
            .cloned()
            .or_else(|| (!purpose.succession.is_empty()).then(|| purpose.succession.clone()));
        let (mut plan, warnings) = match decided {
            Some(succession) => {
                self.check_succession(&succession)?;
                (SuccessionPlan::decided(purpose, succession), Vec::new())
            }
            None => {
                let universe: Vec<&SubstanceConcept> = self.mass.concepts.values().collect();
                let cands: Vec<_> = self
                    .registry
                    .iter()
                    .filter(|c| idea::gate_characteristic(c, &purpose, &universe).is_ok())
                    .collect();
                let (plan, warning) =
                    idea::order_characteristics(&cands, &purpose, &universe, &self.decisions)?;
                (plan, warning.into_iter().collect())
            }
        };
        plan.overrides = self.curation.overrides.clone();
        Ok((plan, warnings))
    }

    /// Closes the perception session and rebuilds every derived structure.
    pub fn rebuild(&mut self) -> Result<()> {
        let spec = self.curation.spec.clone().ok_or(ForgeError::NoTaxonomy)?;
        for p in self.mass.close_session() {
            log::info!("percept {p} founded its own concept at session close");
        }
        let (plan, _) = self.plan(&spec)?;
        let options = self.curation.options();
        let mut taxonomy = idea::build_hierarchy(&self.mass, &plan, &options)?;
        for insert in &self.curation.inserts {
            let mut scratch = self.concepts.clone();
            match notational::insert_concept(&mut taxonomy, &self.mass, &mut scratch, insert, &options) {
                Ok(_) => {}
                Err(ForgeError::DuplicateDifferentia { .. }) => {}
                Err(e) => taxonomy
                    .warnings
                    .push(format!("insertion under {} no longer applies: {e}", insert.parent)),
            }
        }
        self.taxonomy = taxonomy;
        self.curation.plan = Some(plan);
        for lexicon in self.lexicons.values_mut() {
            lexicon.refresh(&self.taxonomy);
        }
        self.lexicons.retain(|_, l| !l.synsets.is_empty());
        let retired = self.concepts.retire_missing(&self.taxonomy);
        if !retired.is_empty() {
            log::info!("retired concept ids {retired:?}");
        }
        Ok(())
    }

    /// Every canon plus structural integrity, against the current state.
    pub fn audit(&self) -> AuditReport {
        let mut out = self.validate_store();
        if let Some(plan) = &self.curation.plan {
            if !self.taxonomy.is_empty() {
                out.extend(idea::audit(
                    &self.taxonomy,
                    &self.mass,
                    plan,
                    &self.registry,
                    &self.curation.options(),
                ));
            }
        }
        let empty = BTreeSet::new();
        for (lang, lexicon) in &self.lexicons {
            for node_id in lexicon.synsets.keys() {
                out.extend(verbal::check_context_enumeration(
                    node_id,
                    lang,
                    &self.taxonomy,
                    lexicon,
                ));
            }
            let deprecated = self.deprecated.get(lang).unwrap_or(&empty);
            out.extend(verbal::check_reticence(lang, lexicon, &self.taxonomy, deprecated));
        }
        out.extend(notational::check_synonym_homonym(&self.concepts));
        out.extend(notational::check_hospitality(&self.concepts));
        out.retain(|v| {
            v.is_error()
                || !self.curation.acknowledged.contains(&Acknowledged {
                    canon: v.canon,
                    location: v.location.clone(),
                })
        });
        AuditReport::new(out, self.revision())
    }

    /// Structural invariants of the data model, one violation per breach.
    pub fn validate_store(&self) -> Vec<CanonViolation> {
        let mut out = Vec::new();
        let integrity = |loc: Location, msg: String| CanonViolation::error(Canon::Integrity, loc, msg);

        let mut seen = BTreeSet::new();
        for e in &self.encounters {
            let loc = || Location::Encounter(e.encounter_id.clone());
            if !seen.insert(&e.encounter_id) {
                out.push(integrity(loc(), format!("encounter {} appears twice", e.encounter_id)));
            }
            if e.observations.is_empty() {
                out.push(integrity(loc(), "encounter has no observations".into()));
            }
            for d in e.observations.duplicate_names() {
                out.push(integrity(loc(), format!("`{d}` observed twice")));
            }
        }

        for f in self.mass.frames.values() {
            if !self.mass.visual_objects.values().any(|o| o.encounter_id == f.encounter_id) {
                out.push(integrity(
                    Location::Encounter(f.encounter_id.clone()),
                    format!("frame {} belongs to no visual object", f.frame_id),
                ));
            }
        }
        for o in self.mass.visual_objects.values() {
            let loc = || Location::VisualObject(o.object_id.clone());
            if o.frames.is_empty() {
                out.push(integrity(loc(), "visual object has no frames".into()));
                continue;
            }
            let frames: Option<Vec<&Signature>> = o
                .frames
                .iter()
                .map(|f| self.mass.frames.get(f).map(|f| &f.observations))
                .collect();
            match frames {
                None => out.push(integrity(loc(), "visual object lists a missing frame".into())),
                Some(sigs) => {
                    if Signature::intersect_all(sigs.into_iter()).as_ref() != Some(&o.signature) {
                        out.push(integrity(
                            loc(),
                            "signature differs from what its frames have in common".into(),
                        ));
                    }
                }
            }
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for sc in self.mass.concepts.values() {
            let loc = || Location::SubstanceConcept(sc.sc_id.clone());
            if sc.visual_objects.is_empty() {
                out.push(integrity(loc(), "substance concept has no visual objects".into()));
                continue;
            }
            for o in &sc.visual_objects {
                if let Some(prev) = owner.insert(o, &sc.sc_id) {
                    out.push(integrity(
                        Location::VisualObject(o.clone()),
                        format!("visual object shared by {prev} and {}", sc.sc_id),
                    ));
                }
            }
            match self.mass.expected_signature(sc) {
                None => out.push(integrity(loc(), "references a missing visual object".into())),
                Some((intension, extension)) => {
                    if intension != sc.intension {
                        out.push(integrity(
                            loc(),
                            "intension is not the intersection of its visual objects".into(),
                        ));
                    }
                    if extension != sc.extension {
                        out.push(integrity(
                            loc(),
                            "extension is not the union of its media".into(),
                        ));
                    }
                }
            }
        }

        self.validate_taxonomy(&mut out);

        for (lang, lexicon) in &self.lexicons {
            for (node_id, synset) in &lexicon.synsets {
                let loc = || Location::Synset {
                    language: lang.clone(),
                    node_id: node_id.clone(),
                };
                if !self.taxonomy.nodes.contains_key(node_id) {
                    out.push(integrity(loc(), format!("labels unknown node {node_id}")));
                }
                if let Err(e) = synset.check() {
                    out.push(integrity(loc(), e.to_string()));
                }
                if synset.language != *lang {
                    out.push(integrity(loc(), format!("synset tagged `{}`", synset.language)));
                }
            }
        }

        let mut mapped: BTreeMap<&str, u64> = BTreeMap::new();
        for c in &self.concepts.concepts {
            let loc = || Location::Concept(c.concept_id);
            if c.concept_id == 0 {
                out.push(integrity(loc(), "concept ids start at 1".into()));
            }
            if !self.taxonomy.nodes.contains_key(&c.node_ref) {
                out.push(integrity(loc(), format!("node_ref {} does not resolve", c.node_ref)));
            }
            if let Some(sc) = &c.mapped_sc {
                let known = self.mass.concepts.contains_key(sc)
                    || self.taxonomy.superordinates.contains_key(sc);
                if !known {
                    out.push(integrity(loc(), format!("mapped_sc {sc} does not resolve")));
                }
                if let Some(prev) = mapped.insert(sc, c.concept_id) {
                    out.push(integrity(
                        Location::SubstanceConcept(sc.clone()),
                        format!("mapped to both {prev} and {}", c.concept_id),
                    ));
                }
            }
        }

        let mut ids = BTreeSet::new();
        for d in &self.decisions {
            if !ids.insert(&d.decision_id) {
                out.push(integrity(
                    Location::Decision(d.decision_id.clone()),
                    "decision id appears twice".into(),
                ));
            }
        }
        if let Some(spec) = &self.curation.spec {
            let p = &spec.purpose;
            for c in p.succession.iter().chain(self.curation.successions.get(&p.purpose_id).into_iter().flatten()) {
                if self.registry.get(c).is_none() {
                    out.push(integrity(
                        Location::Purpose(p.purpose_id.clone()),
                        format!("succession names unregistered `{c}`"),
                    ));
                }
            }
            for list in [&p.succession]
                .into_iter()
                .chain(self.curation.successions.get(&p.purpose_id))
            {
                let distinct: BTreeSet<&String> = list.iter().collect();
                if distinct.len() != list.len() {
                    out.push(integrity(
                        Location::Purpose(p.purpose_id.clone()),
                        "succession lists a characteristic twice".into(),
                    ));
                }
            }
        }
        out
    }

    fn validate_taxonomy(&self, out: &mut Vec<CanonViolation>) {
        let t = &self.taxonomy;
        if t.is_empty() {
            return;
        }
        let integrity = |loc: Location, msg: String| CanonViolation::error(Canon::Integrity, loc, msg);
        let roots = t.roots();
        if roots.len() != 1 {
            out.push(integrity(
                Location::Taxonomy,
                format!("taxonomy has {} roots; exactly one is required", roots.len()),
            ));
        }
        for (key, n) in &t.nodes {
            let loc = || Location::Node(key.clone());
            if *key != n.node_id {
                out.push(integrity(loc(), format!("stored under key {key} but named {}", n.node_id)));
            }
            if t.concept(n, &self.mass).is_none() {
                out.push(integrity(loc(), format!("sc_ref {} does not resolve", n.sc_ref)));
            }
            match &n.parent {
                None => {
                    if n.differentia.is_some() {
                        out.push(integrity(loc(), "root carries a differentia".into()));
                    }
                    if n.rank != 0 {
                        out.push(integrity(loc(), format!("root has rank {}", n.rank)));
                    }
                }
                Some(p) => match t.nodes.get(p) {
                    None => out.push(integrity(loc(), format!("parent {p} does not exist"))),
                    Some(parent) => {
                        if !parent.children.contains(key) {
                            out.push(integrity(loc(), format!("parent {p} does not list it as a child")));
                        }
                        if n.rank != parent.rank + 1 {
                            out.push(integrity(
                                loc(),
                                format!("rank {} under a parent of rank {}", n.rank, parent.rank),
                            ));
                        }
                        match (&n.differentia, &parent.split) {
                            (None, _) => out.push(integrity(loc(), "non-root node lacks a differentia".into())),
                            (Some(d), Some(split)) if d.characteristic != *split => out.push(integrity(
                                loc(),
                                format!("differentia on `{}` but parent splits on `{split}`", d.characteristic),
                            )),
                            (Some(_), None) => out.push(integrity(
                                loc(),
                                format!("parent {p} records no splitting characteristic"),
                            )),
                            _ => {}
                        }
                    }
                },
            }
            let mut kids = BTreeSet::new();
            for c in &n.children {
                if !kids.insert(c) {
                    out.push(integrity(loc(), format!("child {c} listed twice")));
                }
                match t.nodes.get(c) {
                    None => out.push(integrity(loc(), format!("child {c} does not exist"))),
                    Some(child) if child.parent.as_deref() != Some(key.as_str()) => {
                        out.push(integrity(loc(), format!("child {c} names another parent")))
                    }
                    _ => {}
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BuildPurpose, Characteristic};

    fn characteristic(name: &str, tokens: &[&str]) -> Characteristic {
        Characteristic {
            name: name.into(),
            value_domain: ValueDomain::Enumerated {
                tokens: tokens.iter().map(|t| t.to_string()).collect(),
            },
            ascertainable: true,
            permanent: true,
            relevance_tags: ["fish-id".to_string()].into(),
        }
    }

    fn inputs() -> Vec<EncounterRecord> {
        let row = |id: &str, tail: &str, parr: &str| {
            EncounterRecord::new(
                id,
                format!("media/{id}.jpg"),
                0,
                [("tail_shape", tail), ("parr_marks", parr), ("has_gills", "true")]
                    .into_iter()
                    .collect(),
            )
        };
        vec![
            row("chinook", "concave", "oval"),
            row("blueback", "concave", "absent"),
            row("rainbow", "convex", "round"),
            row("steelhead", "convex", "absent"),
        ]
    }

    fn built(succession: &[&str]) -> Store {
        let mut s = Store::new();
        let registry = vec![
            characteristic("tail_shape", &["concave", "convex"]),
            characteristic("parr_marks", &["oval", "round", "absent"]),
            characteristic("has_gills", &["true", "false"]),
        ];
        let ids = inputs().iter().map(|r| r.encounter_id.clone()).collect();
        s.submit(
            Decision::Ingest {
                encounter_ids: ids,
                threshold: 0.8,
                auto_only: false,
                registry,
            },
            DEFAULT_AUTHOR,
            &inputs(),
        )
        .unwrap();
        let spec = BuildSpec {
            purpose: BuildPurpose {
                purpose_id: "fish-id".into(),
                relevance_tag: "fish-id".into(),
                succession: succession.iter().map(|c| c.to_string()).collect(),
            },
            ..BuildSpec::default()
        };
        s.submit(Decision::Build { spec }, DEFAULT_AUTHOR, &[]).unwrap();
        s
    }

    #[test]
    fn clean_build_validates() {
        let s = built(&["tail_shape", "parr_marks"]);
        assert!(s.validate_store().is_empty(), "{:#?}", s.validate_store());
        assert_eq!(s.audit().errors(), 0);
        assert_eq!(s.taxonomy.nodes.len(), 7);
    }

    #[test]
    fn failed_decision_leaves_store_untouched() {
        let mut s = built(&["tail_shape", "parr_marks"]);
        let before = s.clone();
        let err = s
            .submit(
                Decision::SetSuccession {
                    purpose_id: "fish-id".into(),
                    succession: vec!["fin_rays".into()],
                },
                DEFAULT_AUTHOR,
                &[],
            )
            .unwrap_err();
        assert!(matches!(err, ForgeError::UnknownCharacteristic(_)));
        assert_eq!(s, before);
    }

    #[test]
    fn replacing_a_non_differentiating_characteristic_clears_it() {
        let mut s = built(&["has_gills", "tail_shape", "parr_marks"]);
        let report = s.audit();
        let v = report
            .violations
            .iter()
            .find(|v| v.canon == Canon::Differentiation)
            .expect("seeded violation")
            .clone();
        let fix = v
            .suggested_fixes
            .iter()
            .find(|f| f.payload["resolution"]["action"] == "drop-characteristic")
            .unwrap();
        let decision: Decision = serde_json::from_value(json!({
            "kind": fix.kind,
            "payload": fix.payload,
        }))
        .unwrap();
        s.submit(decision, DEFAULT_AUTHOR, &[]).unwrap();
        assert_eq!(s.audit().count(Canon::Differentiation), 0);

        // The same resolution again refers to a violation that is gone.
        let again = Decision::ResolveViolation {
            canon: v.canon,
            location: v.location.clone(),
            resolution: Resolution::Acknowledge,
        };
        assert!(s.submit(again, DEFAULT_AUTHOR, &[]).unwrap_err().is_conflict());
    }

    #[test]
    fn replay_reproduces_state() {
        let mut s = built(&["tail_shape", "parr_marks"]);
        s.submit(Decision::MintIds {}, DEFAULT_AUTHOR, &[]).unwrap();
        let again = Store::replay(&s.decisions, &inputs()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn validate_flags_two_roots_and_dangling_node_ref() {
        let mut s = built(&["tail_shape", "parr_marks"]);
        s.submit(Decision::MintIds {}, DEFAULT_AUTHOR, &[]).unwrap();

        let mut two_roots = s.clone();
        let mut extra = two_roots.taxonomy.nodes["root"].clone();
        extra.node_id = "root2".into();
        extra.children.clear();
        two_roots.taxonomy.nodes.insert("root2".into(), extra);
        let vs = two_roots.validate_store();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].location, Location::Taxonomy);

        let mut dangling = s.clone();
        dangling.concepts.concepts[0].node_ref = "nowhere".into();
        let vs = dangling.validate_store();
        assert_eq!(vs.len(), 1);
        assert!(matches!(vs[0].location, Location::Concept(_)));
    }
}
