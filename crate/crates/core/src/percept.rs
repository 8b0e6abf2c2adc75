//! Percepts and the apperception mass.
//!
//! Encounters become pure percepts; percepts are associated into substance
//! concepts either automatically (identical signatures) or through an
//! approve-merge decision.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::model::{
    Decision, DecisionRecord, EncounterRecord, MergeEvent, MergeTarget, Registry, Signature,
    SubstanceConcept, VisualFrame, VisualObject,
};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// The impression left by a single encounter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurePercept {
    pub percept_id: String,
    pub encounter_id: String,
    pub media_ref: String,
    pub signature: Signature,
    pub frames: Vec<VisualFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeCandidate {
    pub sc_id: String,
    pub score: f64,
}

/// A percept waiting for a curator to decide where it belongs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingPercept {
    pub percept: PurePercept,
    pub candidates: Vec<MergeCandidate>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ApperceptionMass {
    #[serde(default)]
    pub concepts: BTreeMap<String, SubstanceConcept>,
    #[serde(default)]
    pub visual_objects: BTreeMap<String, VisualObject>,
    #[serde(default)]
    pub frames: BTreeMap<String, VisualFrame>,
    #[serde(default)]
    pub pending: BTreeMap<String, PendingPercept>,
}

/// What happened to a percept during ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "placement", rename_all = "kebab-case")]
pub enum Placement {
    Created { sc_id: String },
    AutoMerged { sc_id: String },
    Merged { sc_id: String, score: f64 },
    Pending { candidates: Vec<MergeCandidate> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub percept_id: String,
    #[serde(flatten)]
    pub placement: Placement,
    /// Set when the merge left the target with no shared property.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty_intension: bool,
}

pub fn percept_id_for(encounter_id: &str) -> String {
    format!("p-{encounter_id}")
}

fn object_id_for(encounter_id: &str) -> String {
    format!("vo-{encounter_id}")
}

fn concept_id_for(encounter_id: &str) -> String {
    format!("sc-{encounter_id}")
}

impl ApperceptionMass {
    pub fn new() -> Self {
        ApperceptionMass::default()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty() && self.pending.is_empty()
    }

    pub fn knows_encounter(&self, encounter_id: &str) -> bool {
        self.visual_objects.contains_key(&object_id_for(encounter_id))
            || self.pending.contains_key(&percept_id_for(encounter_id))
    }

    /// Turns a record into a pending pure percept.
    pub fn ingest_encounter(
        &mut self,
        record: &EncounterRecord,
        registry: &Registry,
    ) -> Result<PurePercept> {
        let percept = perceive(record, registry)?;
        if self.knows_encounter(&record.encounter_id) {
            return Err(ForgeError::DuplicateEncounter(record.encounter_id.clone()));
        }
        self.pending.insert(
            percept.percept_id.clone(),
            PendingPercept {
                percept: percept.clone(),
                candidates: Vec::new(),
            },
        );
        Ok(percept)
    }

    /// Concepts whose intension is at least `threshold` similar to the
    /// percept, best first, ties broken by id.
    pub fn propose_merges(
        &self,
        percept: &PurePercept,
        threshold: f64,
    ) -> Result<Vec<MergeCandidate>> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ForgeError::InvalidThreshold(threshold));
        }
        let mut out: Vec<MergeCandidate> = self
            .concepts
            .values()
            .map(|sc| MergeCandidate {
                sc_id: sc.sc_id.clone(),
                score: percept.signature.jaccard(&sc.intension),
            })
            .filter(|c| c.score >= threshold)
            .collect();
        out.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.sc_id.cmp(&b.sc_id))
        });
        Ok(out)
    }

    /// Applies a curator's approve-merge decision.
    pub fn apply_merge(
        &mut self,
        percept_id: &str,
        target: &MergeTarget,
        decision: &DecisionRecord,
    ) -> Result<IngestOutcome> {
        match &decision.decision {
            Decision::ApproveMerge {
                percept_id: p,
                target: t,
            } if p == percept_id && t == target => {}
            Decision::ApproveMerge { .. } => {
                return Err(ForgeError::InvalidInput(format!(
                    "decision {} does not approve {percept_id}",
                    decision.decision_id
                )))
            }
            other => {
                return Err(ForgeError::WrongDecisionKind {
                    expected: "approve-merge".into(),
                    got: other.kind().to_string(),
                })
            }
        }
        self.place(percept_id, target, Some(&decision.decision_id))
    }

    /// Ingests a record and places it where no human judgement is needed:
    /// a fresh concept when nothing is similar, the matching concept when
    /// the signature is identical. Anything else stays pending.
    pub fn ingest_and_place(
        &mut self,
        record: &EncounterRecord,
        registry: &Registry,
        threshold: f64,
    ) -> Result<IngestOutcome> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ForgeError::InvalidThreshold(threshold));
        }
        let percept = self.ingest_encounter(record, registry)?;
        let candidates = self.propose_merges(&percept, threshold)?;
        match candidates.first() {
            None => self.place(&percept.percept_id, &MergeTarget::New, None),
            Some(top) if top.score >= 1.0 => {
                let target = MergeTarget::Existing(top.sc_id.clone());
                let mut out = self.place(&percept.percept_id, &target, None)?;
                out.placement = Placement::AutoMerged {
                    sc_id: top.sc_id.clone(),
                };
                Ok(out)
            }
            Some(_) => {
                let pending = self
                    .pending
                    .get_mut(&percept.percept_id)
                    .expect("percept was just registered");
                pending.candidates = candidates.clone();
                Ok(IngestOutcome {
                    percept_id: percept.percept_id,
                    placement: Placement::Pending { candidates },
                    empty_intension: false,
                })
            }
        }
    }

    /// Session close: every percept still pending founds its own concept.
    pub fn close_session(&mut self) -> Vec<String> {
        let ids: Vec<String> = self.pending.keys().cloned().collect();
        for id in &ids {
            self.place(id, &MergeTarget::New, None)
                .expect("pending percept can always found a concept");
        }
        ids
    }

    pub(crate) fn place(
        &mut self,
        percept_id: &str,
        target: &MergeTarget,
        decision_id: Option<&str>,
    ) -> Result<IngestOutcome> {
        let pending = self
            .pending
            .get(percept_id)
            .ok_or_else(|| ForgeError::StalePercept(percept_id.to_string()))?;
        let percept = pending.percept.clone();
        let object = VisualObject {
            object_id: object_id_for(&percept.encounter_id),
            encounter_id: percept.encounter_id.clone(),
            media_ref: percept.media_ref.clone(),
            frames: percept.frames.iter().map(|f| f.frame_id.clone()).collect(),
            signature: percept.signature.clone(),
        };

        let (sc_id, placement, score) = match target {
            MergeTarget::New => {
                let sc_id = concept_id_for(&percept.encounter_id);
                if self.concepts.contains_key(&sc_id) {
                    return Err(ForgeError::Stale(format!("concept {sc_id} already exists")));
                }
                (sc_id.clone(), Placement::Created { sc_id }, None)
            }
            MergeTarget::Existing(sc_id) => {
                let sc = self
                    .concepts
                    .get(sc_id)
                    .ok_or_else(|| ForgeError::UnknownSubstanceConcept(sc_id.clone()))?;
                let score = percept.signature.jaccard(&sc.intension);
                (
                    sc_id.clone(),
                    Placement::Merged {
                        sc_id: sc_id.clone(),
                        score,
                    },
                    Some(score),
                )
            }
        };

        self.pending.remove(percept_id);
        for f in &percept.frames {
            self.frames.insert(f.frame_id.clone(), f.clone());
        }
        let object_id = object.object_id.clone();
        self.visual_objects.insert(object_id.clone(), object);

        let sc = self
            .concepts
            .entry(sc_id.clone())
            .or_insert_with(|| SubstanceConcept {
                sc_id: sc_id.clone(),
                visual_objects: BTreeSet::new(),
                intension: Signature::new(),
                extension: BTreeSet::new(),
                provenance: Vec::new(),
                asserted: Signature::new(),
            });
        sc.visual_objects.insert(object_id);
        sc.provenance.push(MergeEvent {
            percept_id: percept_id.to_string(),
            decision_id: decision_id.map(str::to_string),
            score,
        });
        let before = sc.intension.len();
        recompute(sc, &self.visual_objects);
        let empty_intension = sc.intension.is_empty();
        if empty_intension && before > 0 {
            log::warn!("substance concept {sc_id} has an empty intension after merging {percept_id}");
        }
        Ok(IngestOutcome {
            percept_id: percept_id.to_string(),
            placement,
            empty_intension,
        })
    }

    /// Intension and extension a concept should have, given its members.
    pub fn expected_signature(
        &self,
        sc: &SubstanceConcept,
    ) -> Option<(Signature, BTreeSet<String>)> {
        let objects: Vec<&VisualObject> = sc
            .visual_objects
            .iter()
            .map(|id| self.visual_objects.get(id))
            .collect::<Option<_>>()?;
        let intension = Signature::intersect_all(objects.iter().map(|o| &o.signature))?;
        let extension = objects.iter().map(|o| o.media_ref.clone()).collect();
        Some((intension, extension))
    }
}

fn recompute(sc: &mut SubstanceConcept, objects: &BTreeMap<String, VisualObject>) {
    let members: Vec<&VisualObject> = sc
        .visual_objects
        .iter()
        .filter_map(|id| objects.get(id))
        .collect();
    sc.intension = Signature::intersect_all(members.iter().map(|o| &o.signature)).unwrap_or_default();
    sc.extension = members.iter().map(|o| o.media_ref.clone()).collect();
}

/// Validates a record against the registry and buckets its observations.
pub fn perceive(record: &EncounterRecord, registry: &Registry) -> Result<PurePercept> {
    let signature = bucket_observations(&record.encounter_id, &record.observations, registry)?;
    let frames = match &record.frames {
        None => vec![VisualFrame {
            frame_id: format!("{}#0", record.encounter_id),
            encounter_id: record.encounter_id.clone(),
            observations: signature.clone(),
        }],
        Some(inputs) if inputs.is_empty() => {
            return Err(ForgeError::InvalidInput(format!(
                "encounter `{}` lists an empty frame sequence",
                record.encounter_id
            )))
        }
        Some(inputs) => {
            let frames = inputs
                .iter()
                .map(|f| {
                    Ok(VisualFrame {
                        frame_id: f.frame_id.clone(),
                        encounter_id: record.encounter_id.clone(),
                        observations: bucket_observations(
                            &record.encounter_id,
                            &f.observations,
                            registry,
                        )?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let common = Signature::intersect_all(frames.iter().map(|f| &f.observations))
                .unwrap_or_default();
            if common != signature {
                return Err(ForgeError::InvalidInput(format!(
                    "observations of encounter `{}` must equal what its frames have in common",
                    record.encounter_id
                )));
            }
            frames
        }
    };
    Ok(PurePercept {
        percept_id: percept_id_for(&record.encounter_id),
        encounter_id: record.encounter_id.clone(),
        media_ref: record.media_ref.clone(),
        signature,
        frames,
    })
}

fn bucket_observations(
    encounter_id: &str,
    observations: &crate::model::Observations,
    registry: &Registry,
) -> Result<Signature> {
    if observations.is_empty() {
        return Err(ForgeError::EmptyObservations(encounter_id.to_string()));
    }
    if let Some(dup) = observations.duplicate_names().into_iter().next() {
        return Err(ForgeError::DuplicateObservation {
            encounter: encounter_id.to_string(),
            characteristic: dup,
        });
    }
    let mut sig = Signature::new();
    for (name, value) in observations.iter() {
        let c = registry.require(name)?;
        sig.insert(name, c.bucket(value)?);
    }
    Ok(sig)
}

/// Synthesizes the concept of a class above `children`: members and
/// extension are unions, intension is what all children share.
pub fn superordinate_signature(
    sc_id: impl Into<String>,
    children: &[&SubstanceConcept],
) -> Result<SubstanceConcept> {
    if children.is_empty() {
        return Err(ForgeError::NoChildren);
    }
    let intension = Signature::intersect_all(children.iter().map(|c| &c.intension))
        .expect("children is non-empty");
    Ok(SubstanceConcept {
        sc_id: sc_id.into(),
        visual_objects: children
            .iter()
            .flat_map(|c| c.visual_objects.iter().cloned())
            .collect(),
        intension,
        extension: children
            .iter()
            .flat_map(|c| c.extension.iter().cloned())
            .collect(),
        provenance: Vec::new(),
        asserted: Signature::new(),
    })
}
