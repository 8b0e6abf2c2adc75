use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("unknown characteristic `{0}`")]
    UnknownCharacteristic(String),
    #[error("duplicate encounter id `{0}`")]
    DuplicateEncounter(String),
    #[error("encounter `{0}` has no observations")]
    EmptyObservations(String),
    #[error("encounter `{encounter}` observes `{characteristic}` more than once")]
    DuplicateObservation {
        encounter: String,
        characteristic: String,
    },
    #[error("value `{value}` is outside the domain of `{characteristic}`")]
    ValueOutOfDomain { characteristic: String, value: String },
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("percept `{0}` is not pending")]
    StalePercept(String),
    #[error("unknown substance concept `{0}`")]
    UnknownSubstanceConcept(String),
    #[error("empty apperception mass")]
    EmptyMass,
    #[error("succession plan has no characteristics")]
    EmptyPlan,
    #[error("superordinate signature needs at least one child concept")]
    NoChildren,
    #[error("cannot label before a taxonomy has been built")]
    LabelBeforeTaxonomy,
    #[error("no taxonomy has been built")]
    NoTaxonomy,
    #[error("synset needs at least one non-empty lemma")]
    EmptyLemmas,
    #[error("lemma `{0}` appears twice in one synset")]
    DuplicateLemma(String),
    #[error("node `{node}` already carries a different `{language}` synset; supersede it explicitly")]
    LabelConflict { node: String, language: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown concept id {0}")]
    UnknownConcept(u64),
    #[error("root is not labeled in `{0}`, nothing to anchor the projection")]
    UnlabeledRoot(String),
    #[error("no lexicon for language `{0}`")]
    UnknownLanguage(String),
    #[error("rank label `{label}` on node `{node}` is not in the rank scheme")]
    RankOutsideScheme { node: String, label: String },
    #[error("mapping {sc_id} -> {concept_id} conflicts with existing mapping {conflict_sc} -> {conflict_concept}")]
    MappingConflict {
        sc_id: String,
        concept_id: u64,
        conflict_sc: String,
        conflict_concept: u64,
    },
    #[error("differentia {differentia} duplicates sibling `{sibling}`")]
    DuplicateDifferentia { differentia: String, sibling: String },
    #[error("expected a `{expected}` decision, got `{got}`")]
    WrongDecisionKind { expected: String, got: String },
    #[error("stale decision: {0}")]
    Stale(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("store at {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl ForgeError {
    /// Errors caused by the request disagreeing with current state, as
    /// opposed to a malformed request.
    pub fn is_conflict(&self) -> bool {
        matches!(
            self,
            ForgeError::StalePercept(_)
                | ForgeError::Stale(_)
                | ForgeError::MappingConflict { .. }
                | ForgeError::LabelConflict { .. }
                | ForgeError::DuplicateDifferentia { .. }
                | ForgeError::DuplicateEncounter(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ForgeError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = ForgeError> = std::result::Result<T, E>;
