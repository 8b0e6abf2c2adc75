//! Shared domain types.
//!
//! Every collection that reaches disk is keyed or sorted by id so that the
//! canonical export is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ForgeError, Result};

/// A single `characteristic = value` pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Property {
    pub characteristic: String,
    pub value: String,
}

impl Property {
    pub fn new(characteristic: impl Into<String>, value: impl Into<String>) -> Self {
        Property {
            characteristic: characteristic.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.characteristic, self.value)
    }
}

impl std::str::FromStr for Property {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('=') {
            Some((c, v)) if !c.trim().is_empty() && !v.trim().is_empty() => {
                Ok(Property::new(c.trim(), v.trim()))
            }
            _ => Err(ForgeError::InvalidInput(format!(
                "expected `characteristic=value`, got `{s}`"
            ))),
        }
    }
}

/// A set of categorical `(characteristic, value)` pairs.
///
/// Each characteristic carries at most one value, so the set is stored as a
/// map; set algebra is over the pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(BTreeMap<String, String>);

impl Signature {
    pub fn new() -> Self {
        Signature(BTreeMap::new())
    }

    pub fn insert(&mut self, characteristic: impl Into<String>, value: impl Into<String>) {
        self.0.insert(characteristic.into(), value.into());
    }

    pub fn get(&self, characteristic: &str) -> Option<&str> {
        self.0.get(characteristic).map(String::as_str)
    }

    pub fn contains(&self, p: &Property) -> bool {
        self.get(&p.characteristic) == Some(p.value.as_str())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn properties(&self) -> impl Iterator<Item = Property> + '_ {
        self.0.iter().map(|(k, v)| Property::new(k, v))
    }

    pub fn intersection(&self, other: &Signature) -> Signature {
        Signature(
            self.0
                .iter()
                .filter(|(k, v)| other.0.get(*k) == Some(*v))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }

    /// Number of pairs shared with `other`.
    pub fn shared(&self, other: &Signature) -> usize {
        self.0
            .iter()
            .filter(|(k, v)| other.0.get(*k) == Some(*v))
            .count()
    }

    pub fn is_subset(&self, other: &Signature) -> bool {
        self.shared(other) == self.len()
    }

    pub fn is_superset(&self, other: &Signature) -> bool {
        other.is_subset(self)
    }

    /// Jaccard similarity over the pair sets. Two empty signatures score 1.
    pub fn jaccard(&self, other: &Signature) -> f64 {
        let inter = self.shared(other);
        let union = self.len() + other.len() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Intersection of every signature in the iterator; `None` when empty.
    pub fn intersect_all<'a>(mut sigs: impl Iterator<Item = &'a Signature>) -> Option<Signature> {
        let first = sigs.next()?.clone();
        Some(sigs.fold(first, |acc, s| acc.intersection(s)))
    }
}

impl FromIterator<(String, String)> for Signature {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Signature(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for Signature {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        Signature(
            iter.into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        )
    }
}

/// Raw observed value, before bucketing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservedValue {
    Flag(bool),
    Number(f64),
    Token(String),
}

impl fmt::Display for ObservedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservedValue::Flag(b) => write!(f, "{b}"),
            ObservedValue::Number(n) => write!(f, "{n}"),
            ObservedValue::Token(t) => f.write_str(t),
        }
    }
}

/// Observations as written in the input, duplicates preserved so that
/// validation can report them instead of the parser silently dropping one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observations(pub Vec<(String, ObservedValue)>);

impl Observations {
    pub fn iter(&self) -> impl Iterator<Item = (&str, &ObservedValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn duplicate_names(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut dups = BTreeSet::new();
        for (k, _) in &self.0 {
            if !seen.insert(k.as_str()) {
                dups.insert(k.clone());
            }
        }
        dups.into_iter().collect()
    }
}

impl<K: Into<String>, V: Into<ObservedValue>> FromIterator<(K, V)> for Observations {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Observations(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

impl From<&str> for ObservedValue {
    fn from(s: &str) -> Self {
        ObservedValue::Token(s.to_string())
    }
}

impl From<f64> for ObservedValue {
    fn from(n: f64) -> Self {
        ObservedValue::Number(n)
    }
}

impl From<bool> for ObservedValue {
    fn from(b: bool) -> Self {
        ObservedValue::Flag(b)
    }
}

impl Serialize for Observations {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut sorted: Vec<&(String, ObservedValue)> = self.0.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut map = serializer.serialize_map(Some(sorted.len()))?;
        for (k, v) in sorted {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Observations {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ObsVisitor;

        impl<'de> Visitor<'de> for ObsVisitor {
            type Value = Observations;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of characteristic names to values")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, ObservedValue>()? {
                    out.push((k, v));
                }
                Ok(Observations(out))
            }
        }

        deserializer.deserialize_map(ObsVisitor)
    }
}

/// A frame inside an encounter, as supplied by the upstream extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameInput {
    pub frame_id: String,
    pub observations: Observations,
}

/// One observation event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterRecord {
    pub encounter_id: String,
    pub media_ref: String,
    pub timestamp: i64,
    pub observations: Observations,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<FrameInput>>,
    // Ground-truth label for test oracles. Nothing in the engine reads it;
    // it is kept private and only round-trips through serde.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entity_hint: Option<String>,
}

impl EncounterRecord {
    pub fn new(
        encounter_id: impl Into<String>,
        media_ref: impl Into<String>,
        timestamp: i64,
        observations: Observations,
    ) -> Self {
        EncounterRecord {
            encounter_id: encounter_id.into(),
            media_ref: media_ref.into(),
            timestamp,
            observations,
            frames: None,
            entity_hint: None,
        }
    }

    pub fn with_entity_hint(mut self, hint: impl Into<String>) -> Self {
        self.entity_hint = Some(hint.into());
        self
    }

    pub fn with_frames(mut self, frames: Vec<FrameInput>) -> Self {
        self.frames = Some(frames);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualFrame {
    pub frame_id: String,
    pub encounter_id: String,
    pub observations: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualObject {
    pub object_id: String,
    pub encounter_id: String,
    pub media_ref: String,
    pub frames: Vec<String>,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub percept_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_id: Option<String>,
    /// Similarity to the target at merge time; absent for the founding percept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstanceConcept {
    pub sc_id: String,
    pub visual_objects: BTreeSet<String>,
    pub intension: Signature,
    pub extension: BTreeSet<String>,
    #[serde(default)]
    pub provenance: Vec<MergeEvent>,
    /// Curator-asserted properties; consulted for placement only, never
    /// folded into the perceived intension.
    #[serde(default, skip_serializing_if = "Signature::is_empty")]
    pub asserted: Signature,
}

impl SubstanceConcept {
    /// Value used when partitioning on `characteristic`.
    pub fn value_of(&self, characteristic: &str) -> Option<&str> {
        self.intension
            .get(characteristic)
            .or_else(|| self.asserted.get(characteristic))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Bucket {
    /// Half-open `[min, max)`; missing bounds are unbounded.
    pub fn contains(&self, x: f64) -> bool {
        self.min.is_none_or(|lo| x >= lo) && self.max.is_none_or(|hi| x < hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValueDomain {
    Enumerated { tokens: Vec<String> },
    Numeric { buckets: Vec<Bucket> },
}

impl ValueDomain {
    pub fn len(&self) -> usize {
        match self {
            ValueDomain::Enumerated { tokens } => tokens.len(),
            ValueDomain::Numeric { buckets } => buckets.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains_token(&self, token: &str) -> bool {
        match self {
            ValueDomain::Enumerated { tokens } => tokens.iter().any(|t| t == token),
            ValueDomain::Numeric { buckets } => buckets.iter().any(|b| b.label == token),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub name: String,
    pub value_domain: ValueDomain,
    pub ascertainable: bool,
    pub permanent: bool,
    #[serde(default)]
    pub relevance_tags: BTreeSet<String>,
}

impl Characteristic {
    /// Maps a raw observation onto a categorical token of this domain.
    pub fn bucket(&self, value: &ObservedValue) -> Result<String> {
        let out_of_domain = || ForgeError::ValueOutOfDomain {
            characteristic: self.name.clone(),
            value: value.to_string(),
        };
        match (&self.value_domain, value) {
            (ValueDomain::Numeric { buckets }, ObservedValue::Number(x)) => buckets
                .iter()
                .find(|b| b.contains(*x))
                .map(|b| b.label.clone())
                .ok_or_else(out_of_domain),
            (domain, ObservedValue::Token(t)) if domain.contains_token(t) => Ok(t.clone()),
            (domain, ObservedValue::Flag(b)) if domain.contains_token(&b.to_string()) => {
                Ok(b.to_string())
            }
            _ => Err(out_of_domain()),
        }
    }
}

/// Name-keyed characteristic registry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry(BTreeMap<String, Characteristic>);

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn from_list(list: Vec<Characteristic>) -> Result<Self> {
        let mut reg = Registry::new();
        for c in list {
            reg.register(c)?;
        }
        Ok(reg)
    }

    pub fn register(&mut self, c: Characteristic) -> Result<()> {
        if c.value_domain.is_empty() {
            return Err(ForgeError::InvalidInput(format!(
                "characteristic `{}` has an empty value domain",
                c.name
            )));
        }
        if let Some(existing) = self.0.get(&c.name) {
            if existing != &c {
                return Err(ForgeError::InvalidInput(format!(
                    "characteristic `{}` is already registered with a different definition",
                    c.name
                )));
            }
            return Ok(());
        }
        self.0.insert(c.name.clone(), c);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Characteristic> {
        self.0.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&Characteristic> {
        self.get(name)
            .ok_or_else(|| ForgeError::UnknownCharacteristic(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Characteristic> {
        self.0.values()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_list(&self) -> Vec<Characteristic> {
        self.0.values().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub node_id: String,
    pub sc_ref: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub differentia: Option<Property>,
    pub rank: u32,
    pub rank_label: String,
    #[serde(default)]
    pub children: Vec<String>,
    /// Characteristic this node splits its children on.
    #[serde(default)]
    pub split: Option<String>,
    #[serde(default)]
    pub basic_category: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub language: String,
    pub lemmas: Vec<String>,
    pub gloss: String,
    /// Gloss produced by the genus + differentia template.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub auto_gloss: bool,
}

impl Synset {
    pub fn new(language: impl Into<String>, lemmas: Vec<String>, gloss: impl Into<String>) -> Result<Self> {
        let s = Synset {
            language: language.into(),
            lemmas,
            gloss: gloss.into(),
            auto_gloss: false,
        };
        s.check()?;
        Ok(s)
    }

    pub fn preferred(&self) -> &str {
        &self.lemmas[0]
    }

    pub fn check(&self) -> Result<()> {
        if self.lemmas.is_empty() || self.lemmas.iter().any(|l| l.trim().is_empty()) {
            return Err(ForgeError::EmptyLemmas);
        }
        let mut seen = BTreeSet::new();
        for l in &self.lemmas {
            if !seen.insert(l) {
                return Err(ForgeError::DuplicateLemma(l.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationConcept {
    pub concept_id: u64,
    pub node_ref: String,
    #[serde(default)]
    pub mapped_sc: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildPurpose {
    pub purpose_id: String,
    pub relevance_tag: String,
    #[serde(default)]
    pub succession: Vec<String>,
}

/// Target of a merge: a fresh concept or an existing one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum MergeTarget {
    New,
    Existing(String),
}

impl From<String> for MergeTarget {
    fn from(s: String) -> Self {
        if s == "NEW" {
            MergeTarget::New
        } else {
            MergeTarget::Existing(s)
        }
    }
}

impl From<MergeTarget> for String {
    fn from(t: MergeTarget) -> Self {
        match t {
            MergeTarget::New => "NEW".to_string(),
            MergeTarget::Existing(s) => s,
        }
    }
}

/// How a curator resolves a reported violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Resolution {
    /// Swap a characteristic of the active succession for another one.
    ReplaceCharacteristic { from: String, to: String },
    DropCharacteristic { characteristic: String },
    /// Split one node on a specific characteristic.
    OverrideSplit { node_id: String, characteristic: String },
    /// Place a concept by asserting a value it was not perceived with.
    AssertProperty {
        sc_id: String,
        characteristic: String,
        value: String,
    },
    /// Mark a warning as reviewed.
    Acknowledge,
}

/// Node specification carried by insert decisions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertSpec {
    pub parent: String,
    pub differentia: Property,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc_ref: Option<String>,
    /// Existing children of `parent` that move under the new node.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adopt: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_label: Option<String>,
    #[serde(default)]
    pub basic_category: bool,
}

/// Everything a build needs besides the apperception mass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSpec {
    pub purpose: BuildPurpose,
    /// Ordered rank names, most general first. Empty means depth-derived.
    #[serde(default)]
    pub rank_scheme: Vec<String>,
    #[serde(default)]
    pub node_metadata: BTreeMap<String, NodeMetadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum Decision {
    ApproveMerge {
        percept_id: String,
        target: MergeTarget,
    },
    SetSuccession {
        purpose_id: String,
        succession: Vec<String>,
    },
    ResolveViolation {
        canon: crate::violation::Canon,
        location: crate::violation::Location,
        resolution: Resolution,
    },
    AssignLabel {
        node_id: String,
        language: String,
        lemmas: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gloss: Option<String>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        supersede: bool,
    },
    ConfirmMapping {
        sc_id: String,
        concept_id: u64,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        supersede: bool,
    },
    Ingest {
        encounter_ids: Vec<String>,
        threshold: f64,
        #[serde(default)]
        auto_only: bool,
        registry: Vec<Characteristic>,
    },
    Build {
        spec: BuildSpec,
    },
    MintIds {},
    InsertConcept {
        spec: InsertSpec,
    },
}

impl Decision {
    pub fn kind(&self) -> DecisionKind {
        match self {
            Decision::ApproveMerge { .. } => DecisionKind::ApproveMerge,
            Decision::SetSuccession { .. } => DecisionKind::SetSuccession,
            Decision::ResolveViolation { .. } => DecisionKind::ResolveViolation,
            Decision::AssignLabel { .. } => DecisionKind::AssignLabel,
            Decision::ConfirmMapping { .. } => DecisionKind::ConfirmMapping,
            Decision::Ingest { .. } => DecisionKind::Ingest,
            Decision::Build { .. } => DecisionKind::Build,
            Decision::MintIds {} => DecisionKind::MintIds,
            Decision::InsertConcept { .. } => DecisionKind::InsertConcept,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionKind {
    ApproveMerge,
    SetSuccession,
    ResolveViolation,
    AssignLabel,
    ConfirmMapping,
    Ingest,
    Build,
    MintIds,
    InsertConcept,
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub decision_id: String,
    #[serde(flatten)]
    pub decision: Decision,
    pub author: String,
    pub timestamp: i64,
}
