use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::DecisionKind;

/// The canons the auditor implements, plus `Integrity` for structural
/// breaches of the data model itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Canon {
    Differentiation,
    Relevance,
    Ascertainability,
    Permanence,
    RelevantSuccession,
    Exhaustiveness,
    DecreasingExtension,
    Modulation,
    ContextEnumeration,
    Reticence,
    Synonym,
    Homonym,
    Hospitality,
    Integrity,
}

impl Canon {
    pub const ALL: [Canon; 14] = [
        Canon::Differentiation,
        Canon::Relevance,
        Canon::Ascertainability,
        Canon::Permanence,
        Canon::RelevantSuccession,
        Canon::Exhaustiveness,
        Canon::DecreasingExtension,
        Canon::Modulation,
        Canon::ContextEnumeration,
        Canon::Reticence,
        Canon::Synonym,
        Canon::Homonym,
        Canon::Hospitality,
        Canon::Integrity,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Canon::Differentiation => "differentiation",
            Canon::Relevance => "relevance",
            Canon::Ascertainability => "ascertainability",
            Canon::Permanence => "permanence",
            Canon::RelevantSuccession => "relevant-succession",
            Canon::Exhaustiveness => "exhaustiveness",
            Canon::DecreasingExtension => "decreasing-extension",
            Canon::Modulation => "modulation",
            Canon::ContextEnumeration => "context-enumeration",
            Canon::Reticence => "reticence",
            Canon::Synonym => "synonym",
            Canon::Homonym => "homonym",
            Canon::Hospitality => "hospitality",
            Canon::Integrity => "integrity",
        }
    }
}

impl fmt::Display for Canon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "kebab-case")]
pub enum Location {
    Store,
    Taxonomy,
    Node(String),
    /// The children of the given node.
    Array(String),
    /// Node ids from the more general end downwards.
    Chain(Vec<String>),
    Characteristic(String),
    Purpose(String),
    Encounter(String),
    SubstanceConcept(String),
    VisualObject(String),
    Concept(u64),
    Synset { language: String, node_id: String },
    Lexicon(String),
    Decision(String),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Store => f.write_str("store"),
            Location::Taxonomy => f.write_str("taxonomy"),
            Location::Node(id) => write!(f, "node {id}"),
            Location::Array(id) => write!(f, "array under {id}"),
            Location::Chain(ids) => write!(f, "chain {}", ids.join(" > ")),
            Location::Characteristic(c) => write!(f, "characteristic {c}"),
            Location::Purpose(p) => write!(f, "purpose {p}"),
            Location::Encounter(e) => write!(f, "encounter {e}"),
            Location::SubstanceConcept(s) => write!(f, "substance concept {s}"),
            Location::VisualObject(v) => write!(f, "visual object {v}"),
            Location::Concept(c) => write!(f, "concept {c}"),
            Location::Synset { language, node_id } => write!(f, "{language} synset of {node_id}"),
            Location::Lexicon(l) => write!(f, "lexicon {l}"),
            Location::Decision(d) => write!(f, "decision {d}"),
        }
    }
}

/// A ready-to-post decision template attached to a violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestedFix {
    pub label: String,
    pub kind: DecisionKind,
    /// Payload of the decision; `<...>` strings are placeholders for the
    /// curator to fill in.
    pub payload: serde_json::Value,
}

impl PartialOrd for SuggestedFix {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SuggestedFix {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.label, self.kind)
            .cmp(&(&other.label, other.kind))
            .then_with(|| self.payload.to_string().cmp(&other.payload.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonViolation {
    pub canon: Canon,
    pub location: Location,
    pub severity: Severity,
    pub explanation: String,
    #[serde(default)]
    pub suggested_fixes: Vec<SuggestedFix>,
}

impl CanonViolation {
    pub fn error(canon: Canon, location: Location, explanation: impl Into<String>) -> Self {
        CanonViolation {
            canon,
            location,
            severity: Severity::Error,
            explanation: explanation.into(),
            suggested_fixes: Vec::new(),
        }
    }

    pub fn warning(canon: Canon, location: Location, explanation: impl Into<String>) -> Self {
        CanonViolation {
            severity: Severity::Warning,
            ..CanonViolation::error(canon, location, explanation)
        }
    }

    pub fn with_fix(mut self, fix: SuggestedFix) -> Self {
        self.suggested_fixes.push(fix);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    fn sort_key(&self) -> (Canon, &Location, Severity, &str) {
        (self.canon, &self.location, self.severity, &self.explanation)
    }
}

impl PartialOrd for CanonViolation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CanonViolation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| self.suggested_fixes.cmp(&other.suggested_fixes))
    }
}

impl fmt::Display for CanonViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] {}: {}", self.canon, self.location, self.explanation)
    }
}

/// Sorts by canon then location and drops exact duplicates.
pub fn normalize(mut violations: Vec<CanonViolation>) -> Vec<CanonViolation> {
    violations.sort();
    violations.dedup();
    violations
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonTally {
    pub errors: usize,
    pub warnings: usize,
}

pub fn tally(violations: &[CanonViolation]) -> BTreeMap<Canon, CanonTally> {
    let mut out: BTreeMap<Canon, CanonTally> = BTreeMap::new();
    for v in violations {
        let t = out.entry(v.canon).or_default();
        match v.severity {
            Severity::Error => t.errors += 1,
            Severity::Warning => t.warnings += 1,
        }
    }
    out
}
