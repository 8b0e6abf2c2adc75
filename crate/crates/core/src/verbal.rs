//! Verbal plane: per-language synsets on taxonomy nodes, the terminology
//! canons, and per-language projections across lexical gaps.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::idea::Taxonomy;
use crate::model::{Synset, TaxonomyNode};
use crate::violation::{Canon, CanonViolation, Location};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub language: String,
    /// Keyed by node id.
    #[serde(default)]
    pub synsets: BTreeMap<String, Synset>,
}

impl Lexicon {
    pub fn new(language: impl Into<String>) -> Self {
        Lexicon {
            language: language.into(),
            synsets: BTreeMap::new(),
        }
    }

    pub fn preferred(&self, node_id: &str) -> Option<&str> {
        self.synsets.get(node_id).map(Synset::preferred)
    }

    /// Closest ancestor of `node_id` that carries a synset.
    pub fn nearest_labeled_ancestor(&self, node_id: &str, taxonomy: &Taxonomy) -> Option<String> {
        taxonomy
            .ancestors(node_id)
            .into_iter()
            .find(|a| self.synsets.contains_key(a))
    }

    /// Genus + differentia gloss for a node.
    pub fn template_gloss(&self, node: &TaxonomyNode, taxonomy: &Taxonomy) -> String {
        let genus = self
            .nearest_labeled_ancestor(&node.node_id, taxonomy)
            .and_then(|a| self.preferred(&a).map(str::to_string));
        match (&node.differentia, genus) {
            (Some(d), Some(g)) => format!("a {g} with {} = {}", d.characteristic, d.value),
            (Some(d), None) => format!("a class with {} = {}", d.characteristic, d.value),
            (None, _) => "the most general class of the taxonomy".to_string(),
        }
    }

    /// Recomputes template glosses, e.g. after the tree or a genus label
    /// changed. Nodes that disappeared lose their synsets; their ids are
    /// returned.
    pub fn refresh(&mut self, taxonomy: &Taxonomy) -> Vec<String> {
        let orphans: Vec<String> = self
            .synsets
            .keys()
            .filter(|n| !taxonomy.nodes.contains_key(*n))
            .cloned()
            .collect();
        for o in &orphans {
            log::warn!("dropping {} synset of vanished node {o}", self.language);
            self.synsets.remove(o);
        }
        for id in taxonomy.preorder() {
            let auto = self.synsets.get(&id).is_some_and(|s| s.auto_gloss);
            if auto {
                let gloss = self.template_gloss(&taxonomy.nodes[&id], taxonomy);
                self.synsets.get_mut(&id).expect("checked above").gloss = gloss;
            }
        }
        orphans
    }
}

/// Attaches a synset to a node. Returns whether the lexicon changed.
///
/// An empty gloss is filled from the genus + differentia template. A
/// differing synset already on the node is only replaced when `supersede`
/// is set.
pub fn assign_label(
    node_id: &str,
    language: &str,
    mut synset: Synset,
    taxonomy: &Taxonomy,
    lexicon: &mut Lexicon,
    supersede: bool,
) -> Result<bool> {
    if taxonomy.is_empty() {
        return Err(ForgeError::LabelBeforeTaxonomy);
    }
    let node = taxonomy.node(node_id)?;
    synset.check()?;
    if synset.language != language || lexicon.language != language {
        return Err(ForgeError::InvalidInput(format!(
            "synset language `{}` does not match lexicon `{}`",
            synset.language, lexicon.language
        )));
    }
    if synset.gloss.trim().is_empty() {
        synset.gloss = lexicon.template_gloss(node, taxonomy);
        synset.auto_gloss = true;
    }
    match lexicon.synsets.get(node_id) {
        Some(existing) if *existing == synset => return Ok(false),
        Some(_) if !supersede => {
            return Err(ForgeError::LabelConflict {
                node: node_id.to_string(),
                language: language.to_string(),
            })
        }
        _ => {}
    }
    lexicon.synsets.insert(node_id.to_string(), synset);
    Ok(true)
}

fn chain_text(node_id: &str, taxonomy: &Taxonomy, lexicon: &Lexicon) -> String {
    let mut ids = taxonomy.ancestors(node_id);
    ids.reverse();
    ids.push(node_id.to_string());
    ids.iter()
        .map(|id| lexicon.preferred(id).unwrap_or(id.as_str()).to_string())
        .collect::<Vec<_>>()
        .join(" > ")
}

/// A term is ambiguous when upper links do not tell apart two nodes with
/// the same preferred lemma.
pub fn check_context_enumeration(
    node_id: &str,
    language: &str,
    taxonomy: &Taxonomy,
    lexicon: &Lexicon,
) -> Vec<CanonViolation> {
    let Some(lemma) = lexicon.preferred(node_id) else {
        return Vec::new();
    };
    let genus = |id: &str| {
        lexicon
            .nearest_labeled_ancestor(id, taxonomy)
            .and_then(|a| lexicon.preferred(&a).map(str::to_string))
    };
    let own_genus = genus(node_id);
    let mut out = Vec::new();
    for (other, synset) in &lexicon.synsets {
        if other == node_id || synset.preferred() != lemma || !taxonomy.nodes.contains_key(other) {
            continue;
        }
        if taxonomy.is_ancestor(other, node_id) || taxonomy.is_ancestor(node_id, other) {
            continue;
        }
        if genus(other) != own_genus {
            continue;
        }
        out.push(CanonViolation::error(
            Canon::ContextEnumeration,
            Location::Synset {
                language: language.to_string(),
                node_id: node_id.to_string(),
            },
            format!(
                "`{lemma}` is not disambiguated by its context: {} | {}",
                chain_text(node_id, taxonomy, lexicon),
                chain_text(other, taxonomy, lexicon)
            ),
        ));
    }
    out
}

/// Flags deprecated preferred terms and lemmas shared between siblings.
pub fn check_reticence(
    language: &str,
    lexicon: &Lexicon,
    taxonomy: &Taxonomy,
    deprecated: &BTreeSet<String>,
) -> Vec<CanonViolation> {
    let mut out = Vec::new();
    for (node_id, synset) in &lexicon.synsets {
        if deprecated.contains(synset.preferred()) {
            out.push(CanonViolation::warning(
                Canon::Reticence,
                Location::Synset {
                    language: language.to_string(),
                    node_id: node_id.clone(),
                },
                format!(
                    "preferred term `{}` is not current among specialists",
                    synset.preferred()
                ),
            ));
        }
    }
    for node in taxonomy.nodes.values() {
        let kids: Vec<&String> = node
            .children
            .iter()
            .filter(|c| lexicon.synsets.contains_key(*c))
            .collect();
        for (i, a) in kids.iter().enumerate() {
            for b in &kids[i + 1..] {
                let la: BTreeSet<&String> = lexicon.synsets[*a].lemmas.iter().collect();
                for shared in lexicon.synsets[*b].lemmas.iter().filter(|l| la.contains(l)) {
                    out.push(CanonViolation::warning(
                        Canon::Reticence,
                        Location::Array(node.node_id.clone()),
                        format!("siblings {a} and {b} share the lemma `{shared}`"),
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectedNode {
    pub node_id: String,
    pub lemma: String,
    pub parent: Option<String>,
    pub children: Vec<String>,
}

/// One language's view of the taxonomy, with lexical gaps contracted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub language: String,
    pub root: String,
    pub nodes: BTreeMap<String, ProjectedNode>,
    /// Nodes with no synset in this language.
    pub gaps: Vec<String>,
}

impl Projection {
    pub fn ancestors(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get(id).and_then(|n| n.parent.clone());
        while let Some(p) = cur {
            cur = self.nodes.get(&p).and_then(|n| n.parent.clone());
            out.push(p);
        }
        out
    }
}

pub fn project_language(taxonomy: &Taxonomy, lexicon: &Lexicon, language: &str) -> Result<Projection> {
    if lexicon.language != language {
        return Err(ForgeError::UnknownLanguage(language.to_string()));
    }
    let root = taxonomy.root().ok_or(ForgeError::NoTaxonomy)?;
    if lexicon.preferred(&root.node_id).is_none() {
        return Err(ForgeError::UnlabeledRoot(language.to_string()));
    }
    let mut nodes: BTreeMap<String, ProjectedNode> = BTreeMap::new();
    let mut gaps = Vec::new();
    for id in taxonomy.preorder() {
        let Some(lemma) = lexicon.preferred(&id) else {
            gaps.push(id);
            continue;
        };
        let parent = lexicon.nearest_labeled_ancestor(&id, taxonomy);
        if let Some(p) = &parent {
            nodes
                .get_mut(p)
                .expect("pre-order visits ancestors first")
                .children
                .push(id.clone());
        }
        nodes.insert(
            id.clone(),
            ProjectedNode {
                node_id: id,
                lemma: lemma.to_string(),
                parent,
                children: Vec::new(),
            },
        );
    }
    gaps.sort();
    Ok(Projection {
        language: language.to_string(),
        root: root.node_id.clone(),
        nodes,
        gaps,
    })
}
