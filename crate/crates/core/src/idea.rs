//! Idea plane: characteristic gating and succession, recursive
//! construction of the perceptual subsumption hierarchy, and the canon
//! checks over characteristics, arrays and chains.
//!
//! Nothing in this module looks at synsets or lemmas; the hierarchy is
//! settled before any word is attached to it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ForgeError, Result};
use crate::model::{
    BuildPurpose, Characteristic, Decision, DecisionKind, DecisionRecord, NodeMetadata, Property,
    Registry, Resolution, SubstanceConcept, TaxonomyNode,
};
use crate::percept::{superordinate_signature, ApperceptionMass};
use crate::violation::{normalize, tally, Canon, CanonTally, CanonViolation, Location, SuggestedFix};

pub const ROOT_ID: &str = "root";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessionPlan {
    pub purpose: BuildPurpose,
    pub characteristics: Vec<String>,
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
    /// False when the order came from the default heuristic rather than a
    /// curator.
    pub decided: bool,
}

impl SuccessionPlan {
    pub fn decided(purpose: BuildPurpose, characteristics: Vec<String>) -> Self {
        SuccessionPlan {
            purpose,
            characteristics,
            overrides: BTreeMap::new(),
            decided: true,
        }
    }

    /// Every characteristic the plan can split on.
    pub fn used_characteristics(&self) -> BTreeSet<&str> {
        self.characteristics
            .iter()
            .chain(self.overrides.values())
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    #[serde(default)]
    pub rank_scheme: Vec<String>,
    #[serde(default)]
    pub node_metadata: BTreeMap<String, NodeMetadata>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    #[serde(default)]
    pub nodes: BTreeMap<String, TaxonomyNode>,
    /// Synthesized concepts of nodes that cover more than one substance
    /// concept, keyed by sc id.
    #[serde(default)]
    pub superordinates: BTreeMap<String, SubstanceConcept>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Taxonomy {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> Vec<&TaxonomyNode> {
        self.nodes.values().filter(|n| n.parent.is_none()).collect()
    }

    pub fn root(&self) -> Option<&TaxonomyNode> {
        let roots = self.roots();
        if roots.len() == 1 {
            Some(roots[0])
        } else {
            None
        }
    }

    pub fn node(&self, id: &str) -> Result<&TaxonomyNode> {
        self.nodes
            .get(id)
            .ok_or_else(|| ForgeError::UnknownNode(id.to_string()))
    }

    pub fn concept<'a>(
        &'a self,
        node: &TaxonomyNode,
        mass: &'a ApperceptionMass,
    ) -> Option<&'a SubstanceConcept> {
        self.superordinates
            .get(&node.sc_ref)
            .or_else(|| mass.concepts.get(&node.sc_ref))
    }

    /// Children that actually exist, in listed order.
    pub fn children_of<'a>(&'a self, node: &'a TaxonomyNode) -> impl Iterator<Item = &'a TaxonomyNode> {
        node.children.iter().filter_map(|c| self.nodes.get(c))
    }

    /// Parent chain from `id` upwards, excluding `id`. Stops on cycles.
    pub fn ancestors(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::from([id.to_string()]);
        let mut cur = self.nodes.get(id).and_then(|n| n.parent.clone());
        while let Some(p) = cur {
            if !seen.insert(p.clone()) {
                break;
            }
            cur = self.nodes.get(&p).and_then(|n| n.parent.clone());
            out.push(p);
        }
        out
    }

    pub fn is_ancestor(&self, ancestor: &str, of: &str) -> bool {
        self.ancestors(of).iter().any(|a| a == ancestor)
    }

    /// Every root-to-leaf path following child links.
    pub fn chains(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for root in self.roots() {
            let mut path = vec![root.node_id.clone()];
            self.walk_chains(root, &mut path, &mut out);
        }
        out
    }

    fn walk_chains(&self, node: &TaxonomyNode, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        let mut any = false;
        for child in self.children_of(node) {
            if path.contains(&child.node_id) {
                continue;
            }
            any = true;
            path.push(child.node_id.clone());
            self.walk_chains(child, path, out);
            path.pop();
        }
        if !any {
            out.push(path.clone());
        }
    }

    /// Node ids in depth-first pre-order from the root(s).
    pub fn preorder(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&TaxonomyNode> = self.roots().into_iter().rev().collect();
        while let Some(n) = stack.pop() {
            if !seen.insert(n.node_id.clone()) {
                continue;
            }
            out.push(n.node_id.clone());
            let kids: Vec<&TaxonomyNode> = self.children_of(n).collect();
            stack.extend(kids.into_iter().rev());
        }
        out
    }

    pub fn max_rank(&self) -> u32 {
        self.nodes.values().map(|n| n.rank).max().unwrap_or(0)
    }
}

/// Groups concepts by their value for `characteristic`; concepts without a
/// determinate value are left out.
pub fn partition<'a>(
    characteristic: &str,
    universe: &[&'a SubstanceConcept],
) -> BTreeMap<String, Vec<&'a SubstanceConcept>> {
    let mut groups: BTreeMap<String, Vec<&SubstanceConcept>> = BTreeMap::new();
    for sc in universe {
        if let Some(v) = sc.value_of(characteristic) {
            groups.entry(v.to_string()).or_default().push(sc);
        }
    }
    groups
}

fn partition_entropy(groups: &BTreeMap<String, Vec<&SubstanceConcept>>) -> f64 {
    let total: usize = groups.values().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    groups
        .values()
        .map(|g| {
            let p = g.len() as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// Checks a characteristic against the four characteristic canons.
pub fn gate_characteristic(
    c: &Characteristic,
    purpose: &BuildPurpose,
    universe: &[&SubstanceConcept],
) -> std::result::Result<(), Vec<CanonViolation>> {
    let loc = || Location::Characteristic(c.name.clone());
    let mut out = Vec::new();
    let groups = partition(&c.name, universe);
    if groups.len() < 2 {
        out.push(CanonViolation::error(
            Canon::Differentiation,
            loc(),
            format!(
                "`{}` yields {} class(es) over {} concept(s); at least two are needed",
                c.name,
                groups.len(),
                universe.len()
            ),
        ));
    }
    if !c.relevance_tags.contains(&purpose.relevance_tag) {
        out.push(CanonViolation::error(
            Canon::Relevance,
            loc(),
            format!(
                "`{}` is not tagged relevant to `{}`",
                c.name, purpose.relevance_tag
            ),
        ));
    }
    if !c.ascertainable {
        out.push(CanonViolation::error(
            Canon::Ascertainability,
            loc(),
            format!("`{}` cannot be ascertained perceptually", c.name),
        ));
    }
    if !c.permanent {
        out.push(CanonViolation::error(
            Canon::Permanence,
            loc(),
            format!("`{}` does not stay unchanged while the purpose holds", c.name),
        ));
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Orders candidate characteristics into a succession.
///
/// The latest set-succession decision for the purpose wins. Without one,
/// candidates are ranked by number of classes produced, then by how evenly
/// they split the universe, then by name; that default carries a
/// relevant-succession warning because a curator has not confirmed it.
pub fn order_characteristics(
    cands: &[&Characteristic],
    purpose: &BuildPurpose,
    universe: &[&SubstanceConcept],
    decisions: &[DecisionRecord],
) -> Result<(SuccessionPlan, Option<CanonViolation>)> {
    let known: BTreeSet<&str> = cands.iter().map(|c| c.name.as_str()).collect();
    let decided = decisions.iter().rev().find_map(|d| match &d.decision {
        Decision::SetSuccession {
            purpose_id,
            succession,
        } if *purpose_id == purpose.purpose_id => Some(succession),
        _ => None,
    });
    if let Some(succession) = decided {
        if let Some(bad) = succession.iter().find(|s| !known.contains(s.as_str())) {
            return Err(ForgeError::UnknownCharacteristic(bad.clone()));
        }
        return Ok((
            SuccessionPlan::decided(purpose.clone(), succession.clone()),
            None,
        ));
    }

    let mut scored: Vec<(usize, f64, &str)> = cands
        .iter()
        .map(|c| {
            let groups = partition(&c.name, universe);
            (groups.len(), partition_entropy(&groups), c.name.as_str())
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| b.1.total_cmp(&a.1))
            .then_with(|| a.2.cmp(b.2))
    });
    let characteristics: Vec<String> = scored.iter().map(|s| s.2.to_string()).collect();
    let warning = CanonViolation::warning(
        Canon::RelevantSuccession,
        Location::Purpose(purpose.purpose_id.clone()),
        format!(
            "succession {:?} is the default order; confirm it for purpose `{}`",
            characteristics, purpose.purpose_id
        ),
    )
    .with_fix(SuggestedFix {
        label: "confirm this succession".into(),
        kind: DecisionKind::SetSuccession,
        payload: json!({ "purpose_id": purpose.purpose_id, "succession": characteristics }),
    });
    Ok((
        SuccessionPlan {
            purpose: purpose.clone(),
            characteristics,
            overrides: BTreeMap::new(),
            decided: false,
        },
        Some(warning),
    ))
}

pub fn child_id(parent: &str, differentia: &Property) -> String {
    format!("{parent}/{differentia}")
}

pub fn superordinate_id(node_id: &str) -> String {
    format!("sup:{node_id}")
}

pub fn rank_label(options: &BuildOptions, node_id: &str, rank: u32) -> String {
    options
        .node_metadata
        .get(node_id)
        .and_then(|m| m.rank_label.clone())
        .or_else(|| options.rank_scheme.get(rank as usize).cloned())
        .unwrap_or_else(|| format!("rank-{rank}"))
}

/// Rank names used for modulation; depth-derived when none were supplied.
pub fn effective_rank_scheme(options: &BuildOptions, taxonomy: &Taxonomy) -> Vec<String> {
    if options.rank_scheme.is_empty() {
        (0..=taxonomy.max_rank()).map(|r| format!("rank-{r}")).collect()
    } else {
        options.rank_scheme.clone()
    }
}

type Groups<'s> = BTreeMap<String, Vec<&'s SubstanceConcept>>;

struct Builder<'a> {
    plan: &'a SuccessionPlan,
    options: &'a BuildOptions,
    out: Taxonomy,
}

impl Builder<'_> {
    fn choose_split<'s>(
        &mut self,
        node_id: &str,
        group: &[&'s SubstanceConcept],
        cursor: usize,
    ) -> Option<(String, usize, Groups<'s>)> {
        if let Some(c) = self.plan.overrides.get(node_id) {
            let groups = partition(c, group);
            if groups.len() >= 2 {
                let next = self
                    .plan
                    .characteristics
                    .iter()
                    .position(|x| x == c)
                    .map_or(cursor, |i| i + 1);
                return Some((c.clone(), next, groups));
            }
            self.warn(format!(
                "override `{c}` does not differentiate {node_id}; falling back to the succession"
            ));
        }
        for (i, c) in self.plan.characteristics.iter().enumerate().skip(cursor) {
            let groups = partition(c, group);
            if groups.len() >= 2 {
                return Some((c.clone(), i + 1, groups));
            }
            self.warn(format!("`{c}` does not differentiate {node_id}; skipped"));
        }
        None
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.out.warnings.push(msg);
    }

    fn grow(
        &mut self,
        node_id: String,
        parent: Option<String>,
        differentia: Option<Property>,
        rank: u32,
        group: Vec<&SubstanceConcept>,
        cursor: usize,
    ) -> Result<()> {
        let meta = self.options.node_metadata.get(&node_id);
        let mut node = TaxonomyNode {
            node_id: node_id.clone(),
            sc_ref: String::new(),
            parent,
            differentia,
            rank,
            rank_label: rank_label(self.options, &node_id, rank),
            children: Vec::new(),
            split: None,
            basic_category: meta.is_some_and(|m| m.basic_category),
        };

        if group.len() == 1 {
            node.sc_ref = group[0].sc_id.clone();
            self.out.nodes.insert(node_id, node);
            return Ok(());
        }

        let sup = superordinate_signature(superordinate_id(&node_id), &group)?;
        node.sc_ref = sup.sc_id.clone();
        self.out.superordinates.insert(sup.sc_id.clone(), sup);

        let Some((characteristic, next, groups)) = self.choose_split(&node_id, &group, cursor)
        else {
            self.warn(format!(
                "characteristics exhausted at {node_id} with {} undifferentiated concepts",
                group.len()
            ));
            self.out.nodes.insert(node_id, node);
            return Ok(());
        };

        let placed: usize = groups.values().map(Vec::len).sum();
        if placed < group.len() {
            self.warn(format!(
                "{} concept(s) at {node_id} have no value for `{characteristic}` and stay unassigned",
                group.len() - placed
            ));
        }
        node.split = Some(characteristic.clone());
        let mut pending = Vec::new();
        for (value, members) in groups {
            let differentia = Property::new(&characteristic, value);
            let id = child_id(&node_id, &differentia);
            node.children.push(id.clone());
            pending.push((id, differentia, members));
        }
        self.out.nodes.insert(node_id.clone(), node);
        for (id, differentia, members) in pending {
            self.grow(id, Some(node_id.clone()), Some(differentia), rank + 1, members, next)?;
        }
        Ok(())
    }
}

/// Recursively partitions the apperception mass along the succession.
pub fn build_hierarchy(
    mass: &ApperceptionMass,
    plan: &SuccessionPlan,
    options: &BuildOptions,
) -> Result<Taxonomy> {
    if mass.concepts.is_empty() {
        return Err(ForgeError::EmptyMass);
    }
    if plan.characteristics.is_empty() && plan.overrides.is_empty() {
        return Err(ForgeError::EmptyPlan);
    }
    let universe: Vec<&SubstanceConcept> = mass.concepts.values().collect();
    let mut b = Builder {
        plan,
        options,
        out: Taxonomy::default(),
    };
    b.grow(ROOT_ID.to_string(), None, None, 0, universe, 0)?;
    Ok(b.out)
}

/// Every item in a class must land in one of its subclasses.
pub fn check_exhaustiveness(
    node: &TaxonomyNode,
    taxonomy: &Taxonomy,
    mass: &ApperceptionMass,
) -> Vec<CanonViolation> {
    if node.children.is_empty() {
        return Vec::new();
    }
    let empty = BTreeSet::new();
    let extension = taxonomy
        .concept(node, mass)
        .map_or(&empty, |sc| &sc.extension);
    let covered: BTreeSet<&String> = taxonomy
        .children_of(node)
        .filter_map(|c| taxonomy.concept(c, mass))
        .flat_map(|sc| sc.extension.iter())
        .collect();
    let unassigned: Vec<&String> = extension.iter().filter(|m| !covered.contains(m)).collect();
    let foreign: Vec<&String> = covered
        .iter()
        .copied()
        .filter(|m| !extension.contains(*m))
        .collect();
    if unassigned.is_empty() && foreign.is_empty() {
        return Vec::new();
    }

    let mut explanation = String::new();
    if !unassigned.is_empty() {
        explanation.push_str(&format!(
            "media not covered by any subclass: {}",
            join(&unassigned)
        ));
    }
    if !foreign.is_empty() {
        if !explanation.is_empty() {
            explanation.push_str("; ");
        }
        explanation.push_str(&format!(
            "subclasses cover media outside the class: {}",
            join(&foreign)
        ));
    }
    let mut v = CanonViolation::error(
        Canon::Exhaustiveness,
        Location::Array(node.node_id.clone()),
        explanation,
    );

    // Suggest placements for the concepts owning the uncovered media.
    let owners: BTreeSet<&str> = mass
        .concepts
        .values()
        .filter(|sc| unassigned.iter().any(|m| sc.extension.contains(*m)))
        .map(|sc| sc.sc_id.as_str())
        .collect();
    if let Some(split) = &node.split {
        for sc_id in &owners {
            for child in taxonomy.children_of(node) {
                if let Some(d) = &child.differentia {
                    v = v.with_fix(SuggestedFix {
                        label: format!("assign {sc_id} to {}", child.node_id),
                        kind: DecisionKind::ResolveViolation,
                        payload: resolution_payload(
                            Canon::Exhaustiveness,
                            &Location::Array(node.node_id.clone()),
                            Resolution::AssertProperty {
                                sc_id: sc_id.to_string(),
                                characteristic: split.clone(),
                                value: d.value.clone(),
                            },
                        ),
                    });
                }
            }
            v = v.with_fix(SuggestedFix {
                label: format!("form a new class for {sc_id}"),
                kind: DecisionKind::ResolveViolation,
                payload: resolution_payload(
                    Canon::Exhaustiveness,
                    &Location::Array(node.node_id.clone()),
                    Resolution::AssertProperty {
                        sc_id: sc_id.to_string(),
                        characteristic: split.clone(),
                        value: "<new value>".into(),
                    },
                ),
            });
        }
    }
    vec![v]
}

fn join(items: &[&String]) -> String {
    items.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
}

pub(crate) fn resolution_payload(canon: Canon, location: &Location, resolution: Resolution) -> serde_json::Value {
    json!({
        "canon": canon,
        "location": location,
        "resolution": resolution,
    })
}

/// Going down a chain, extension must shrink and intension grow, with at
/// least one of the two changing strictly at every link.
pub fn check_chain_extension(
    chain: &[String],
    taxonomy: &Taxonomy,
    mass: &ApperceptionMass,
) -> Vec<CanonViolation> {
    let mut out = Vec::new();
    for pair in chain.windows(2) {
        let (Some(parent), Some(child)) = (taxonomy.nodes.get(&pair[0]), taxonomy.nodes.get(&pair[1]))
        else {
            continue;
        };
        let (Some(p), Some(c)) = (taxonomy.concept(parent, mass), taxonomy.concept(child, mass))
        else {
            continue;
        };
        let loc = Location::Chain(pair.to_vec());
        let ext_sub = c.extension.is_subset(&p.extension);
        let int_sup = c.intension.is_superset(&p.intension);
        if !ext_sub {
            let extra: Vec<&String> = c.extension.difference(&p.extension).collect();
            out.push(CanonViolation::error(
                Canon::DecreasingExtension,
                loc.clone(),
                format!(
                    "{} covers media its parent does not: {}",
                    child.node_id,
                    join(&extra)
                ),
            ));
        }
        if !int_sup {
            let lost: Vec<String> = p
                .intension
                .properties()
                .filter(|q| !c.intension.contains(q))
                .map(|q| q.to_string())
                .collect();
            out.push(CanonViolation::error(
                Canon::DecreasingExtension,
                loc.clone(),
                format!(
                    "{} drops properties of its parent: {}",
                    child.node_id,
                    lost.join(", ")
                ),
            ));
        }
        if ext_sub && int_sup && c.extension.len() == p.extension.len() && c.intension.len() == p.intension.len() {
            out.push(CanonViolation::error(
                Canon::DecreasingExtension,
                loc,
                format!(
                    "{} has the same extension and intension as {}",
                    child.node_id, parent.node_id
                ),
            ));
        }
    }
    out
}

/// A chain must contain a class of every rank between its ends.
pub fn check_modulation(
    chain: &[String],
    taxonomy: &Taxonomy,
    rank_scheme: &[String],
) -> Result<Vec<CanonViolation>> {
    let position = |id: &str| -> Result<Option<usize>> {
        let Some(node) = taxonomy.nodes.get(id) else {
            return Ok(None);
        };
        rank_scheme
            .iter()
            .position(|r| *r == node.rank_label)
            .map(Some)
            .ok_or_else(|| ForgeError::RankOutsideScheme {
                node: id.to_string(),
                label: node.rank_label.clone(),
            })
    };
    let mut out = Vec::new();
    for pair in chain.windows(2) {
        let (Some(upper), Some(lower)) = (position(&pair[0])?, position(&pair[1])?) else {
            continue;
        };
        let loc = Location::Chain(pair.to_vec());
        if lower <= upper {
            out.push(CanonViolation::error(
                Canon::Modulation,
                loc,
                format!(
                    "rank `{}` of {} does not descend from `{}` of {}",
                    rank_scheme[lower], pair[1], rank_scheme[upper], pair[0]
                ),
            ));
            continue;
        }
        for missing in &rank_scheme[upper + 1..lower] {
            out.push(
                CanonViolation::error(
                    Canon::Modulation,
                    loc.clone(),
                    format!("missing link of rank `{missing}` between {} and {}", pair[0], pair[1]),
                )
                .with_fix(SuggestedFix {
                    label: format!("insert a `{missing}` class between {} and {}", pair[0], pair[1]),
                    kind: DecisionKind::InsertConcept,
                    payload: json!({
                        "spec": {
                            "parent": pair[0],
                            "differentia": { "characteristic": "<characteristic>", "value": "<value>" },
                            "adopt": [pair[1]],
                        }
                    }),
                }),
            );
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub violations: Vec<CanonViolation>,
    pub summary: BTreeMap<Canon, CanonTally>,
    /// Store revision the audit ran against.
    pub audited_at: u64,
}

impl AuditReport {
    pub fn new(violations: Vec<CanonViolation>, audited_at: u64) -> Self {
        let violations = normalize(violations);
        let summary = tally(&violations);
        AuditReport {
            violations,
            summary,
            audited_at,
        }
    }

    pub fn errors(&self) -> usize {
        self.violations.iter().filter(|v| v.is_error()).count()
    }

    pub fn warnings(&self) -> usize {
        self.violations.len() - self.errors()
    }

    pub fn count(&self, canon: Canon) -> usize {
        self.summary
            .get(&canon)
            .map_or(0, |t| t.errors + t.warnings)
    }
}

fn characteristic_fixes(
    v: CanonViolation,
    name: &str,
    plan: &SuccessionPlan,
    registry: &Registry,
    universe: &[&SubstanceConcept],
) -> CanonViolation {
    let loc = Location::Characteristic(name.to_string());
    let canon = v.canon;
    let mut v = v.with_fix(SuggestedFix {
        label: format!("drop `{name}` from the succession"),
        kind: DecisionKind::ResolveViolation,
        payload: resolution_payload(
            canon,
            &loc,
            Resolution::DropCharacteristic {
                characteristic: name.to_string(),
            },
        ),
    });
    let used = plan.used_characteristics();
    for alt in registry.iter() {
        if used.contains(alt.name.as_str()) {
            continue;
        }
        if gate_characteristic(alt, &plan.purpose, universe).is_ok() {
            v = v.with_fix(SuggestedFix {
                label: format!("use `{}` instead of `{name}`", alt.name),
                kind: DecisionKind::ResolveViolation,
                payload: resolution_payload(
                    canon,
                    &loc,
                    Resolution::ReplaceCharacteristic {
                        from: name.to_string(),
                        to: alt.name.clone(),
                    },
                ),
            });
        }
    }
    v
}

/// Runs every idea-plane canon over the taxonomy.
pub fn audit(
    taxonomy: &Taxonomy,
    mass: &ApperceptionMass,
    plan: &SuccessionPlan,
    registry: &Registry,
    options: &BuildOptions,
) -> Vec<CanonViolation> {
    let mut out = Vec::new();
    let universe: Vec<&SubstanceConcept> = mass.concepts.values().collect();

    for name in plan.used_characteristics() {
        let Some(c) = registry.get(name) else {
            out.push(CanonViolation::error(
                Canon::Integrity,
                Location::Purpose(plan.purpose.purpose_id.clone()),
                format!("succession names unregistered characteristic `{name}`"),
            ));
            continue;
        };
        if let Err(vs) = gate_characteristic(c, &plan.purpose, &universe) {
            out.extend(
                vs.into_iter()
                    .map(|v| characteristic_fixes(v, name, plan, registry, &universe)),
            );
        }
    }

    if !plan.decided {
        out.push(
            CanonViolation::warning(
                Canon::RelevantSuccession,
                Location::Purpose(plan.purpose.purpose_id.clone()),
                format!(
                    "succession {:?} was not confirmed by a curator",
                    plan.characteristics
                ),
            )
            .with_fix(SuggestedFix {
                label: "confirm this succession".into(),
                kind: DecisionKind::SetSuccession,
                payload: json!({
                    "purpose_id": plan.purpose.purpose_id,
                    "succession": plan.characteristics,
                }),
            }),
        );
    }

    for node in taxonomy.nodes.values() {
        if node.children.len() == 1 {
            out.push(CanonViolation::error(
                Canon::Differentiation,
                Location::Array(node.node_id.clone()),
                format!("{} has a single subclass", node.node_id),
            ));
        }
        out.extend(check_exhaustiveness(node, taxonomy, mass));
    }

    let scheme = effective_rank_scheme(options, taxonomy);
    for chain in taxonomy.chains() {
        out.extend(check_chain_extension(&chain, taxonomy, mass));
        match check_modulation(&chain, taxonomy, &scheme) {
            Ok(vs) => out.extend(vs),
            Err(ForgeError::RankOutsideScheme { node, label }) => out.push(CanonViolation::error(
                Canon::Modulation,
                Location::Node(node),
                format!("rank `{label}` is not in the rank scheme {scheme:?}"),
            )),
            Err(e) => out.push(CanonViolation::error(
                Canon::Modulation,
                Location::Chain(chain.clone()),
                e.to_string(),
            )),
        }
    }
    normalize(out)
}
