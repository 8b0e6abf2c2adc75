//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use forge_core::idea::{self, BuildOptions, SuccessionPlan, Taxonomy};
use forge_core::model::{
    BuildPurpose, Characteristic, ClassificationConcept, Property, Registry, Signature,
    SubstanceConcept, Synset, TaxonomyNode, ValueDomain,
};
use forge_core::notational::{check_synonym_homonym, ConceptStore};
use forge_core::percept::ApperceptionMass;
use forge_core::verbal::{check_context_enumeration, Lexicon};
use forge_core::violation::{Canon, CanonViolation, Location};

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/fish")
        .join(name)
}

struct Forge {
    dir: tempfile::TempDir,
}

impl Forge {
    fn new() -> Forge {
        Forge {
            dir: tempfile::tempdir().expect("tempdir"),
        }
    }

    fn store(&self) -> &Path {
        self.dir.path()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_forge"))
            .arg("--store")
            .arg(self.store())
            .args(args)
            .env("RUST_LOG", "error")
            .output()
            .expect("spawn forge")
    }

    fn ok(&self, args: &[&str]) -> Result<String, String> {
        let out = self.run(args);
        if out.status.success() {
            Ok(String::from_utf8_lossy(&out.stdout).into_owned())
        } else {
            Err(format!(
                "`forge {}` exited {:?}: {}",
                args.join(" "),
                out.status.code(),
                String::from_utf8_lossy(&out.stderr).trim()
            ))
        }
    }

    fn read(&self, file: &str) -> Value {
        let text = std::fs::read_to_string(self.store().join(file)).expect("store file");
        serde_json::from_str(&text).expect("store file is JSON")
    }

    fn write(&self, file: &str, v: &Value) {
        std::fs::write(self.store().join(file), serde_json::to_string_pretty(v).unwrap()).unwrap();
    }

    fn pipeline(&self, upto_labels: bool) -> Result<(), String> {
        let f = |n: &str| fixture(n).display().to_string();
        self.ok(&["ingest", "--encounters", &f("encounters.jsonl"), "--registry", &f("characteristics.json")])?;
        self.ok(&["build", "--plan", &f("plan.json")])?;
        if upto_labels {
            self.ok(&["lexicalize", "--lang", "en", "--file", &f("lexicon_en.csv"), "--deprecated", &f("deprecated_en.txt")])?;
            self.ok(&["lexicalize", "--lang", "it", "--file", &f("lexicon_it.csv")])?;
            self.ok(&["mint-ids"])?;
            self.ok(&["map", "--from-taxonomy"])?;
        }
        Ok(())
    }

    /// Audit through the binary: exit code and violation count per canon.
    fn audit(&self) -> (Option<i32>, BTreeMap<String, usize>) {
        let out = self.run(&["--json", "audit"]);
        let report: Value = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
        let mut counts = BTreeMap::new();
        for v in report["violations"].as_array().into_iter().flatten() {
            *counts.entry(v["canon"].as_str().unwrap_or("?").to_string()).or_default() += 1;
        }
        (out.status.code(), counts)
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------

fn hints() -> BTreeMap<String, String> {
    std::fs::read_to_string(fixture("encounters.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (
                v["media_ref"].as_str().unwrap().to_string(),
                v["entity_hint"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

fn name_for(entities: &BTreeSet<String>) -> String {
    let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    let named = [
        ("salmon", set(&["chinook salmon", "blueback salmon"])),
        ("trout", set(&["rainbow trout", "steelhead trout"])),
        ("fish", set(&["chinook salmon", "blueback salmon", "rainbow trout", "steelhead trout"])),
        (
            "aquatic vertebrate",
            set(&["chinook salmon", "blueback salmon", "rainbow trout", "steelhead trout", "placoderm", "agnathan"]),
        ),
    ];
    if entities.len() == 1 {
        return entities.iter().next().unwrap().clone();
    }
    named
        .iter()
        .find(|(_, s)| s == entities)
        .map_or_else(|| format!("{entities:?}"), |(n, _)| n.to_string())
}

fn reference_reconstruction() -> Outcome {
    let forge = Forge::new();
    let start = Instant::now();
    forge.pipeline(false)?;
    let (code, counts) = forge.audit();
    let elapsed = start.elapsed();

    let hints = hints();
    let sc: Value = forge.read("substance_concepts.json");
    let tax: Value = forge.read("taxonomy.json");
    let extension_of = |sc_ref: &str| -> BTreeSet<String> {
        let c = tax["superordinates"]
            .get(sc_ref)
            .or_else(|| sc["concepts"].get(sc_ref))
            .unwrap_or(&Value::Null);
        c["extension"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|m| hints[m.as_str().unwrap()].clone())
            .collect()
    };
    let nodes = tax["nodes"].as_object().ok_or("taxonomy has no nodes")?;
    let names: BTreeMap<&str, String> = nodes
        .iter()
        .map(|(id, n)| (id.as_str(), name_for(&extension_of(n["sc_ref"].as_str().unwrap()))))
        .collect();
    let got: BTreeSet<(String, String)> = nodes
        .iter()
        .filter_map(|(id, n)| {
            n["parent"]
                .as_str()
                .map(|p| (names[id.as_str()].clone(), names[p].clone()))
        })
        .collect();
    let expected: BTreeSet<(String, String)> = [
        ("fish", "aquatic vertebrate"),
        ("placoderm", "aquatic vertebrate"),
        ("agnathan", "aquatic vertebrate"),
        ("salmon", "fish"),
        ("trout", "fish"),
        ("chinook salmon", "salmon"),
        ("blueback salmon", "salmon"),
        ("rainbow trout", "trout"),
        ("steelhead trout", "trout"),
    ]
    .iter()
    .map(|(c, p)| (c.to_string(), p.to_string()))
    .collect();

    check(got == expected, || format!("edges differ: got {got:?}"))?;
    check(code == Some(0) && counts.is_empty(), || format!("audit exit {code:?}, {counts:?}"))?;
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{} nodes, {} edges, audit clean, {:.2?}", nodes.len(), got.len(), elapsed))
}

// ---------------------------------------------------------------------------
// Random taxonomies checked against brute-force reference implementations.

const MEDIA: usize = 16;
const VALUES: usize = 3;
const SCHEME: [&str; 6] = ["r0", "r1", "r2", "r3", "r4", "r5"];
const LEMMAS: [&str; 4] = ["a", "b", "c", "d"];

struct World {
    chars: usize,
    parent: Vec<Option<usize>>,
    ext: Vec<u32>,
    /// Per node, value index per characteristic.
    int: Vec<Vec<Option<usize>>>,
    rank: Vec<usize>,
    species: Vec<Vec<Option<usize>>>,
    plan: Vec<usize>,
    lemma: Vec<Option<usize>>,
    ids: Vec<(usize, u64)>,
}

fn random_world(rng: &mut ChaCha8Rng) -> World {
    let chars = rng.gen_range(1..=6);
    let n = rng.gen_range(1..=50);
    let mut parent = vec![None];
    let mut ext = vec![rng.gen::<u32>() & ((1 << MEDIA) - 1)];
    let mut int = vec![(0..chars).map(|_| rng.gen_bool(0.3).then(|| rng.gen_range(0..VALUES))).collect::<Vec<_>>()];
    let mut rank = vec![rng.gen_range(0..2)];
    for i in 1..n {
        // Favour deep-ish trees with some fan-out.
        let p = if rng.gen_bool(0.5) { i - 1 - rng.gen_range(0..i.min(3)) } else { rng.gen_range(0..i) };
        parent.push(Some(p));
        let e = if rng.gen_bool(0.85) {
            ext[p] & rng.gen::<u32>() | if rng.gen_bool(0.2) { ext[p] } else { 0 }
        } else {
            rng.gen::<u32>() & ((1 << MEDIA) - 1)
        };
        ext.push(e);
        let mut sig = int[p].clone();
        if rng.gen_bool(0.85) {
            let c = rng.gen_range(0..chars);
            if sig[c].is_none() || rng.gen_bool(0.2) {
                sig[c] = Some(rng.gen_range(0..VALUES));
            }
        } else {
            let c = rng.gen_range(0..chars);
            sig[c] = None;
        }
        int.push(sig);
        let r = match rng.gen_range(0..10) {
            0..=6 => rank[p] + 1,
            7 => rank[p] + 2,
            8 => rank[p],
            _ => rng.gen_range(0..SCHEME.len()),
        };
        rank.push(r.min(SCHEME.len() - 1));
    }
    let species = (0..rng.gen_range(1..=8))
        .map(|_| (0..chars).map(|_| rng.gen_bool(0.85).then(|| rng.gen_range(0..VALUES))).collect())
        .collect();
    let plan = (0..chars).filter(|_| rng.gen_bool(0.6)).collect();
    let lemma = (0..n).map(|_| rng.gen_bool(0.6).then(|| rng.gen_range(0..LEMMAS.len()))).collect();
    let mut ids: Vec<(usize, u64)> = (0..n).map(|i| (i, i as u64 + 1)).collect();
    for _ in 0..rng.gen_range(0..3) {
        match rng.gen_range(0..3) {
            0 => ids.push((rng.gen_range(0..n), n as u64 + 1 + rng.gen_range(0..3))),
            1 => {
                let k = rng.gen_range(0..ids.len());
                ids[k].1 = rng.gen_range(1..=n as u64);
            }
            _ => {
                if ids.len() > 1 {
                    ids.remove(rng.gen_range(0..ids.len()));
                }
            }
        }
    }
    World { chars, parent, ext, int, rank, species, plan, lemma, ids }
}

fn node_id(i: usize) -> String {
    format!("n{i}")
}

fn sig_of(v: &[Option<usize>]) -> Signature {
    v.iter()
        .enumerate()
        .filter_map(|(c, x)| x.map(|x| (format!("c{c}"), format!("v{x}"))))
        .collect()
}

fn sc(id: String, sig: Signature, ext: BTreeSet<String>) -> SubstanceConcept {
    SubstanceConcept {
        sc_id: id,
        visual_objects: BTreeSet::new(),
        intension: sig,
        extension: ext,
        provenance: Vec::new(),
        asserted: Signature::new(),
    }
}

struct Engine {
    taxonomy: Taxonomy,
    mass: ApperceptionMass,
    plan: SuccessionPlan,
    registry: Registry,
    options: BuildOptions,
    lexicon: Lexicon,
    concepts: ConceptStore,
}

fn to_engine(w: &World) -> Engine {
    let n = w.parent.len();
    let mut taxonomy = Taxonomy::default();
    for i in 0..n {
        let children = (0..n).filter(|&j| w.parent[j] == Some(i)).map(node_id).collect();
        taxonomy.nodes.insert(
            node_id(i),
            TaxonomyNode {
                node_id: node_id(i),
                sc_ref: format!("sup:{i}"),
                parent: w.parent[i].map(node_id),
                differentia: w.parent[i].map(|_| Property::new("c0", format!("x{i}"))),
                rank: w.rank[i] as u32,
                rank_label: SCHEME[w.rank[i]].to_string(),
                children,
                split: None,
                basic_category: false,
            },
        );
        let ext = (0..MEDIA).filter(|m| w.ext[i] & (1 << m) != 0).map(|m| format!("m{m}")).collect();
        taxonomy.superordinates.insert(format!("sup:{i}"), sc(format!("sup:{i}"), sig_of(&w.int[i]), ext));
    }
    let mut mass = ApperceptionMass::new();
    for (k, s) in w.species.iter().enumerate() {
        mass.concepts.insert(format!("sc-{k}"), sc(format!("sc-{k}"), sig_of(s), BTreeSet::from([format!("s{k}")])));
    }
    let registry = Registry::from_list(
        (0..w.chars)
            .map(|c| Characteristic {
                name: format!("c{c}"),
                value_domain: ValueDomain::Enumerated {
                    tokens: (0..VALUES).map(|v| format!("v{v}")).collect(),
                },
                ascertainable: true,
                permanent: true,
                relevance_tags: ["t".to_string()].into(),
            })
            .collect(),
    )
    .unwrap();
    let purpose = BuildPurpose {
        purpose_id: "p".into(),
        relevance_tag: "t".into(),
        succession: Vec::new(),
    };
    let plan = SuccessionPlan::decided(purpose, w.plan.iter().map(|c| format!("c{c}")).collect());
    let mut lexicon = Lexicon::new("xx");
    for (i, l) in w.lemma.iter().enumerate() {
        if let Some(l) = l {
            lexicon.synsets.insert(node_id(i), Synset::new("xx", vec![LEMMAS[*l].to_string()], "g").unwrap());
        }
    }
    let concepts = ConceptStore {
        next_id: 1000,
        concepts: w
            .ids
            .iter()
            .map(|(i, id)| ClassificationConcept {
                concept_id: *id,
                node_ref: node_id(*i),
                mapped_sc: None,
            })
            .collect(),
        retired: BTreeSet::new(),
    };
    Engine {
        taxonomy,
        mass,
        plan,
        registry,
        options: BuildOptions {
            rank_scheme: SCHEME.iter().map(|s| s.to_string()).collect(),
            node_metadata: BTreeMap::new(),
        },
        lexicon,
        concepts,
    }
}

/// (canon, location) -> number of distinct findings.
type Verdict = BTreeMap<(Canon, Location), usize>;

fn tally(vs: impl IntoIterator<Item = CanonViolation>, canons: &[Canon]) -> Verdict {
    let mut distinct: BTreeSet<(Canon, Location, String)> = BTreeSet::new();
    for v in vs {
        if canons.contains(&v.canon) {
            distinct.insert((v.canon, v.location, v.explanation));
        }
    }
    let mut out = Verdict::new();
    for (c, l, _) in distinct {
        *out.entry((c, l)).or_default() += 1;
    }
    out
}

const CHECKED: [Canon; 7] = [
    Canon::Differentiation,
    Canon::Exhaustiveness,
    Canon::DecreasingExtension,
    Canon::Modulation,
    Canon::ContextEnumeration,
    Canon::Synonym,
    Canon::Homonym,
];

fn engine_verdict(e: &Engine) -> Verdict {
    let mut vs = idea::audit(&e.taxonomy, &e.mass, &e.plan, &e.registry, &e.options);
    for id in e.lexicon.synsets.keys() {
        vs.extend(check_context_enumeration(id, "xx", &e.taxonomy, &e.lexicon));
    }
    vs.extend(check_synonym_homonym(&e.concepts));
    // Chain extension can report two distinct defects on one link; count links.
    let mut t = tally(vs, &CHECKED);
    for ((c, _), n) in t.iter_mut() {
        if *c != Canon::Modulation {
            *n = 1;
        }
    }
    t
}

fn oracle_verdict(w: &World) -> Verdict {
    let n = w.parent.len();
    let mut out = Verdict::new();
    let children = |i: usize| (0..n).filter(move |&j| w.parent[j] == Some(i));
    let subset = |a: &[Option<usize>], b: &[Option<usize>]| a.iter().zip(b).all(|(x, y)| x.is_none() || x == y);

    for &c in &w.plan {
        let values: BTreeSet<usize> = w.species.iter().filter_map(|s| s[c]).collect();
        if values.len() < 2 {
            out.insert((Canon::Differentiation, Location::Characteristic(format!("c{c}"))), 1);
        }
    }
    for i in 0..n {
        let kids: Vec<usize> = children(i).collect();
        if kids.len() == 1 {
            out.insert((Canon::Differentiation, Location::Array(node_id(i))), 1);
        }
        if !kids.is_empty() && kids.iter().fold(0, |acc, &k| acc | w.ext[k]) != w.ext[i] {
            out.insert((Canon::Exhaustiveness, Location::Array(node_id(i))), 1);
        }
    }
    for c in 1..n {
        let p = w.parent[c].unwrap();
        let link = Location::Chain(vec![node_id(p), node_id(c)]);
        let ext_ok = w.ext[c] & !w.ext[p] == 0;
        let int_ok = subset(&w.int[p], &w.int[c]);
        let same = w.ext[c] == w.ext[p] && w.int[c] == w.int[p];
        if !ext_ok || !int_ok || same {
            out.insert((Canon::DecreasingExtension, link.clone()), 1);
        }
        let missing = if w.rank[c] <= w.rank[p] { 1 } else { w.rank[c] - w.rank[p] - 1 };
        if missing > 0 {
            out.insert((Canon::Modulation, link), missing);
        }
    }

    let ancestors = |i: usize| {
        let mut out = Vec::new();
        let mut cur = w.parent[i];
        while let Some(p) = cur {
            out.push(p);
            cur = w.parent[p];
        }
        out
    };
    let genus = |i: usize| ancestors(i).into_iter().find_map(|a| w.lemma[a]);
    for x in 0..n {
        let Some(lx) = w.lemma[x] else { continue };
        let clash = (0..n).any(|y| {
            y != x
                && w.lemma[y] == Some(lx)
                && !ancestors(x).contains(&y)
                && !ancestors(y).contains(&x)
                && genus(x) == genus(y)
        });
        if clash {
            out.insert(
                (
                    Canon::ContextEnumeration,
                    Location::Synset {
                        language: "xx".into(),
                        node_id: node_id(x),
                    },
                ),
                1,
            );
        }
    }

    let mut per_node: BTreeMap<usize, BTreeSet<u64>> = BTreeMap::new();
    let mut per_id: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for &(i, id) in &w.ids {
        per_node.entry(i).or_default().insert(id);
        per_id.entry(id).or_default().push(i);
    }
    for (i, ids) in per_node {
        if ids.len() > 1 {
            out.insert((Canon::Synonym, Location::Node(node_id(i))), 1);
        }
    }
    for (id, nodes) in per_id {
        if nodes.len() > 1 {
            out.insert((Canon::Homonym, Location::Concept(id)), 1);
        }
    }
    out
}

fn canon_oracle_equivalence() -> Outcome {
    const CASES: usize = 1000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f15b);
    let mut flagged: BTreeMap<Canon, usize> = BTreeMap::new();
    for case in 0..CASES {
        let w = random_world(&mut rng);
        let got = engine_verdict(&to_engine(&w));
        let want = oracle_verdict(&w);
        if got != want {
            let extra: Vec<_> = got.iter().filter(|(k, v)| want.get(*k) != Some(v)).collect();
            let missing: Vec<_> = want.iter().filter(|(k, v)| got.get(*k) != Some(v)).collect();
            return Err(format!("case {case}: engine-only {extra:?}; oracle-only {missing:?}"));
        }
        for (c, _) in want.keys() {
            *flagged.entry(*c).or_default() += 1;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    check(flagged.len() == CHECKED.len(), || format!("some canons never fired: {flagged:?}"))?;
    Ok(format!(
        "{CASES} taxonomies agree on {} canons ({} findings), {:.2?}",
        CHECKED.len(),
        flagged.values().sum::<usize>(),
        elapsed
    ))
}

// ---------------------------------------------------------------------------

const PELAGIC: &str = "root/habitat_stratum=pelagic";
const SALMON: &str = "root/habitat_stratum=pelagic/tail_shape=concave";
const TROUT: &str = "root/habitat_stratum=pelagic/tail_shape=convex";
const BLUEBACK: &str = "root/habitat_stratum=pelagic/tail_shape=concave/parr_marks=absent";
const RAINBOW: &str = "root/habitat_stratum=pelagic/tail_shape=convex/parr_marks=round";
const STEELHEAD: &str = "root/habitat_stratum=pelagic/tail_shape=convex/parr_marks=absent";

/// Removes a node together with its concept and synsets.
fn drop_node(f: &Forge, node: &str, adopter: Option<&str>) {
    let mut tax = f.read("taxonomy.json");
    let removed = tax["nodes"].as_object_mut().unwrap().remove(node).unwrap();
    let parent = removed["parent"].as_str().unwrap().to_string();
    let nodes = tax["nodes"].as_object_mut().unwrap();
    let kids = nodes[&parent]["children"].as_array_mut().unwrap();
    kids.retain(|k| k != node);
    if let Some(new_parent) = adopter {
        let orphans: Vec<Value> = removed["children"].as_array().unwrap().clone();
        kids.extend(orphans.iter().cloned());
        for o in orphans {
            nodes[o.as_str().unwrap()]["parent"] = Value::from(new_parent);
        }
    }
    f.write("taxonomy.json", &tax);

    let mut concepts = f.read("concepts.json");
    concepts["concepts"].as_array_mut().unwrap().retain(|c| c["node_ref"] != node);
    f.write("concepts.json", &concepts);
    for lang in ["en", "it"] {
        let file = format!("lexicon.{lang}.json");
        if f.store().join(&file).exists() {
            let mut lex = f.read(&file);
            lex["synsets"].as_object_mut().unwrap().remove(node);
            f.write(&file, &lex);
        }
    }
}

fn mutation_sensitivity() -> Outcome {
    let baseline = Forge::new();
    baseline.pipeline(true)?;
    let (code, counts) = baseline.audit();
    check(code == Some(0), || format!("baseline audit exit {code:?}: {counts:?}"))?;

    let mut lines = Vec::new();
    type Mutation = Box<dyn Fn(&Forge)>;
    let cases: [(&str, &str, Mutation); 3] = [
        ("delete trout", "modulation", Box::new(|f| drop_node(f, TROUT, Some(PELAGIC)))),
        ("delete blueback", "exhaustiveness", Box::new(|f| drop_node(f, BLUEBACK, None))),
        (
            "duplicate concept id",
            "homonym",
            Box::new(|f| {
                let mut c = f.read("concepts.json");
                let list = c["concepts"].as_array_mut().unwrap();
                let id = list.iter().find(|x| x["node_ref"] == STEELHEAD).unwrap()["concept_id"].clone();
                list.iter_mut().find(|x| x["node_ref"] == RAINBOW).unwrap()["concept_id"] = id;
                f.write("concepts.json", &c);
            }),
        ),
    ];
    for (what, canon, mutate) in cases {
        let f = Forge::new();
        copy_dir(baseline.store(), f.store());
        mutate(&f);
        let (code, counts) = f.audit();
        let n = counts.get(canon).copied().unwrap_or(0);
        check(code == Some(1) && n > 0, || format!("{what}: exit {code:?}, {counts:?}"))?;
        lines.push(format!("{what} -> {n} {canon}"));
    }
    Ok(lines.join("; "))
}

fn copy_dir(from: &Path, to: &Path) {
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        std::fs::copy(e.path(), to.join(e.file_name())).unwrap();
    }
}

fn projection_ancestry() -> Outcome {
    let f = Forge::new();
    f.pipeline(true)?;
    let out = f.ok(&["--json", "project", "--lang", "it"])?;
    let p: Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let gaps: Vec<&str> = p["gaps"].as_array().unwrap().iter().map(|g| g.as_str().unwrap()).collect();
    check(gaps == [TROUT], || format!("gaps {gaps:?}"))?;

    let tax = f.read("taxonomy.json");
    let parent_of = |id: &str| tax["nodes"][id]["parent"].as_str().map(str::to_string);
    let closure = |id: &str, parent: &dyn Fn(&str) -> Option<String>| {
        let mut out = BTreeSet::new();
        let mut cur = parent(id);
        while let Some(p) = cur {
            cur = parent(&p);
            out.insert(p);
        }
        out
    };
    let projected: BTreeMap<String, Value> = p["nodes"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let proj_parent = |id: &str| projected.get(id).and_then(|n| n["parent"].as_str().map(str::to_string));
    for a in projected.keys() {
        let full: BTreeSet<String> = closure(a, &parent_of).into_iter().filter(|x| projected.contains_key(x)).collect();
        let proj = closure(a, &proj_parent);
        check(full == proj, || format!("ancestry of {a} differs: {full:?} vs {proj:?}"))?;
    }

    let notational: BTreeSet<String> = f.read("concepts.json")["concepts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["node_ref"].as_str().unwrap().to_string())
        .collect();
    let shown: BTreeSet<String> = projected.keys().cloned().collect();
    check(shown.is_subset(&notational) && shown.len() < notational.len(), || {
        format!("projection {shown:?} is not a strict subset of {notational:?}")
    })?;
    let rainbow_parent = proj_parent(RAINBOW);
    check(rainbow_parent.as_deref() == Some(PELAGIC), || format!("rainbow trout under {rainbow_parent:?}"))?;
    Ok(format!(
        "it: {} of {} nodes, gap at trout contracted, closure preserved",
        shown.len(),
        notational.len()
    ))
}

fn determinism_and_replay() -> Outcome {
    let a = Forge::new();
    let b = Forge::new();
    a.pipeline(true)?;
    b.pipeline(true)?;
    let ea = a.ok(&["export"])?;
    let eb = b.ok(&["export"])?;
    check(ea == eb, || "two runs exported different bytes".into())?;

    let r = Forge::new();
    let decisions = a.store().join("decisions.jsonl").display().to_string();
    let encounters = fixture("encounters.jsonl").display().to_string();
    r.ok(&["replay", "--decisions", &decisions, "--encounters", &encounters])?;
    let er = r.ok(&["export"])?;
    check(er == ea, || "replayed store exports differently".into())?;
    Ok(format!("{} bytes identical across two runs and a replay", ea.len()))
}

fn hospitality() -> Outcome {
    let f = Forge::new();
    f.pipeline(true)?;
    let pairs = |f: &Forge| -> BTreeSet<(String, u64)> {
        f.read("concepts.json")["concepts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| (c["node_ref"].as_str().unwrap().to_string(), c["concept_id"].as_u64().unwrap()))
            .collect()
    };
    let before = pairs(&f);
    let max = before.iter().map(|p| p.1).max().unwrap_or(0);
    f.ok(&["insert", "--parent", SALMON, "--differentia", "parr_marks=round"])?;
    let after = pairs(&f);
    let added: Vec<_> = after.difference(&before).collect();
    check(before.is_subset(&after), || "existing ids changed".into())?;
    check(added.len() == 1 && added[0].1 == max + 1, || format!("added {added:?}, previous max {max}"))?;
    let (code, counts) = f.audit();
    check(code == Some(0), || format!("audit after insert: {counts:?}"))?;
    Ok(format!("new class got id {}; {} prior pairs unchanged", max + 1, before.len()))
}

fn main() -> ExitCode {
    type Criterion = fn() -> Outcome;
    let criteria: [(&str, Criterion); 6] = [
        ("reference taxonomy reconstruction", reference_reconstruction),
        ("canon checks match brute-force oracles", canon_oracle_equivalence),
        ("mutations are detected", mutation_sensitivity),
        ("language projection keeps ancestry", projection_ancestry),
        ("deterministic export and replay", determinism_and_replay),
        ("insertion keeps existing ids", hospitality),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
