//! On-disk store directory and the single-document export.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::engine::{Curation, Store};
use crate::error::{ForgeError, Result};
use crate::idea::Taxonomy;
use crate::model::{
    BuildPurpose, BuildSpec, Characteristic, DecisionRecord, EncounterRecord, NodeMetadata, Registry,
};
use crate::notational::ConceptStore;
use crate::percept::ApperceptionMass;
use crate::verbal::Lexicon;

pub const ENCOUNTERS: &str = "encounters.jsonl";
pub const CHARACTERISTICS: &str = "characteristics.json";
pub const SUBSTANCE_CONCEPTS: &str = "substance_concepts.json";
pub const TAXONOMY: &str = "taxonomy.json";
pub const CONCEPTS: &str = "concepts.json";
pub const DECISIONS: &str = "decisions.jsonl";
pub const CURATION: &str = "curation.json";
pub const LOCK: &str = "forge.lock";

const EXPORT_FORMAT: u32 = 1;

fn lexicon_file(lang: &str) -> String {
    format!("lexicon.{lang}.json")
}

fn deprecated_file(lang: &str) -> String {
    format!("deprecated.{lang}.txt")
}

fn read_text(path: &Path) -> Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(ForgeError::io(path, e)),
    }
}

fn read_json<T: DeserializeOwned + Default>(path: &Path) -> Result<T> {
    match read_text(path)? {
        None => Ok(T::default()),
        Some(s) => serde_json::from_str(&s).map_err(|source| ForgeError::Parse {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Reads a JSON-lines file; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let Some(text) = read_text(path)? else {
        return Err(ForgeError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    };
    parse_jsonl(&text, path)
}

pub fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| ForgeError::Parse {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

pub fn read_encounters(path: &Path) -> Result<Vec<EncounterRecord>> {
    read_jsonl(path)
}

pub fn read_decisions(path: &Path) -> Result<Vec<DecisionRecord>> {
    read_jsonl(path)
}

pub fn read_registry(path: &Path) -> Result<Registry> {
    let text = read_text(path)?.ok_or_else(|| {
        ForgeError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"))
    })?;
    let list: Vec<Characteristic> = serde_json::from_str(&text).map_err(|source| ForgeError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Registry::from_list(list)
}

/// Build plan file: one or more purposes sharing a rank scheme.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFile {
    pub purposes: Vec<BuildPurpose>,
    #[serde(default)]
    pub rank_scheme: Vec<String>,
    #[serde(default)]
    pub node_metadata: BTreeMap<String, NodeMetadata>,
}

impl PlanFile {
    pub fn read(path: &Path) -> Result<PlanFile> {
        let text = read_text(path)?.ok_or_else(|| {
            ForgeError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"))
        })?;
        serde_json::from_str(&text).map_err(|source| ForgeError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Build spec for one purpose; the purpose may be omitted when the
    /// file declares exactly one.
    pub fn spec(&self, purpose_id: Option<&str>) -> Result<BuildSpec> {
        let purpose = match purpose_id {
            Some(id) => self.purposes.iter().find(|p| p.purpose_id == id).ok_or_else(|| {
                ForgeError::InvalidInput(format!("plan declares no purpose `{id}`"))
            })?,
            None if self.purposes.len() == 1 => &self.purposes[0],
            None => {
                return Err(ForgeError::InvalidInput(format!(
                    "plan declares {} purposes; pick one",
                    self.purposes.len()
                )))
            }
        };
        Ok(BuildSpec {
            purpose: purpose.clone(),
            rank_scheme: self.rank_scheme.clone(),
            node_metadata: self.node_metadata.clone(),
        })
    }
}

/// Term list: one term per line, `#` starts a comment line.
pub fn parse_term_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| ForgeError::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| ForgeError::io(&path, e))
}

/// Advisory lock held by the single writer of a store directory.
#[derive(Debug)]
pub struct StoreLock {
    path: PathBuf,
}

impl StoreLock {
    pub fn acquire(dir: &Path) -> Result<StoreLock> {
        fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        let path = dir.join(LOCK);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(StoreLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(ForgeError::Locked(dir.to_path_buf()))
            }
            Err(e) => Err(ForgeError::io(&path, e)),
        }
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Bundle {
    format: u32,
    characteristics: Vec<Characteristic>,
    encounters: Vec<EncounterRecord>,
    substance_concepts: ApperceptionMass,
    curation: Curation,
    taxonomy: Taxonomy,
    lexicons: BTreeMap<String, Lexicon>,
    concepts: ConceptStore,
    decisions: Vec<DecisionRecord>,
}

fn sorted_concepts(c: &ConceptStore) -> ConceptStore {
    let mut c = c.clone();
    c.concepts
        .sort_by(|a, b| (a.concept_id, &a.node_ref).cmp(&(b.concept_id, &b.node_ref)));
    c
}

impl Store {
    /// Loads a store directory; a missing directory is an empty store.
    pub fn load(dir: &Path) -> Result<Store> {
        let mut store = Store::new();
        if !dir.exists() {
            return Ok(store);
        }
        let list: Vec<Characteristic> = read_json(&dir.join(CHARACTERISTICS))?;
        store.registry = Registry::from_list(list)?;
        if dir.join(ENCOUNTERS).exists() {
            store.encounters = read_jsonl(&dir.join(ENCOUNTERS))?;
        }
        store.mass = read_json(&dir.join(SUBSTANCE_CONCEPTS))?;
        store.curation = read_json(&dir.join(CURATION))?;
        store.taxonomy = read_json(&dir.join(TAXONOMY))?;
        store.concepts = read_json(&dir.join(CONCEPTS))?;
        if dir.join(DECISIONS).exists() {
            store.decisions = read_jsonl(&dir.join(DECISIONS))?;
        }
        let entries = fs::read_dir(dir).map_err(|e| ForgeError::io(dir, e))?;
        let mut names: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        names.sort();
        for name in names {
            if let Some(lang) = name.strip_prefix("lexicon.").and_then(|n| n.strip_suffix(".json")) {
                let lexicon: Lexicon = read_json(&dir.join(&name))?;
                store.lexicons.insert(lang.to_string(), lexicon);
            } else if let Some(lang) = name.strip_prefix("deprecated.").and_then(|n| n.strip_suffix(".txt")) {
                let text = read_text(&dir.join(&name))?.unwrap_or_default();
                store.deprecated.insert(lang.to_string(), parse_term_list(&text));
            }
        }
        Ok(store)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        write_atomic(dir, CHARACTERISTICS, &canonical::to_string(&self.registry.to_list())?)?;
        write_atomic(dir, ENCOUNTERS, &canonical::to_lines(&self.encounters)?)?;
        write_atomic(dir, SUBSTANCE_CONCEPTS, &canonical::to_string(&self.mass)?)?;
        write_atomic(dir, CURATION, &canonical::to_string(&self.curation)?)?;
        write_atomic(dir, TAXONOMY, &canonical::to_string(&self.taxonomy)?)?;
        write_atomic(dir, CONCEPTS, &canonical::to_string(&sorted_concepts(&self.concepts))?)?;
        write_atomic(dir, DECISIONS, &canonical::to_lines(&self.decisions)?)?;

        let entries = fs::read_dir(dir).map_err(|e| ForgeError::io(dir, e))?;
        for entry in entries.filter_map(|e| e.ok()) {
            let name = entry.file_name().to_string_lossy().to_string();
            if let Some(lang) = name.strip_prefix("lexicon.").and_then(|n| n.strip_suffix(".json")) {
                if !self.lexicons.contains_key(lang) {
                    fs::remove_file(entry.path()).map_err(|e| ForgeError::io(entry.path(), e))?;
                }
            }
        }
        for (lang, lexicon) in &self.lexicons {
            write_atomic(dir, &lexicon_file(lang), &canonical::to_string(lexicon)?)?;
        }
        for (lang, terms) in &self.deprecated {
            let mut text = String::new();
            for t in terms {
                text.push_str(t);
                text.push('\n');
            }
            write_atomic(dir, &deprecated_file(lang), &text)?;
        }
        Ok(())
    }

    /// The whole store as one canonical JSON document. Curator term lists
    /// are working files and are not part of it.
    pub fn export(&self) -> Result<String> {
        let mut encounters = self.encounters.clone();
        encounters.sort_by(|a, b| a.encounter_id.cmp(&b.encounter_id));
        canonical::to_string(&Bundle {
            format: EXPORT_FORMAT,
            characteristics: self.registry.to_list(),
            encounters,
            substance_concepts: self.mass.clone(),
            curation: self.curation.clone(),
            taxonomy: self.taxonomy.clone(),
            lexicons: self.lexicons.clone(),
            concepts: sorted_concepts(&self.concepts),
            decisions: self.decisions.clone(),
        })
    }

    pub fn import(text: &str) -> Result<Store> {
        let b: Bundle = serde_json::from_str(text).map_err(|source| ForgeError::Parse {
            path: PathBuf::from("<export>"),
            source,
        })?;
        if b.format != EXPORT_FORMAT {
            return Err(ForgeError::InvalidInput(format!(
                "unsupported export format {}",
                b.format
            )));
        }
        Ok(Store {
            registry: Registry::from_list(b.characteristics)?,
            encounters: b.encounters,
            mass: b.substance_concepts,
            curation: b.curation,
            taxonomy: b.taxonomy,
            lexicons: b.lexicons,
            deprecated: BTreeMap::new(),
            concepts: b.concepts,
            decisions: b.decisions,
        })
    }
}
