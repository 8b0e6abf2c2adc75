use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use forge_core::idea::AuditReport;
use forge_core::model::{Decision, InsertSpec, Property};
use forge_core::percept::DEFAULT_THRESHOLD;
use forge_core::store::{self, PlanFile, StoreLock};
use forge_core::verbal::project_language;
use forge_core::{canonical, ForgeError, Store};

mod lexicon_csv;

#[derive(Debug, Parser)]
#[command(name = "forge", version, about = "Build and audit faceted taxonomies from encounter observations")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "FORGE_STORE", default_value = "store")]
    store: PathBuf,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Author recorded on decisions.
    #[arg(long, global = true, env = "FORGE_AUTHOR", default_value = forge_core::engine::DEFAULT_AUTHOR)]
    author: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest encounter records into the apperception mass.
    Ingest {
        #[arg(long)]
        encounters: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Only merge identical signatures; leave the rest pending.
        #[arg(long)]
        auto_only: bool,
        /// Characteristics to register before ingesting.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Build the hierarchy for a purpose.
    Build {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        purpose: Option<String>,
    },
    /// Run every canon check.
    Audit(AuditArgs),
    /// Attach synsets from a CSV of node_id,lemmas[,gloss].
    Lexicalize {
        #[arg(long)]
        lang: String,
        #[arg(long)]
        file: PathBuf,
        /// Non-domain terms for this language, one per line.
        #[arg(long)]
        deprecated: Option<PathBuf>,
        #[arg(long)]
        supersede: bool,
    },
    /// Show one language's hierarchy with lexical gaps contracted.
    Project {
        #[arg(long)]
        lang: String,
    },
    /// Give every node without one a concept id.
    MintIds,
    /// Confirm substance-to-classification mappings.
    Map(MapArgs),
    /// Insert a class under an existing node.
    Insert {
        #[arg(long)]
        parent: String,
        /// characteristic=value
        #[arg(long)]
        differentia: Property,
        #[arg(long)]
        sc: Option<String>,
        /// Children of the parent to move under the new class.
        #[arg(long, value_delimiter = ',')]
        adopt: Vec<String>,
    },
    /// Write the canonical export of the store.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the curation service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Rebuild a fresh store from a decision log.
    Replay {
        #[arg(long)]
        decisions: PathBuf,
        #[arg(long)]
        encounters: PathBuf,
    },
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// Human-readable report even when --json is set.
    #[arg(long)]
    text: bool,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long, requires = "concept")]
    sc: Option<String>,
    #[arg(long, requires = "sc")]
    concept: Option<u64>,
    #[arg(long)]
    supersede: bool,
    /// Map every unmapped concept to its node's substance concept.
    #[arg(long, conflicts_with_all = ["sc", "concept"])]
    from_taxonomy: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn print(json_out: bool, value: serde_json::Value, text: impl FnOnce() -> String) -> anyhow::Result<()> {
    if json_out {
        print!("{}", canonical::to_string(&value)?);
    } else {
        println!("{}", text());
    }
    Ok(())
}

/// Loads the store under its writer lock, applies decisions, saves.
fn mutate<T>(dir: &Path, f: impl FnOnce(&mut Store) -> anyhow::Result<T>) -> anyhow::Result<T> {
    let _lock = StoreLock::acquire(dir)?;
    let mut store = Store::load(dir)?;
    let out = f(&mut store)?;
    store.save(dir)?;
    Ok(out)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let dir = cli.store.as_path();
    let author = cli.author.as_str();
    match cli.command {
        Command::Ingest {
            encounters,
            threshold,
            auto_only,
            registry,
        } => {
            let records = store::read_encounters(&encounters)?;
            let additions = match registry {
                Some(p) => store::read_registry(&p)?.to_list(),
                None => Vec::new(),
            };
            let ids = records.iter().map(|r| r.encounter_id.clone()).collect();
            let outcome = mutate(dir, |s| {
                let (_, outcome) = s.submit(
                    Decision::Ingest {
                        encounter_ids: ids,
                        threshold,
                        auto_only,
                        registry: additions,
                    },
                    author,
                    &records,
                )?;
                Ok(outcome)
            })?;
            let n = outcome["outcomes"].as_array().map_or(0, Vec::len);
            let count = |p: &str| {
                outcome["outcomes"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .filter(|o| o["placement"] == p)
                    .count()
            };
            print(cli.json, outcome.clone(), || {
                format!(
                    "ingested {n} encounters: {} created, {} auto-merged, {} merged, {} pending; {} substance concepts",
                    count("created"),
                    count("auto-merged"),
                    count("merged"),
                    outcome["pending"],
                    outcome["concepts"]
                )
            })?;
        }
        Command::Build { plan, purpose } => {
            let spec = PlanFile::read(&plan)?.spec(purpose.as_deref())?;
            let store = mutate(dir, |s| {
                s.submit(Decision::Build { spec }, author, &[])?;
                Ok(s.clone())
            })?;
            let t = &store.taxonomy;
            let plan = store.curation.plan.clone();
            print(
                cli.json,
                json!({ "nodes": t.nodes.len(), "warnings": t.warnings, "plan": plan }),
                || {
                    format!(
                        "built {} nodes from {} substance concepts ({} build warnings)",
                        t.nodes.len(),
                        store.mass.concepts.len(),
                        t.warnings.len()
                    )
                },
            )?;
        }
        Command::Audit(args) => {
            let store = Store::load(dir)?;
            let report = store.audit();
            let as_json = cli.json && !args.text;
            if as_json {
                print!("{}", canonical::to_string(&report)?);
            } else {
                print!("{}", render_report(&report));
            }
            if report.errors() > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Lexicalize {
            lang,
            file,
            deprecated,
            supersede,
        } => {
            let rows = lexicon_csv::read(&file)?;
            let terms = match &deprecated {
                Some(p) => Some(store::parse_term_list(
                    &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                )),
                None => None,
            };
            let changed = mutate(dir, |s| {
                if s.taxonomy.is_empty() {
                    return Err(ForgeError::LabelBeforeTaxonomy.into());
                }
                // Genus labels first so template glosses can use them.
                let mut rows = rows;
                rows.sort_by_key(|r| s.taxonomy.ancestors(&r.node_id).len());
                let mut changed = 0;
                for row in rows {
                    let (_, out) = s
                        .submit(
                            Decision::AssignLabel {
                                node_id: row.node_id.clone(),
                                language: lang.clone(),
                                lemmas: row.lemmas,
                                gloss: row.gloss,
                                supersede,
                            },
                            author,
                            &[],
                        )
                        .with_context(|| format!("labeling {}", row.node_id))?;
                    if out["changed"] == true {
                        changed += 1;
                    }
                }
                if let Some(terms) = terms {
                    s.deprecated.insert(lang.clone(), terms);
                }
                Ok(changed)
            })?;
            print(cli.json, json!({ "language": lang, "changed": changed }), || {
                format!("{changed} {lang} synsets assigned")
            })?;
        }
        Command::Project { lang } => {
            let store = Store::load(dir)?;
            let lexicon = store
                .lexicons
                .get(&lang)
                .ok_or_else(|| ForgeError::UnknownLanguage(lang.clone()))?;
            let p = project_language(&store.taxonomy, lexicon, &lang)?;
            if cli.json {
                print!("{}", canonical::to_string(&p)?);
            } else {
                let mut stack = vec![(p.root.clone(), 0usize)];
                while let Some((id, depth)) = stack.pop() {
                    let n = &p.nodes[&id];
                    println!("{}{}", "  ".repeat(depth), n.lemma);
                    stack.extend(n.children.iter().rev().map(|c| (c.clone(), depth + 1)));
                }
                if !p.gaps.is_empty() {
                    println!("lexical gaps: {}", p.gaps.join(", "));
                }
            }
        }
        Command::MintIds => {
            let out = mutate(dir, |s| Ok(s.submit(Decision::MintIds {}, author, &[])?.1))?;
            let n = out["minted"].as_array().map_or(0, Vec::len);
            print(cli.json, out, || format!("minted {n} concept ids"))?;
        }
        Command::Map(args) => {
            let mapped = mutate(dir, |s| {
                let pairs: Vec<(String, u64)> = if args.from_taxonomy {
                    let mut pairs: Vec<(String, u64)> = s
                        .concepts
                        .concepts
                        .iter()
                        .filter(|c| c.mapped_sc.is_none())
                        .filter_map(|c| s.taxonomy.nodes.get(&c.node_ref).map(|n| (n.sc_ref.clone(), c.concept_id)))
                        .collect();
                    pairs.sort_by_key(|p| p.1);
                    pairs
                } else {
                    match (&args.sc, args.concept) {
                        (Some(sc), Some(c)) => vec![(sc.clone(), c)],
                        _ => bail!("map needs --sc and --concept, or --from-taxonomy"),
                    }
                };
                for (sc_id, concept_id) in &pairs {
                    s.submit(
                        Decision::ConfirmMapping {
                            sc_id: sc_id.clone(),
                            concept_id: *concept_id,
                            supersede: args.supersede,
                        },
                        author,
                        &[],
                    )?;
                }
                Ok(pairs.len())
            })?;
            print(cli.json, json!({ "mapped": mapped }), || format!("{mapped} mappings confirmed"))?;
        }
        Command::Insert {
            parent,
            differentia,
            sc,
            adopt,
        } => {
            let spec = InsertSpec {
                parent,
                differentia,
                sc_ref: sc,
                adopt,
            };
            let out = mutate(dir, |s| Ok(s.submit(Decision::InsertConcept { spec }, author, &[])?.1))?;
            print(cli.json, out.clone(), || {
                format!("inserted {} with concept id {}", out["node_id"].as_str().unwrap_or("?"), out["concept_id"])
            })?;
        }
        Command::Export { out } => {
            let text = Store::load(dir)?.export()?;
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Serve { port } => {
            let state = forge_service::AppState::open(dir.to_path_buf())?;
            let rt = tokio_runtime()?;
            rt.block_on(forge_service::serve(Arc::new(state), port))?;
        }
        Command::Replay {
            decisions,
            encounters,
        } => {
            let _lock = StoreLock::acquire(dir)?;
            if Store::load(dir)?.revision() > 0 {
                bail!("{} already holds decisions; replay needs a fresh store", dir.display());
            }
            let log = store::read_decisions(&decisions)?;
            let records = store::read_encounters(&encounters)?;
            let s = Store::replay(&log, &records)?;
            s.save(dir)?;
            print(cli.json, json!({ "revision": s.revision() }), || {
                format!("replayed {} decisions", s.revision())
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn tokio_runtime() -> anyhow::Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn render_report(report: &AuditReport) -> String {
    let mut out = String::new();
    for v in &report.violations {
        out.push_str(&format!("{v}\n"));
        for fix in &v.suggested_fixes {
            out.push_str(&format!("    fix: {} ({})\n", fix.label, fix.kind));
        }
    }
    out.push_str(&format!(
        "{} errors, {} warnings (revision {})\n",
        report.errors(),
        report.warnings(),
        report.audited_at
    ));
    out
}
