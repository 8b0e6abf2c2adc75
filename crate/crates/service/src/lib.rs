//! JSON-over-HTTP facade for curating a store.
//!
//! Every GET answers `{"revision": n, "data": ...}` and has no side
//! effects. The only way to change state is `POST /api/decisions` with the
//! revision the client last saw.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::RwLock;
use tower_http::cors::{Any, CorsLayer};

use forge_core::engine::DEFAULT_AUTHOR;
use forge_core::idea::gate_characteristic;
use forge_core::idea::partition;
use forge_core::model::{Decision, DecisionKind, Property, Signature};
use forge_core::store::StoreLock;
use forge_core::verbal::project_language;
use forge_core::{ForgeError, Store};

pub struct AppState {
    store: RwLock<Store>,
    dir: Option<PathBuf>,
    _lock: Option<StoreLock>,
}

impl AppState {
    /// Serves a store directory, holding its writer lock while alive.
    pub fn open(dir: PathBuf) -> forge_core::Result<AppState> {
        let lock = StoreLock::acquire(&dir)?;
        let store = Store::load(&dir)?;
        Ok(AppState {
            store: RwLock::new(store),
            dir: Some(dir),
            _lock: Some(lock),
        })
    }

    /// Serves an in-memory store that is never persisted.
    pub fn in_memory(store: Store) -> AppState {
        AppState {
            store: RwLock::new(store),
            dir: None,
            _lock: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct FieldError {
    field: String,
    message: String,
}

fn envelope<T: Serialize>(revision: u64, data: T) -> Response {
    Json(json!({ "revision": revision, "data": data })).into_response()
}

fn failure(status: StatusCode, message: impl Into<String>, fields: Vec<FieldError>) -> Response {
    (
        status,
        Json(json!({ "error": message.into(), "fields": fields })),
    )
        .into_response()
}

fn error_response(e: &ForgeError) -> Response {
    let status = match e {
        e if e.is_conflict() => StatusCode::CONFLICT,
        ForgeError::UnknownLanguage(_) | ForgeError::UnknownNode(_) => StatusCode::NOT_FOUND,
        ForgeError::NoTaxonomy | ForgeError::UnlabeledRoot(_) | ForgeError::LabelBeforeTaxonomy => {
            StatusCode::CONFLICT
        }
        ForgeError::Io { .. } | ForgeError::Locked(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    };
    failure(status, e.to_string(), Vec::new())
}

#[derive(Debug, Serialize)]
struct NodeView {
    node_id: String,
    parent: Option<String>,
    children: Vec<String>,
    differentia: Option<Property>,
    rank: u32,
    rank_label: String,
    basic_category: bool,
    sc_ref: String,
    intension: Signature,
    media_refs: Vec<String>,
    concept_id: Option<u64>,
    /// Preferred lemma per language.
    labels: BTreeMap<String, String>,
}

async fn taxonomy(State(state): State<Arc<AppState>>) -> Response {
    let store = state.store.read().await;
    let t = &store.taxonomy;
    let nodes: Vec<NodeView> = t
        .preorder()
        .into_iter()
        .map(|id| {
            let n = &t.nodes[&id];
            let sc = t.concept(n, &store.mass);
            NodeView {
                node_id: id.clone(),
                parent: n.parent.clone(),
                children: n.children.clone(),
                differentia: n.differentia.clone(),
                rank: n.rank,
                rank_label: n.rank_label.clone(),
                basic_category: n.basic_category,
                sc_ref: n.sc_ref.clone(),
                intension: sc.map(|s| s.intension.clone()).unwrap_or_default(),
                media_refs: sc.map(|s| s.extension.iter().cloned().collect()).unwrap_or_default(),
                concept_id: store.concepts.by_node(&id).map(|c| c.concept_id),
                labels: store
                    .lexicons
                    .iter()
                    .filter_map(|(lang, lex)| lex.preferred(&id).map(|l| (lang.clone(), l.to_string())))
                    .collect(),
            }
        })
        .collect();
    envelope(
        store.revision(),
        json!({
            "root": t.root().map(|r| r.node_id.clone()),
            "nodes": nodes,
            "warnings": t.warnings,
        }),
    )
}

async fn violations(State(state): State<Arc<AppState>>) -> Response {
    let store = state.store.read().await;
    envelope(store.revision(), store.audit())
}

async fn pending_merges(State(state): State<Arc<AppState>>) -> Response {
    let store = state.store.read().await;
    let pending: Vec<Value> = store
        .mass
        .pending
        .values()
        .map(|p| {
            json!({
                "percept_id": p.percept.percept_id,
                "encounter_id": p.percept.encounter_id,
                "media_ref": p.percept.media_ref,
                "signature": p.percept.signature,
                "candidates": p.candidates,
            })
        })
        .collect();
    envelope(store.revision(), pending)
}

async fn succession_candidates(State(state): State<Arc<AppState>>) -> Response {
    let store = state.store.read().await;
    let purpose = store
        .curation
        .spec
        .as_ref()
        .map(|s| s.purpose.clone())
        .unwrap_or_default();
    let universe: Vec<_> = store.mass.concepts.values().collect();
    let candidates: Vec<Value> = store
        .registry
        .iter()
        .map(|c| {
            let counts: BTreeMap<String, usize> = partition(&c.name, &universe)
                .into_iter()
                .map(|(v, g)| (v, g.len()))
                .collect();
            let problems = gate_characteristic(c, &purpose, &universe).err().unwrap_or_default();
            json!({
                "name": c.name,
                "passes": problems.is_empty(),
                "violations": problems,
                "partition": counts,
            })
        })
        .collect();
    envelope(
        store.revision(),
        json!({
            "purpose": purpose,
            "plan": store.curation.plan,
            "candidates": candidates,
        }),
    )
}

async fn projection(State(state): State<Arc<AppState>>, Path(lang): Path<String>) -> Response {
    let store = state.store.read().await;
    let Some(lexicon) = store.lexicons.get(&lang) else {
        return error_response(&ForgeError::UnknownLanguage(lang));
    };
    match project_language(&store.taxonomy, lexicon, &lang) {
        Ok(p) => envelope(store.revision(), p),
        Err(e) => error_response(&e),
    }
}

async fn export(State(state): State<Arc<AppState>>) -> Response {
    let store = state.store.read().await;
    match store.export() {
        Ok(text) => {
            let doc: Value = serde_json::from_str(&text).expect("export is valid JSON");
            envelope(store.revision(), doc)
        }
        Err(e) => error_response(&e),
    }
}

const KINDS: [DecisionKind; 9] = [
    DecisionKind::ApproveMerge,
    DecisionKind::SetSuccession,
    DecisionKind::ResolveViolation,
    DecisionKind::AssignLabel,
    DecisionKind::ConfirmMapping,
    DecisionKind::Ingest,
    DecisionKind::Build,
    DecisionKind::MintIds,
    DecisionKind::InsertConcept,
];

/// Validates the request shape, collecting one error per bad field.
fn parse_post(body: &Value) -> Result<(u64, Decision, String), Vec<FieldError>> {
    let field = |f: &str, m: &str| FieldError {
        field: f.to_string(),
        message: m.to_string(),
    };
    let Some(obj) = body.as_object() else {
        return Err(vec![field("", "body must be a JSON object")]);
    };
    let mut errors = Vec::new();
    let revision = match obj.get("revision") {
        Some(v) => v.as_u64().or_else(|| {
            errors.push(field("revision", "must be a non-negative integer"));
            None
        }),
        None => {
            errors.push(field("revision", "required"));
            None
        }
    };
    let author = match obj.get("author") {
        None => Some(DEFAULT_AUTHOR.to_string()),
        Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
        Some(_) => {
            errors.push(field("author", "must be a non-empty string"));
            None
        }
    };
    let decision = match obj.get("decision") {
        None => {
            errors.push(field("decision", "required"));
            None
        }
        Some(d) => {
            let kind = d.get("kind").and_then(Value::as_str);
            let known = kind.is_some_and(|k| KINDS.iter().any(|x| x.to_string() == k));
            match kind {
                None => {
                    errors.push(field("decision.kind", "required"));
                    None
                }
                Some(k) if !known => {
                    errors.push(field("decision.kind", &format!("unknown decision kind `{k}`")));
                    None
                }
                Some(_) => match serde_json::from_value::<Decision>(d.clone()) {
                    Ok(d) => Some(d),
                    Err(e) => {
                        errors.push(field("decision.payload", &e.to_string()));
                        None
                    }
                },
            }
        }
    };
    match (revision, decision, author) {
        (Some(r), Some(d), Some(a)) if errors.is_empty() => Ok((r, d, a)),
        _ => Err(errors),
    }
}

async fn post_decision(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> Response {
    let body: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => {
            return failure(
                StatusCode::UNPROCESSABLE_ENTITY,
                "malformed decision",
                vec![FieldError {
                    field: String::new(),
                    message: e.to_string(),
                }],
            )
        }
    };
    let (revision, decision, author) = match parse_post(&body) {
        Ok(p) => p,
        Err(fields) => return failure(StatusCode::UNPROCESSABLE_ENTITY, "malformed decision", fields),
    };

    let mut store = state.store.write().await;
    if revision != store.revision() {
        return failure(
            StatusCode::CONFLICT,
            format!(
                "stale revision {revision}; the store is at revision {}",
                store.revision()
            ),
            Vec::new(),
        );
    }
    let mut next = store.clone();
    let (record, outcome) = match next.submit(decision, &author, &[]) {
        Ok(r) => r,
        Err(e) => {
            log::info!("rejected decision: {e}");
            return error_response(&e);
        }
    };
    if let Some(dir) = &state.dir {
        if let Err(e) = next.save(dir) {
            log::error!("could not persist decision {}: {e}", record.decision_id);
            return error_response(&e);
        }
    }
    *store = next;
    let report = store.audit();
    log::info!("applied {} ({})", record.decision_id, record.decision.kind());
    envelope(
        store.revision(),
        json!({
            "record": record,
            "outcome": outcome,
            "errors": report.errors(),
            "warnings": report.warnings(),
        }),
    )
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any);
    Router::new()
        .route("/api/taxonomy", get(taxonomy))
        .route("/api/violations", get(violations))
        .route("/api/merges/pending", get(pending_merges))
        .route("/api/succession/candidates", get(succession_candidates))
        .route("/api/decisions", post(post_decision))
        .route("/api/projection/{lang}", get(projection))
        .route("/api/export", get(export))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("curation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
