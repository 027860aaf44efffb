//! In-memory catalogs and sessions.
//!
//! Each session is behind its own mutex so that mutations on one session are
//! totally ordered while distinct sessions proceed in parallel.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use cfxplain_core::catalog::{AttributeDoc, AttributeMeta, CatalogDoc, CatalogSource, ValueText};
use cfxplain_core::report::ConstraintEntry;
use cfxplain_core::{
    assemble_problem, counterfactual_xplain, load_catalog, render_explanation, Assembled, Assignment, Catalog,
    CatalogFormat, ConstraintDescriptor, Direction, ExplanationEntry, Outcome, OutcomeReport, ProblemSpec,
    RelaxationState, RenderFormat, TraceEntry,
};
use serde::{Deserialize, Serialize};
use tracing::{debug, info};

use crate::error::ServiceError;

pub const DEFAULT_SOLUTION_LIMIT: usize = 20;

const NO_RELAXATION: &str = "None of the allowed changes to your constraints leads to a solution.";

/// Body of `POST /catalogs`: CSV text, or JSON attributes plus rows.
#[derive(Clone, Debug, Default, Deserialize)]
pub struct CatalogUpload {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub attributes: Option<Vec<AttributeDoc>>,
    #[serde(default)]
    pub rows: Option<Vec<Vec<ValueText>>>,
    /// Labels, units and default directions keyed by attribute name.
    #[serde(default)]
    pub metadata: BTreeMap<String, AttributeMeta>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogInfo {
    pub id: String,
    pub attributes: Vec<String>,
    pub rows: usize,
}

#[derive(Clone, Debug, Deserialize)]
pub struct CreateSession {
    pub catalog_id: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    #[default]
    Foreground,
    Counterfactual,
}

/// Body of `POST /sessions/{id}/constraints`.
#[derive(Clone, Debug, Deserialize)]
pub struct PostConstraint {
    #[serde(default)]
    pub revision: Option<u64>,
    #[serde(default)]
    pub kind: ConstraintKind,
    /// Sets the user's preferred direction for the constraint's attribute.
    #[serde(default)]
    pub direction: Option<Direction>,
    #[serde(flatten)]
    pub constraint: ConstraintDescriptor,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct SubstitutionRequest {
    pub id: String,
    pub to: String,
}

/// Body of `POST /sessions/{id}/apply`. Explanation entries can be sent back
/// as they were received.
#[derive(Clone, Debug, Default, Deserialize)]
pub struct ApplyRequest {
    #[serde(default)]
    pub revision: Option<u64>,
    #[serde(default, alias = "explanation")]
    pub substitutions: Vec<SubstitutionRequest>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutcomeView {
    pub outcome: &'static str,
    pub message: String,
    pub explanation: Vec<ExplanationEntry>,
    pub relaxed_constraints: Vec<ConstraintEntry>,
    pub solutions: Vec<Assignment>,
    pub total_solutions: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SessionView {
    pub id: String,
    pub catalog_id: String,
    /// Rows of the catalog table that sits in the background.
    pub catalog_rows: usize,
    pub revision: u64,
    pub preferences: BTreeMap<String, Direction>,
    pub background: Vec<ConstraintDescriptor>,
    pub foreground: Vec<ConstraintDescriptor>,
    pub outcome: Option<OutcomeView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SolutionsView {
    pub revision: u64,
    pub solutions: Vec<Assignment>,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceView {
    pub revision: u64,
    pub outcome: Option<&'static str>,
    pub trace: Vec<TraceEntry>,
}

/// Everything needed to rebuild a session, catalog included.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub catalog_id: String,
    pub revision: u64,
    pub posted: usize,
    pub spec: ProblemSpec,
}

struct Evaluation {
    assembled: Assembled,
    outcome: Outcome,
}

struct CatalogEntry {
    catalog: Arc<Catalog>,
    metadata: BTreeMap<String, AttributeMeta>,
}

pub struct Session {
    id: String,
    catalog_id: String,
    catalog: Arc<Catalog>,
    spec: ProblemSpec,
    revision: u64,
    /// Constraints posted so far; drives default ids `c1`, `c2`, ...
    posted: usize,
    evaluation: Option<Evaluation>,
}

fn evaluate(spec: &ProblemSpec, catalog: &Catalog) -> Result<Evaluation, ServiceError> {
    let assembled = assemble_problem(spec, Some(catalog))?;
    let outcome = counterfactual_xplain(&assembled.problem, &assembled.spaces)?;
    Ok(Evaluation { assembled, outcome })
}

impl Session {
    fn check_revision(&self, given: Option<u64>) -> Result<(), ServiceError> {
        match given {
            Some(given) if given != self.revision => Err(ServiceError::RevisionConflict {
                current: self.revision,
                given,
            }),
            _ => Ok(()),
        }
    }

    fn id_in_use(&self, id: &str) -> bool {
        self.spec
            .foreground
            .iter()
            .chain(&self.spec.background)
            .chain(&self.spec.counterfactual)
            .any(|d| d.id.as_deref() == Some(id))
    }

    fn commit(&mut self, spec: ProblemSpec) -> Result<(), ServiceError> {
        let evaluation = evaluate(&spec, &self.catalog)?;
        debug!(session = %self.id, outcome = evaluation.outcome.label(), "re-evaluated");
        self.spec = spec;
        self.evaluation = Some(evaluation);
        self.revision += 1;
        Ok(())
    }

    fn report(&self, with_trace: bool) -> Result<Option<OutcomeReport>, ServiceError> {
        let Some(e) = &self.evaluation else {
            return Ok(None);
        };
        Ok(Some(OutcomeReport::build(
            &e.assembled.problem,
            &e.outcome,
            usize::MAX,
            with_trace,
        )?))
    }

    fn view(&self, limit: usize) -> Result<SessionView, ServiceError> {
        let outcome = match (&self.evaluation, self.report(false)?) {
            (Some(e), Some(report)) => {
                let message = match &e.outcome {
                    Outcome::Explained(x) => {
                        render_explanation(&x.explanation, RenderFormat::Text, &e.assembled.problem)
                    }
                    Outcome::NoConflict => {
                        render_explanation(&Default::default(), RenderFormat::Text, &e.assembled.problem)
                    }
                    Outcome::NoRelaxation => NO_RELAXATION.to_string(),
                };
                let total = report.solutions.len();
                let mut solutions = report.solutions;
                solutions.truncate(limit);
                Some(OutcomeView {
                    outcome: report.outcome,
                    message,
                    explanation: report.explanation,
                    relaxed_constraints: report.relaxed_constraints,
                    solutions,
                    total_solutions: total,
                })
            }
            _ => None,
        };
        Ok(SessionView {
            id: self.id.clone(),
            catalog_id: self.catalog_id.clone(),
            catalog_rows: self.catalog.rows().len(),
            revision: self.revision,
            preferences: self.spec.preferences.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            background: self.spec.background.clone(),
            foreground: self.spec.foreground.clone(),
            outcome,
        })
    }

    fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            id: self.id.clone(),
            catalog_id: self.catalog_id.clone(),
            revision: self.revision,
            posted: self.posted,
            spec: ProblemSpec {
                catalog: Some(CatalogSource::Inline(CatalogDoc::from_catalog(&self.catalog))),
                ..self.spec.clone()
            },
        }
    }
}

#[derive(Default)]
pub struct SessionStore {
    catalogs: RwLock<HashMap<String, Arc<CatalogEntry>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    next_catalog: AtomicU64,
    next_session: AtomicU64,
    snapshot_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new() -> Self {
        SessionStore::default()
    }

    /// Writes `<dir>/<session id>.json` after every mutation.
    pub fn with_snapshot_dir(dir: impl Into<PathBuf>) -> Self {
        SessionStore {
            snapshot_dir: Some(dir.into()),
            ..SessionStore::default()
        }
    }

    pub fn register_catalog(&self, upload: CatalogUpload) -> Result<CatalogInfo, ServiceError> {
        let catalog = match (upload.csv, upload.attributes, upload.rows) {
            (Some(csv), None, None) => load_catalog(csv.as_bytes(), CatalogFormat::Csv)?,
            (None, Some(attributes), Some(rows)) => CatalogDoc { attributes, rows }.into_catalog()?,
            _ => {
                return Err(ServiceError::BadRequest(
                    "give either \"csv\" or both \"attributes\" and \"rows\"".into(),
                ))
            }
        };
        if let Some(unknown) = upload.metadata.keys().find(|k| catalog.attribute(k).is_none()) {
            return Err(ServiceError::BadRequest(format!(
                "metadata for unknown attribute {unknown:?}"
            )));
        }
        let mut catalogs = self.catalogs.write().unwrap_or_else(PoisonError::into_inner);
        let id = match upload.id {
            Some(id) if catalogs.contains_key(&id) => return Err(ServiceError::CatalogExists(id)),
            Some(id) => id,
            None => loop {
                let n = self.next_catalog.fetch_add(1, Ordering::Relaxed) + 1;
                let id = format!("catalog-{n}");
                if !catalogs.contains_key(&id) {
                    break id;
                }
            },
        };
        let info = CatalogInfo {
            id: id.clone(),
            attributes: catalog.schema().iter().map(|a| a.name.clone()).collect(),
            rows: catalog.rows().len(),
        };
        info!(catalog = %id, rows = info.rows, "catalog registered");
        catalogs.insert(
            id,
            Arc::new(CatalogEntry {
                catalog: Arc::new(catalog),
                metadata: upload.metadata,
            }),
        );
        Ok(info)
    }

    fn catalog(&self, id: &str) -> Result<Arc<CatalogEntry>, ServiceError> {
        self.catalogs
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::CatalogNotFound(id.to_string()))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::SessionNotFound(id.to_string()))
    }

    fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let session = self.session(id)?;
        let mut guard = session.lock().unwrap_or_else(PoisonError::into_inner);
        f(&mut guard)
    }

    fn persist(&self, session: &Session) -> Result<(), ServiceError> {
        if let Some(dir) = &self.snapshot_dir {
            fs::create_dir_all(dir)?;
            let text = serde_json::to_string_pretty(&session.snapshot()).expect("snapshot serializes");
            fs::write(dir.join(format!("{}.json", session.id)), text)?;
        }
        Ok(())
    }

    pub fn create_session(&self, request: CreateSession) -> Result<SessionView, ServiceError> {
        let entry = self.catalog(&request.catalog_id)?;
        let n = self.next_session.fetch_add(1, Ordering::Relaxed) + 1;
        let session = Session {
            id: format!("s{n}"),
            catalog_id: request.catalog_id,
            catalog: entry.catalog.clone(),
            spec: ProblemSpec {
                attributes: entry.metadata.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
                ..ProblemSpec::default()
            },
            revision: 0,
            posted: 0,
            evaluation: None,
        };
        info!(session = %session.id, catalog = %session.catalog_id, "session created");
        let view = session.view(DEFAULT_SOLUTION_LIMIT)?;
        self.persist(&session)?;
        self.sessions
            .write()
            .unwrap_or_else(PoisonError::into_inner)
            .insert(session.id.clone(), Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn get_state(&self, id: &str, limit: usize) -> Result<SessionView, ServiceError> {
        self.with_session(id, |s| s.view(limit))
    }

    pub fn post_constraint(&self, id: &str, request: PostConstraint) -> Result<SessionView, ServiceError> {
        self.with_session(id, |s| {
            s.check_revision(request.revision)?;
            let mut descriptor = request.constraint;
            let id = match descriptor.id.take() {
                Some(id) if s.id_in_use(&id) => return Err(ServiceError::DuplicateId(id)),
                Some(id) => id,
                None => {
                    let mut n = s.posted + 1;
                    while s.id_in_use(&format!("c{n}")) {
                        n += 1;
                    }
                    format!("c{n}")
                }
            };
            descriptor.id = Some(id);
            let mut spec = s.spec.clone();
            if let Some(direction) = request.direction {
                spec.preferences.insert(descriptor.attr.clone(), direction);
            }
            match request.kind {
                ConstraintKind::Foreground => spec.foreground.push(descriptor),
                ConstraintKind::Counterfactual => spec.background.push(descriptor),
            }
            s.commit(spec)?;
            s.posted += 1;
            self.persist(s)?;
            s.view(DEFAULT_SOLUTION_LIMIT)
        })
    }

    pub fn apply_suggestion(&self, id: &str, request: ApplyRequest) -> Result<SessionView, ServiceError> {
        self.with_session(id, |s| {
            s.check_revision(request.revision)?;
            let mut spec = s.spec.clone();
            for sub in &request.substitutions {
                let pos = spec
                    .foreground
                    .iter()
                    .position(|d| d.id.as_deref() == Some(sub.id.as_str()))
                    .ok_or_else(|| ServiceError::UnknownTarget(sub.id.clone()))?;
                let space = s
                    .evaluation
                    .as_ref()
                    .and_then(|e| e.assembled.spaces.get(&sub.id))
                    .ok_or_else(|| ServiceError::UnknownTarget(sub.id.clone()))?;
                let unknown = || ServiceError::UnknownState {
                    id: sub.id.clone(),
                    state: sub.to.clone(),
                };
                match space.find_by_text(&sub.to).ok_or_else(unknown)? {
                    RelaxationState::Top => {
                        spec.foreground.remove(pos);
                        spec.spaces.shift_remove(&sub.id);
                    }
                    RelaxationState::Bottom => return Err(unknown()),
                    RelaxationState::Concrete(body) => {
                        spec.foreground[pos] =
                            ConstraintDescriptor::from_body(Some(sub.id.clone()), body).ok_or_else(unknown)?;
                    }
                }
            }
            s.commit(spec)?;
            self.persist(s)?;
            s.view(DEFAULT_SOLUTION_LIMIT)
        })
    }

    pub fn solutions(&self, id: &str, limit: usize) -> Result<SolutionsView, ServiceError> {
        self.with_session(id, |s| {
            let (solutions, total) = match s.report(false)? {
                Some(report) => {
                    let total = report.solutions.len();
                    let mut solutions = report.solutions;
                    solutions.truncate(limit);
                    (solutions, total)
                }
                None => (Vec::new(), 0),
            };
            Ok(SolutionsView {
                revision: s.revision,
                solutions,
                total,
            })
        })
    }

    pub fn trace(&self, id: &str) -> Result<TraceView, ServiceError> {
        self.with_session(id, |s| {
            let report = s.report(true)?;
            Ok(TraceView {
                revision: s.revision,
                outcome: report.as_ref().map(|r| r.outcome),
                trace: report.and_then(|r| r.trace).unwrap_or_default(),
            })
        })
    }

    pub fn snapshot(&self, id: &str) -> Result<SessionSnapshot, ServiceError> {
        self.with_session(id, |s| Ok(s.snapshot()))
    }

    /// Rebuilds a session from a snapshot, registering its catalog under the
    /// recorded id if that id is free.
    pub fn restore(&self, snapshot: SessionSnapshot) -> Result<SessionView, ServiceError> {
        let Some(CatalogSource::Inline(doc)) = snapshot.spec.catalog.clone() else {
            return Err(ServiceError::BadRequest("snapshot carries no inline catalog".into()));
        };
        let catalog = Arc::new(doc.into_catalog()?);
        {
            let mut catalogs = self.catalogs.write().unwrap_or_else(PoisonError::into_inner);
            catalogs.entry(snapshot.catalog_id.clone()).or_insert_with(|| {
                Arc::new(CatalogEntry {
                    catalog: catalog.clone(),
                    metadata: BTreeMap::new(),
                })
            });
        }
        let spec = ProblemSpec {
            catalog: None,
            ..snapshot.spec
        };
        let evaluation = if snapshot.revision == 0 {
            None
        } else {
            Some(evaluate(&spec, &catalog)?)
        };
        let session = Session {
            id: snapshot.id,
            catalog_id: snapshot.catalog_id,
            catalog,
            spec,
            revision: snapshot.revision,
            posted: snapshot.posted,
            evaluation,
        };
        let view = session.view(DEFAULT_SOLUTION_LIMIT)?;
        self.sessions
            .write()
            .unwrap_or_else(PoisonError::into_inner)
            .insert(session.id.clone(), Arc::new(Mutex::new(session)));
        Ok(view)
    }
}
