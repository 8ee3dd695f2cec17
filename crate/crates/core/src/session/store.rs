use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use super::wire::{CreateRequest, CreateResponse, SamplesRequest, SamplesResponse, SpaceRequest, SpaceResponse};
use super::{ScreenSummary, Session, SessionMode, CROSS_RECT};
use crate::error::{Error, Result};
use crate::features::RECORD_HEADER;
use crate::gaze::GazeSample;
use crate::mining::DecisionTree;

/// Session ids are 1 to 64 characters from `[A-Za-z0-9_-]`.
pub fn is_valid_session_id(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

/// All live sessions of a service. Each session sits behind its own lock, so
/// requests for one session are serialized while different sessions proceed
/// independently.
pub struct SessionStore {
    root: Option<PathBuf>,
    model: Option<Arc<DecisionTree>>,
    next: AtomicU64,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    /// A store that keeps sessions in memory only.
    pub fn in_memory() -> Self {
        Self { root: None, model: None, next: AtomicU64::new(1), sessions: RwLock::new(BTreeMap::new()) }
    }

    /// A store persisting each session under `root/<session id>/`.
    pub fn persistent(root: PathBuf) -> Self {
        Self { root: Some(root), ..Self::in_memory() }
    }

    /// Tree handed to sessions whose scorer runs in model mode.
    pub fn with_model(mut self, model: Arc<DecisionTree>) -> Self {
        self.model = Some(model);
        self
    }

    fn allocate_id(&self) -> String {
        loop {
            let id = format!("s{:05}", self.next.fetch_add(1, Ordering::Relaxed));
            let taken = self.root.as_ref().is_some_and(|r| r.join(&id).exists());
            if !taken {
                return id;
            }
        }
    }

    pub fn create(&self, request: CreateRequest) -> Result<CreateResponse> {
        let config = request.config.unwrap_or_default();
        // rejected requests must not consume an id
        config.validate()?;
        let id = self.allocate_id();
        let mut session = Session::new(id.clone(), request.subject_id, request.seed, config)?;
        if let Some(model) = &self.model {
            session.set_model(Arc::clone(model));
        }
        if let Some(root) = &self.root {
            session.persist_to(&root.join(&id))?;
        }
        let response =
            CreateResponse { session_id: id.clone(), phase: session.phase(), mode: session.mode(), cross_rect: CROSS_RECT };
        self.sessions.write().unwrap_or_else(PoisonError::into_inner).insert(id, Arc::new(Mutex::new(session)));
        Ok(response)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        if !is_valid_session_id(id) {
            return Err(Error::InvalidInput(format!("malformed session id {id:?}")));
        }
        let sessions = self.sessions.read().unwrap_or_else(PoisonError::into_inner);
        sessions.get(id).cloned().ok_or_else(|| Error::UnknownSession(id.to_string()))
    }

    /// Runs `f` with exclusive access to one session.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let session = self.get(id)?;
        let mut guard = session.lock().unwrap_or_else(PoisonError::into_inner);
        f(&mut guard)
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.read().unwrap_or_else(PoisonError::into_inner).keys().cloned().collect()
    }

    pub fn post_samples(&self, id: &str, request: SamplesRequest) -> Result<SamplesResponse> {
        let samples: Vec<GazeSample> = request.samples.into_iter().map(GazeSample::from).collect();
        self.with_session(id, |s| {
            if s.mode() == SessionMode::Synthetic {
                return Err(Error::InvalidInput("synthetic sessions generate their own gaze".into()));
            }
            s.post_samples(&samples)?;
            Ok(SamplesResponse::for_session(s))
        })
    }

    /// The key press: ends the current screen. Synthetic sessions run a whole
    /// screen of simulated gaze first.
    pub fn space(&self, id: &str, request: SpaceRequest) -> Result<SpaceResponse> {
        self.with_session(id, |s| {
            let outcome = match s.mode() {
                SessionMode::Human => s.end_screen(request.t)?,
                SessionMode::Synthetic => s.auto_advance()?,
            };
            Ok(outcome.into())
        })
    }

    pub fn history(&self, id: &str) -> Result<Vec<ScreenSummary>> {
        self.with_session(id, |s| Ok(s.history().to_vec()))
    }

    /// Records of every completed screen, as record CSV.
    pub fn export(&self, id: &str) -> Result<String> {
        self.with_session(id, |s| {
            let mut out = format!("{RECORD_HEADER}\n");
            for r in s.records() {
                out.push_str(&r.to_csv_line());
                out.push('\n');
            }
            Ok(out)
        })
    }
}
