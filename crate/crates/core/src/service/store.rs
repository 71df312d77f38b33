use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::belief::{update_or_predict, ExactBelief};
use crate::error::ConfigError;
use crate::model::{Action, Model, ModelParams, Observation};

pub const SESSION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: Action,
    pub observation: Observation,
    /// The observation was impossible under the belief; the predicted prior was kept.
    #[serde(default)]
    pub degenerate: bool,
}

/// What is persisted per session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u32,
    pub id: String,
    /// Overrides applied on top of the server's model parameters.
    pub config_overrides: serde_json::Value,
    pub belief: ExactBelief,
    pub history: Vec<HistoryEntry>,
    /// Set once DISC is committed.
    pub discharged: bool,
    pub created_at: u64,
    pub updated_at: u64,
}

impl Session {
    /// Rebuild the belief from the prior and the recorded history.
    pub fn replay(&self, model: &Model) -> ExactBelief {
        self.history.iter().fold(ExactBelief::prior(model), |b, h| {
            update_or_predict(model, &b, h.action, &h.observation).expect("history entries are validated").0
        })
    }
}

/// A live session plus the model its overrides produce.
#[derive(Debug)]
pub struct Slot {
    pub session: Session,
    pub model: Arc<Model>,
}

pub type SlotHandle = Arc<Mutex<Slot>>;

/// In-memory sessions backed by one JSON file each.
#[derive(Debug)]
pub struct SessionStore {
    base: ModelParams,
    dir: PathBuf,
    ttl: Duration,
    sessions: RwLock<HashMap<String, SlotHandle>>,
}

pub fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl SessionStore {
    /// Open `dir`, loading every unexpired session found there.
    pub fn open(base: ModelParams, dir: impl Into<PathBuf>, ttl: Duration) -> io::Result<SessionStore> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let store = SessionStore { base, dir, ttl, sessions: RwLock::new(HashMap::new()) };
        let now = now_secs();
        let mut loaded = HashMap::new();
        for entry in fs::read_dir(&store.dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let Ok(text) = fs::read_to_string(&path) else { continue };
            let Ok(session) = serde_json::from_str::<Session>(&text) else { continue };
            if store.expired(&session, now) {
                let _ = fs::remove_file(&path);
                continue;
            }
            let Ok(model) = store.model_for(&session.config_overrides) else { continue };
            loaded.insert(session.id.clone(), Arc::new(Mutex::new(Slot { session, model })));
        }
        *store.sessions.write().expect("session map lock") = loaded;
        Ok(store)
    }

    pub fn base_params(&self) -> &ModelParams {
        &self.base
    }

    pub fn model_for(&self, overrides: &serde_json::Value) -> Result<Arc<Model>, ConfigError> {
        let params = self.base.with_overrides(overrides)?;
        Ok(Arc::new(Model::new(params)?))
    }

    fn expired(&self, session: &Session, now: u64) -> bool {
        now.saturating_sub(session.updated_at) > self.ttl.as_secs()
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    pub fn create(&self, overrides: serde_json::Value) -> Result<(SlotHandle, Session), ConfigError> {
        let overrides = if overrides.is_null() { serde_json::json!({}) } else { overrides };
        let model = self.model_for(&overrides)?;
        let now = now_secs();
        let session = Session {
            schema_version: SESSION_SCHEMA_VERSION,
            id: uuid::Uuid::new_v4().simple().to_string(),
            config_overrides: overrides,
            belief: ExactBelief::prior(&model),
            history: Vec::new(),
            discharged: false,
            created_at: now,
            updated_at: now,
        };
        self.persist(&session).map_err(|e| ConfigError::invalid("", format!("could not save session: {e}")))?;
        let handle = Arc::new(Mutex::new(Slot { session: session.clone(), model }));
        self.sessions.write().expect("session map lock").insert(session.id.clone(), handle.clone());
        Ok((handle, session))
    }

    /// Look up a session, dropping it if it has outlived the TTL.
    pub async fn get(&self, id: &str) -> Option<SlotHandle> {
        let handle = self.sessions.read().expect("session map lock").get(id).cloned()?;
        let expired = self.expired(&handle.lock().await.session, now_secs());
        if expired {
            self.remove(id);
            return None;
        }
        Some(handle)
    }

    pub fn remove(&self, id: &str) -> bool {
        let existed = self.sessions.write().expect("session map lock").remove(id).is_some();
        let _ = fs::remove_file(self.path(id));
        existed
    }

    /// Drop every expired session.
    pub async fn sweep(&self) -> usize {
        let handles: Vec<(String, SlotHandle)> =
            self.sessions.read().expect("session map lock").iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let now = now_secs();
        let mut dropped = 0;
        for (id, h) in handles {
            if self.expired(&h.lock().await.session, now) {
                self.remove(&id);
                dropped += 1;
            }
        }
        dropped
    }

    pub fn persist(&self, session: &Session) -> io::Result<()> {
        write_atomic(&self.path(&session.id), &serde_json::to_vec_pretty(session).map_err(io::Error::other)?)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}
