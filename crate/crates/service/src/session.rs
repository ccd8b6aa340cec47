//! Session registry: per-session storage directories, serialized
//! operations, idle expiry.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::analysis::AnalysisResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadRecord {
    pub upload_id: usize,
    pub filename: String,
    /// File name inside the session's upload directory.
    pub stored_as: String,
    pub bytes: usize,
    pub documents: usize,
    pub uploaded_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Idle,
    Processing,
    Done,
    Failed,
}

#[derive(Debug, Default)]
pub struct SessionData {
    pub uploads: Vec<UploadRecord>,
    pub result: Option<AnalysisResult>,
    /// Set once the session is deleted; later operations must not touch storage.
    pub closed: bool,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub storage_dir: PathBuf,
    pub created_at: u64,
    last_active: Mutex<Instant>,
    status: Mutex<(Status, Option<String>)>,
    /// Held for the whole of an upload, analysis or deletion.
    pub data: tokio::sync::Mutex<SessionData>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Session {
    pub fn upload_dir(&self) -> PathBuf {
        self.storage_dir.join("uploads")
    }

    pub fn touch(&self) {
        *self.last_active.lock().expect("clock lock") = Instant::now();
    }

    fn idle_for(&self, now: Instant) -> Duration {
        now.saturating_duration_since(*self.last_active.lock().expect("clock lock"))
    }

    pub fn status(&self) -> (Status, Option<String>) {
        self.status.lock().expect("status lock").clone()
    }

    pub fn set_status(&self, status: Status, error: Option<String>) {
        *self.status.lock().expect("status lock") = (status, error);
    }
}

/// All live sessions. Lookups treat sessions idle for longer than the TTL
/// as gone, even before the reaper has removed them.
#[derive(Debug)]
pub struct SessionRegistry {
    root: PathBuf,
    ttl: Duration,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl SessionRegistry {
    pub fn new(root: PathBuf, ttl: Duration) -> Self {
        SessionRegistry {
            root,
            ttl,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn root(&self) -> &PathBuf {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub async fn create(&self) -> std::io::Result<Arc<Session>> {
        let id = Uuid::new_v4().to_string();
        let storage_dir = self.root.join(&id);
        tokio::fs::create_dir_all(storage_dir.join("uploads")).await?;
        let session = Arc::new(Session {
            id: id.clone(),
            storage_dir,
            created_at: unix_now(),
            last_active: Mutex::new(Instant::now()),
            status: Mutex::new((Status::Idle, None)),
            data: tokio::sync::Mutex::new(SessionData::default()),
        });
        self.sessions
            .write()
            .expect("registry lock")
            .insert(id, session.clone());
        Ok(session)
    }

    /// The live session with this id, marked active.
    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        let session = self.sessions.read().expect("registry lock").get(id).cloned()?;
        if session.idle_for(Instant::now()) > self.ttl {
            return None;
        }
        session.touch();
        Some(session)
    }

    /// Unregisters the session and deletes its storage once in-flight
    /// operations on it have finished.
    pub async fn remove(&self, id: &str) -> Option<Arc<Session>> {
        let session = self.sessions.write().expect("registry lock").remove(id)?;
        close(&session).await;
        Some(session)
    }

    /// Removes every session idle for longer than the TTL; returns their ids.
    pub async fn reap_expired(&self) -> Vec<String> {
        let now = Instant::now();
        let expired: Vec<Arc<Session>> = {
            let mut map = self.sessions.write().expect("registry lock");
            let ids: Vec<String> = map
                .values()
                .filter(|s| s.idle_for(now) > self.ttl)
                .map(|s| s.id.clone())
                .collect();
            ids.iter().filter_map(|id| map.remove(id)).collect()
        };
        let mut ids = Vec::with_capacity(expired.len());
        for s in expired {
            log::info!("session {} expired", s.id);
            close(&s).await;
            ids.push(s.id.clone());
        }
        ids
    }

    /// Removes every session (used on shutdown).
    pub async fn clear(&self) {
        let all: Vec<Arc<Session>> = self
            .sessions
            .write()
            .expect("registry lock")
            .drain()
            .map(|(_, s)| s)
            .collect();
        for s in all {
            close(&s).await;
        }
    }
}

async fn close(session: &Session) {
    let mut data = session.data.lock().await;
    data.closed = true;
    data.result = None;
    if let Err(e) = tokio::fs::remove_dir_all(&session.storage_dir).await {
        if e.kind() != std::io::ErrorKind::NotFound {
            log::error!("cannot remove {}: {e}", session.storage_dir.display());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn create_and_remove() {
        let root = tempfile::tempdir().unwrap();
        let reg = SessionRegistry::new(root.path().to_path_buf(), Duration::from_secs(60));
        let a = reg.create().await.unwrap();
        let b = reg.create().await.unwrap();
        assert_ne!(a.id, b.id);
        assert!(Uuid::parse_str(&a.id).is_ok());
        assert!(a.upload_dir().is_dir());
        assert!(reg.remove(&a.id).await.is_some());
        assert!(!a.storage_dir.exists());
        assert!(reg.get(&a.id).is_none());
        assert!(reg.get(&b.id).is_some());
        assert!(reg.remove(&a.id).await.is_none());
    }

    #[tokio::test]
    async fn idle_sessions_expire() {
        let root = tempfile::tempdir().unwrap();
        let reg = SessionRegistry::new(root.path().to_path_buf(), Duration::from_millis(50));
        let a = reg.create().await.unwrap();
        tokio::time::sleep(Duration::from_millis(120)).await;
        let b = reg.create().await.unwrap();
        assert!(reg.get(&a.id).is_none());
        assert_eq!(reg.reap_expired().await, vec![a.id.clone()]);
        assert!(!a.storage_dir.exists());
        assert!(b.storage_dir.exists());
        assert_eq!(reg.len(), 1);
    }
}
