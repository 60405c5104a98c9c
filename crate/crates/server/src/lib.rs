//! HTTP front for the acquisition host.
//!
//! | method | path | body / query | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | [`StartRequest`] | 201 + `SessionInfo` |
//! | GET | `/sessions` | | 200 + `[SessionInfo]` |
//! | GET | `/sessions/{id}` | | 200 + [`SessionSummary`] |
//! | POST | `/sessions/{id}/stop` | | 200 + `SessionInfo` |
//! | POST | `/sessions/{id}/annotations` | `Annotation` | 201 + `Annotation` |
//! | GET | `/sessions/{id}/export?format=jsonl\|csv` | | 200 + file |
//! | GET | `/sessions/{id}/stream?since_ms=N` | | server-sent events |
//!
//! Errors carry `{"error": "..."}` with 400 (bad query), 404 (unknown
//! session), 409 (device busy, session not in the right state), 422
//! (invalid annotation or scenario) or 502 (device did not acknowledge).
//!
//! Sessions are backed by a simulated device paced against the wall clock
//! at `speed` × real time.

mod api;
mod device;
mod stream;

pub use api::{router, ErrorBody, SessionSummary, StartRequest};
pub use device::LIVE_TICK;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use phtel::daq::SessionId;
use phtel::DaqHost;
use tokio::sync::{oneshot, watch};

/// Shared service state.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

/// Carries the outcome of the stop command back to the requester.
pub(crate) type StopReply = oneshot::Sender<Result<(), String>>;

struct Inner {
    host: DaqHost,
    /// Bumped whenever a session's log grows or its state changes.
    notify: Mutex<HashMap<SessionId, watch::Sender<u64>>>,
    /// Stop requests for running simulated devices.
    stops: Mutex<HashMap<SessionId, oneshot::Sender<StopReply>>>,
    default_speed: f64,
}

impl AppState {
    pub fn new(host: DaqHost, default_speed: f64) -> Self {
        Self {
            inner: Arc::new(Inner {
                host,
                notify: Mutex::default(),
                stops: Mutex::default(),
                default_speed,
            }),
        }
    }

    pub fn host(&self) -> &DaqHost {
        &self.inner.host
    }

    pub(crate) fn watch(&self, id: &str) -> watch::Receiver<u64> {
        let mut map = self.inner.notify.lock().unwrap();
        map.entry(id.to_owned())
            .or_insert_with(|| watch::channel(0).0)
            .subscribe()
    }

    pub(crate) fn bump(&self, id: &str) {
        let map = self.inner.notify.lock().unwrap();
        if let Some(tx) = map.get(id) {
            tx.send_modify(|v| *v += 1);
        }
    }
}

/// Bind and serve until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
