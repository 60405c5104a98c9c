use std::convert::Infallible;

use axum::extract::{Path, Query, State};
use axum::http::HeaderMap;
use axum::response::sse::{Event, KeepAlive, Sse};
use futures::{Stream, StreamExt};
use phtel::daq::{SessionEvent, SharedSession};
use serde::Deserialize;
use tokio::sync::watch;

use crate::api::ApiError;
use crate::AppState;

#[derive(Debug, Deserialize)]
pub(crate) struct StreamQuery {
    since_ms: Option<u32>,
}

struct Cursor {
    session: SharedSession,
    rx: watch::Receiver<u64>,
    next: usize,
    since_ms: Option<u32>,
    done: bool,
}

fn to_event(e: &SessionEvent) -> Event {
    let (name, id) = match e {
        SessionEvent::Sample(s) => ("sample", Some(s.t_ms)),
        SessionEvent::Gap(g) => ("gap", Some(g.t_ms)),
        SessionEvent::Annotation(_) => ("annotation", None),
    };
    let ev = Event::default()
        .event(name)
        .data(serde_json::to_string(e).expect("event serialises"));
    match id {
        Some(t) => ev.id(t.to_string()),
        None => ev,
    }
}

/// Replayed and live session events as server-sent events.
///
/// Each event's data is the same JSON record as in a JSONL export. Samples
/// and gaps carry their device time as event id; reconnecting clients pass
/// it back as `since_ms` (or `Last-Event-ID`) and receive only newer
/// samples and gaps. Annotations are always replayed in full. A stopped
/// session ends with an `end` event carrying the session info.
pub(crate) async fn stream(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let session = state.host().session(&id)?;
    let since_ms = q.since_ms.or_else(|| {
        headers
            .get("last-event-id")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok())
    });
    let cursor = Cursor {
        session,
        rx: state.watch(&id),
        next: 0,
        since_ms,
        done: false,
    };
    let events = futures::stream::unfold(cursor, |mut c| async move {
        if c.done {
            return None;
        }
        loop {
            let (batch, stopped) = {
                let s = c.session.read().unwrap();
                let fresh = &s.events()[c.next..];
                c.next += fresh.len();
                let batch: Vec<Event> = fresh
                    .iter()
                    .filter(|e| match (e, c.since_ms) {
                        (SessionEvent::Sample(r), Some(t)) => r.t_ms > t,
                        (SessionEvent::Gap(g), Some(t)) => g.t_ms > t,
                        _ => true,
                    })
                    .map(to_event)
                    .collect();
                let stopped = (!s.is_recording()).then(|| s.info.clone());
                (batch, stopped)
            };
            if !batch.is_empty() {
                return Some((batch, c));
            }
            if let Some(info) = stopped {
                c.done = true;
                let end = Event::default()
                    .event("end")
                    .data(serde_json::to_string(&info).expect("info serialises"));
                return Some((vec![end], c));
            }
            if c.rx.changed().await.is_err() {
                return None;
            }
        }
    });
    let events = events.flat_map(futures::stream::iter).map(Ok);
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}
