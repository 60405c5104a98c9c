use std::time::Duration;

use phtel::sim::SimError;
use phtel::{Rig, Scenario};
use tokio::sync::oneshot;
use tokio::time::{interval, Instant, MissedTickBehavior};

use crate::{AppState, StopReply};

/// Pacing interval of live devices.
pub const LIVE_TICK: Duration = Duration::from_millis(100);

/// Start a simulated device for `scenario` and keep it running until the
/// scenario ends or a stop request arrives.
pub(crate) fn launch(state: &AppState, scenario: Scenario, speed: f64) -> Result<String, SimError> {
    let rig = Rig::start(&scenario, state.host())?;
    let id = rig.session_id().to_owned();
    let (stop_tx, stop_rx) = oneshot::channel();
    state
        .inner
        .stops
        .lock()
        .unwrap()
        .insert(id.clone(), stop_tx);
    state.watch(&id);
    tokio::spawn(run(state.clone(), rig, speed, stop_rx));
    Ok(id)
}

async fn run(state: AppState, mut rig: Rig, speed: f64, mut stop_rx: oneshot::Receiver<StopReply>) {
    let id = rig.session_id().to_owned();
    let started = Instant::now();
    let mut ticker = interval(LIVE_TICK);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let reply = loop {
        tokio::select! {
            request = &mut stop_rx => break request.ok(),
            _ = ticker.tick() => {
                let virtual_ms = (started.elapsed().as_secs_f64() * speed * 1000.0) as u64;
                if let Err(e) = rig.advance(state.host(), virtual_ms) {
                    tracing::error!("session {id}: device failed: {e}");
                    let _ = state.host().mark_stopped(&id);
                    break None;
                }
                state.bump(&id);
                if rig.is_done() {
                    break None;
                }
            }
        }
    };
    state.inner.stops.lock().unwrap().remove(&id);
    let outcome = if state
        .host()
        .active_session(&rig.scenario().device)
        .as_deref()
        == Some(id.as_str())
    {
        rig.finish(state.host())
            .map(|_| ())
            .map_err(|e| e.to_string())
    } else {
        Ok(())
    };
    if let Err(e) = &outcome {
        tracing::warn!("session {id}: stop not acknowledged ({e}); closing anyway");
        let _ = state.host().mark_stopped(&id);
    }
    state.bump(&id);
    if let Some(reply) = reply {
        let _ = reply.send(outcome);
    }
}

/// Ask the device task to stop and wait for it.
pub(crate) async fn stop(state: &AppState, id: &str) -> Option<Result<(), String>> {
    let tx = state.inner.stops.lock().unwrap().remove(id)?;
    let (reply_tx, reply_rx) = oneshot::channel();
    tx.send(reply_tx).ok()?;
    reply_rx.await.ok()
}
