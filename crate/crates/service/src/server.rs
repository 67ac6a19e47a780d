//! WebSocket runtime. One task per connection drives a [`Session`]; the store
//! is shared behind a mutex and only touched from blocking threads.

use std::collections::HashMap;
use std::future::Future;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use assess_store::Store;
use chrono::Utc;
use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;
use tokio::task::JoinSet;
use tokio::time::{interval_at, Instant, Interval, MissedTickBehavior};
use tokio_tungstenite::tungstenite::Message;

use crate::protocol::{ErrorCode, ServerBody, ServerMessage};
use crate::session::{Effect, Event, Session, SessionOptions, Step};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub options: SessionOptions,
    /// Virtual seconds per wall-clock second; 1 for live use.
    pub time_scale: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { options: SessionOptions::default(), time_scale: 1.0 }
    }
}

/// Accept connections until `shutdown` resolves, then abort every running
/// trial, record it, and wait for all sessions to finish.
pub async fn serve(
    listener: TcpListener,
    store: Store,
    config: ServiceConfig,
    shutdown: impl Future<Output = ()>,
) -> std::io::Result<()> {
    let store = Arc::new(Mutex::new(store));
    let (stop_tx, stop_rx) = watch::channel(false);
    let mut sessions = JoinSet::new();
    let mut next_id = 0u64;
    tokio::pin!(shutdown);
    loop {
        tokio::select! {
            _ = &mut shutdown => break,
            accepted = listener.accept() => {
                let (stream, peer) = match accepted {
                    Ok(a) => a,
                    Err(e) => {
                        tracing::warn!("accept failed: {e}");
                        continue;
                    }
                };
                next_id += 1;
                let id = format!("s{next_id}");
                tracing::info!(session = %id, %peer, "connected");
                sessions.spawn(connection(stream, id, store.clone(), config.clone(), stop_rx.clone()));
            }
            Some(_) = sessions.join_next(), if !sessions.is_empty() => {}
        }
    }
    let _ = stop_tx.send(true);
    while sessions.join_next().await.is_some() {}
    Ok(())
}

fn ticker(period_virtual: f64, time_scale: f64) -> Interval {
    let period = Duration::from_secs_f64((period_virtual / time_scale).max(1e-6));
    let mut t = interval_at(Instant::now() + period, period);
    t.set_missed_tick_behavior(MissedTickBehavior::Burst);
    t
}

async fn connection(
    stream: TcpStream,
    id: String,
    store: Arc<Mutex<Store>>,
    config: ServiceConfig,
    mut stop: watch::Receiver<bool>,
) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            tracing::warn!(session = %id, "handshake failed: {e}");
            return;
        }
    };
    let (mut sink, mut source) = ws.split();
    let started = Instant::now();
    let scale = config.time_scale;
    let now = move || started.elapsed().as_secs_f64() * scale;
    let mut session = Session::new(id.clone(), Utc::now(), config.options.clone());
    let mut period = session.tick_period();
    let mut ticks = ticker(period, scale);
    let mut trial_ids: HashMap<u64, i64> = HashMap::new();

    loop {
        let (step, last) = tokio::select! {
            frame = source.next() => match frame {
                Some(Ok(Message::Text(text))) => (session.advance(now(), &Event::Client(text.to_string())), false),
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => (session.advance(now(), &Event::Disconnect), true),
                Some(Ok(_)) => continue,
            },
            _ = ticks.tick(), if session.is_running() => (session.advance(now(), &Event::Tick), false),
            _ = stop.changed() => (session.advance(now(), &Event::Disconnect), true),
        };
        let messages = apply(&store, &mut session, step, &mut trial_ids).await;
        if !last {
            let mut failed = false;
            for m in messages {
                if sink.feed(Message::text(m.to_json())).await.is_err() {
                    failed = true;
                    break;
                }
            }
            if failed || sink.flush().await.is_err() {
                let step = session.advance(now(), &Event::Disconnect);
                apply(&store, &mut session, step, &mut trial_ids).await;
                break;
            }
        }
        if session.is_closed() {
            let _ = sink.close().await;
            break;
        }
        if session.tick_period() != period {
            period = session.tick_period();
            ticks = ticker(period, scale);
        }
    }
    tracing::info!(session = %id, "closed");
}

/// Carry out a step's effects, then fill in store ids on the messages that
/// report them. Store failures become error messages.
async fn apply(
    store: &Arc<Mutex<Store>>,
    session: &mut Session,
    step: Step,
    trial_ids: &mut HashMap<u64, i64>,
) -> Vec<ServerMessage> {
    let Step { mut messages, effects } = step;
    if !effects.is_empty() {
        let known = trial_ids.clone();
        let store = store.clone();
        let results = tokio::task::spawn_blocking(move || {
            let mut store = store.lock().unwrap_or_else(|e| e.into_inner());
            effects.into_iter().map(|effect| run_effect(&mut store, effect, &known)).collect::<Vec<_>>()
        })
        .await
        .unwrap_or_else(|e| vec![Err(format!("store task failed: {e}"))]);
        for r in results {
            match r {
                Ok(Some((trial, id))) => {
                    trial_ids.insert(trial, id);
                }
                Ok(None) => {}
                Err(e) => {
                    tracing::error!(session = %session.id(), "store: {e}");
                    messages.push(session.runtime_error(ErrorCode::StoreFailure, e));
                }
            }
        }
    }
    for m in &mut messages {
        match &mut m.body {
            ServerBody::Summary { trial, trial_id, .. } | ServerBody::TrialAborted { trial, trial_id, .. } => {
                *trial_id = trial_ids.get(trial).copied();
            }
            _ => {}
        }
    }
    messages
}

fn run_effect(store: &mut Store, effect: Effect, known: &HashMap<u64, i64>) -> Result<Option<(u64, i64)>, String> {
    match effect {
        Effect::PersistTrial { trial, bundle } => {
            store.persist_trial(&bundle).map(|id| Some((trial, id))).map_err(|e| e.to_string())
        }
        Effect::TrialAborted { trial, user, started_at, record } => store
            .record_aborted(&user, &started_at, false, &record)
            .map(|id| Some((trial, id)))
            .map_err(|e| e.to_string()),
        Effect::CovariateRecorded { trial, records } => {
            let id = known.get(&trial).ok_or_else(|| format!("trial {trial} was not stored"))?;
            store.add_covariates(*id, &records).map(|_| None).map_err(|e| e.to_string())
        }
    }
}
