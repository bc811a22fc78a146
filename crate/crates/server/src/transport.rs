//! Socket and HTTP front end.
//!
//! Each session runs on its own task, which owns its [`SessionCore`] and
//! serializes everything that touches it. Connections talk to that task
//! over channels. The lobby and token table sit behind one mutex.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::RngCore;
use rdgmap::agent::{FileMemoryStore, InMemoryStore, MemoryStore, Repertoire};
use rdgmap::game::Variant;
use rdgmap::world::WorldMap;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

use crate::lobby::{Matchmaker, ReadySignal, Slot, SlotPool};
use crate::log::{replay, FileLog, SessionLog};
use crate::protocol::{
    Answer, ErrorCode, MatcherMode, Origin, Payload, Role, SessionId, WireMessage,
};
use crate::questionnaire::QuestionnaireStore;
use crate::session::{Delivery, SessionConfig, SessionCore};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub addr: SocketAddr,
    pub log_dir: PathBuf,
    /// Variant a wizard console serves when it does not ask for one.
    pub default_variant: Variant,
    /// Where the browser client's built files live, if served.
    pub static_dir: Option<PathBuf>,
    /// Cross-session agent memory file; in-memory when absent.
    pub memory_path: Option<PathBuf>,
    pub autonomous_pool: usize,
    pub wizard: bool,
    pub tick_ms: u64,
    /// Session template: variant defaults, reactions, target visibility.
    pub wizard_sees_target: bool,
}

impl ServerConfig {
    pub fn new(addr: SocketAddr, log_dir: impl Into<PathBuf>) -> Self {
        Self {
            addr,
            log_dir: log_dir.into(),
            default_variant: Variant::Web,
            static_dir: None,
            memory_path: None,
            autonomous_pool: 1,
            wizard: true,
            tick_ms: 250,
            wizard_sees_target: false,
        }
    }
}

enum Command {
    Connect {
        role: Role,
        tx: mpsc::UnboundedSender<String>,
    },
    Disconnect {
        role: Role,
    },
    Inbound {
        role: Role,
        msg: WireMessage,
    },
}

struct SessionHandle {
    tx: mpsc::UnboundedSender<Command>,
    finished: bool,
    log_path: PathBuf,
    director: Option<String>,
    slot: Option<Slot>,
    unclaimed: BTreeMap<Role, String>,
}

#[derive(Default)]
struct Registry {
    lobby: Matchmaker,
    slots: Option<SlotPool>,
    sessions: HashMap<SessionId, SessionHandle>,
    tokens: HashMap<String, (SessionId, Role)>,
    queue_conns: HashMap<String, mpsc::UnboundedSender<String>>,
    wizard_waiting: Option<(Variant, oneshot::Sender<(SessionId, String)>)>,
    counter: u64,
}

pub struct AppState {
    map: &'static WorldMap,
    map_bytes: Vec<u8>,
    repertoire: &'static Repertoire,
    config: ServerConfig,
    memory: Arc<dyn MemoryStore>,
    questionnaires: QuestionnaireStore,
    registry: Mutex<Registry>,
    clock: Instant,
}

impl AppState {
    pub fn new(
        map: &'static WorldMap,
        map_bytes: Vec<u8>,
        repertoire: &'static Repertoire,
        config: ServerConfig,
    ) -> Arc<Self> {
        let memory: Arc<dyn MemoryStore> = match &config.memory_path {
            Some(p) => Arc::new(FileMemoryStore::new(p.clone())),
            None => Arc::new(InMemoryStore::new()),
        };
        let registry = Registry {
            slots: Some(SlotPool::new(config.wizard, config.autonomous_pool)),
            ..Registry::default()
        };
        Arc::new(Self {
            map,
            map_bytes,
            repertoire,
            questionnaires: QuestionnaireStore::in_dir(config.log_dir.clone()),
            config,
            memory,
            registry: Mutex::new(registry),
            clock: Instant::now(),
        })
    }

    fn now(&self) -> u64 {
        self.clock.elapsed().as_millis() as u64
    }
}

fn token() -> String {
    let mut b = [0u8; 16];
    rand::thread_rng().fill_bytes(&mut b);
    hex::encode(b)
}

/// Builds the router. Socket endpoints: `/queue`, `/wizard`, `/play`.
pub fn router(state: Arc<AppState>) -> Router {
    let mut app = Router::new()
        .route("/queue", get(queue_socket))
        .route("/wizard", get(wizard_socket))
        .route("/play", get(play_socket))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/join", post(join_session))
        .route(
            "/api/sessions/{id}/questionnaire",
            post(submit_questionnaire),
        )
        .route("/api/sessions/{id}/replay", get(replay_session))
        .route("/assets/world.geojson", get(map_asset))
        .route("/assets/repertoire.json", get(repertoire_asset))
        .route("/assets/version", get(version_asset));
    if let Some(dir) = &state.config.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.with_state(state)
}

/// Binds `config.addr` and serves until the process ends.
pub async fn serve(state: Arc<AppState>) -> std::io::Result<()> {
    std::fs::create_dir_all(&state.config.log_dir)?;
    let listener = tokio::net::TcpListener::bind(state.config.addr).await?;
    serve_on(listener, state).await
}

/// Serves on an already bound listener.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

struct Created {
    session: SessionId,
    tokens: BTreeMap<Role, String>,
}

fn spawn_session(
    state: &Arc<AppState>,
    reg: &mut Registry,
    variant: Variant,
    mode: MatcherMode,
    director: Option<String>,
    slot: Option<Slot>,
) -> Result<Created, String> {
    reg.counter += 1;
    let id = SessionId::new(format!("s{:05}-{}", reg.counter, &token()[..6]));
    let mut config = SessionConfig::new(variant, mode, rand::random());
    if let Some(d) = &director {
        config.director = d.clone();
    }
    config.wizard_sees_target = state.config.wizard_sees_target;
    let log_path = state.config.log_dir.join(format!("{id}.jsonl"));
    let sink = FileLog::create(&log_path).map_err(|e| e.to_string())?;
    let roles = config.roles();
    let needed: Vec<Role> = roles
        .iter()
        .copied()
        .filter(|r| *r != Role::SharedScreen)
        .collect();
    let core = SessionCore::new(
        id.clone(),
        config,
        state.map,
        state.repertoire,
        Box::new(sink),
        Some(state.memory.clone()),
    )
    .map_err(|e| e.to_string())?;
    let (tx, rx) = mpsc::unbounded_channel();
    let mut tokens = BTreeMap::new();
    for r in roles {
        let t = token();
        reg.tokens.insert(t.clone(), (id.clone(), r));
        tokens.insert(r, t);
    }
    reg.sessions.insert(
        id.clone(),
        SessionHandle {
            tx,
            finished: false,
            log_path,
            director,
            slot,
            unclaimed: tokens.clone(),
        },
    );
    tokio::spawn(run_session(state.clone(), core, rx, needed));
    Ok(Created {
        session: id,
        tokens,
    })
}

async fn run_session(
    state: Arc<AppState>,
    mut core: SessionCore<'static>,
    mut rx: mpsc::UnboundedReceiver<Command>,
    needed: Vec<Role>,
) {
    let t0 = Instant::now();
    let now = || t0.elapsed().as_millis() as u64;
    let mut conns: HashMap<Role, mpsc::UnboundedSender<String>> = HashMap::new();
    let mut started = false;
    let mut reported = false;
    let mut interval = tokio::time::interval(Duration::from_millis(state.config.tick_ms.max(10)));
    let deliver = |conns: &HashMap<Role, mpsc::UnboundedSender<String>>, out: Vec<Delivery>| {
        for d in out {
            if let Some(tx) = conns.get(&d.to) {
                let _ = tx.send(d.message.to_json());
            }
        }
    };
    loop {
        let result = tokio::select! {
            cmd = rx.recv() => match cmd {
                None => break,
                Some(Command::Connect { role, tx }) => {
                    conns.insert(role, tx);
                    if !started && needed.iter().all(|r| conns.contains_key(r)) {
                        started = true;
                        core.start(now())
                    } else {
                        Ok(Vec::new())
                    }
                }
                Some(Command::Disconnect { role }) => {
                    conns.remove(&role);
                    Ok(Vec::new())
                }
                Some(Command::Inbound { role, msg }) => core.handle(role, msg, now()),
            },
            _ = interval.tick() => if started { core.tick(now()) } else { Ok(Vec::new()) },
        };
        match result {
            Ok(out) => deliver(&conns, out),
            Err(e) => {
                log::error!("session {}: {e}; closing", core.id());
                break;
            }
        }
        if core.is_finished() && !reported {
            reported = true;
            session_ended(&state, core.id());
        }
        if reported && conns.is_empty() {
            break;
        }
    }
    if !reported {
        session_ended(&state, core.id());
    }
}

fn session_ended(state: &Arc<AppState>, id: &SessionId) {
    let mut reg = state.registry.lock().expect("registry lock");
    let Some(h) = reg.sessions.get_mut(id) else {
        return;
    };
    if h.finished {
        return;
    }
    h.finished = true;
    let (director, slot) = (h.director.clone(), h.slot);
    if let Some(d) = director {
        reg.lobby.release(&d);
    }
    if let (Some(slot), Some(pool)) = (slot, reg.slots.as_mut()) {
        pool.give_back(slot);
    }
    try_pair(state, &mut reg);
}

fn server_message(payload: Payload) -> String {
    in_session(None, payload)
}

fn in_session(session: Option<SessionId>, payload: Payload) -> String {
    WireMessage {
        seq: 0,
        session,
        ts: 0,
        from: Origin::Server,
        payload,
    }
    .to_json()
}

/// Pairs waiting Directors with free Matchers: the wizard first, then the
/// autonomous pool.
fn try_pair(state: &Arc<AppState>, reg: &mut Registry) {
    loop {
        let wizard_variant = reg.wizard_waiting.as_ref().map(|(v, _)| *v);
        let signal = match wizard_variant {
            Some(v)
                if reg.lobby.len(v) > 0
                    && reg
                        .slots
                        .as_ref()
                        .is_some_and(|p| p.any_free() == Some(Slot::Wizard)) =>
            {
                ReadySignal {
                    slot: Slot::Wizard,
                    variant: v,
                }
            }
            _ => {
                let free = reg.slots.as_ref().is_some_and(|p| {
                    let mut p = *p;
                    p.take(Slot::Autonomous)
                });
                let variant = [Variant::Web, Variant::Embodied]
                    .into_iter()
                    .find(|v| reg.lobby.len(*v) > 0);
                match (free, variant) {
                    (true, Some(variant)) => ReadySignal {
                        slot: Slot::Autonomous,
                        variant,
                    },
                    _ => return,
                }
            }
        };
        let Some(entry) = reg.lobby.pair(signal) else {
            return;
        };
        reg.slots.as_mut().map(|p| p.take(signal.slot));
        let mode = match signal.slot {
            Slot::Wizard => MatcherMode::Wizard,
            Slot::Autonomous => MatcherMode::Autonomous,
        };
        let created = match spawn_session(
            state,
            reg,
            signal.variant,
            mode,
            Some(entry.participant.clone()),
            Some(signal.slot),
        ) {
            Ok(c) => c,
            Err(e) => {
                log::error!("could not create session: {e}");
                reg.slots.as_mut().map(|p| p.give_back(signal.slot));
                reg.lobby.release(&entry.participant);
                return;
            }
        };
        let paired = |role: Role, tokens: &BTreeMap<Role, String>| {
            in_session(
                Some(created.session.clone()),
                Payload::Paired {
                    role,
                    variant: signal.variant,
                    token: tokens[&role].clone(),
                    map_version: state.map.version().to_string(),
                },
            )
        };
        if let Some(tx) = reg.queue_conns.remove(&entry.participant) {
            let _ = tx.send(paired(Role::Director, &created.tokens));
        }
        if signal.slot == Slot::Wizard {
            if let Some((_, done)) = reg.wizard_waiting.take() {
                let _ = done.send((
                    created.session.clone(),
                    created.tokens[&Role::Wizard].clone(),
                ));
            }
        }
        if let Some(h) = reg.sessions.get_mut(&created.session) {
            h.unclaimed.remove(&Role::Director);
            h.unclaimed.remove(&Role::Wizard);
        }
        for e in reg
            .lobby
            .waiting(signal.variant)
            .enumerate()
            .collect::<Vec<_>>()
        {
            if let Some(tx) = reg.queue_conns.get(&e.1.participant) {
                let _ = tx.send(server_message(Payload::QueuePos { position: e.0 + 1 }));
            }
        }
    }
}

async fn queue_socket(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    ws.on_upgrade(move |socket| queue_conn(socket, state))
}

async fn queue_conn(mut socket: WebSocket, state: Arc<AppState>) {
    let Some(Ok(Message::Text(first))) = socket.recv().await else {
        return;
    };
    let (participant, variant) = match WireMessage::from_json(first.as_str()).map(|m| m.payload) {
        Ok(Payload::Join {
            participant,
            variant,
        }) => (participant, variant),
        _ => {
            let _ = socket
                .send(Message::Text(
                    server_message(Payload::Error {
                        code: ErrorCode::Payload,
                        message: "expected JOIN".into(),
                    })
                    .into(),
                ))
                .await;
            return;
        }
    };
    let (tx, mut rx) = mpsc::unbounded_channel();
    {
        let mut reg = state.registry.lock().expect("registry lock");
        match reg.lobby.enqueue(&participant, variant, state.now()) {
            Ok(pos) => {
                let _ = tx.send(server_message(Payload::QueuePos { position: pos }));
                reg.queue_conns.insert(participant.clone(), tx);
                try_pair(&state, &mut reg);
            }
            Err(e) => {
                let _ = tx.send(server_message(Payload::Error {
                    code: ErrorCode::Rules,
                    message: e.to_string(),
                }));
            }
        }
    }
    loop {
        tokio::select! {
            out = rx.recv() => {
                let Some(text) = out else { break };
                let paired = text.contains("\"kind\":\"PAIRED\"");
                if socket.send(Message::Text(text.into())).await.is_err() || paired {
                    return;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                _ => {}
            },
        }
    }
    let mut reg = state.registry.lock().expect("registry lock");
    reg.queue_conns.remove(&participant);
    if reg.lobby.leave(&participant).is_ok() {
        for (i, e) in reg.lobby.waiting(variant).enumerate() {
            if let Some(tx) = reg.queue_conns.get(&e.participant) {
                let _ = tx.send(server_message(Payload::QueuePos { position: i + 1 }));
            }
        }
    }
}

#[derive(Deserialize)]
struct WizardParams {
    variant: Option<Variant>,
}

async fn wizard_socket(
    ws: WebSocketUpgrade,
    Query(p): Query<WizardParams>,
    State(state): State<Arc<AppState>>,
) -> Response {
    let variant = p.variant.unwrap_or(state.config.default_variant);
    ws.on_upgrade(move |socket| wizard_conn(socket, state, variant))
}

/// The wizard's console connection doubles as its ready signal: while open
/// and idle, it is paired with the next Director in the queue.
async fn wizard_conn(mut socket: WebSocket, state: Arc<AppState>, variant: Variant) {
    loop {
        let (done_tx, mut done_rx) = oneshot::channel();
        let taken = {
            let mut reg = state.registry.lock().expect("registry lock");
            if reg.wizard_waiting.is_some() {
                true
            } else {
                reg.wizard_waiting = Some((variant, done_tx));
                try_pair(&state, &mut reg);
                false
            }
        };
        if taken {
            let _ = socket
                .send(Message::Text(
                    server_message(Payload::Error {
                        code: ErrorCode::Role,
                        message: "a wizard is already connected".into(),
                    })
                    .into(),
                ))
                .await;
            return;
        }
        let paired = loop {
            tokio::select! {
                r = &mut done_rx => break r.ok(),
                incoming = socket.recv() => match incoming {
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break None,
                    _ => {}
                },
            }
        };
        let Some((session, token)) = paired else {
            state.registry.lock().expect("registry lock").wizard_waiting = None;
            return;
        };
        let msg = in_session(
            Some(session.clone()),
            Payload::Paired {
                role: Role::Wizard,
                variant,
                token,
                map_version: state.map.version().to_string(),
            },
        );
        if socket.send(Message::Text(msg.into())).await.is_err() {
            return;
        }
        if !pump(&mut socket, &state, &session, Role::Wizard, true).await {
            return;
        }
    }
}

#[derive(Deserialize)]
struct PlayParams {
    token: String,
}

async fn play_socket(
    ws: WebSocketUpgrade,
    Query(p): Query<PlayParams>,
    State(state): State<Arc<AppState>>,
) -> Response {
    let found = state
        .registry
        .lock()
        .expect("registry lock")
        .tokens
        .get(&p.token)
        .cloned();
    match found {
        Some((session, role)) if role != Role::Wizard => {
            ws.on_upgrade(move |mut socket| async move {
                pump(&mut socket, &state, &session, role, false).await;
            })
        }
        _ => (StatusCode::UNAUTHORIZED, "unknown token").into_response(),
    }
}

/// Connects `socket` to a session as `role` and relays in both directions.
/// Returns whether the socket is still open.
async fn pump(
    socket: &mut WebSocket,
    state: &Arc<AppState>,
    session: &SessionId,
    role: Role,
    until_end: bool,
) -> bool {
    let Some(session_tx) = state
        .registry
        .lock()
        .expect("registry lock")
        .sessions
        .get(session)
        .map(|h| h.tx.clone())
    else {
        return true;
    };
    let (tx, mut rx) = mpsc::unbounded_channel();
    if session_tx.send(Command::Connect { role, tx }).is_err() {
        return true;
    }
    let open = loop {
        tokio::select! {
            out = rx.recv() => {
                let Some(text) = out else { break true };
                let end = text.contains("\"kind\":\"END\"");
                if socket.send(Message::Text(text.into())).await.is_err() {
                    break false;
                }
                if end && until_end {
                    break true;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(t))) => match WireMessage::from_json(t.as_str()) {
                    Ok(msg) => {
                        let _ = session_tx.send(Command::Inbound { role, msg });
                    }
                    Err(e) => {
                        let err = server_message(Payload::Error { code: ErrorCode::Payload, message: e.to_string() });
                        let _ = socket.send(Message::Text(err.into())).await;
                        let _ = socket.send(Message::Close(None)).await;
                        break false;
                    }
                },
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break false,
                _ => {}
            },
        }
    };
    let _ = session_tx.send(Command::Disconnect { role });
    open
}

#[derive(Debug, Error)]
enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

use thiserror::Error;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (
            status,
            Json(serde_json::json!({ "error": self.to_string() })),
        )
            .into_response()
    }
}

#[derive(Deserialize)]
struct CreateRequest {
    variant: Variant,
    matcher_mode: MatcherMode,
}

#[derive(Serialize, Deserialize)]
pub struct CreateResponse {
    pub session: SessionId,
    pub tokens: BTreeMap<Role, String>,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateRequest>,
) -> Result<Json<CreateResponse>, ApiError> {
    let mut reg = state.registry.lock().expect("registry lock");
    let created = spawn_session(&state, &mut reg, req.variant, req.matcher_mode, None, None)
        .map_err(ApiError::Internal)?;
    if let Some(h) = reg.sessions.get_mut(&created.session) {
        h.unclaimed.clear();
    }
    Ok(Json(CreateResponse {
        session: created.session,
        tokens: created.tokens,
    }))
}

#[derive(Deserialize)]
struct JoinRequest {
    role: Role,
}

async fn join_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<JoinRequest>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let mut reg = state.registry.lock().expect("registry lock");
    let h = reg
        .sessions
        .get_mut(&SessionId::new(id.clone()))
        .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))?;
    let token = h
        .unclaimed
        .remove(&req.role)
        .ok_or_else(|| ApiError::Conflict(format!("{} is not open in {id}", req.role)))?;
    Ok(Json(
        serde_json::json!({ "session": id, "role": req.role, "token": token }),
    ))
}

#[derive(Deserialize)]
struct QuestionnaireRequest {
    role: Role,
    answers: BTreeMap<String, Answer>,
}

async fn submit_questionnaire(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<QuestionnaireRequest>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let session = SessionId::new(id.clone());
    let finished = state
        .registry
        .lock()
        .expect("registry lock")
        .sessions
        .get(&session)
        .map(|h| h.finished)
        .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))?;
    if !finished {
        return Err(ApiError::Conflict(format!("session {id} has not finished")));
    }
    use crate::questionnaire::QuestionnaireError as Q;
    match state.questionnaires.submit(&session, req.role, req.answers) {
        Ok(r) => Ok(Json(serde_json::to_value(r).expect("record serializes"))),
        Err(e @ Q::AlreadySubmitted { .. }) => Err(ApiError::Conflict(e.to_string())),
        Err(e @ Q::Storage(_)) => Err(ApiError::Internal(e.to_string())),
        Err(e) => Err(ApiError::BadRequest(e.to_string())),
    }
}

#[derive(Serialize, Deserialize)]
pub struct ReplaySummary {
    pub session: SessionId,
    pub variant: Variant,
    pub score: u32,
    pub resolved: u32,
    pub served_targets: Vec<String>,
}

async fn replay_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<ReplaySummary>, ApiError> {
    let path = state
        .registry
        .lock()
        .expect("registry lock")
        .sessions
        .get(&SessionId::new(id.clone()))
        .map(|h| h.log_path.clone())
        .unwrap_or_else(|| state.config.log_dir.join(format!("{id}.jsonl")));
    let log = SessionLog::read(&path).map_err(|e| ApiError::NotFound(e.to_string()))?;
    let r = replay(&log, state.map).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(ReplaySummary {
        session: log.header.session.clone(),
        variant: log.header.variant,
        score: r.score(),
        resolved: r.state.resolved_targets(),
        served_targets: r.served_targets().iter().map(|c| c.to_string()).collect(),
    }))
}

async fn map_asset(State(state): State<Arc<AppState>>) -> Response {
    (
        [(header::CONTENT_TYPE, "application/geo+json")],
        state.map_bytes.clone(),
    )
        .into_response()
}

async fn repertoire_asset(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let buttons: Vec<_> = state
        .repertoire
        .available(Variant::Embodied)
        .cloned()
        .collect();
    Json(serde_json::json!({ "version": state.repertoire.version(), "buttons": buttons }))
}

async fn version_asset(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "map_version": state.map.version(),
        "repertoire_version": state.repertoire.version(),
    }))
}
