use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use futures_util::{SinkExt, StreamExt};
use http_body_util::BodyExt;
use rdgmap::agent::Repertoire;
use rdgmap::game::Variant;
use rdgmap::world::WorldMap;
use rdgmap_server::transport::{router, serve_on, AppState, ServerConfig};
use rdgmap_server::{Payload, Role, WireMessage};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

fn state(dir: &std::path::Path) -> Arc<AppState> {
    let mut config = ServerConfig::new(SocketAddr::from(([127, 0, 0, 1], 0)), dir);
    config.wizard = false;
    config.autonomous_pool = 1;
    config.tick_ms = 20;
    AppState::new(
        WorldMap::bundled(),
        WorldMap::bundled_bytes().to_vec(),
        Repertoire::bundled(),
        config,
    )
}

type Ws =
    tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn next(ws: &mut Ws) -> WireMessage {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("message within 5 s")
            .expect("socket open")
            .unwrap();
        if let Message::Text(t) = msg {
            return WireMessage::from_json(t.as_str()).unwrap();
        }
    }
}

async fn send(ws: &mut Ws, m: WireMessage) {
    ws.send(Message::Text(m.to_json().into())).await.unwrap();
}

#[tokio::test]
async fn queue_pairs_with_an_agent_and_plays_over_sockets() {
    let dir = tempfile::tempdir().unwrap();
    let st = state(dir.path());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve_on(listener, st.clone()));

    let (mut q, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/queue"))
        .await
        .unwrap();
    send(
        &mut q,
        WireMessage::client(
            1,
            Payload::Join {
                participant: "P1".into(),
                variant: Variant::Web,
            },
        ),
    )
    .await;
    assert_eq!(
        next(&mut q).await.payload,
        Payload::QueuePos { position: 1 }
    );
    let paired = next(&mut q).await;
    let session = paired.session.clone().unwrap();
    let Payload::Paired {
        role,
        token,
        map_version,
        ..
    } = paired.payload
    else {
        panic!("expected PAIRED")
    };
    assert_eq!(role, Role::Director);
    assert_eq!(map_version, WorldMap::bundled().version());

    // Tokens are required to play.
    assert!(
        tokio_tungstenite::connect_async(format!("ws://{addr}/play?token=nope"))
            .await
            .is_err()
    );

    let (mut d, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/play?token={token}"))
        .await
        .unwrap();
    let start = next(&mut d).await;
    assert_eq!(start.kind(), "START");
    assert_eq!(start.seq, 1);
    assert_eq!(start.session.as_ref(), Some(&session));
    assert_eq!(next(&mut d).await.kind(), "TARGET");
    assert_eq!(next(&mut d).await.kind(), "TIMER");

    send(
        &mut d,
        WireMessage::client(
            1,
            Payload::Chat {
                text: "Do you know where Brazil is?".into(),
            },
        ),
    )
    .await;
    let echo = next(&mut d).await;
    assert_eq!(echo.kind(), "CHAT");
    let reply = next(&mut d).await;
    assert!(
        matches!(reply.payload, Payload::Utterance { ref button, .. } if button == "yes_2"),
        "{reply:?}"
    );

    // Out-of-order seq is answered with an error, the socket stays open.
    send(&mut d, WireMessage::client(5, Payload::RequestNext {})).await;
    assert_eq!(next(&mut d).await.kind(), "ERROR");

    // Malformed payload closes the connection after an ERROR.
    d.send(Message::Text("{\"seq\":2,\"kind\":\"TELEPORT\"}".into()))
        .await
        .unwrap();
    assert_eq!(next(&mut d).await.kind(), "ERROR");

    // The questionnaire is only accepted once the game is over.
    let req = Request::post(format!("/api/sessions/{session}/questionnaire"))
        .header("content-type", "application/json")
        .body(Body::from(r#"{"role":"director","answers":{"q1":4}}"#))
        .unwrap();
    let res = router(st.clone()).oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::CONFLICT);

    // The session log exists and has a header line plus events.
    let log = std::fs::read_to_string(dir.path().join(format!("{session}.jsonl"))).unwrap();
    assert!(log.lines().count() >= 5);
}

#[tokio::test]
async fn assets_and_rest_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(state(dir.path()));

    let res = app
        .clone()
        .oneshot(
            Request::get("/assets/world.geojson")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let body = res.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&body[..], WorldMap::bundled_bytes());

    let res = app
        .clone()
        .oneshot(Request::get("/assets/version").body(Body::empty()).unwrap())
        .await
        .unwrap();
    let v: serde_json::Value =
        serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(v["map_version"], WorldMap::bundled().version());

    let res = app
        .clone()
        .oneshot(
            Request::get("/assets/repertoire.json")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    let v: serde_json::Value =
        serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(v["buttons"].as_array().unwrap().len(), 30);

    let req = Request::post("/api/sessions")
        .header("content-type", "application/json")
        .body(Body::from(
            r#"{"variant":"EMBODIED","matcher_mode":"human"}"#,
        ))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let v: serde_json::Value =
        serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    let tokens = v["tokens"].as_object().unwrap();
    assert_eq!(tokens.len(), 3, "director, matcher, shared screen");
    let id = v["session"].as_str().unwrap();

    let res = app
        .clone()
        .oneshot(
            Request::get("/api/sessions/nope/replay")
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::NOT_FOUND);
    let res = app
        .oneshot(
            Request::get(format!("/api/sessions/{id}/replay"))
                .body(Body::empty())
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(
        res.status(),
        StatusCode::OK,
        "an unstarted session replays to an empty game"
    );
}

#[tokio::test]
async fn wizard_console_is_paired_before_the_agent_pool() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServerConfig::new(SocketAddr::from(([127, 0, 0, 1], 0)), dir.path());
    config.autonomous_pool = 1;
    config.tick_ms = 20;
    let st = AppState::new(
        WorldMap::bundled(),
        WorldMap::bundled_bytes().to_vec(),
        Repertoire::bundled(),
        config,
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve_on(listener, st));

    let (mut w, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/wizard?variant=WEB"))
        .await
        .unwrap();
    // Let the console register before the Director queues.
    tokio::time::sleep(Duration::from_millis(100)).await;
    let (mut q, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/queue"))
        .await
        .unwrap();
    send(
        &mut q,
        WireMessage::client(
            1,
            Payload::Join {
                participant: "P9".into(),
                variant: Variant::Web,
            },
        ),
    )
    .await;
    assert_eq!(next(&mut q).await.kind(), "QUEUE_POS");
    let Payload::Paired { token, .. } = next(&mut q).await.payload else {
        panic!()
    };
    let wp = next(&mut w).await;
    assert!(matches!(
        wp.payload,
        Payload::Paired {
            role: Role::Wizard,
            ..
        }
    ));

    let (mut d, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/play?token={token}"))
        .await
        .unwrap();
    assert_eq!(next(&mut d).await.kind(), "START");
    let kinds = [
        next(&mut w).await.kind(),
        next(&mut w).await.kind(),
        next(&mut w).await.kind(),
    ];
    assert_eq!(kinds, ["START", "TIMER", "KNOWLEDGE"]);

    send(
        &mut w,
        WireMessage::client(
            1,
            Payload::Utterance {
                button: "backchannel_1".into(),
                text: String::new(),
                country: None,
                rule: None,
            },
        ),
    )
    .await;
    assert_eq!(next(&mut d).await.kind(), "TARGET");
    assert_eq!(next(&mut d).await.kind(), "TIMER");
    let said = next(&mut d).await;
    assert!(matches!(said.payload, Payload::Utterance { ref text, .. } if text == "Okay."));
}
