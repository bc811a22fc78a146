//! Wire messages exchanged over the game sockets.
//!
//! Every message is one JSON object with a `kind` discriminator. The
//! envelope fields (`seq`, `session`, `ts`, `from`) are set by the server on
//! everything it sends; clients only need `seq` and the payload.

use std::collections::BTreeMap;
use std::fmt;

use rdgmap::agent::{Anchor, EmbodimentEvent};
use rdgmap::game::Variant;
use rdgmap::world::CountryId;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(String);

impl SessionId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A connection's place in a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Director,
    /// A human Matcher.
    Matcher,
    /// The wizard console controlling the agent.
    Wizard,
    /// Display-only screen in embodied sessions.
    SharedScreen,
}

impl Role {
    pub const ALL: [Role; 4] = [
        Role::Director,
        Role::Matcher,
        Role::Wizard,
        Role::SharedScreen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Director => "director",
            Role::Matcher => "matcher",
            Role::Wizard => "wizard",
            Role::SharedScreen => "shared_screen",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role {s:?}"))
    }
}

/// Who produced a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Server,
    Director,
    Matcher,
    Wizard,
    /// The autonomous policy.
    Agent,
    SharedScreen,
}

impl From<Role> for Origin {
    fn from(r: Role) -> Self {
        match r {
            Role::Director => Origin::Director,
            Role::Matcher => Origin::Matcher,
            Role::Wizard => Origin::Wizard,
            Role::SharedScreen => Origin::SharedScreen,
        }
    }
}

/// How the Matcher side of a session is played.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatcherMode {
    Human,
    Wizard,
    Autonomous,
}

/// One questionnaire answer: a 5-point Likert value or free text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Likert(u8),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Role,
    Rules,
    Sequence,
    Button,
    Payload,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Payload {
    Join {
        participant: String,
        variant: Variant,
    },
    QueuePos {
        position: usize,
    },
    /// The session id travels in the envelope.
    Paired {
        role: Role,
        variant: Variant,
        token: String,
        map_version: String,
    },
    Start {
        variant: Variant,
        duration_ms: u64,
    },
    /// Director (and optionally wizard) only.
    Target {
        country: CountryId,
    },
    Hover {
        country: Option<CountryId>,
    },
    Select {
        country: CountryId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rule: Option<String>,
    },
    SelectionShown {
        country: CountryId,
        guess: u8,
    },
    /// A repertoire button. Clients send `button` (and `country` for
    /// templated buttons); the server fills in `text`.
    Utterance {
        button: String,
        #[serde(default)]
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        country: Option<CountryId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rule: Option<String>,
    },
    Chat {
        text: String,
    },
    RequestNext {},
    Score {
        score: u32,
        scored: u8,
        correct: bool,
        resolved: u32,
    },
    Embodiment {
        event: EmbodimentEvent,
    },
    Timer {
        remaining_ms: u64,
    },
    End {
        score: u32,
        resolved: u32,
    },
    Questionnaire {
        answers: BTreeMap<String, Answer>,
    },
    /// Wizard adds an anchoring point to the agent's panel.
    Anchor {
        label: String,
        country: CountryId,
    },
    /// The agent's panel as the wizard console shows it.
    Knowledge {
        known: Vec<CountryId>,
        anchors: Vec<Anchor>,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Join { .. } => "JOIN",
            Payload::QueuePos { .. } => "QUEUE_POS",
            Payload::Paired { .. } => "PAIRED",
            Payload::Start { .. } => "START",
            Payload::Target { .. } => "TARGET",
            Payload::Hover { .. } => "HOVER",
            Payload::Select { .. } => "SELECT",
            Payload::SelectionShown { .. } => "SELECTION_SHOWN",
            Payload::Utterance { .. } => "UTTERANCE",
            Payload::Chat { .. } => "CHAT",
            Payload::RequestNext {} => "REQUEST_NEXT",
            Payload::Score { .. } => "SCORE",
            Payload::Embodiment { .. } => "EMBODIMENT",
            Payload::Timer { .. } => "TIMER",
            Payload::End { .. } => "END",
            Payload::Questionnaire { .. } => "QUESTIONNAIRE",
            Payload::Anchor { .. } => "ANCHOR",
            Payload::Knowledge { .. } => "KNOWLEDGE",
            Payload::Error { .. } => "ERROR",
        }
    }

    pub fn is_target(&self) -> bool {
        matches!(self, Payload::Target { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionId>,
    /// Server milliseconds since the session was created.
    #[serde(default)]
    pub ts: u64,
    #[serde(default = "server_origin")]
    pub from: Origin,
    #[serde(flatten)]
    pub payload: Payload,
}

fn server_origin() -> Origin {
    Origin::Server
}

impl WireMessage {
    /// A client-side message: only `seq` and the payload matter.
    pub fn client(seq: u64, payload: Payload) -> Self {
        Self {
            seq,
            session: None,
            ts: 0,
            from: Origin::Server,
            payload,
        }
    }

    pub fn kind(&self) -> &'static str {
        self.payload.kind()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wire messages serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_is_a_flat_discriminator() {
        let m = WireMessage {
            seq: 3,
            session: Some(SessionId::new("s1")),
            ts: 1500,
            from: Origin::Matcher,
            payload: Payload::Select {
                country: "EGY".into(),
                rule: None,
            },
        };
        let json = m.to_json();
        assert_eq!(
            json,
            r#"{"seq":3,"session":"s1","ts":1500,"from":"matcher","kind":"SELECT","country":"EGY"}"#
        );
        assert_eq!(WireMessage::from_json(&json).unwrap(), m);
    }

    #[test]
    fn minimal_client_message_parses() {
        let m = WireMessage::from_json(r#"{"seq":1,"kind":"REQUEST_NEXT"}"#).unwrap();
        assert_eq!(m.payload, Payload::RequestNext {});
        let q = WireMessage::from_json(
            r#"{"seq":2,"kind":"QUESTIONNAIRE","answers":{"q1":4,"q2":"fun"}}"#,
        )
        .unwrap();
        let Payload::Questionnaire { answers } = q.payload else {
            panic!()
        };
        assert_eq!(answers["q1"], Answer::Likert(4));
        assert_eq!(answers["q2"], Answer::Text("fun".into()));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(WireMessage::from_json(r#"{"seq":1,"kind":"TELEPORT"}"#).is_err());
    }
}
