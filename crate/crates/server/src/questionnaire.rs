//! Post-game questionnaires, stored once per session and role.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Answer, Role, SessionId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuestionnaireError {
    #[error("questionnaire for {session}/{role} already submitted")]
    AlreadySubmitted { session: SessionId, role: Role },
    #[error("item {item}: Likert answers must be 1..=5, got {value}")]
    OutOfRange { item: String, value: u8 },
    #[error("no answers")]
    Empty,
    #[error("session {0} has not finished")]
    NotFinished(SessionId),
    #[error("storage: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireRecord {
    pub session: SessionId,
    pub role: Role,
    pub answers: BTreeMap<String, Answer>,
}

pub fn validate(answers: &BTreeMap<String, Answer>) -> Result<(), QuestionnaireError> {
    if answers.is_empty() {
        return Err(QuestionnaireError::Empty);
    }
    for (item, a) in answers {
        if let Answer::Likert(v) = a {
            if !(1..=5).contains(v) {
                return Err(QuestionnaireError::OutOfRange {
                    item: item.clone(),
                    value: *v,
                });
            }
        }
    }
    Ok(())
}

/// Write-once store. With a directory, each record is also written to
/// `<session>.<role>.questionnaire.json` next to the session logs.
#[derive(Debug, Default)]
pub struct QuestionnaireStore {
    dir: Option<PathBuf>,
    records: Mutex<HashMap<(SessionId, Role), QuestionnaireRecord>>,
}

impl QuestionnaireStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            records: Mutex::default(),
        }
    }

    pub fn submit(
        &self,
        session: &SessionId,
        role: Role,
        answers: BTreeMap<String, Answer>,
    ) -> Result<QuestionnaireRecord, QuestionnaireError> {
        validate(&answers)?;
        let mut records = self.records.lock().expect("questionnaire lock");
        let key = (session.clone(), role);
        if records.contains_key(&key) {
            return Err(QuestionnaireError::AlreadySubmitted {
                session: session.clone(),
                role,
            });
        }
        let record = QuestionnaireRecord {
            session: session.clone(),
            role,
            answers,
        };
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{session}.{role}.questionnaire.json"));
            let storage = |e: std::io::Error| match e.kind() {
                std::io::ErrorKind::AlreadyExists => QuestionnaireError::AlreadySubmitted {
                    session: session.clone(),
                    role,
                },
                _ => QuestionnaireError::Storage(format!("{}: {e}", path.display())),
            };
            let mut f = std::fs::File::options()
                .write(true)
                .create_new(true)
                .open(&path)
                .map_err(storage)?;
            f.write_all(&serde_json::to_vec_pretty(&record).expect("record serializes"))
                .map_err(storage)?;
        }
        records.insert(key, record.clone());
        Ok(record)
    }

    pub fn get(&self, session: &SessionId, role: Role) -> Option<QuestionnaireRecord> {
        self.records
            .lock()
            .expect("questionnaire lock")
            .get(&(session.clone(), role))
            .cloned()
    }
}
