//! Corpus statistics, computed only from replayed session logs.

use std::collections::BTreeMap;
use std::path::Path;

use rdgmap::game::Variant;
use rdgmap::world::WorldMap;
use rdgmap_server::{replay, SessionId, SessionLog};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub file: String,
    pub session: SessionId,
    pub variant: Variant,
    pub score: u32,
    pub targets_served: usize,
    pub resolved: u32,
    /// Utterances and chats per resolved target.
    pub dialogue_lengths: Vec<usize>,
    pub guesses: u32,
    pub correct_guesses: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub rows: Vec<CorpusRow>,
    /// Files that could not be read or replayed, with the reason.
    pub warnings: Vec<String>,
    /// Score -> number of games.
    pub score_histogram: BTreeMap<u32, usize>,
    pub mean_score: Option<f64>,
    pub mean_dialogue_length: Option<f64>,
    pub guess_accuracy: Option<f64>,
}

impl CorpusReport {
    pub fn skipped(&self) -> usize {
        self.warnings.len()
    }

    fn finish(mut self) -> Self {
        self.rows.sort_by(|a, b| a.file.cmp(&b.file));
        for r in &self.rows {
            *self.score_histogram.entry(r.score).or_default() += 1;
        }
        let n = self.rows.len();
        if n > 0 {
            self.mean_score =
                Some(self.rows.iter().map(|r| r.score as f64).sum::<f64>() / n as f64);
        }
        let lengths: Vec<usize> = self
            .rows
            .iter()
            .flat_map(|r| r.dialogue_lengths.iter().copied())
            .collect();
        if !lengths.is_empty() {
            self.mean_dialogue_length =
                Some(lengths.iter().sum::<usize>() as f64 / lengths.len() as f64);
        }
        let guesses: u32 = self.rows.iter().map(|r| r.guesses).sum();
        if guesses > 0 {
            let correct: u32 = self.rows.iter().map(|r| r.correct_guesses).sum();
            self.guess_accuracy = Some(correct as f64 / guesses as f64);
        }
        self
    }
}

/// Replays one log text into a row.
pub fn row_from_log(file: &str, text: &str, map: &WorldMap) -> Result<CorpusRow, String> {
    let log = SessionLog::parse(text).map_err(|e| e.to_string())?;
    let r = replay(&log, map).map_err(|e| e.to_string())?;
    Ok(CorpusRow {
        file: file.to_string(),
        session: log.header.session.clone(),
        variant: log.header.variant,
        score: r.score(),
        targets_served: r.served_targets().len(),
        resolved: r.state.resolved_targets(),
        dialogue_lengths: r.dialogue_lengths,
        guesses: r.guesses,
        correct_guesses: r.correct_guesses,
    })
}

/// Aggregates every `*.jsonl` log in `dir`. Logs that fail to read or
/// replay are skipped with a warning.
pub fn corpus_stats(dir: &Path, map: &WorldMap) -> std::io::Result<CorpusReport> {
    let mut report = CorpusReport::default();
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    for path in files {
        let name = path
            .file_name()
            .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        let row = std::fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|text| row_from_log(&name, &text, map));
        match row {
            Ok(r) => report.rows.push(r),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                report.warnings.push(format!("{name}: {e}"));
            }
        }
    }
    Ok(report.finish())
}
