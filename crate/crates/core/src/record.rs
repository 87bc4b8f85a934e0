//! Attempt records and the line-delimited transcript format.
//!
//! One record per line, JSON-encoded, UTF-8, stable field names. A record
//! with a present verdict but an absent `extracted_answer` marks an attempt
//! that failed on infrastructure (backend unavailable after retries): the
//! normal verification path always fills `extracted_answer`, possibly with an
//! empty string.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mode::DecodingMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub task_id: String,
    pub attempt_index: u32,
    pub mode: DecodingMode,
    pub solution_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    pub backend_id: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub wall_time_ms: u64,
}

impl AttemptRecord {
    pub fn is_infrastructure_failure(&self) -> bool {
        self.verdict.is_some() && self.extracted_answer.is_none()
    }
}

/// Serialize one record as a transcript line (no trailing newline).
pub fn encode_line(record: &AttemptRecord) -> String {
    serde_json::to_string(record).expect("attempt records always serialize")
}

pub fn append_line<W: Write>(w: &mut W, record: &AttemptRecord) -> std::io::Result<()> {
    writeln!(w, "{}", encode_line(record))
}

/// Read a transcript, tolerating a corrupt *final* line (the tail of a run
/// that was killed mid-write). Returns the records and how many trailing
/// lines were dropped (0 or 1). A malformed line anywhere else is an error.
pub fn read_transcript_lossy(path: &Path) -> std::io::Result<(Vec<AttemptRecord>, usize)> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let mut records = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AttemptRecord>(line) {
            Ok(r) => records.push(r),
            Err(e) if i + 1 == lines.len() => {
                log::warn!("dropping corrupt trailing transcript line: {e}");
                return Ok((records, 1));
            }
            Err(e) => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("transcript line {}: {e}", i + 1),
                ))
            }
        }
    }
    Ok((records, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::{Perturbation, PerturbationKind, PerturbationSource};
    use proptest::prelude::*;

    fn sample_record() -> AttemptRecord {
        AttemptRecord {
            task_id: "t1".into(),
            attempt_index: 3,
            mode: DecodingMode {
                eta_seed: 12345,
                temperature: 0.6,
                xi: Some(Perturbation {
                    kind: PerturbationKind::Idea,
                    text: "use a stack".into(),
                    source: PerturbationSource::Thinker {
                        model_id: "thinker-a".into(),
                    },
                    index: 2,
                }),
            },
            solution_text: "answer body".into(),
            extracted_answer: Some("answer body".into()),
            verdict: Some(true),
            backend_id: "mock0".into(),
            prompt_tokens: 10,
            completion_tokens: 4,
            wall_time_ms: 0,
        }
    }

    #[test]
    fn round_trip() {
        let record = sample_record();
        let line = encode_line(&record);
        let back: AttemptRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(record, back);
    }

    #[test]
    fn stable_field_names() {
        let line = encode_line(&sample_record());
        for field in [
            "task_id",
            "attempt_index",
            "mode",
            "solution_text",
            "extracted_answer",
            "verdict",
            "backend_id",
            "prompt_tokens",
            "completion_tokens",
            "wall_time_ms",
        ] {
            assert!(line.contains(&format!("\"{field}\"")), "missing {field} in {line}");
        }
    }

    #[test]
    fn lossy_read_drops_only_trailing_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcripts.jsonl");
        let full = encode_line(&sample_record());
        let partial = &full[..full.len() / 2];
        std::fs::write(&path, format!("{full}\n{full}\n{partial}")).unwrap();
        let (records, dropped) = read_transcript_lossy(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(dropped, 1);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcripts.jsonl");
        let full = encode_line(&sample_record());
        std::fs::write(&path, format!("not json\n{full}\n")).unwrap();
        assert!(read_transcript_lossy(&path).is_err());
    }

    proptest! {
        #[test]
        fn record_serialization_round_trips(
            task_id in "[a-z0-9_-]{1,12}",
            attempt_index in 0u32..512,
            seed in any::<u64>(),
            temp in 0.0f64..2.0,
            text in ".{0,80}",
            verdict in proptest::option::of(any::<bool>()),
        ) {
            let record = AttemptRecord {
                task_id,
                attempt_index,
                mode: DecodingMode::baseline(seed, temp),
                solution_text: text.clone(),
                extracted_answer: verdict.map(|_| text),
                verdict,
                backend_id: "b".into(),
                prompt_tokens: 1,
                completion_tokens: 2,
                wall_time_ms: 3,
            };
            let line = encode_line(&record);
            let back: AttemptRecord = serde_json::from_str(&line).unwrap();
            prop_assert_eq!(record, back);
        }
    }
}
