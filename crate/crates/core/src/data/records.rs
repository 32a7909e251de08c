//! Dataset records and the JSONL file format: one object per line with
//! fields {dialogue_id, turn_index, speaker, state, kb_result_count,
//! target_acts, split}.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::frames::ActFrame;
use super::state::{DialogueState, MAX_TURN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Agent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Valid,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "valid" | "dev" | "validation" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub speaker: Speaker,
    pub state: DialogueState,
    pub kb_result_count: u64,
    pub target_acts: Vec<ActFrame>,
    #[serde(default)]
    pub split: Split,
}

/// Loads and validates a JSONL dataset. Turn indices must increase within a
/// dialogue and a dialogue must not straddle splits.
pub fn load_dataset<P: AsRef<Path>>(path: P) -> Result<Vec<TurnRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut last_seen: std::collections::HashMap<String, (usize, Split)> =
        std::collections::HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut rec: TurnRecord = serde_json::from_str(&line)
            .map_err(|e| Error::BadRecord { line: lineno, message: e.to_string() })?;
        rec.state.turn = rec.turn_index.min(MAX_TURN);
        rec.state.kb_result_count = rec.kb_result_count;
        match last_seen.get(&rec.dialogue_id) {
            Some(&(last_idx, split)) => {
                if rec.turn_index <= last_idx {
                    return Err(Error::BadRecord {
                        line: lineno,
                        message: format!(
                            "turn_index {} not increasing within dialogue {:?}",
                            rec.turn_index, rec.dialogue_id
                        ),
                    });
                }
                if split != rec.split {
                    return Err(Error::BadRecord {
                        line: lineno,
                        message: format!("dialogue {:?} spans multiple splits", rec.dialogue_id),
                    });
                }
            }
            None => {}
        }
        last_seen.insert(rec.dialogue_id.clone(), (rec.turn_index, rec.split));
        records.push(rec);
    }
    Ok(records)
}

pub fn write_dataset<W: Write>(mut w: W, records: &[TurnRecord]) -> Result<()> {
    for rec in records {
        let mut line = serde_json::to_string(rec)?;
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Records of one split, cloned out in file order.
pub fn filter_split(records: &[TurnRecord], split: Split) -> Vec<TurnRecord> {
    records.iter().filter(|r| r.split == split).cloned().collect()
}

/// Groups records by dialogue, preserving first-appearance order.
pub fn group_dialogues(records: &[TurnRecord]) -> Vec<(&str, Vec<&TurnRecord>)> {
    let mut order: Vec<&str> = Vec::new();
    let mut map: std::collections::HashMap<&str, Vec<&TurnRecord>> = std::collections::HashMap::new();
    for rec in records {
        let entry = map.entry(&rec.dialogue_id).or_default();
        if entry.is_empty() {
            order.push(&rec.dialogue_id);
        }
        entry.push(rec);
    }
    order.into_iter().map(|id| (id, map.remove(id).unwrap())).collect()
}
