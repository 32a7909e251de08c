//! Converter from the MSR e2e dialogue challenge layout into the JSONL
//! dataset schema.
//!
//! Expected input: `<dir>/<domain>_all.tsv`, a tab-separated file with a
//! header row. Columns are located by normalized name: a session/dialogue id
//! column, a speaker column (values containing "agent" or "user"), and a
//! dialogue-act annotation column in `act(slot=value; ...)` notation. An
//! optional KB result-count column is used when present.
//!
//! Dialogue states are reconstructed by replaying the annotations in order:
//! user request/inform slots and agent request/proposed slots accumulate
//! over the dialogue, and each agent turn snapshots the sets along with the
//! current user acts and the previous agent acts.
//!
//! Split assignment comes from `<dir>/<domain>_split.json` (an object with
//! `train`/`valid`/`test` id arrays) when present; otherwise dialogues are
//! assigned 50/15/35 by first appearance.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::frames::{parse_frames, ActFrame};
use super::records::{Speaker, Split, TurnRecord};
use super::state::DialogueState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvertSummary {
    pub total: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

impl fmt::Display for ConvertSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dialogues: total {}, train {}, valid {}, test {}",
            self.total, self.train, self.valid, self.test
        )
    }
}

#[derive(Deserialize, Default)]
struct SplitFile {
    #[serde(default)]
    train: Vec<String>,
    #[serde(default)]
    valid: Vec<String>,
    #[serde(default)]
    test: Vec<String>,
}

pub fn convert_msr(dir: &Path, domain: &str) -> Result<(Vec<TurnRecord>, ConvertSummary)> {
    let tsv_path = dir.join(format!("{domain}_all.tsv"));
    let text = std::fs::read_to_string(&tsv_path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", tsv_path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput(format!("{} is empty", tsv_path.display())))?;
    let cols = locate_columns(header, &tsv_path)?;

    // group rows per session, preserving first-appearance order
    let mut order: Vec<String> = Vec::new();
    let mut by_session: HashMap<String, Vec<RawMessage>> = HashMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let get = |c: usize| fields.get(c).copied().unwrap_or("").trim();
        let session = get(cols.session).to_string();
        if session.is_empty() {
            return Err(Error::BadRecord { line: i + 1, message: "empty session id".into() });
        }
        let speaker_raw = get(cols.speaker).to_ascii_lowercase();
        let speaker = if speaker_raw.contains("agent") {
            Speaker::Agent
        } else if speaker_raw.contains("user") {
            Speaker::User
        } else {
            return Err(Error::BadRecord {
                line: i + 1,
                message: format!("unknown speaker {speaker_raw:?}"),
            });
        };
        let frames = parse_frames(get(cols.acts)).map_err(|e| Error::BadRecord {
            line: i + 1,
            message: format!("bad act annotation: {e}"),
        })?;
        let kb = cols.kb.and_then(|c| get(c).parse::<u64>().ok()).unwrap_or(0);
        let entry = by_session.entry(session.clone()).or_default();
        if entry.is_empty() {
            order.push(session);
        }
        entry.push(RawMessage { speaker, frames, kb });
    }
    if order.is_empty() {
        return Err(Error::InvalidInput(format!("{} contains no dialogues", tsv_path.display())));
    }

    let splits = assign_splits(dir, domain, &order)?;
    let mut records = Vec::new();
    let mut summary = ConvertSummary { total: order.len(), train: 0, valid: 0, test: 0 };
    for session in &order {
        let split = splits[session.as_str()];
        match split {
            Split::Train => summary.train += 1,
            Split::Valid => summary.valid += 1,
            Split::Test => summary.test += 1,
        }
        records.extend(replay_dialogue(session, &by_session[session.as_str()], split));
    }
    Ok((records, summary))
}

struct RawMessage {
    speaker: Speaker,
    frames: Vec<ActFrame>,
    kb: u64,
}

struct Columns {
    session: usize,
    speaker: usize,
    acts: usize,
    kb: Option<usize>,
}

fn normalize(name: &str) -> String {
    name.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase()
}

fn locate_columns(header: &str, path: &Path) -> Result<Columns> {
    let names: Vec<String> = header.split('\t').map(normalize).collect();
    let find = |candidates: &[&str]| {
        names.iter().position(|n| candidates.iter().any(|c| n == c))
    };
    let session = find(&["sessionid", "session", "dialogueid", "dialogid", "id"]);
    let speaker = find(&["messagefrom", "from", "speaker", "msgfrom"]);
    let acts = find(&["dialogact", "dialogueact", "acts", "act", "annotation", "da"]);
    let kb = find(&["kbresultcount", "kbresults", "kbcount", "kb"]);
    match (session, speaker, acts) {
        (Some(session), Some(speaker), Some(acts)) => Ok(Columns { session, speaker, acts, kb }),
        _ => Err(Error::InvalidInput(format!(
            "{}: cannot locate session/speaker/act columns in header {header:?}",
            path.display()
        ))),
    }
}

fn assign_splits(dir: &Path, domain: &str, order: &[String]) -> Result<HashMap<String, Split>> {
    let split_path = dir.join(format!("{domain}_split.json"));
    let mut map = HashMap::new();
    if split_path.exists() {
        let text = std::fs::read_to_string(&split_path)?;
        let file: SplitFile = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("bad split file {}: {e}", split_path.display())))?;
        for id in file.train {
            map.insert(id, Split::Train);
        }
        for id in file.valid {
            map.insert(id, Split::Valid);
        }
        for id in file.test {
            map.insert(id, Split::Test);
        }
        for id in order {
            if !map.contains_key(id) {
                return Err(Error::InvalidInput(format!(
                    "dialogue {id:?} missing from split file {}",
                    split_path.display()
                )));
            }
        }
    } else {
        log::warn!(
            "no {} found; assigning splits 50/15/35 by dialogue order",
            split_path.display()
        );
        let n = order.len();
        let n_train = ((n as f64) * 0.5).round() as usize;
        let n_valid = ((n as f64) * 0.15).round() as usize;
        for (i, id) in order.iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_valid {
                Split::Valid
            } else {
                Split::Test
            };
            map.insert(id.clone(), split);
        }
    }
    Ok(map)
}

fn union_into(set: &mut Vec<String>, names: impl IntoIterator<Item = String>) {
    for name in names {
        if !set.contains(&name) {
            set.push(name);
        }
    }
}

fn replay_dialogue(session: &str, messages: &[RawMessage], split: Split) -> Vec<TurnRecord> {
    let mut user_request: Vec<String> = Vec::new();
    let mut user_inform: Vec<String> = Vec::new();
    let mut agent_request: Vec<String> = Vec::new();
    let mut agent_proposed: Vec<String> = Vec::new();
    let mut prev_agent_acts: Vec<ActFrame> = Vec::new();
    let mut current_user_acts: Vec<ActFrame> = Vec::new();
    let mut records = Vec::new();

    for (turn, msg) in messages.iter().enumerate() {
        match msg.speaker {
            Speaker::User => {
                current_user_acts = msg.frames.clone();
                for frame in &msg.frames {
                    let slots = frame.slots.iter().map(|s| s.name.clone());
                    match frame.act.as_str() {
                        "request" => union_into(&mut user_request, slots),
                        "inform" => union_into(&mut user_inform, slots),
                        _ => {}
                    }
                }
            }
            Speaker::Agent => {}
        }
        let state = DialogueState {
            prev_agent_acts: prev_agent_acts.clone(),
            user_acts: current_user_acts.clone(),
            user_request_slots: user_request.clone(),
            user_inform_slots: user_inform.clone(),
            agent_request_slots: agent_request.clone(),
            agent_proposed_slots: agent_proposed.clone(),
            turn,
            kb_result_count: msg.kb,
        };
        records.push(TurnRecord {
            dialogue_id: session.to_string(),
            turn_index: turn,
            speaker: msg.speaker,
            state,
            kb_result_count: msg.kb,
            target_acts: msg.frames.clone(),
            split,
        });
        if msg.speaker == Speaker::Agent {
            for frame in &msg.frames {
                let slots = frame.slots.iter().map(|s| s.name.clone());
                match frame.act.as_str() {
                    "request" => union_into(&mut agent_request, slots),
                    "inform" => union_into(&mut agent_proposed, slots),
                    _ => {}
                }
            }
            prev_agent_acts = msg.frames.clone();
            current_user_acts = Vec::new();
        }
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_fixture(dir: &Path, with_split: bool) {
        let tsv = "\
session_id\tMessage.From\tdialog_act\tkb_result_count
s1\tuser\trequest(moviename; theater)\t0
s1\tagent\tinform(moviename=Zootopia) request(city)\t5
s1\tuser\tinform(city=Seattle)\t0
s1\tagent\tinform(theater=AMC)\t2
s2\tuser\trequest(ticket)\t0
s2\tagent\tinform(taskcomplete=yes)\t1
";
        std::fs::write(dir.join("movie_all.tsv"), tsv).unwrap();
        if with_split {
            std::fs::write(
                dir.join("movie_split.json"),
                r#"{"train":["s1"],"valid":[],"test":["s2"]}"#,
            )
            .unwrap();
        }
    }

    #[test]
    fn converts_and_replays_state() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), true);
        let (records, summary) = convert_msr(dir.path(), "movie").unwrap();
        assert_eq!(summary, ConvertSummary { total: 2, train: 1, valid: 0, test: 1 });
        assert_eq!(records.len(), 6);

        // second agent turn of s1: accumulated state
        let rec = &records[3];
        assert_eq!(rec.speaker, Speaker::Agent);
        assert_eq!(rec.turn_index, 3);
        assert_eq!(rec.kb_result_count, 2);
        assert_eq!(rec.state.user_request_slots, vec!["moviename", "theater"]);
        assert_eq!(rec.state.user_inform_slots, vec!["city"]);
        assert_eq!(rec.state.agent_request_slots, vec!["city"]);
        assert_eq!(rec.state.agent_proposed_slots, vec!["moviename"]);
        assert_eq!(rec.state.prev_agent_acts.len(), 2);
        assert_eq!(rec.state.user_acts[0].act, "inform");
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = convert_msr(dir.path(), "movie").unwrap_err();
        assert!(err.is_input_error());
    }

    #[test]
    fn ratio_split_when_no_split_file() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), false);
        let (_, summary) = convert_msr(dir.path(), "movie").unwrap();
        assert_eq!(summary.total, 2);
        assert_eq!(summary.train + summary.valid + summary.test, 2);
    }

    #[test]
    fn conversion_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path(), true);
        let (a, _) = convert_msr(dir.path(), "movie").unwrap();
        let (b, _) = convert_msr(dir.path(), "movie").unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        crate::data::write_dataset(&mut buf_a, &a).unwrap();
        crate::data::write_dataset(&mut buf_b, &b).unwrap();
        assert_eq!(buf_a, buf_b);
    }
}
