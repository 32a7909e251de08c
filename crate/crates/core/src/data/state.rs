//! The six-section dialogue state consumed by every model, its serialized
//! token form, and the two-feature KB vector.

use serde::{Deserialize, Serialize};

use super::frames::ActFrame;
use super::vocab::Vocabularies;
use super::{STATE_MARKERS, UNK_TOKEN};

/// Turn numbers are normalized by this bound in the KB feature vector.
pub const MAX_TURN: usize = 40;

/// Dialogue state at one agent decision point. The `turn` and
/// `kb_result_count` fields are copied in from the surrounding record; the
/// on-disk state object holds only the six sections.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    #[serde(default)]
    pub prev_agent_acts: Vec<ActFrame>,
    #[serde(default)]
    pub user_acts: Vec<ActFrame>,
    #[serde(default)]
    pub user_request_slots: Vec<String>,
    #[serde(default)]
    pub user_inform_slots: Vec<String>,
    #[serde(default)]
    pub agent_request_slots: Vec<String>,
    #[serde(default)]
    pub agent_proposed_slots: Vec<String>,
    #[serde(skip)]
    pub turn: usize,
    #[serde(skip)]
    pub kb_result_count: u64,
}

impl DialogueState {
    pub fn kb_features(&self) -> KbFeatures {
        KbFeatures::new(self.kb_result_count, self.turn)
    }
}

/// `[ln(1 + kb results), turn / 40]`; the turn component is clamped to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KbFeatures {
    pub values: [f64; 2],
}

impl KbFeatures {
    pub fn new(kb_result_count: u64, turn: usize) -> Self {
        KbFeatures {
            values: [
                (1.0 + kb_result_count as f64).ln(),
                turn.min(MAX_TURN) as f64 / MAX_TURN as f64,
            ],
        }
    }
}

/// Deterministic token-id serialization: each section marker followed by the
/// section's act/slot tokens with slots in canonical vocabulary order.
/// Tokens outside the vocabulary map to `<unk>`.
pub fn serialize_state(state: &DialogueState, vocabs: &Vocabularies) -> Vec<usize> {
    let unk = vocabs.state_tokens.id(UNK_TOKEN).expect("state vocab always holds <unk>");
    let tok = |name: &str| vocabs.state_tokens.id(name).unwrap_or(unk);

    let mut out = Vec::new();
    let mut frame_section = |out: &mut Vec<usize>, marker: &str, frames: &[ActFrame]| {
        out.push(tok(marker));
        for frame in frames {
            out.push(tok(&frame.act));
            for slot in vocabs.sort_slots(frame.slot_names()) {
                out.push(tok(&slot));
            }
        }
    };
    frame_section(&mut out, STATE_MARKERS[0], &state.prev_agent_acts);
    frame_section(&mut out, STATE_MARKERS[1], &state.user_acts);

    let slot_sections = [
        (STATE_MARKERS[2], &state.user_request_slots),
        (STATE_MARKERS[3], &state.user_inform_slots),
        (STATE_MARKERS[4], &state.agent_request_slots),
        (STATE_MARKERS[5], &state.agent_proposed_slots),
    ];
    for (marker, slots) in slot_sections {
        out.push(tok(marker));
        for slot in vocabs.sort_slots(slots.iter().map(String::as_str)) {
            out.push(tok(&slot));
        }
    }
    out
}

/// Multi-hot vector over the state vocabulary, the classification input.
pub fn state_multihot(state: &DialogueState, vocabs: &Vocabularies) -> Vec<f64> {
    let mut v = vec![0.0; vocabs.state_tokens.len()];
    for id in serialize_state(state, vocabs) {
        v[id] = 1.0;
    }
    v
}
