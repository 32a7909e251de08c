//! Vocabularies built from the training split: acts, slots, act-slot pairs,
//! state-serialization tokens, and the flat target-token alphabet.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::records::TurnRecord;
use super::{EOS_TOKEN, GO_TOKEN, NOSLOT_TOKEN, PAD_TOKEN, STATE_MARKERS, UNK_TOKEN};

/// Bijective token <-> index map with insertion order preserved.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new() -> Self {
        Vocab::default()
    }

    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.items.len();
        self.items.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(String::as_str)
    }
}

impl From<Vec<String>> for Vocab {
    fn from(items: Vec<String>) -> Self {
        let mut v = Vocab::new();
        for item in items {
            v.insert(&item);
        }
        v
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Vec<String> {
        v.items
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabularies {
    /// Distinct dataset act names (no pad).
    pub acts: Vocab,
    pub slots: Vocab,
    /// `act+slot` pair names; slotless acts appear as `act+<noslot>`.
    pub pairs: Vocab,
    /// Section markers, `<unk>`, then act/slot tokens in first-seen order.
    pub state_tokens: Vocab,
    /// Punctuation and specials, then act and slot names.
    pub target_tokens: Vocab,
}

impl Vocabularies {
    /// Act head width for the tuple decoders: dataset acts plus the pad act.
    pub fn n_acts_with_pad(&self) -> usize {
        self.acts.len() + 1
    }

    pub fn pad_act_index(&self) -> usize {
        self.acts.len()
    }

    /// Index of an act in the decoder head; the pad act is the final index.
    pub fn act_index(&self, act: &str) -> Option<usize> {
        if act == PAD_TOKEN {
            Some(self.pad_act_index())
        } else {
            self.acts.id(act)
        }
    }

    pub fn act_from_index(&self, idx: usize) -> &str {
        if idx == self.pad_act_index() {
            PAD_TOKEN
        } else {
            self.acts.token(idx)
        }
    }

    pub fn pair_name(act: &str, slot: Option<&str>) -> String {
        format!("{act}+{}", slot.unwrap_or(NOSLOT_TOKEN))
    }

    /// Sorts slot names into canonical (vocabulary index) order; names
    /// missing from the vocabulary go last, ordered by name.
    pub fn sort_slots<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        let mut keyed: Vec<(usize, &str)> = names
            .into_iter()
            .map(|n| (self.slots.id(n).unwrap_or(usize::MAX), n))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        keyed.dedup_by(|a, b| a.1 == b.1);
        keyed.into_iter().map(|(_, n)| n.to_string()).collect()
    }

    /// Stable content hash used to pair checkpoints with datasets.
    pub fn fingerprint(&self) -> String {
        let mut hash = 0xcbf29ce484222325u64;
        let mut feed = |s: &str| {
            for b in s.bytes().chain(std::iter::once(0)) {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(0x100000001b3);
            }
        };
        for vocab in [&self.acts, &self.slots, &self.pairs, &self.state_tokens, &self.target_tokens] {
            for item in vocab.iter() {
                feed(item);
            }
            feed("|");
        }
        format!("{hash:016x}")
    }
}

/// Builds all vocabularies from training-split records. Scan order is the
/// record order, state sections before targets, so results are
/// deterministic for a given file.
pub fn build_vocabs(train: &[TurnRecord]) -> Result<Vocabularies> {
    if train.is_empty() {
        return Err(Error::InvalidInput("cannot build vocabularies from an empty dataset".into()));
    }
    let mut acts = Vocab::new();
    let mut slots = Vocab::new();
    let mut pairs = Vocab::new();
    let mut state_tokens = Vocab::new();
    for marker in STATE_MARKERS {
        state_tokens.insert(marker);
    }
    state_tokens.insert(UNK_TOKEN);

    for rec in train {
        let state = &rec.state;
        for frame in state.prev_agent_acts.iter().chain(&state.user_acts) {
            acts.insert(&frame.act);
            state_tokens.insert(&frame.act);
            for s in &frame.slots {
                slots.insert(&s.name);
                state_tokens.insert(&s.name);
            }
        }
        for set in [
            &state.user_request_slots,
            &state.user_inform_slots,
            &state.agent_request_slots,
            &state.agent_proposed_slots,
        ] {
            for s in set {
                slots.insert(s);
                state_tokens.insert(s);
            }
        }
        for frame in &rec.target_acts {
            acts.insert(&frame.act);
            state_tokens.insert(&frame.act);
            for s in &frame.slots {
                slots.insert(&s.name);
                state_tokens.insert(&s.name);
            }
            if frame.slots.is_empty() {
                pairs.insert(&Vocabularies::pair_name(&frame.act, None));
            } else {
                for s in &frame.slots {
                    pairs.insert(&Vocabularies::pair_name(&frame.act, Some(&s.name)));
                }
            }
        }
    }

    let mut target_tokens = Vocab::new();
    for t in ["(", ")", "=", ";", EOS_TOKEN, GO_TOKEN, PAD_TOKEN, UNK_TOKEN] {
        target_tokens.insert(t);
    }
    for a in acts.iter() {
        target_tokens.insert(a);
    }
    for s in slots.iter() {
        target_tokens.insert(s);
    }

    Ok(Vocabularies { acts, slots, pairs, state_tokens, target_tokens })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_frames, DialogueState, Speaker, Split, TurnRecord};

    fn record(annotation: &str) -> TurnRecord {
        TurnRecord {
            dialogue_id: "d0".into(),
            turn_index: 0,
            speaker: Speaker::Agent,
            state: DialogueState::default(),
            kb_result_count: 0,
            target_acts: parse_frames(annotation).unwrap(),
            split: Split::Train,
        }
    }

    #[test]
    fn vocab_maps_are_bijective() {
        let mut v = Vocab::new();
        assert_eq!(v.insert("a"), 0);
        assert_eq!(v.insert("b"), 1);
        assert_eq!(v.insert("a"), 0);
        assert_eq!(v.id("b"), Some(1));
        assert_eq!(v.token(1), "b");
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn builds_pairs_including_noslot() {
        let recs = vec![record("inform(moviename=x; genre=y) thanks()")];
        let vocabs = build_vocabs(&recs).unwrap();
        assert_eq!(vocabs.acts.len(), 2);
        assert_eq!(vocabs.slots.len(), 2);
        assert!(vocabs.pairs.contains("inform+moviename"));
        assert!(vocabs.pairs.contains("inform+genre"));
        assert!(vocabs.pairs.contains("thanks+<noslot>"));
        assert_eq!(vocabs.pairs.len(), 3);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(build_vocabs(&[]).is_err());
    }

    #[test]
    fn pad_act_is_the_extra_head_index() {
        let vocabs = build_vocabs(&[record("inform(a=1)")]).unwrap();
        assert_eq!(vocabs.n_acts_with_pad(), 2);
        assert_eq!(vocabs.act_index("inform"), Some(0));
        assert_eq!(vocabs.act_index("<pad>"), Some(1));
        assert_eq!(vocabs.act_from_index(1), "<pad>");
    }

    #[test]
    fn fingerprint_is_content_sensitive() {
        let a = build_vocabs(&[record("inform(a=1)")]).unwrap();
        let b = build_vocabs(&[record("inform(b=1)")]).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), build_vocabs(&[record("inform(a=2)")]).unwrap().fingerprint());
    }

    #[test]
    fn canonical_slot_order_follows_vocab_ids() {
        let vocabs = build_vocabs(&[record("inform(moviename=x; genre=y; city=z)")]).unwrap();
        let sorted = vocabs.sort_slots(["city", "genre", "moviename", "zzz"]);
        assert_eq!(sorted, vec!["moviename", "genre", "city", "zzz"]);
    }
}
