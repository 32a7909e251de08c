//! Dataset statistics: split counts, acts-per-turn histograms by speaker,
//! multi-act fractions, and training-vocabulary sizes.

use std::collections::BTreeMap;

use serde::Serialize;

use super::records::{filter_split, group_dialogues, Speaker, Split, TurnRecord};
use super::vocab::build_vocabs;

#[derive(Clone, Debug, Serialize)]
pub struct VocabCounts {
    pub acts: usize,
    pub slots: usize,
    pub pairs: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetStats {
    pub dialogues_total: usize,
    pub dialogues_train: usize,
    pub dialogues_valid: usize,
    pub dialogues_test: usize,
    pub turns_total: usize,
    /// acts-per-turn count -> number of user turns with that many acts
    pub acts_per_turn_user: BTreeMap<usize, usize>,
    pub acts_per_turn_agent: BTreeMap<usize, usize>,
    /// Fraction of turns (both speakers) with two or more acts.
    pub multi_act_fraction_all: f64,
    /// Same fraction restricted to agent turns.
    pub multi_act_fraction_agent: f64,
    /// Vocabulary sizes built from the train split, when it is non-empty.
    pub vocab: Option<VocabCounts>,
}

pub fn dataset_stats(records: &[TurnRecord]) -> DatasetStats {
    let mut split_of: BTreeMap<&str, Split> = BTreeMap::new();
    for (id, turns) in group_dialogues(records) {
        split_of.insert(id, turns[0].split);
    }
    let count_split = |s: Split| split_of.values().filter(|&&v| v == s).count();

    let mut user_hist = BTreeMap::new();
    let mut agent_hist = BTreeMap::new();
    let mut multi_all = 0usize;
    let mut multi_agent = 0usize;
    let mut agent_turns = 0usize;
    for rec in records {
        let n = rec.target_acts.len();
        match rec.speaker {
            Speaker::User => *user_hist.entry(n).or_insert(0) += 1,
            Speaker::Agent => {
                *agent_hist.entry(n).or_insert(0) += 1;
                agent_turns += 1;
                if n >= 2 {
                    multi_agent += 1;
                }
            }
        }
        if n >= 2 {
            multi_all += 1;
        }
    }

    let train = filter_split(records, Split::Train);
    let vocab = build_vocabs(&train).ok().map(|v| VocabCounts {
        acts: v.acts.len(),
        slots: v.slots.len(),
        pairs: v.pairs.len(),
    });

    DatasetStats {
        dialogues_total: split_of.len(),
        dialogues_train: count_split(Split::Train),
        dialogues_valid: count_split(Split::Valid),
        dialogues_test: count_split(Split::Test),
        turns_total: records.len(),
        acts_per_turn_user: user_hist,
        acts_per_turn_agent: agent_hist,
        multi_act_fraction_all: if records.is_empty() { 0.0 } else { multi_all as f64 / records.len() as f64 },
        multi_act_fraction_agent: if agent_turns == 0 { 0.0 } else { multi_agent as f64 / agent_turns as f64 },
        vocab,
    }
}

impl DatasetStats {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "dialogues: total {}, train {}, valid {}, test {}\n",
            self.dialogues_total, self.dialogues_train, self.dialogues_valid, self.dialogues_test
        ));
        let max_acts = self
            .acts_per_turn_user
            .keys()
            .chain(self.acts_per_turn_agent.keys())
            .copied()
            .max()
            .unwrap_or(0);
        out.push_str(&format!("{:<8}", "acts/turn"));
        for n in 1..=max_acts.max(1) {
            out.push_str(&format!("{n:>8}"));
        }
        out.push('\n');
        for (name, hist) in [("user", &self.acts_per_turn_user), ("agent", &self.acts_per_turn_agent)] {
            out.push_str(&format!("{name:<8}"));
            for n in 1..=max_acts.max(1) {
                out.push_str(&format!("{:>8}", hist.get(&n).copied().unwrap_or(0)));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "multi-act turns: {:.1}% of all turns, {:.1}% of agent turns\n",
            100.0 * self.multi_act_fraction_all,
            100.0 * self.multi_act_fraction_agent
        ));
        if let Some(v) = &self.vocab {
            out.push_str(&format!("train vocab: {} acts, {} slots, {} pairs\n", v.acts, v.slots, v.pairs));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_frames, DialogueState};

    fn rec(dialogue: &str, turn: usize, speaker: Speaker, annotation: &str, split: Split) -> TurnRecord {
        TurnRecord {
            dialogue_id: dialogue.to_string(),
            turn_index: turn,
            speaker,
            state: DialogueState::default(),
            kb_result_count: 0,
            target_acts: parse_frames(annotation).unwrap(),
            split,
        }
    }

    #[test]
    fn single_two_act_agent_turn() {
        let recs = vec![rec("d0", 0, Speaker::Agent, "inform(a=1) request(b)", Split::Train)];
        let stats = dataset_stats(&recs);
        assert_eq!(stats.acts_per_turn_agent.get(&2), Some(&1));
        assert!(stats.acts_per_turn_agent.get(&1).is_none());
        assert_eq!(stats.multi_act_fraction_agent, 1.0);
        assert_eq!(stats.dialogues_total, 1);
    }

    #[test]
    fn split_counts_and_fractions() {
        let recs = vec![
            rec("d0", 0, Speaker::User, "request(a)", Split::Train),
            rec("d0", 1, Speaker::Agent, "inform(a=1)", Split::Train),
            rec("d1", 0, Speaker::User, "request(a; b)", Split::Test),
            rec("d1", 1, Speaker::Agent, "inform(a=1) inform(b=2)", Split::Test),
        ];
        let stats = dataset_stats(&recs);
        assert_eq!(stats.dialogues_train, 1);
        assert_eq!(stats.dialogues_test, 1);
        assert_eq!(stats.dialogues_valid, 0);
        assert_eq!(stats.turns_total, 4);
        assert!((stats.multi_act_fraction_all - 0.5).abs() < 1e-12);
        assert!((stats.multi_act_fraction_agent - 0.5).abs() < 1e-12);
        let v = stats.vocab.unwrap();
        assert_eq!(v.acts, 2);
    }

    #[test]
    fn table_renders_counts() {
        let recs = vec![rec("d0", 0, Speaker::Agent, "inform(a=1) request(b)", Split::Train)];
        let table = dataset_stats(&recs).render_table();
        assert!(table.contains("dialogues: total 1, train 1, valid 0, test 0"));
        assert!(table.contains("agent"));
    }
}
