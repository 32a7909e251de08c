//! Flat token encoding of a frame list, the target format of the
//! sequence-generation baseline. Valued slots render as `slot =`; the
//! decoder side is a lenient scan because model output routinely breaks
//! the syntax.

use super::frames::{ActFrame, SlotMention};
use super::vocab::Vocabularies;
use super::EOS_TOKEN;

/// Per frame: `act ( slot [=] [;] ... )`, then a closing `<eos>`.
pub fn to_token_sequence(frames: &[ActFrame]) -> Vec<String> {
    let mut out = Vec::new();
    for frame in frames {
        out.push(frame.act.clone());
        out.push("(".into());
        for (i, slot) in frame.slots.iter().enumerate() {
            if i > 0 {
                out.push(";".into());
            }
            out.push(slot.name.clone());
            if slot.valued {
                out.push("=".into());
            }
        }
        out.push(")".into());
    }
    out.push(EOS_TOKEN.into());
    out
}

/// Lenient left-to-right recovery: an act token opens a frame, slot tokens
/// inside a frame add slots, `=` marks the preceding slot as valued, and
/// everything else is skipped. `<eos>` ends the scan. Never fails; the
/// worst case is an empty frame list.
pub fn from_token_sequence<S: AsRef<str>>(tokens: &[S], vocabs: &Vocabularies) -> Vec<ActFrame> {
    let mut frames: Vec<ActFrame> = Vec::new();
    let mut prev_slot: Option<usize> = None; // index into the open frame's slots
    for token in tokens {
        let token = token.as_ref();
        if token == EOS_TOKEN {
            break;
        }
        if vocabs.acts.contains(token) {
            frames.push(ActFrame { act: token.to_string(), slots: Vec::new() });
            prev_slot = None;
        } else if vocabs.slots.contains(token) {
            if let Some(frame) = frames.last_mut() {
                match frame.slots.iter().position(|s| s.name == token) {
                    Some(i) => prev_slot = Some(i),
                    None => {
                        frame.slots.push(SlotMention::bare(token));
                        prev_slot = Some(frame.slots.len() - 1);
                    }
                }
            }
        } else if token == "=" {
            if let (Some(frame), Some(i)) = (frames.last_mut(), prev_slot) {
                frame.slots[i].valued = true;
            }
            prev_slot = None;
        } else {
            prev_slot = None;
        }
    }
    frames
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocabs, parse_frames, DialogueState, Speaker, Split, TurnRecord};

    fn movie_vocabs() -> Vocabularies {
        let target = parse_frames(
            "inform(moviename=x; genre=y; restaurantname=z; date=1; starttime=2) \
             multiple_choice(moviename) request(date) thanks()",
        )
        .unwrap();
        build_vocabs(&[TurnRecord {
            dialogue_id: "d".into(),
            turn_index: 0,
            speaker: Speaker::Agent,
            state: DialogueState::default(),
            kb_result_count: 0,
            target_acts: target,
            split: Split::Train,
        }])
        .unwrap()
    }

    #[test]
    fn renders_the_two_act_example() {
        let frames = parse_frames(
            "inform(moviename={The Witch, The Other Side of the Door, The Boy}; genre=thriller) \
             multiple_choice(moviename)",
        )
        .unwrap();
        let tokens = to_token_sequence(&frames);
        assert_eq!(
            tokens,
            vec![
                "inform", "(", "moviename", "=", ";", "genre", "=", ")", "multiple_choice", "(",
                "moviename", ")", "<eos>",
            ]
        );
    }

    #[test]
    fn empty_frames_render_as_eos_only() {
        assert_eq!(to_token_sequence(&[]), vec!["<eos>"]);
    }

    #[test]
    fn zero_slot_act_renders_bare_parens() {
        let frames = parse_frames("thanks()").unwrap();
        assert_eq!(to_token_sequence(&frames), vec!["thanks", "(", ")", "<eos>"]);
    }

    #[test]
    fn recovers_frames_from_well_formed_tokens() {
        let vocabs = movie_vocabs();
        let tokens: Vec<&str> = vec![
            "inform", "(", "moviename", "=", ";", "genre", "=", ")", "multiple_choice", "(",
            "moviename", ")", "<eos>",
        ];
        let frames = from_token_sequence(&tokens, &vocabs);
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].act, "inform");
        assert_eq!(frames[0].slot_names(), vec!["moviename", "genre"]);
        assert!(frames[0].slots.iter().all(|s| s.valued));
        assert_eq!(frames[1].slot_names(), vec!["moviename"]);
    }

    #[test]
    fn tolerates_broken_syntax() {
        let vocabs = movie_vocabs();
        // malformed model output: '=' in place of '(' for the second act
        let tokens: Vec<&str> =
            vec!["inform", "(", "restaurantname", "=", ")", "multiple_choice", "=", "restaurantname", ")"];
        let frames = from_token_sequence(&tokens, &vocabs);
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].slot_names(), vec!["restaurantname"]);
        assert_eq!(frames[1].act, "multiple_choice");
        assert_eq!(frames[1].slot_names(), vec!["restaurantname"]);

        let tokens: Vec<&str> = vec!["request", "(", "date", "=", ")"];
        let frames = from_token_sequence(&tokens, &vocabs);
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].act, "request");
        assert_eq!(frames[0].slot_names(), vec!["date"]);
    }

    #[test]
    fn slot_tokens_before_any_act_are_dropped() {
        let vocabs = movie_vocabs();
        let tokens: Vec<&str> = vec!["moviename", "=", ")"];
        assert!(from_token_sequence(&tokens, &vocabs).is_empty());
    }
}
