//! Act frames and the `act(slot=value; ...)` annotation parser. Slot values
//! are dropped at parse time; only the name and whether a value was present
//! survive (the flat token encoding renders `=` after valued slots).

use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SlotMention {
    pub name: String,
    pub valued: bool,
}

impl SlotMention {
    pub fn bare(name: impl Into<String>) -> Self {
        SlotMention { name: name.into(), valued: false }
    }

    pub fn valued(name: impl Into<String>) -> Self {
        SlotMention { name: name.into(), valued: true }
    }
}

/// One dialogue act with its slot-name set. Slots keep their mention order;
/// duplicates are collapsed on insertion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActFrame {
    pub act: String,
    pub slots: Vec<SlotMention>,
}

impl ActFrame {
    pub fn new<S: Into<String>>(act: impl Into<String>, slots: impl IntoIterator<Item = S>) -> Self {
        let mut frame = ActFrame { act: act.into(), slots: Vec::new() };
        for s in slots {
            frame.push_slot(SlotMention::bare(s));
        }
        frame
    }

    /// Adds a slot unless one with the same name is already present.
    pub fn push_slot(&mut self, slot: SlotMention) {
        if !self.slots.iter().any(|s| s.name == slot.name) {
            self.slots.push(slot);
        }
    }

    pub fn slot_names(&self) -> Vec<&str> {
        self.slots.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn has_slot(&self, name: &str) -> bool {
        self.slots.iter().any(|s| s.name == name)
    }

    /// Value-free annotation form: `act(slot;slot)`, `act()` when slotless.
    pub fn annotation(&self) -> String {
        let names: Vec<&str> = self.slot_names();
        format!("{}({})", self.act, names.join(";"))
    }
}

/// Renders frames in the value-free annotation notation, space separated.
pub fn render_annotation(frames: &[ActFrame]) -> String {
    frames.iter().map(ActFrame::annotation).collect::<Vec<_>>().join(" ")
}

// The dataset schema stores slots as plain name arrays, so the valued flag
// does not survive a serialize/deserialize round trip.
impl Serialize for ActFrame {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ActFrame", 2)?;
        s.serialize_field("act", &self.act)?;
        s.serialize_field("slots", &self.slot_names())?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for ActFrame {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct FrameVisitor;
        impl<'de> Visitor<'de> for FrameVisitor {
            type Value = ActFrame;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an object with act and slots fields")
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<ActFrame, A::Error> {
                let mut act: Option<String> = None;
                let mut slots: Option<Vec<String>> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "act" => act = Some(map.next_value()?),
                        "slots" => slots = Some(map.next_value()?),
                        _ => {
                            let _: serde::de::IgnoredAny = map.next_value()?;
                        }
                    }
                }
                let act = act.ok_or_else(|| serde::de::Error::missing_field("act"))?;
                Ok(ActFrame::new(act, slots.unwrap_or_default()))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, _: A) -> std::result::Result<ActFrame, A::Error> {
                Err(serde::de::Error::custom("expected an object, not an array"))
            }
        }
        deserializer.deserialize_struct("ActFrame", &["act", "slots"], FrameVisitor)
    }
}

/// Parses the `act(slot=value; ...)` annotation notation; multiple acts are
/// separated by whitespace. Values may contain `{...}` groups with embedded
/// separators. Returns frames in annotation order.
pub fn parse_frames(text: &str) -> Result<Vec<ActFrame>> {
    let bytes = text.as_bytes();
    let mut pos = 0usize;
    let mut frames = Vec::new();

    let err = |offset: usize, message: &str| Error::Parse { offset, message: message.to_string() };

    while pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            break;
        }
        let act_start = pos;
        while pos < bytes.len() && bytes[pos] != b'(' && !bytes[pos].is_ascii_whitespace() {
            if bytes[pos] == b')' {
                return Err(err(pos, "unexpected ')' outside any act"));
            }
            pos += 1;
        }
        if pos >= bytes.len() || bytes[pos] != b'(' {
            return Err(err(act_start, "act name must be followed by '('"));
        }
        let act = text[act_start..pos].trim();
        if act.is_empty() {
            return Err(err(act_start, "empty act name"));
        }
        let open_offset = pos;
        pos += 1; // consume '('

        let mut frame = ActFrame { act: act.to_string(), slots: Vec::new() };
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos >= bytes.len() {
                return Err(err(open_offset, "unbalanced parentheses: '(' never closed"));
            }
            if bytes[pos] == b')' {
                pos += 1;
                break;
            }
            if bytes[pos] == b';' {
                pos += 1; // tolerate empty items like ";;" or a trailing ';'
                continue;
            }
            let name_start = pos;
            while pos < bytes.len() && !matches!(bytes[pos], b'=' | b';' | b')') {
                pos += 1;
            }
            if pos >= bytes.len() {
                return Err(err(open_offset, "unbalanced parentheses: '(' never closed"));
            }
            let name = text[name_start..pos].trim();
            if name.contains('(') {
                return Err(err(name_start, "'(' inside slot list"));
            }
            let mut valued = false;
            if bytes[pos] == b'=' {
                valued = true;
                pos += 1;
                // skip the value; '{...}' groups may contain separators
                let mut depth = 0usize;
                while pos < bytes.len() {
                    match bytes[pos] {
                        b'{' => depth += 1,
                        b'}' => depth = depth.saturating_sub(1),
                        b';' | b')' if depth == 0 => break,
                        _ => {}
                    }
                    pos += 1;
                }
                if pos >= bytes.len() {
                    return Err(err(open_offset, "unbalanced parentheses: '(' never closed"));
                }
            }
            if name.is_empty() {
                return Err(err(name_start, "empty slot name"));
            }
            frame.push_slot(SlotMention { name: name.to_string(), valued });
        }
        frames.push(frame);
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_two_act_example() {
        let text = "inform(moviename={The Witch, The Other Side of the Door, The Boy}; \
                    genre=thriller) multiple_choice(moviename)";
        let frames = parse_frames(text).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].act, "inform");
        assert_eq!(frames[0].slot_names(), vec!["moviename", "genre"]);
        assert!(frames[0].slots.iter().all(|s| s.valued));
        assert_eq!(frames[1].act, "multiple_choice");
        assert_eq!(frames[1].slot_names(), vec!["moviename"]);
        assert!(!frames[1].slots[0].valued);
    }

    #[test]
    fn parses_zero_slot_act() {
        let frames = parse_frames("thanks()").unwrap();
        assert_eq!(frames, vec![ActFrame::new("thanks", Vec::<String>::new())]);
    }

    #[test]
    fn parses_bare_slot_list() {
        let frames = parse_frames("request(date; starttime)").unwrap();
        assert_eq!(frames[0].act, "request");
        assert_eq!(frames[0].slot_names(), vec!["date", "starttime"]);
        assert!(frames[0].slots.iter().all(|s| !s.valued));
    }

    #[test]
    fn empty_value_still_counts_as_valued() {
        let frames = parse_frames("inform(restaurantname=; starttime =)").unwrap();
        assert_eq!(frames[0].slot_names(), vec!["restaurantname", "starttime"]);
        assert!(frames[0].slots.iter().all(|s| s.valued));
    }

    #[test]
    fn duplicate_slots_collapse() {
        let frames = parse_frames("inform(a=1; b=2; a=3)").unwrap();
        assert_eq!(frames[0].slot_names(), vec!["a", "b"]);
    }

    #[test]
    fn unbalanced_parens_name_the_offset() {
        let e = parse_frames("inform(moviename=x").unwrap_err();
        match e {
            Error::Parse { offset, .. } => assert_eq!(offset, 6),
            other => panic!("unexpected error {other:?}"),
        }
        let e = parse_frames("inform )").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }

    #[test]
    fn annotation_rendering_is_value_free() {
        let frames = parse_frames("inform(moviename=x; genre=y) multiple_choice(moviename)").unwrap();
        assert_eq!(render_annotation(&frames), "inform(moviename;genre) multiple_choice(moviename)");
    }

    #[test]
    fn serde_uses_plain_slot_names() {
        let frame = ActFrame {
            act: "inform".into(),
            slots: vec![SlotMention::valued("a"), SlotMention::bare("b")],
        };
        let json = serde_json::to_string(&frame).unwrap();
        assert_eq!(json, r#"{"act":"inform","slots":["a","b"]}"#);
        let back: ActFrame = serde_json::from_str(&json).unwrap();
        assert_eq!(back.slot_names(), vec!["a", "b"]);
        assert!(back.slots.iter().all(|s| !s.valued));
    }
}
