//! The (continue, act, slots) tuple encoding of a multi-act turn. A frame
//! list maps to one tuple per frame plus a terminal (stop, pad, {}) tuple.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::frames::ActFrame;
use super::{CONTINUE_TOKEN, PAD_TOKEN, STOP_TOKEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinueFlag {
    Continue,
    Stop,
    Pad,
}

impl ContinueFlag {
    pub fn token(self) -> &'static str {
        match self {
            ContinueFlag::Continue => CONTINUE_TOKEN,
            ContinueFlag::Stop => STOP_TOKEN,
            ContinueFlag::Pad => PAD_TOKEN,
        }
    }

    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        match self {
            ContinueFlag::Continue => 0,
            ContinueFlag::Stop => 1,
            ContinueFlag::Pad => 2,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => ContinueFlag::Continue,
            1 => ContinueFlag::Stop,
            _ => ContinueFlag::Pad,
        }
    }
}

impl fmt::Display for ContinueFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CasTuple {
    pub flag: ContinueFlag,
    pub act: String,
    pub slots: Vec<String>,
}

impl CasTuple {
    pub fn step(act: impl Into<String>, slots: Vec<String>) -> Self {
        CasTuple { flag: ContinueFlag::Continue, act: act.into(), slots }
    }

    /// The terminal (stop, pad, {}) tuple.
    pub fn stop() -> Self {
        CasTuple { flag: ContinueFlag::Stop, act: PAD_TOKEN.to_string(), slots: Vec::new() }
    }

    pub fn is_stop(&self) -> bool {
        self.flag == ContinueFlag::Stop
    }
}

impl fmt::Display for CasTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {{{}}})", self.flag, self.act, self.slots.join(", "))
    }
}

pub fn render_cas_sequence(tuples: &[CasTuple]) -> String {
    tuples.iter().map(CasTuple::to_string).collect::<Vec<_>>().join(" ")
}

/// One tuple per frame in order, then the terminal stop tuple.
pub fn to_cas_sequence(frames: &[ActFrame]) -> Vec<CasTuple> {
    let mut out: Vec<CasTuple> = frames
        .iter()
        .map(|f| CasTuple::step(f.act.clone(), f.slot_names().iter().map(|s| s.to_string()).collect()))
        .collect();
    out.push(CasTuple::stop());
    out
}

/// Lenient inverse: consumes tuples until the first stop (or the end when a
/// model never emitted one). Pad-flagged tuples and pad acts are skipped.
/// Recovered slots carry no value information.
pub fn from_cas_sequence(tuples: &[CasTuple]) -> Vec<ActFrame> {
    let mut frames = Vec::new();
    for t in tuples {
        match t.flag {
            ContinueFlag::Stop => break,
            ContinueFlag::Pad => continue,
            ContinueFlag::Continue => {
                if t.act == PAD_TOKEN {
                    continue;
                }
                frames.push(ActFrame::new(t.act.clone(), t.slots.iter().cloned()));
            }
        }
    }
    frames
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_frames_become_three_tuples() {
        let frames =
            vec![ActFrame::new("inform", ["moviename", "genre"]), ActFrame::new("multiple_choice", ["moviename"])];
        let tuples = to_cas_sequence(&frames);
        assert_eq!(tuples.len(), 3);
        assert_eq!(
            render_cas_sequence(&tuples),
            "(<continue>, inform, {moviename, genre}) (<continue>, multiple_choice, {moviename}) \
             (<stop>, <pad>, {})"
        );
    }

    #[test]
    fn empty_frame_list_is_just_the_stop_tuple() {
        let tuples = to_cas_sequence(&[]);
        assert_eq!(tuples, vec![CasTuple::stop()]);
        assert_eq!(from_cas_sequence(&tuples), vec![]);
    }

    #[test]
    fn decoding_stops_at_first_stop() {
        let tuples = vec![
            CasTuple::step("request", vec!["date".into()]),
            CasTuple::stop(),
            CasTuple::step("inform", vec!["city".into()]),
        ];
        assert_eq!(from_cas_sequence(&tuples), vec![ActFrame::new("request", ["date"])]);
    }

    #[test]
    fn missing_stop_is_tolerated() {
        let tuples = vec![CasTuple::step("inform", vec!["restaurantname".into()])];
        assert_eq!(from_cas_sequence(&tuples), vec![ActFrame::new("inform", ["restaurantname"])]);
    }

    #[test]
    fn pad_tuples_are_skipped() {
        let tuples = vec![
            CasTuple { flag: ContinueFlag::Pad, act: "inform".into(), slots: vec![] },
            CasTuple { flag: ContinueFlag::Continue, act: PAD_TOKEN.into(), slots: vec!["x".into()] },
            CasTuple::step("thanks", vec![]),
            CasTuple::stop(),
        ];
        assert_eq!(from_cas_sequence(&tuples), vec![ActFrame::new("thanks", Vec::<String>::new())]);
    }
}
