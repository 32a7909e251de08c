//! Dialogue-act data model: frames, the continue/act/slots tuple encoding,
//! the flat token encoding, vocabularies, dataset records, and statistics.

pub mod cas;
pub mod convert;
pub mod frames;
pub mod records;
pub mod state;
pub mod stats;
pub mod tokens;
pub mod vocab;

pub use cas::{from_cas_sequence, render_cas_sequence, to_cas_sequence, CasTuple, ContinueFlag};
pub use frames::{parse_frames, render_annotation, ActFrame, SlotMention};
pub use records::{load_dataset, write_dataset, Speaker, Split, TurnRecord};
pub use state::{DialogueState, KbFeatures, MAX_TURN};
pub use stats::{dataset_stats, DatasetStats};
pub use tokens::{from_token_sequence, to_token_sequence};
pub use vocab::{build_vocabs, Vocab, Vocabularies};

pub const CONTINUE_TOKEN: &str = "<continue>";
pub const STOP_TOKEN: &str = "<stop>";
pub const PAD_TOKEN: &str = "<pad>";
pub const EOS_TOKEN: &str = "<eos>";
pub const GO_TOKEN: &str = "<go>";
pub const UNK_TOKEN: &str = "<unk>";
pub const NOSLOT_TOKEN: &str = "<noslot>";

/// Section markers for the serialized dialogue state, in emission order.
pub const STATE_MARKERS: [&str; 6] = [
    "<prev_agent_acts>",
    "<user_acts>",
    "<user_request_slots>",
    "<user_inform_slots>",
    "<agent_request_slots>",
    "<agent_proposed_slots>",
];
