//! Party state machines and the session that drives them.

mod config;
mod parties;
mod replay;
mod sequence;
mod session;
mod transcript;

pub use config::{default_sample_count, DecoySource, SessionConfig, MAX_DIM, MAX_PAIRS};
pub use parties::{
    final_check_and_decode, CheckTally, FinalCheck, ProtocolBases, Receiver, SampleReport, Sender,
    Server,
};
pub use replay::replay_transcript;
pub use sequence::{ConsumeReason, Lab, PairId, Photon, PhotonSequence, SlotLedger, SlotState};
pub use session::{
    random_message, run_session, run_session_with_message, ErrorRates, LinkPlan, Session,
    SessionResult, SessionStatus,
};
pub use transcript::{
    parse_transcript, write_transcript, Actor, CheckId, ClassicalAnnouncement, Event, Transcript,
    TranscriptRecord, Visibility, TRANSCRIPT_SCHEMA_VERSION,
};
