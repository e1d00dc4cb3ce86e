//! Session transcript: public announcements, channel events, party-private
//! records and attacker-private records, in the order they happened.
//!
//! On disk a transcript is newline-delimited JSON. The first line is a
//! header `{"schema_version":1,"kind":"qsdc-transcript"}`; every further
//! line is one record `{seq_no, actor, visibility, event_type, payload}`.

use serde::{Deserialize, Serialize};

use crate::adversary::ChannelLeg;
use crate::error::{QsdcError, Result};
use crate::qudit::PauliIndex;

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;
const TRANSCRIPT_KIND: &str = "qsdc-transcript";

/// The three eavesdropping checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    /// Alice↔Charlie correlation check on entangled samples.
    First,
    /// Charlie→Bob check on decoy photons.
    Decoy,
    /// Whole-loop check on Bob's random check operations.
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Alice,
    Bob,
    Charlie,
    Eve,
    Channel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    /// On the authenticated public classical channel, or observable on the
    /// quantum line.
    Public,
    /// Known only to the acting party; kept for audit and replay.
    Private,
    /// Known only to the attacker.
    Attacker,
}

/// A message on the public, authenticated classical channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event_type", content = "payload", rename_all = "snake_case")]
pub enum ClassicalAnnouncement {
    /// Charlie asks Alice to measure her halves at these slots.
    SampleRequest {
        check: CheckId,
        slots: Vec<usize>,
    },
    BasisAndOutcome {
        slot: usize,
        basis_id: usize,
        outcome: usize,
    },
    DecoyReveal {
        slot: usize,
        basis_id: usize,
        vector_index: usize,
    },
    /// Bob discloses the random operation he applied at a check slot.
    CheckOpReveal {
        slot: usize,
        op: PauliIndex,
    },
    BellResult {
        slot: usize,
        index: PauliIndex,
    },
    CheckPassed {
        check: CheckId,
    },
    AbortNotice {
        check_id: CheckId,
        rate: f64,
    },
}

/// Every kind of transcript entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event_type", content = "payload", rename_all = "snake_case")]
pub enum Event {
    // public announcements
    SampleRequest {
        check: CheckId,
        slots: Vec<usize>,
    },
    BasisAndOutcome {
        slot: usize,
        basis_id: usize,
        outcome: usize,
    },
    DecoyReveal {
        slot: usize,
        basis_id: usize,
        vector_index: usize,
    },
    CheckOpReveal {
        slot: usize,
        op: PauliIndex,
    },
    BellResult {
        slot: usize,
        index: PauliIndex,
    },
    CheckPassed {
        check: CheckId,
    },
    AbortNotice {
        check_id: CheckId,
        rate: f64,
    },

    // quantum line
    Transmit {
        leg: ChannelLeg,
        photons: usize,
    },
    Hop {
        leg: ChannelLeg,
        relay: u32,
    },
    Deliver {
        leg: ChannelLeg,
    },

    // party-private
    PairsPrepared {
        count: usize,
    },
    SampleMeasured {
        slot: usize,
        basis_id: usize,
        outcome: usize,
    },
    KeyApplied {
        slot: usize,
        key: PauliIndex,
    },
    DecoyPrepared {
        slot: usize,
        basis_id: usize,
        vector_index: usize,
    },
    DecoyKept {
        slot: usize,
        basis_id: usize,
        vector_index: usize,
        rotated_from: Option<usize>,
    },
    DecoyMeasured {
        slot: usize,
        outcome: usize,
    },
    CheckOpApplied {
        slot: usize,
        op: PauliIndex,
    },
    MessageEncoded {
        slot: usize,
        symbol: PauliIndex,
    },
    CheckTallied {
        check: CheckId,
        errors: u64,
        samples: u64,
    },

    // attacker-private
    Intercepted {
        leg: ChannelLeg,
        relay: Option<u32>,
        photons: usize,
    },
    KeyGuess {
        slot: usize,
        guess: PauliIndex,
    },
    MessageGuess {
        slot: usize,
        guess: PauliIndex,
    },
}

impl Event {
    pub fn visibility(&self) -> Visibility {
        use Event::*;
        match self {
            SampleRequest { .. }
            | BasisAndOutcome { .. }
            | DecoyReveal { .. }
            | CheckOpReveal { .. }
            | BellResult { .. }
            | CheckPassed { .. }
            | AbortNotice { .. }
            | Transmit { .. }
            | Hop { .. }
            | Deliver { .. } => Visibility::Public,
            Intercepted { .. } | KeyGuess { .. } | MessageGuess { .. } => Visibility::Attacker,
            _ => Visibility::Private,
        }
    }

    pub fn is_hop(&self) -> bool {
        matches!(self, Event::Hop { .. })
    }
}

impl From<ClassicalAnnouncement> for Event {
    fn from(a: ClassicalAnnouncement) -> Self {
        use ClassicalAnnouncement as A;
        match a {
            A::SampleRequest { check, slots } => Event::SampleRequest { check, slots },
            A::BasisAndOutcome {
                slot,
                basis_id,
                outcome,
            } => Event::BasisAndOutcome {
                slot,
                basis_id,
                outcome,
            },
            A::DecoyReveal {
                slot,
                basis_id,
                vector_index,
            } => Event::DecoyReveal {
                slot,
                basis_id,
                vector_index,
            },
            A::CheckOpReveal { slot, op } => Event::CheckOpReveal { slot, op },
            A::BellResult { slot, index } => Event::BellResult { slot, index },
            A::CheckPassed { check } => Event::CheckPassed { check },
            A::AbortNotice { check_id, rate } => Event::AbortNotice { check_id, rate },
        }
    }
}

impl Event {
    /// The classical-channel message this event carries, if any.
    pub fn announcement(&self) -> Option<ClassicalAnnouncement> {
        use ClassicalAnnouncement as A;
        Some(match self.clone() {
            Event::SampleRequest { check, slots } => A::SampleRequest { check, slots },
            Event::BasisAndOutcome {
                slot,
                basis_id,
                outcome,
            } => A::BasisAndOutcome {
                slot,
                basis_id,
                outcome,
            },
            Event::DecoyReveal {
                slot,
                basis_id,
                vector_index,
            } => A::DecoyReveal {
                slot,
                basis_id,
                vector_index,
            },
            Event::CheckOpReveal { slot, op } => A::CheckOpReveal { slot, op },
            Event::BellResult { slot, index } => A::BellResult { slot, index },
            Event::CheckPassed { check } => A::CheckPassed { check },
            Event::AbortNotice { check_id, rate } => A::AbortNotice { check_id, rate },
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub seq_no: u64,
    pub actor: Actor,
    pub visibility: Visibility,
    #[serde(flatten)]
    pub event: Event,
}

/// Append-only record log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, actor: Actor, event: Event) {
        let seq_no = self.records.len() as u64;
        self.records.push(TranscriptRecord {
            seq_no,
            actor,
            visibility: event.visibility(),
            event,
        });
    }

    pub fn announce(&mut self, actor: Actor, a: ClassicalAnnouncement) {
        self.push(actor, a.into());
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TranscriptRecord> {
        self.records
    }

    /// Everything a passive listener on the public channel sees.
    pub fn announcements(&self) -> impl Iterator<Item = (Actor, ClassicalAnnouncement)> + '_ {
        self.records
            .iter()
            .filter_map(|r| r.event.announcement().map(|a| (r.actor, a)))
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    kind: String,
}

/// Serializes records as NDJSON with a header line.
pub fn write_transcript(records: &[TranscriptRecord]) -> String {
    let header = Header {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        kind: TRANSCRIPT_KIND.to_string(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parses an NDJSON transcript, checking the header, sequence numbers and
/// the visibility tag of every record.
pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptRecord>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| QsdcError::transcript("empty transcript"))?;
    let header: Header = serde_json::from_str(first)
        .map_err(|e| QsdcError::transcript(format!("line 1: bad header: {e}")))?;
    if header.schema_version != TRANSCRIPT_SCHEMA_VERSION || header.kind != TRANSCRIPT_KIND {
        return Err(QsdcError::transcript(format!(
            "unsupported transcript header (kind {:?}, schema_version {})",
            header.kind, header.schema_version
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines {
        let rec: TranscriptRecord = serde_json::from_str(line)
            .map_err(|e| QsdcError::transcript(format!("line {}: {e}", lineno + 1)))?;
        if rec.seq_no != records.len() as u64 {
            return Err(QsdcError::transcript(format!(
                "line {}: expected seq_no {}, found {}",
                lineno + 1,
                records.len(),
                rec.seq_no
            )));
        }
        if rec.visibility != rec.event.visibility() {
            return Err(QsdcError::transcript(format!(
                "line {}: visibility {:?} does not match event kind",
                lineno + 1,
                rec.visibility
            )));
        }
        records.push(rec);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_wire_format() {
        let mut t = Transcript::new();
        t.announce(
            Actor::Alice,
            ClassicalAnnouncement::BasisAndOutcome {
                slot: 4,
                basis_id: 1,
                outcome: 2,
            },
        );
        let line = serde_json::to_string(&t.records()[0]).unwrap();
        assert_eq!(
            line,
            r#"{"seq_no":0,"actor":"alice","visibility":"public","event_type":"basis_and_outcome","payload":{"slot":4,"basis_id":1,"outcome":2}}"#
        );
    }

    #[test]
    fn round_trip() {
        let mut t = Transcript::new();
        t.push(
            Actor::Channel,
            Event::Transmit {
                leg: ChannelLeg::CharlieToBob,
                photons: 3,
            },
        );
        t.push(
            Actor::Charlie,
            Event::KeyApplied {
                slot: 1,
                key: PauliIndex::new(2, 0, 3).unwrap(),
            },
        );
        t.announce(
            Actor::Bob,
            ClassicalAnnouncement::AbortNotice {
                check_id: CheckId::Decoy,
                rate: 0.1 + 0.2,
            },
        );
        t.push(
            Actor::Eve,
            Event::Intercepted {
                leg: ChannelLeg::CharlieToBob,
                relay: None,
                photons: 3,
            },
        );
        let text = write_transcript(t.records());
        assert_eq!(parse_transcript(&text).unwrap(), t.records());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_transcript("").is_err());
        assert!(parse_transcript("{\"schema_version\":2,\"kind\":\"qsdc-transcript\"}").is_err());
        let hdr = "{\"schema_version\":1,\"kind\":\"qsdc-transcript\"}\n";
        let skipped = format!(
            "{hdr}{}",
            r#"{"seq_no":1,"actor":"alice","visibility":"public","event_type":"check_passed","payload":{"check":"first"}}"#
        );
        assert!(parse_transcript(&skipped).is_err());
        let wrong_vis = format!(
            "{hdr}{}",
            r#"{"seq_no":0,"actor":"eve","visibility":"public","event_type":"key_guess","payload":{"slot":0,"guess":{"n":0,"m":0,"d":2}}}"#
        );
        assert!(parse_transcript(&wrong_vis).is_err());
    }
}
