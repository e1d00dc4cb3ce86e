#![no_main]
use libfuzzer_sys::fuzz_target;
use qsdc_core::protocol::{parse_transcript, replay_transcript, SessionConfig};

// Corpus transcripts were recorded with d=2, M=2, N=16 and default thresholds.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(records) = parse_transcript(text) else { return };
    let _ = replay_transcript(&SessionConfig::new(2, 2, 16), &records);
});
