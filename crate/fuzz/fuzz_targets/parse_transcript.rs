#![no_main]
use libfuzzer_sys::fuzz_target;
use qsdc_core::protocol::{parse_transcript, write_transcript};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_transcript(text) {
        // Anything accepted must survive a write/parse round trip.
        let again = parse_transcript(&write_transcript(&records)).expect("written transcript parses");
        assert_eq!(records, again);
    }
});
