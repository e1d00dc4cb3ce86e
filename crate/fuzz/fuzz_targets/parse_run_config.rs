#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = qsdc_core::harness::parse_run_config(text) {
            let _ = cfg.placement();
            let _ = cfg.session_config(0).validate();
        }
    }
});
