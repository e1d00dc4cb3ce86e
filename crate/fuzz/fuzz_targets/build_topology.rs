#![no_main]
use libfuzzer_sys::fuzz_target;
use qsdc_core::netsim::{build_topology, route_session, TopologySpec};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<TopologySpec>(data) else { return };
    let Ok(topology) = build_topology(&spec) else { return };
    let users: Vec<u32> = spec.branches.iter().flat_map(|b| b.user_ids.iter().copied()).take(16).collect();
    for &a in &users {
        for &b in &users {
            let _ = route_session(&topology, a, b);
        }
    }
});
