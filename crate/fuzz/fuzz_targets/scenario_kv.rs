//! Drift-scenario config parser. A scenario that parses must also
//! validate, and (when small enough to simulate cheaply) must generate
//! exactly `users * events_per_user` events with one label per event.

#![no_main]

use libfuzzer_sys::fuzz_target;
use raie_core::sim::{generate_stream, DriftScenario};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(scenario) = DriftScenario::from_kv_text(text) else { return };
    assert!(scenario.validate().is_ok(), "parsed scenarios must validate");
    let small = scenario.interests <= 4
        && scenario.items_per_interest <= 16
        && scenario.users <= 8
        && scenario.events_per_user <= 64;
    if small {
        let (events, labels) = generate_stream(&scenario).expect("valid scenario must simulate");
        assert_eq!(events.len(), scenario.users * scenario.events_per_user);
        assert_eq!(labels.len(), events.len());
        assert!(labels.iter().all(|&g| g < scenario.interests));
    }
});
