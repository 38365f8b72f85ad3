//! MovieLens `::`-delimited log parser plus the downstream filters it
//! feeds. Malformed lines are skipped, never fatal; nothing here may
//! panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use raie_core::pipeline::{binarize, k_core_filter, parse_events, temporal_split, InputFormat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let report = parse_events(text, InputFormat::MovieLensDat);
    let events = binarize(report.events, 4.0);
    if !events.is_empty() {
        let _ = temporal_split(events.clone(), 0.5, 0.8);
    }
    // The fixpoint loop is quadratic in the worst case; cap the size so a
    // single input cannot stall the fuzzer.
    if events.len() <= 512 {
        let core = k_core_filter(events, 2);
        assert_eq!(k_core_filter(core.clone(), 2), core, "k-core must be idempotent");
    }
});
