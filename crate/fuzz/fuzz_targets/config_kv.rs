//! `key = value` config parser and the typed helpers layered on it.
//! None of them may panic on arbitrary text; typed failures must come
//! back as errors.

#![no_main]

use libfuzzer_sys::fuzz_target;
use raie_core::config::{parse_f64_list, parse_kv_map, parse_value};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(map) = parse_kv_map(text) else { return };
    for (key, value) in &map {
        let _ = parse_value::<f64>(key, value);
        let _ = parse_value::<u64>(key, value);
        let _ = parse_value::<bool>(key, value);
        let _ = parse_f64_list(key, value);
    }
});
