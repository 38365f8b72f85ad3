//! Windowed-example file parser: a successful parse must survive a
//! format/parse round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use raie_core::pipeline::{format_examples, parse_examples};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(examples) = parse_examples(text) else { return };
    let rendered = format_examples(&examples);
    let reparsed = parse_examples(&rendered).expect("formatted examples must reparse");
    assert_eq!(reparsed, examples, "examples must round-trip through format/parse");
});
