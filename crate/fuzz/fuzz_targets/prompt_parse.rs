//! Prompt template parser: any accepted prompt must rebuild to the
//! exact input bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use raie_core::model::{build_prompt, parse_prompt};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok((user_id, history)) = parse_prompt(text) else { return };
    assert!(!history.is_empty(), "parser must reject empty histories");
    let rebuilt = build_prompt(&user_id, &history).expect("parsed history is nonempty");
    assert_eq!(rebuilt, text, "parse must be a right inverse of build");
});
