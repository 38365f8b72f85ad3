//! Region-set snapshot decoder: arbitrary bytes must either be rejected
//! or decode to a set whose re-encoding is a canonical fixpoint.

#![no_main]

use libfuzzer_sys::fuzz_target;
use raie_core::snapshot::{restore, snapshot};

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = restore(data) {
        let once = snapshot(&set);
        let again = restore(&once).expect("re-encoded snapshot must restore");
        assert_eq!(again.regions(), set.regions());
        assert_eq!(again.dim(), set.dim());
        assert_eq!(again.buffer(), set.buffer());
        assert_eq!(snapshot(&again), once, "re-encoding must be a fixpoint");
    }
});
