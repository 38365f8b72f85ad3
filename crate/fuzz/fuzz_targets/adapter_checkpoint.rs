//! Adapter checkpoint decoder: no panic on arbitrary bytes, and decoded
//! adapters re-encode to a canonical fixpoint.

#![no_main]

use libfuzzer_sys::fuzz_target;
use raie_core::model::LowRankAdapter;

fuzz_target!(|data: &[u8]| {
    if let Ok((id, adapter)) = LowRankAdapter::from_bytes(data) {
        let once = adapter.to_bytes(id);
        let (id2, again) = LowRankAdapter::from_bytes(&once).expect("re-encoded checkpoint must load");
        assert_eq!(id2, id);
        assert_eq!(again.to_bytes(id2), once, "re-encoding must be a fixpoint");
        assert_eq!(again.dropout_rate(), 0.0, "dropout is never persisted");
    }
});
