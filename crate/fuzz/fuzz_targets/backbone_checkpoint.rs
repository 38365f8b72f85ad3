//! Backbone checkpoint decoder: no panic on arbitrary bytes, and decoded
//! backbones re-encode to a canonical fixpoint.

#![no_main]

use libfuzzer_sys::fuzz_target;
use raie_core::model::Backbone;

fuzz_target!(|data: &[u8]| {
    if let Ok(backbone) = Backbone::from_bytes(data) {
        let once = backbone.to_bytes();
        let again = Backbone::from_bytes(&once).expect("re-encoded checkpoint must load");
        assert_eq!(again.fingerprint(), backbone.fingerprint());
        assert_eq!(again.to_bytes(), once, "re-encoding must be a fixpoint");
    }
});
