#![no_main]

use cavity_gates::circuit::text::{parse_circuit, serialize_circuit};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    match parse_circuit(text) {
        Ok(spec) => {
            // Anything accepted must survive a serialize/parse round trip.
            let canonical = serialize_circuit(&spec);
            let reparsed = parse_circuit(&canonical).expect("canonical form parses");
            assert_eq!(reparsed, spec);
            assert_eq!(serialize_circuit(&reparsed), canonical);
        }
        Err(e) => {
            assert!(e.line >= 1 && e.column >= 1);
            let _ = e.to_string();
        }
    }
});
