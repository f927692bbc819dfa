#![no_main]

use cavity_gates::circuit::text::{gate_label, parse_input_amplitudes};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&atoms, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let atom_count = usize::from(atoms % 4);
    if let Ok(vector) = parse_input_amplitudes(text, atom_count) {
        assert_eq!(vector.len(), 2 << atom_count);
        assert!(vector.iter().all(|a| a.re.is_finite() && a.im.is_finite()));
        // Re-emitting the nonzero terms parses back to the same vector.
        let terms: Vec<String> = vector
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != Default::default())
            .map(|(i, a)| format!("{}={a}", gate_label(i, atom_count)))
            .collect();
        if !terms.is_empty() {
            let again = parse_input_amplitudes(&terms.join(","), atom_count).expect("re-emitted terms parse");
            assert_eq!(again, vector);
        }
    }
});
