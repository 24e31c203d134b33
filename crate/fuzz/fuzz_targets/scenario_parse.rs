#![no_main]

use libfuzzer_sys::fuzz_target;

use exbound_cli::scenario::{parse_scenarios, write_scenarios};

// Parsing must never panic on arbitrary input, and anything it accepts
// must survive a write/reparse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scenarios) = parse_scenarios(text) {
        let rendered = write_scenarios(&scenarios);
        let reparsed = parse_scenarios(&rendered).expect("canonical form must parse");
        assert_eq!(scenarios, reparsed, "round trip changed the scenarios");
    }
});
