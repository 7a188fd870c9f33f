//! Parsing arbitrary bytes must refuse or succeed cleanly, never panic,
//! and every reported error must carry a usable position.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mergesplit_cli::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match Config::parse(text) {
        Ok(cfg) => {
            for (key, value) in cfg.iter() {
                assert!(!key.is_empty());
                assert!(!value.is_empty());
            }
        }
        Err(e) => {
            if let Some(line) = e.line {
                assert!(line >= 1 && line <= text.lines().count());
            }
        }
    }
});
