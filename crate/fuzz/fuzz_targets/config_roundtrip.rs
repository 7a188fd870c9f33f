//! Anything that parses must survive format -> parse unchanged: format is
//! the canonical form, so the second pass is a fixed point.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mergesplit_cli::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = Config::parse(text) else { return };
    let canonical = cfg.format();
    let again = Config::parse(&canonical).expect("canonical form must parse");
    assert_eq!(cfg, again);
    assert_eq!(canonical, again.format());
});
