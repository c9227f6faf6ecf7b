#![no_main]

use libfuzzer_sys::fuzz_target;
use tetfv::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = Config::from_toml(text) {
        // accepted configs resolve their scheme and case without panicking
        let _ = cfg.scheme();
        let _ = cfg.solution();
        let _ = cfg.mode();
    }
});
