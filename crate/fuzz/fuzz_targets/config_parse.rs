#![no_main]

use kirchhoff_cli::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

// Parsing never panics, and an accepted config survives a print/parse cycle.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ScenarioConfig::parse(text) {
        let again = ScenarioConfig::parse(&cfg.to_string()).expect("printed config must parse");
        assert_eq!(cfg, again);
    }
});
