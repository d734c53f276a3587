#![no_main]

use kirchhoff_cli::parse_samples;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(s) = parse_samples(text) else {
        return;
    };
    assert!(s.xs().windows(2).all(|w| w[0] < w[1]));
    let printed: String = s.xs().iter().zip(s.ys()).map(|(x, y)| format!("{x:?} {y:?}\n")).collect();
    assert_eq!(parse_samples(&printed).expect("printed samples must parse"), s);
    for &x in s.xs() {
        let v = s.at(x);
        assert!(v.is_finite());
    }
});
