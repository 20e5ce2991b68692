#![no_main]

use edpolar::polycore::{parse_polynomial, Ring};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // The expression parser must never panic on any input; errors are
    // returned with positions. Round-tripping a successful parse must agree
    // with itself.
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let ring = Ring::new(vec!["x", "y", "z"]);
    if let Ok(poly) = parse_polynomial(text, &ring) {
        let printed = poly.to_string();
        let again = parse_polynomial(&printed, &ring).expect("printed form reparses");
        assert_eq!(again, poly);
    }
});
