#![no_main]

use edpolar::problem::{parse_problem, validate};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Problem-file loading is parse + validate; neither step may panic, and
    // a file that validates cleanly must compile.
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = parse_problem(text) {
        let diags = validate(&file);
        if diags.is_empty() {
            let _ = edpolar::problem::compile(&file);
        }
    }
});
