#![no_main]

use exotendon::routing::DesignVariant;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(design) = text.parse::<DesignVariant>() {
            let again: DesignVariant = design.to_string().parse().expect("display re-parses");
            assert_eq!(again, design);
        }
    }
});
