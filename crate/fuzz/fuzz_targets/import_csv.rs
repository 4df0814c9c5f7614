#![no_main]

use exotendon::table::StudyTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = StudyTable::from_csv_str(text) {
        let again = StudyTable::from_csv_str(&table.to_csv_string()).expect("re-import");
        assert_eq!(again, table.rounded());
    }
});
