#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(c) = qiro::resource::CostModel::from_json(src) {
        let again = qiro::resource::CostModel::from_json(&c.to_json()).expect("serialized model parses");
        assert_eq!(c.to_json(), again.to_json());
    }
});
