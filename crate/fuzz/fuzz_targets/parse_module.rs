#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    match qiro::text::parse(src) {
        Ok(m) => {
            let text = qiro::text::print_module(&m);
            let back = qiro::text::parse(&text).expect("printed module parses");
            qiro::ir::isomorphic(&m, &back).expect("round trip");
            assert_eq!(text, qiro::text::print_module(&back));
        }
        Err(ds) => assert!(ds.iter().all(|d| d.line >= 1 && d.column >= 1)),
    }
});
