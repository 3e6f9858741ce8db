#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // general numeric grids and the stricter 0/1 reader share a code path;
    // neither may panic on arbitrary bytes
    let _ = peakmeta::io::parse_grid_csv(data, "fuzz");
    let _ = peakmeta::io::parse_binary_grid(data, "fuzz");
});
