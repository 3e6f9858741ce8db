#![no_main]

use libfuzzer_sys::fuzz_target;
use peakmeta::io::peaks::{parse_peak_list, peak_field_from_list, SlabFilter};
use peakmeta::LatticeGrid;

fuzz_target!(|data: &[u8]| {
    if let Ok(peaks) = parse_peak_list(data, None, "fuzz") {
        let grid = LatticeGrid::new(16, 16).unwrap();
        let _ = peak_field_from_list(&grid, &peaks);
    }
    let slab = SlabFilter {
        center: 0.0,
        halfwidth: 10.0,
    };
    let _ = parse_peak_list(data, Some(slab), "fuzz");
});
