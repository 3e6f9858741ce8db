#![no_main]

use libfuzzer_sys::fuzz_target;

// input framing: [u32 LE sidecar length][sidecar JSON][binary payload]
fuzz_target!(|data: &[u8]| {
    if data.len() < 4 {
        return;
    }
    let n = u32::from_le_bytes(data[..4].try_into().unwrap()) as usize;
    let rest = &data[4..];
    if n > rest.len() {
        return;
    }
    let (sidecar, bin) = rest.split_at(n);
    let _ = peakmeta::io::decode_stream(sidecar, bin);
});
