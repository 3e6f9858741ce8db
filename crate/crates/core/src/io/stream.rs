//! Columnar sample-stream binary with a JSON sidecar manifest.
//!
//! Layout of the `.bin` payload, all little-endian, in block order:
//! `z` (retained x n f64), `gamma_sq` (retained x stencil_rows f64),
//! `theta_sq` (retained f64), `psi` (retained x n u8), `retained_iters`
//! (retained u64). The sidecar pins dimensions, model, run info, and the
//! SHA-256 of the payload; the decoder validates all of it before
//! allocating.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{RunInfo, SampleStream};
use crate::error::{Error, Result};
use crate::grid::LatticeGrid;
use crate::io::manifest::sha256_hex;
use crate::model::ModelSpec;

pub const STREAM_FORMAT: &str = "peakmeta-samples";
pub const STREAM_VERSION: u32 = 1;

/// JSON sidecar describing one chain's sample stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamSidecar {
    pub format: String,
    pub version: u32,
    pub n1: usize,
    pub n2: usize,
    pub spacing: f64,
    pub stencil_rows: usize,
    pub retained: usize,
    pub spec: ModelSpec,
    pub run: RunInfo,
    pub sha256: String,
}

fn payload_len(retained: usize, n: usize, m: usize) -> Option<usize> {
    // z + gamma + theta in f64, psi in u8, iters in u64
    let per = 8usize
        .checked_mul(n)?
        .checked_add(8usize.checked_mul(m)?)?
        .checked_add(8)?
        .checked_add(n)?
        .checked_add(8)?;
    retained.checked_mul(per)
}

/// Encode a stream to `(sidecar_json, payload_bytes)`.
pub fn encode_stream(stream: &SampleStream) -> (String, Vec<u8>) {
    let n = stream.n_voxels();
    let m = stream.stencil_rows();
    let s = stream.n_retained();
    let mut bin = Vec::with_capacity(payload_len(s, n, m).expect("stream size overflow"));
    for v in &stream.z {
        bin.extend_from_slice(&v.to_le_bytes());
    }
    for v in &stream.gamma_sq {
        bin.extend_from_slice(&v.to_le_bytes());
    }
    for v in &stream.theta_sq {
        bin.extend_from_slice(&v.to_le_bytes());
    }
    bin.extend_from_slice(&stream.psi);
    for v in &stream.retained_iters {
        bin.extend_from_slice(&v.to_le_bytes());
    }
    let sidecar = StreamSidecar {
        format: STREAM_FORMAT.to_string(),
        version: STREAM_VERSION,
        n1: stream.grid.n1(),
        n2: stream.grid.n2(),
        spacing: stream.grid.spacing(),
        stencil_rows: m,
        retained: s,
        spec: stream.spec,
        run: stream.run,
        sha256: sha256_hex(&bin),
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    (json + "\n", bin)
}

/// Decode and fully validate a sample stream from sidecar and payload bytes.
pub fn decode_stream(sidecar_bytes: &[u8], bin: &[u8]) -> Result<SampleStream> {
    let sidecar: StreamSidecar = serde_json::from_slice(sidecar_bytes)
        .map_err(|e| Error::Stream(format!("sidecar: {e}")))?;
    if sidecar.format != STREAM_FORMAT {
        return Err(Error::Stream(format!("unknown format {:?}", sidecar.format)));
    }
    if sidecar.version != STREAM_VERSION {
        return Err(Error::Stream(format!("unsupported version {}", sidecar.version)));
    }
    if sidecar.n1 > 100_000 || sidecar.n2 > 100_000 {
        return Err(Error::Stream("implausible lattice dimensions".into()));
    }
    if sidecar.spacing <= 0.0 || !sidecar.spacing.is_finite() {
        return Err(Error::Stream(format!("bad spacing {}", sidecar.spacing)));
    }
    let grid = LatticeGrid::new(sidecar.n1, sidecar.n2)?.with_spacing(sidecar.spacing)?;
    sidecar.spec.validate().map_err(|e| Error::Stream(format!("spec: {e}")))?;
    let n = grid.len();
    let m = grid.interior_len();
    if sidecar.stencil_rows != m {
        return Err(Error::Stream(format!(
            "stencil_rows {} inconsistent with lattice ({} expected)",
            sidecar.stencil_rows, m
        )));
    }
    let want = payload_len(sidecar.retained, n, m)
        .ok_or_else(|| Error::Stream("stream size overflow".into()))?;
    if bin.len() != want {
        return Err(Error::Stream(format!(
            "payload is {} bytes, sidecar implies {want}",
            bin.len()
        )));
    }
    let digest = sha256_hex(bin);
    if digest != sidecar.sha256 {
        return Err(Error::Stream(format!(
            "payload hash {digest} does not match sidecar {}",
            sidecar.sha256
        )));
    }

    let s = sidecar.retained;
    let mut off = 0usize;
    let mut take_f64 = |count: usize, bin: &[u8]| -> Vec<f64> {
        let mut v = Vec::with_capacity(count);
        for i in 0..count {
            let b: [u8; 8] = bin[off + i * 8..off + i * 8 + 8].try_into().unwrap();
            v.push(f64::from_le_bytes(b));
        }
        off += count * 8;
        v
    };
    let z = take_f64(s * n, bin);
    let gamma_sq = take_f64(s * m, bin);
    let theta_sq = take_f64(s, bin);
    for (i, v) in z.iter().chain(&gamma_sq).chain(&theta_sq).enumerate() {
        if !v.is_finite() {
            return Err(Error::Stream(format!("non-finite sample value at offset {i}")));
        }
    }
    if let Some(bad) = gamma_sq.iter().chain(&theta_sq).find(|v| **v <= 0.0) {
        return Err(Error::Stream(format!("nonpositive variance sample {bad}")));
    }
    let psi = bin[off..off + s * n].to_vec();
    off += s * n;
    if let Some(p) = psi.iter().find(|&&p| p > 1) {
        return Err(Error::Stream(format!("psi flag {p} is not 0/1")));
    }
    let mut retained_iters = Vec::with_capacity(s);
    for i in 0..s {
        let b: [u8; 8] = bin[off + i * 8..off + i * 8 + 8].try_into().unwrap();
        retained_iters.push(u64::from_le_bytes(b));
    }

    Ok(SampleStream {
        grid,
        spec: sidecar.spec,
        run: sidecar.run,
        retained_iters,
        z,
        gamma_sq,
        theta_sq,
        psi,
    })
}

/// Write `<stem>.bin` and `<stem>.json` into `dir`.
pub fn write_stream(dir: &Path, stem: &str, stream: &SampleStream) -> Result<()> {
    let (json, bin) = encode_stream(stream);
    let bin_path = dir.join(format!("{stem}.bin"));
    std::fs::write(&bin_path, bin).map_err(|e| Error::io(&bin_path, e))?;
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}

/// Read a stream written by [`write_stream`].
pub fn read_stream(dir: &Path, stem: &str) -> Result<SampleStream> {
    let json_path = dir.join(format!("{stem}.json"));
    let sidecar = std::fs::read(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let bin_path = dir.join(format!("{stem}.bin"));
    let bin = std::fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    decode_stream(&sidecar, &bin)
}
