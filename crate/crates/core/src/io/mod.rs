//! File formats: CSV grids, peak-coordinate lists, PGM quick-looks, the
//! columnar sample-stream binary with its JSON sidecar, and run manifests.
//!
//! Readers treat their input as untrusted: they never panic on malformed
//! bytes, validate all counts before allocating, and report parse positions.

pub mod grid_csv;
pub mod manifest;
pub mod peaks;
pub mod pgm;
pub mod stream;

pub use grid_csv::{
    format_sig6, parse_binary_grid, parse_grid_csv, read_binary_grid, read_grid_csv,
    write_grid_csv, write_xy_csv,
};
pub use manifest::{sha256_file, sha256_hex, write_json, RunManifest};
pub use peaks::{parse_peak_list, peak_field_from_list, SlabFilter};
pub use pgm::write_pgm;
pub use stream::{decode_stream, read_stream, write_stream, StreamSidecar};
