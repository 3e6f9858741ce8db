//! Quick-look images: ASCII PGM (P2), 8-bit linear mapping of [0, 1].

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::LatticeGrid;

pub fn write_pgm(path: &Path, grid: &LatticeGrid, data: &[f64]) -> Result<()> {
    debug_assert_eq!(data.len(), grid.len());
    let mut out = format!("P2\n{} {}\n255\n", grid.n2(), grid.n1());
    for j in 0..grid.n1() {
        for k in 0..grid.n2() {
            if k > 0 {
                out.push(' ');
            }
            let v = (data[grid.index(j, k)].clamp(0.0, 1.0) * 255.0).round() as u8;
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
