//! Binary observation fields and probability truth maps on a lattice.

use crate::error::{Error, Result};
use crate::grid::{transpose_field, LatticeGrid};

/// Binary observation lattice: `y[i] = 1` if voxel `i` was reported as a peak.
#[derive(Debug, Clone)]
pub struct PeakField {
    pub grid: LatticeGrid,
    pub y: Vec<u8>,
}

impl PeakField {
    pub fn new(grid: LatticeGrid, y: Vec<u8>) -> Result<Self> {
        if y.len() != grid.len() {
            return Err(Error::Dim(format!(
                "peak field has {} entries for a {}x{} lattice",
                y.len(),
                grid.n1(),
                grid.n2()
            )));
        }
        if let Some(bad) = y.iter().position(|&v| v > 1) {
            return Err(Error::Domain(format!(
                "peak field entry {bad} is {} (must be 0 or 1)",
                y[bad]
            )));
        }
        Ok(PeakField { grid, y })
    }

    pub fn zeros(grid: LatticeGrid) -> Self {
        let n = grid.len();
        PeakField {
            grid,
            y: vec![0; n],
        }
    }

    pub fn count_ones(&self) -> usize {
        self.y.iter().map(|&v| v as usize).sum()
    }

    pub fn transposed(&self) -> PeakField {
        PeakField {
            grid: self.grid.transposed(),
            y: transpose_field(&self.grid, &self.y),
        }
    }
}

/// Per-voxel activation probability surface used to generate peak fields.
#[derive(Debug, Clone)]
pub struct TruthMap {
    pub grid: LatticeGrid,
    pub p: Vec<f64>,
}

impl TruthMap {
    pub fn new(grid: LatticeGrid, p: Vec<f64>) -> Result<Self> {
        if p.len() != grid.len() {
            return Err(Error::Dim(format!(
                "truth map has {} entries for a {}x{} lattice",
                p.len(),
                grid.n1(),
                grid.n2()
            )));
        }
        if let Some(bad) = p.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Domain(format!(
                "truth map entry {bad} is {} (must lie in [0,1])",
                p[bad]
            )));
        }
        Ok(TruthMap { grid, p })
    }
}
