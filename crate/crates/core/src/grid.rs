//! Rectangular voxel-lattice geometry and index mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regular `n1 x n2` lattice with row-major linear indexing.
///
/// `n1` counts rows, `n2` counts columns; the linear index of node `(j, k)`
/// is `j * n2 + k`. `spacing` converts lattice cells to physical units
/// (cells by default, millimetres when a physical frame is supplied).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    n1: usize,
    n2: usize,
    #[serde(default = "default_spacing")]
    spacing: f64,
    #[serde(default)]
    origin: (f64, f64),
}

fn default_spacing() -> f64 {
    1.0
}

impl LatticeGrid {
    /// The second-order interior stencil needs two interior rings, hence 5x5 minimum.
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 5 || n2 < 5 {
            return Err(Error::GridTooSmall { n1, n2 });
        }
        Ok(LatticeGrid {
            n1,
            n2,
            spacing: 1.0,
            origin: (0.0, 0.0),
        })
    }

    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        if !spacing.is_finite() || spacing <= 0.0 {
            return Err(Error::Domain(format!("spacing must be positive: {spacing}")));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Total voxel count `n = n1 * n2`.
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Linear index of node `(j, k)`, row-major.
    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < self.n1 && k < self.n2);
        j * self.n2 + k
    }

    /// Inverse of [`index`](Self::index).
    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        debug_assert!(idx < self.len());
        (idx / self.n2, idx % self.n2)
    }

    /// Interior stencil-row counts: `(n1-2, n2-2)`.
    pub fn interior_dims(&self) -> (usize, usize) {
        (self.n1 - 2, self.n2 - 2)
    }

    /// Number of interior nodes, i.e. rows of the difference operator.
    pub fn interior_len(&self) -> usize {
        (self.n1 - 2) * (self.n2 - 2)
    }

    /// Dimension of the difference-operator null space; equals the
    /// boundary-node count `2*n1 + 2*n2 - 4`.
    pub fn null_dim(&self) -> usize {
        self.len() - self.interior_len()
    }

    /// True if `(j, k)` lies on the outermost ring.
    pub fn is_boundary(&self, j: usize, k: usize) -> bool {
        j == 0 || k == 0 || j == self.n1 - 1 || k == self.n2 - 1
    }

    /// The same lattice with rows and columns swapped.
    pub fn transposed(&self) -> LatticeGrid {
        LatticeGrid {
            n1: self.n2,
            n2: self.n1,
            spacing: self.spacing,
            origin: (self.origin.1, self.origin.0),
        }
    }

    /// Map a linear index into this grid to the corresponding index in the
    /// transposed grid.
    #[inline]
    pub fn transpose_index(&self, idx: usize) -> usize {
        let (j, k) = self.coords(idx);
        k * self.n1 + j
    }

    /// Linear index of the lattice center node.
    pub fn center_index(&self) -> usize {
        self.index(self.n1 / 2, self.n2 / 2)
    }
}

/// Transpose a row-major field over `grid` into row-major over `grid.transposed()`.
pub fn transpose_field<T: Copy>(grid: &LatticeGrid, data: &[T]) -> Vec<T> {
    debug_assert_eq!(data.len(), grid.len());
    let (n1, n2) = (grid.n1, grid.n2);
    let mut out = Vec::with_capacity(data.len());
    for k in 0..n2 {
        for j in 0..n1 {
            out.push(data[j * n2 + k]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grids() {
        assert!(LatticeGrid::new(4, 10).is_err());
        assert!(LatticeGrid::new(10, 4).is_err());
        assert!(LatticeGrid::new(5, 5).is_ok());
    }

    #[test]
    fn index_roundtrip_is_bijective() {
        let g = LatticeGrid::new(7, 11).unwrap();
        let mut seen = vec![false; g.len()];
        for j in 0..7 {
            for k in 0..11 {
                let i = g.index(j, k);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(g.coords(i), (j, k));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn null_dim_counts_boundary() {
        let g = LatticeGrid::new(6, 9).unwrap();
        assert_eq!(g.null_dim(), 2 * 6 + 2 * 9 - 4);
        let mut boundary = 0;
        for j in 0..6 {
            for k in 0..9 {
                if g.is_boundary(j, k) {
                    boundary += 1;
                }
            }
        }
        assert_eq!(boundary, g.null_dim());
    }

    #[test]
    fn transpose_roundtrip() {
        let g = LatticeGrid::new(5, 8).unwrap();
        let data: Vec<usize> = (0..g.len()).collect();
        let t = transpose_field(&g, &data);
        let back = transpose_field(&g.transposed(), &t);
        assert_eq!(back, data);
        for idx in 0..g.len() {
            assert_eq!(t[g.transpose_index(idx)], data[idx]);
        }
    }
}
