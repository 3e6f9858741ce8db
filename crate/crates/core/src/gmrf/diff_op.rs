//! Second-order difference operator on the lattice interior.
//!
//! One row per interior node `(j, k)`: the sum of the vertical and
//! horizontal second differences, i.e. the 5-point stencil with center
//! -4 and the four cardinal neighbors +1. Every row sums to zero; the
//! operator has full row rank.

use crate::error::Result;
use crate::grid::LatticeGrid;

/// Stencil coefficients in the order [center, north, south, west, east].
pub const STENCIL_COEFS: [f64; 5] = [-4.0, 1.0, 1.0, 1.0, 1.0];

/// Sparse row-compressed difference operator: `(n1-2)(n2-2)` rows over
/// `n` columns, exactly five nonzeros per row.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    grid: LatticeGrid,
    /// Column indices per row, ordered as [`STENCIL_COEFS`].
    cols: Vec<[u32; 5]>,
}

/// Build the difference operator for `grid`.
pub fn build_diff_operator(grid: &LatticeGrid) -> DiffOperator {
    let (m1, m2) = grid.interior_dims();
    let mut cols = Vec::with_capacity(m1 * m2);
    for j in 1..grid.n1() - 1 {
        for k in 1..grid.n2() - 1 {
            cols.push([
                grid.index(j, k) as u32,
                grid.index(j - 1, k) as u32,
                grid.index(j + 1, k) as u32,
                grid.index(j, k - 1) as u32,
                grid.index(j, k + 1) as u32,
            ]);
        }
    }
    DiffOperator { grid: *grid, cols }
}

impl DiffOperator {
    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn n_rows(&self) -> usize {
        self.cols.len()
    }

    pub fn n_cols(&self) -> usize {
        self.grid.len()
    }

    /// Column indices of row `r`.
    #[inline]
    pub fn row_cols(&self, r: usize) -> &[u32; 5] {
        &self.cols[r]
    }

    /// Interior row index of node `(j, k)`, if it is interior.
    pub fn row_of_node(&self, j: usize, k: usize) -> Option<usize> {
        let (m1, m2) = self.grid.interior_dims();
        if (1..=m1).contains(&j) && (1..=m2).contains(&k) {
            Some((j - 1) * m2 + (k - 1))
        } else {
            None
        }
    }

    /// `out = B z` (increments at interior nodes).
    pub fn apply_into(&self, z: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(z.len(), self.n_cols());
        out.clear();
        out.extend(self.cols.iter().map(|c| {
            -4.0 * z[c[0] as usize]
                + z[c[1] as usize]
                + z[c[2] as usize]
                + z[c[3] as usize]
                + z[c[4] as usize]
        }));
    }

    /// `B z` as a fresh vector.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        self.apply_into(z, &mut out);
        out
    }

    /// The quadratic form `z^T A_gamma z = sum_j (Bz)_j^2 / gamma2_j`.
    pub fn quadratic_form(&self, z: &[f64], gamma_sq: &[f64]) -> Result<f64> {
        if gamma_sq.len() != self.n_rows() {
            return Err(crate::error::Error::Dim(format!(
                "gamma vector length {} != stencil row count {}",
                gamma_sq.len(),
                self.n_rows()
            )));
        }
        let mut q = 0.0;
        for (c, g) in self.cols.iter().zip(gamma_sq) {
            let inc = -4.0 * z[c[0] as usize]
                + z[c[1] as usize]
                + z[c[2] as usize]
                + z[c[3] as usize]
                + z[c[4] as usize];
            q += inc * inc / g;
        }
        Ok(q)
    }
}
