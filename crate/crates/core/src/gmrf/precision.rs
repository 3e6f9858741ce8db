//! Adaptive precision matrix `A_gamma = B^T diag(1/gamma^2) B`.

use crate::error::{Error, Result};
use crate::gmrf::banded::BandedMatrix;
use crate::gmrf::diff_op::{DiffOperator, STENCIL_COEFS};

/// Assembled adaptive precision: banded, symmetric, positive semidefinite,
/// half-bandwidth `2 * n2` in row-major ordering.
#[derive(Debug, Clone)]
pub struct AdaptivePrecision {
    band: BandedMatrix,
    gamma_sq: Vec<f64>,
}

/// Half-bandwidth of `A_gamma` for a given lattice.
pub fn precision_half_bandwidth(n2: usize) -> usize {
    2 * n2
}

/// Accumulate `scale * B^T diag(1/gamma^2) B` into `band` (not cleared).
///
/// Each stencil row contributes a 5x5 outer-product block; 15 distinct
/// lower-triangle updates per row, so assembly is linear in the lattice size.
pub fn assemble_scaled_into(
    op: &DiffOperator,
    gamma_sq: &[f64],
    scale: f64,
    band: &mut BandedMatrix,
) {
    debug_assert_eq!(gamma_sq.len(), op.n_rows());
    debug_assert_eq!(band.n(), op.n_cols());
    for (r, g) in gamma_sq.iter().enumerate() {
        let w = scale / g;
        let cols = op.row_cols(r);
        for a in 0..5 {
            let ca = cols[a] as usize;
            let va = STENCIL_COEFS[a] * w;
            for b in a..5 {
                band.add(ca, cols[b] as usize, va * STENCIL_COEFS[b]);
            }
        }
    }
}

/// Assemble `A_gamma` for the given local variances.
pub fn assemble_precision(op: &DiffOperator, gamma_sq: &[f64]) -> Result<AdaptivePrecision> {
    if gamma_sq.len() != op.n_rows() {
        return Err(Error::Dim(format!(
            "gamma vector length {} != stencil row count {}",
            gamma_sq.len(),
            op.n_rows()
        )));
    }
    if let Some(bad) = gamma_sq.iter().position(|&g| g <= 0.0 || !g.is_finite()) {
        return Err(Error::Domain(format!(
            "gamma_sq[{bad}] = {} (must be positive and finite)",
            gamma_sq[bad]
        )));
    }
    let mut band = BandedMatrix::zeros(op.n_cols(), precision_half_bandwidth(op.grid().n2()));
    assemble_scaled_into(op, gamma_sq, 1.0, &mut band);
    Ok(AdaptivePrecision {
        band,
        gamma_sq: gamma_sq.to_vec(),
    })
}

impl AdaptivePrecision {
    pub fn band(&self) -> &BandedMatrix {
        &self.band
    }

    pub fn gamma_sq(&self) -> &[f64] {
        &self.gamma_sq
    }

    pub fn n(&self) -> usize {
        self.band.n()
    }

    pub fn half_bandwidth(&self) -> usize {
        self.band.half_bandwidth()
    }

    /// Entry `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.band.at(i, j)
    }

    /// `y = A_gamma x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        self.band.sym_matvec(x, y);
    }

    /// Write the nonzero lower-triangle entries as `row col value` text lines.
    pub fn write_coo<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# symmetric lower triangle: row col value")?;
        let n = self.band.n();
        let hb = self.band.half_bandwidth();
        for i in 0..n {
            for j in i.saturating_sub(hb)..=i {
                let v = self.band.at(i, j);
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v:.17e}")?;
                }
            }
        }
        Ok(())
    }
}
