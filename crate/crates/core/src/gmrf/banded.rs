//! Symmetric banded matrices, banded Cholesky factorization, and exact
//! Gaussian draws from banded-precision distributions.
//!
//! Storage is the lower band in row-major order: entry `(i, j)` with
//! `i - hb <= j <= i` lives at `data[i * (hb + 1) + (j - i + hb)]`. Row
//! segments are contiguous, so the factorization inner loops reduce to
//! dot products over slices. For fixed half-bandwidth the factorization
//! cost is linear in the matrix dimension.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Symmetric positive-(semi)definite banded matrix, lower band stored.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    hb: usize,
    data: Vec<f64>,
}

/// Four-accumulator dot product. Fixed reduction order keeps results
/// bit-reproducible while giving the optimizer independent chains.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let quads = a.len() / 4 * 4;
    let (a4, a_tail) = a.split_at(quads);
    let (b4, b_tail) = b.split_at(quads);
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a_tail.iter().zip(b_tail) {
        s += x * y;
    }
    s
}

impl BandedMatrix {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        let hb = half_bandwidth.min(n.saturating_sub(1));
        BandedMatrix {
            n,
            hb,
            data: vec![0.0; n * (hb + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.hb
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.hb, "({i},{j}) outside band");
        i * (self.hb + 1) + (j + self.hb - i)
    }

    /// Entry `(i, j)`; either triangle, zero outside the band.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.hb {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Add `v` to entry `(i, j)` (lower triangle addressing).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(0.0);
    }

    /// Scale every stored entry.
    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// Add `v` to the diagonal entry `(i, i)`.
    #[inline]
    pub fn add_diag(&mut self, i: usize, v: f64) {
        let s = self.slot(i, i);
        self.data[s] += v;
    }

    /// Largest diagonal entry.
    pub fn max_diag(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * (self.hb + 1) + self.hb])
            .fold(0.0, f64::max)
    }

    /// `y = M x` treating the stored band as a symmetric matrix.
    pub fn sym_matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        let w = self.hb + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hb);
            let row = &self.data[i * w + (lo + self.hb - i)..i * w + w];
            // off-diagonal part, both triangles
            let mut acc = 0.0;
            for (off, &m) in row[..i - lo].iter().enumerate() {
                let j = lo + off;
                acc += m * x[j];
                y[j] += m * x[i];
            }
            y[i] += acc + row[i - lo] * x[i];
        }
    }

    /// In-place banded Cholesky: replaces the band with the lower factor L
    /// such that `L L^T = M`. Fails on a nonpositive pivot, reporting its index.
    pub fn cholesky_in_place(&mut self) -> Result<()> {
        let n = self.n;
        let hb = self.hb;
        let w = hb + 1;
        for i in 0..n {
            // The dot for pair (i, j) runs over k in [i - hb, j); row i's band
            // is the binding constraint since j <= i.
            let lo = i.saturating_sub(hb);
            // Split so we can read finished rows while writing row i.
            let (done, rest) = self.data.split_at_mut(i * w);
            let row_i = &mut rest[..w];
            for j in lo..i {
                let a = &row_i[(lo + hb - i)..(j + hb - i)];
                let b = &done[j * w + (lo + hb - j)..j * w + hb];
                let upd = row_i[j + hb - i] - dot(a, b);
                row_i[j + hb - i] = upd / done[j * w + hb];
            }
            let a = &row_i[(lo + hb - i)..hb];
            let s = row_i[hb] - dot(a, a);
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::Factorization { pivot: i });
            }
            row_i[hb] = s.sqrt();
        }
        Ok(())
    }

    /// Forward substitution `L x = b` in place, with `self` holding L.
    pub fn solve_lower_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let w = self.hb + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hb);
            let row = &self.data[i * w + (lo + self.hb - i)..i * w + w];
            let s = dot(&row[..i - lo], &x[lo..i]);
            x[i] = (x[i] - s) / row[i - lo];
        }
    }

    /// Backward substitution `L^T x = b` in place, with `self` holding L.
    pub fn solve_lower_transpose_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let w = self.hb + 1;
        for j in (0..self.n).rev() {
            let lo = j.saturating_sub(self.hb);
            let row = &self.data[j * w + (lo + self.hb - j)..j * w + w];
            let xj = x[j] / row[j - lo];
            x[j] = xj;
            for (off, &l) in row[..j - lo].iter().enumerate() {
                x[lo + off] -= l * xj;
            }
        }
    }

    /// `x = M^{-1} b` through the already-computed factor (`self` holds L).
    pub fn solve_in_place(&self, x: &mut [f64]) {
        self.solve_lower_in_place(x);
        self.solve_lower_transpose_in_place(x);
    }
}

/// Banded Cholesky factorization of a symmetric positive definite matrix.
///
/// Returns the lower factor in banded storage; the input is untouched.
pub fn banded_cholesky(m: &BandedMatrix) -> Result<BandedMatrix> {
    let mut f = m.clone();
    f.cholesky_in_place()?;
    Ok(f)
}

/// One exact draw from `N(mu, Q^{-1})` where `Q = precision` and
/// `mu = Q^{-1} linear_term`.
///
/// Factors Q, solves for the mean, then adds the `L^T`-solve of a
/// standard-normal vector.
pub fn sample_gaussian_field<R: Rng + ?Sized>(
    precision: &BandedMatrix,
    linear_term: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if linear_term.len() != precision.n() {
        return Err(Error::Dim(format!(
            "linear term length {} != matrix dimension {}",
            linear_term.len(),
            precision.n()
        )));
    }
    let chol = banded_cholesky(precision)?;
    let mut x = linear_term.to_vec();
    chol.solve_in_place(&mut x);
    sample_with_factor(&chol, &mut x, rng);
    Ok(x)
}

/// Add `L^{-T} z`, `z ~ N(0, I)`, to `mu` in place. `chol` holds L.
pub(crate) fn sample_with_factor<R: Rng + ?Sized>(
    chol: &BandedMatrix,
    mu: &mut [f64],
    rng: &mut R,
) {
    let mut z: Vec<f64> = (0..chol.n()).map(|_| rng.sample(StandardNormal)).collect();
    chol.solve_lower_transpose_in_place(&mut z);
    for (m, zi) in mu.iter_mut().zip(&z) {
        *m += zi;
    }
}
