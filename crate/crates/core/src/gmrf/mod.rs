//! Lattice GMRF machinery: difference operator, adaptive precision
//! assembly, and banded-Cholesky Gaussian field sampling.

pub mod banded;
#[doc(hidden)]
pub mod dense;
pub mod diff_op;
pub mod precision;

pub use banded::{banded_cholesky, sample_gaussian_field, BandedMatrix};
pub use diff_op::{build_diff_operator, DiffOperator};
pub use precision::{assemble_precision, precision_half_bandwidth, AdaptivePrecision};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LatticeGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn banded_roundtrip_on_lattice_precision() {
        // M = A_gamma + I on a 6x6 lattice: factor, reconstruct, compare.
        let g = LatticeGrid::new(6, 6).unwrap();
        let op = build_diff_operator(&g);
        let a = assemble_precision(&op, &vec![1.0; op.n_rows()]).unwrap();
        let mut m = a.band().clone();
        for i in 0..m.n() {
            m.add_diag(i, 1.0);
        }
        let l = banded_cholesky(&m).unwrap();
        let n = m.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..=j {
                    s += l.at(i, k) * l.at(j, k);
                }
                worst = worst.max((s - m.at(i, j)).abs());
            }
        }
        assert!(worst < 1e-10, "max reconstruction error {worst}");
    }

    #[test]
    fn field_sampler_matches_dense_oracle() {
        // precision = A + I on a 6x6 lattice, zero linear term: the empirical
        // covariance of draws must match the dense inverse entrywise within
        // Monte Carlo error.
        let g = LatticeGrid::new(6, 6).unwrap();
        let op = build_diff_operator(&g);
        let a = assemble_precision(&op, &vec![1.0; op.n_rows()]).unwrap();
        let mut m = a.band().clone();
        for i in 0..m.n() {
            m.add_diag(i, 1.0);
        }
        let sigma = dense::spd_inverse(&dense::to_dense(&m));

        let n = m.n();
        let n_draws = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let zero = vec![0.0; n];
        let mut mean = vec![0.0; n];
        let mut cross = vec![vec![0.0; n]; n];
        for _ in 0..n_draws {
            let x = sample_gaussian_field(&m, &zero, &mut rng).unwrap();
            for i in 0..n {
                mean[i] += x[i];
                for j in 0..=i {
                    cross[i][j] += x[i] * x[j];
                }
            }
        }
        let nf = n_draws as f64;
        for m in mean.iter_mut() {
            *m /= nf;
        }
        for i in 0..n {
            // mean zero within 5 standard errors
            let se = (sigma[i][i] / nf).sqrt();
            assert!(mean[i].abs() < 5.0 * se, "mean[{i}] = {}", mean[i]);
            for j in 0..=i {
                let emp = cross[i][j] / nf - mean[i] * mean[j];
                let var_of_cov = (sigma[i][i] * sigma[j][j] + sigma[i][j] * sigma[i][j]) / nf;
                let tol = 5.0 * var_of_cov.sqrt();
                assert!(
                    (emp - sigma[i][j]).abs() < tol,
                    "cov[{i}][{j}] = {emp}, want {} +- {tol}",
                    sigma[i][j]
                );
            }
        }
    }
}
