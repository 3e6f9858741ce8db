//! Small dense-matrix helpers used as oracles in tests and validation.
//! Plain O(n^3) algorithms; only ever applied to tiny lattices.

use crate::gmrf::banded::BandedMatrix;

/// Expand a symmetric band into a dense row-major matrix.
pub fn to_dense(m: &BandedMatrix) -> Vec<Vec<f64>> {
    let n = m.n();
    let mut d = vec![vec![0.0; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m.at(i, j);
        }
    }
    d
}

/// Dense SPD inverse via unpivoted Cholesky. Panics on non-SPD input.
pub fn spd_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for (lik, ljk) in l[i][..j].iter().zip(&l[j][..j]) {
                s -= lik * ljk;
            }
            if i == j {
                assert!(s > 0.0, "matrix not positive definite at pivot {i}");
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // solve A x = e_j column by column
    let mut inv = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut x = vec![0.0; n];
        x[j] = 1.0;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i][k] * x[k];
            }
            x[i] = s / l[i][i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k][i] * x[k];
            }
            x[i] = s / l[i][i];
        }
        for (row, xi) in inv.iter_mut().zip(&x) {
            row[j] = *xi;
        }
    }
    inv
}

/// Numerical rank via Gaussian elimination with partial pivoting.
pub fn rank(a: &[Vec<f64>], tol: f64) -> usize {
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut rank = 0;
    let mut col = 0;
    while rank < rows && col < cols {
        let (piv, piv_val) = (rank..rows)
            .map(|r| (r, m[r][col].abs()))
            .fold((rank, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_val <= tol {
            col += 1;
            continue;
        }
        m.swap(rank, piv);
        for r in rank + 1..rows {
            let f = m[r][col] / m[rank][col];
            let (head, tail) = m.split_at_mut(rank + 1);
            let pivot_row = &head[rank];
            for (c, v) in tail[r - rank - 1][col..cols].iter_mut().enumerate() {
                *v -= f * pivot_row[col + c];
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmrf::diff_op::build_diff_operator;
    use crate::gmrf::precision::assemble_precision;
    use crate::grid::LatticeGrid;

    #[test]
    fn precision_rank_equals_interior_count() {
        // 6x6 lattice: rank 16, null dimension 20 = 2*6 + 2*6 - 4
        let g = LatticeGrid::new(6, 6).unwrap();
        let op = build_diff_operator(&g);
        let a = assemble_precision(&op, &vec![1.0; op.n_rows()]).unwrap();
        let dense = to_dense(a.band());
        assert_eq!(rank(&dense, 1e-8), 16);
        assert_eq!(g.len() - 16, 20);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 0.5],
            vec![0.0, 0.5, 2.0],
        ];
        let inv = spd_inverse(&a);
        for (i, row) in a.iter().enumerate() {
            for j in 0..3 {
                let s: f64 = row.iter().zip(&inv).map(|(aik, invk)| aik * invk[j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12);
            }
        }
    }
}
