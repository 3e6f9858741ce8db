//! Kernel-based meta-analysis baselines: ALE (Gaussian kernel) and KDA
//! (spherical kernel) maps with Monte Carlo permutation thresholds.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::PeakField;
use crate::grid::LatticeGrid;

/// Smoothing kernel. Width parameters share units with the grid spacing
/// (cells by default, mm when the grid carries a physical spacing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelSpec {
    /// Unit-height Gaussian, `sigma = fwhm / (2 sqrt(2 ln 2))`, truncated at 4 sigma.
    GaussianFwhm { fwhm: f64 },
    /// 0/1 indicator of a disc with the given radius.
    Sphere { radius: f64 },
}

/// FWHM-to-sigma conversion factor `2 sqrt(2 ln 2)`.
pub const FWHM_TO_SIGMA: f64 = 2.354820045030949;

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let w = match self {
            KernelSpec::GaussianFwhm { fwhm } => *fwhm,
            KernelSpec::Sphere { radius } => *radius,
        };
        if w <= 0.0 || !w.is_finite() {
            return Err(Error::Domain(format!("kernel width must be positive: {w}")));
        }
        Ok(())
    }

    /// Support radius in cells.
    fn support_cells(&self, spacing: f64) -> usize {
        match self {
            KernelSpec::GaussianFwhm { fwhm } => {
                let sigma = fwhm / FWHM_TO_SIGMA / spacing;
                (4.0 * sigma).ceil() as usize
            }
            KernelSpec::Sphere { radius } => (radius / spacing).floor() as usize,
        }
    }

    /// Kernel value at squared distance `d2` (in cells).
    fn value_at(&self, d2: f64, spacing: f64) -> f64 {
        match self {
            KernelSpec::GaussianFwhm { fwhm } => {
                let sigma = fwhm / FWHM_TO_SIGMA / spacing;
                (-0.5 * d2 / (sigma * sigma)).exp()
            }
            KernelSpec::Sphere { radius } => {
                let r = radius / spacing;
                if d2 <= r * r {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Convolve the binary peak indicator with the kernel (zero padding at the
/// lattice edge). Linear in the peak count times the kernel window.
pub fn kernel_map(peaks: &PeakField, spec: &KernelSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let grid = peaks.grid;
    let support = spec.support_cells(grid.spacing());
    if 2 * support + 1 > grid.n1().min(grid.n2()) {
        return Err(Error::Domain(format!(
            "kernel window {} exceeds the lattice ({}x{})",
            2 * support + 1,
            grid.n1(),
            grid.n2()
        )));
    }
    let mut map = vec![0.0; grid.len()];
    let s = support as i64;
    for (idx, _) in peaks.y.iter().enumerate().filter(|(_, y)| **y == 1) {
        let (pj, pk) = grid.coords(idx);
        for dj in -s..=s {
            let j = pj as i64 + dj;
            if j < 0 || j >= grid.n1() as i64 {
                continue;
            }
            for dk in -s..=s {
                let k = pk as i64 + dk;
                if k < 0 || k >= grid.n2() as i64 {
                    continue;
                }
                let d2 = (dj * dj + dk * dk) as f64;
                map[grid.index(j as usize, k as usize)] += spec.value_at(d2, grid.spacing());
            }
        }
    }
    Ok(map)
}

/// Monte Carlo permutation threshold: place `n_peaks` uniformly at random,
/// smooth, pool all voxel values across `n_perm` permutations, and return
/// the empirical `(1 - alpha)` quantile of the pooled null.
///
/// Permutations are independent and parallel; each derives its own random
/// substream from the master seed, so the pooled null (and the threshold)
/// is deterministic.
pub fn mc_threshold(
    n_peaks: usize,
    spec: &KernelSpec,
    grid: &LatticeGrid,
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> Result<f64> {
    spec.validate()?;
    let alpha_ok = alpha.is_finite() && alpha > 0.0 && alpha <= 1.0;
    if !alpha_ok {
        return Err(Error::Config(format!("alpha must lie in (0, 1]: {alpha}")));
    }
    if n_perm < 100 {
        return Err(Error::Config(format!("need at least 100 permutations: {n_perm}")));
    }
    if n_peaks == 0 {
        return Ok(0.0);
    }
    let mut pooled: Vec<f64> = (0..n_perm)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64 + 1);
            let mut field = PeakField::zeros(*grid);
            for _ in 0..n_peaks {
                let v = rng.random_range(0..grid.len());
                field.y[v] = 1;
            }
            kernel_map(&field, spec).expect("kernel validated above")
        })
        .flatten()
        .collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = 1.0 - alpha;
    let idx = (q * (pooled.len() - 1) as f64).floor() as usize;
    Ok(pooled[idx])
}

/// Indicator of `map > threshold`.
pub fn significant_voxels(map: &[f64], threshold: f64) -> Vec<u8> {
    map.iter().map(|&v| u8::from(v > threshold)).collect()
}
