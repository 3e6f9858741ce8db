//! Reproducible generators for the two simulation designs: a smooth
//! bimodal probability surface and a two-disc activation map with
//! background false positives.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dist::normal_cdf;
use crate::error::{Error, Result};
use crate::field::{PeakField, TruthMap};
use crate::grid::LatticeGrid;

/// Coordinate domain for the bimodal surface. The formula's sharp peak sits
/// at (2, 2) and the broad mode at the origin; the default square keeps both
/// in the interior with visible decay.
pub const BIMODAL_DOMAIN: (f64, f64) = (-2.0, 7.0);

/// Smooth bimodal truth:
/// `p(x) = Phi(6 exp(-5/2 ((x1-2)^2 + (x2-2)^2)) + 3 exp(-(x1^2 + x2^2)/10) - 3)`
/// evaluated on an evenly spaced grid over `domain x domain`.
pub fn bimodal_truth(grid: &LatticeGrid, domain: (f64, f64)) -> Result<TruthMap> {
    let (lo, hi) = domain;
    let domain_ok = lo.is_finite() && hi.is_finite() && hi > lo;
    if !domain_ok {
        return Err(Error::Config(format!("empty domain [{lo}, {hi}]")));
    }
    let mut p = Vec::with_capacity(grid.len());
    for j in 0..grid.n1() {
        let x1 = lo + (hi - lo) * j as f64 / (grid.n1() - 1) as f64;
        for k in 0..grid.n2() {
            let x2 = lo + (hi - lo) * k as f64 / (grid.n2() - 1) as f64;
            p.push(bimodal_probability(x1, x2));
        }
    }
    TruthMap::new(*grid, p)
}

/// The bimodal surface at one coordinate pair.
pub fn bimodal_probability(x1: f64, x2: f64) -> f64 {
    let sharp = 6.0 * (-2.5 * ((x1 - 2.0).powi(2) + (x2 - 2.0).powi(2))).exp();
    let broad = 3.0 * (-(x1 * x1 + x2 * x2) / 10.0).exp();
    normal_cdf(sharp + broad - 3.0)
}

/// Disc profile for the two-disc map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscProfile {
    /// Raised-cosine taper from the peak probability at the center down to
    /// the background at the disc edge.
    RaisedCosine,
    /// Constant peak probability across the disc.
    FlatTop,
}

/// Two-disc map parameters. Defaults follow the 64x64 design: discs of
/// radius 6 centered at (20, 20) and (44, 44), peak probability 0.4 over a
/// 0.01 background.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoDiscParams {
    pub centers: Vec<(f64, f64)>,
    pub radius: f64,
    pub peak_prob: f64,
    pub background: f64,
    pub profile: DiscProfile,
}

impl Default for TwoDiscParams {
    fn default() -> Self {
        TwoDiscParams {
            centers: vec![(20.0, 20.0), (44.0, 44.0)],
            radius: 6.0,
            peak_prob: 0.4,
            background: 0.01,
            profile: DiscProfile::RaisedCosine,
        }
    }
}

/// Probability map with circular regions of heightened probability over a
/// constant background. Overlapping discs take the pointwise maximum.
pub fn two_disc_truth(grid: &LatticeGrid, params: &TwoDiscParams) -> Result<TruthMap> {
    if !(0.0..=1.0).contains(&params.background) || !(0.0..=1.0).contains(&params.peak_prob) {
        return Err(Error::Config("probabilities must lie in [0,1]".into()));
    }
    if params.peak_prob < params.background {
        return Err(Error::Config("peak probability below background".into()));
    }
    if !params.radius.is_finite() || params.radius <= 0.0 {
        return Err(Error::Config(format!("radius must be positive: {}", params.radius)));
    }
    for &(cj, ck) in &params.centers {
        if cj - params.radius < 0.0
            || ck - params.radius < 0.0
            || cj + params.radius > (grid.n1() - 1) as f64
            || ck + params.radius > (grid.n2() - 1) as f64
        {
            return Err(Error::Config(format!(
                "disc at ({cj}, {ck}) with radius {} leaves the {}x{} lattice",
                params.radius,
                grid.n1(),
                grid.n2()
            )));
        }
    }
    let mut p = vec![params.background; grid.len()];
    for (idx, cell) in p.iter_mut().enumerate() {
        let (j, k) = grid.coords(idx);
        for &(cj, ck) in &params.centers {
            let d = ((j as f64 - cj).powi(2) + (k as f64 - ck).powi(2)).sqrt();
            if d <= params.radius {
                let v = match params.profile {
                    DiscProfile::FlatTop => params.peak_prob,
                    DiscProfile::RaisedCosine => {
                        let t = 0.5 * (1.0 + (std::f64::consts::PI * d / params.radius).cos());
                        params.background + (params.peak_prob - params.background) * t
                    }
                };
                *cell = cell.max(v);
            }
        }
    }
    TruthMap::new(*grid, p)
}

/// Independent Bernoulli draw per voxel: `y_i ~ Bernoulli(p_i)`.
pub fn sample_peaks(truth: &TruthMap, seed: u64) -> PeakField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = truth
        .p
        .iter()
        .map(|&p| u8::from(rng.random::<f64>() < p))
        .collect();
    PeakField {
        grid: truth.grid,
        y,
    }
}
