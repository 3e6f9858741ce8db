//! Data-augmented Gibbs samplers for the adaptive-GMRF binary regression
//! model: probit, logit (Kolmogorov-Smirnov scale mixture), and general
//! normal scale-mixture links, with parameter expansion for the half-t
//! global scale and an optional miscoding (robustification) step.
//!
//! The latent field enters the link as `z = xi * eta` with `delta = |xi| *
//! theta`; only identified quantities (`z`, `gamma^2`, `theta^2`, `psi`)
//! are retained in the sample stream.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{
    sample_gig_half, sample_inverse_gamma, sample_lambda_ks, sample_truncated_logistic,
    sample_truncated_normal, TruncationSide,
};
use crate::error::{Error, Result};
use crate::field::PeakField;
use crate::gmrf::banded::{sample_with_factor, BandedMatrix};
use crate::gmrf::diff_op::{build_diff_operator, DiffOperator};
use crate::gmrf::precision::{assemble_scaled_into, precision_half_bandwidth};
use crate::grid::LatticeGrid;
use crate::model::{Link, ModelSpec};

/// Guard range for sampled variance components; heavy-tailed inverse-gamma
/// draws are clamped here before entering the factorization.
const VARIANCE_CLAMP: (f64, f64) = (1e-12, 1e12);

/// Chain-run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub chains: u32,
    /// Optional extra monitor voxel (row-major index in the input orientation).
    pub monitor: Option<usize>,
}

impl ChainConfig {
    pub fn new(iterations: u64, burn_in: u64, thin: u64, seed: u64) -> Self {
        ChainConfig {
            iterations,
            burn_in,
            thin,
            seed,
            chains: 1,
            monitor: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "need burn_in < iterations, got {} / {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if let Some(m) = self.monitor {
            if m >= n {
                return Err(Error::Config(format!(
                    "monitor voxel {m} out of range for {n} voxels"
                )));
            }
        }
        Ok(())
    }

    pub fn retained(&self) -> u64 {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Full Gibbs state for one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    /// Expanded latent field (length n); the identified field is `xi * eta`.
    pub eta: Vec<f64>,
    /// Expansion scalar; `delta = |xi| * theta`.
    pub xi: f64,
    /// Expansion variance.
    pub theta_sq: f64,
    /// Local increment variances, one per stencil row.
    pub gamma_sq: Vec<f64>,
    /// Auxiliary responses.
    pub w: Vec<f64>,
    /// Mixing variances: KS-mixture scales for logit, scale-mixture variances
    /// for student-t/laplace, identically 1 for probit.
    pub lambda: Vec<f64>,
    /// Miscoding indicators; all zero when robustification is off.
    pub psi: Vec<u8>,
}

impl ChainState {
    /// Identified latent field `z = xi * eta`.
    pub fn z(&self) -> Vec<f64> {
        self.eta.iter().map(|e| self.xi * e).collect()
    }
}

/// Sweep workspace reused across iterations (band storage dominates).
struct Workspace {
    band: BandedMatrix,
    linear: Vec<f64>,
    incr: Vec<f64>,
}

impl Workspace {
    fn new(grid: &LatticeGrid, m_rows: usize) -> Self {
        let n = grid.len();
        Workspace {
            band: BandedMatrix::zeros(n, precision_half_bandwidth(grid.n2())),
            linear: vec![0.0; n],
            incr: vec![0.0; m_rows],
        }
    }
}

/// Gibbs sampler bound to one dataset, operating in the orientation of the
/// field it was built from. One sweep is strictly sequential; independent
/// chains each own a `Sampler`.
pub struct Sampler {
    spec: ModelSpec,
    grid: LatticeGrid,
    y: Vec<u8>,
    op: DiffOperator,
    d_null: usize,
    ws: Workspace,
}

impl Sampler {
    pub fn new(spec: &ModelSpec, field: &PeakField) -> Result<Self> {
        spec.validate()?;
        let grid = field.grid;
        let op = build_diff_operator(&grid);
        let ws = Workspace::new(&grid, op.n_rows());
        Ok(Sampler {
            spec: *spec,
            grid,
            y: field.y.clone(),
            op,
            d_null: grid.null_dim(),
            ws,
        })
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn op(&self) -> &DiffOperator {
        &self.op
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Replace the bound responses; used by the validation harness when it
    /// refreshes data from the model.
    pub(crate) fn set_response(&mut self, y: &[u8]) {
        debug_assert_eq!(y.len(), self.y.len());
        self.y.copy_from_slice(y);
    }

    /// Prior-mode initialization: `eta = 0`, `xi = 1`, `theta^2 = 1`,
    /// `gamma^2 = 1`, `lambda = 1`, `psi = 0`, and each `w_i` drawn from the
    /// link distribution truncated to the side implied by `y_i`.
    pub fn init_chain<R: Rng + ?Sized>(&self, rng: &mut R) -> ChainState {
        let n = self.grid.len();
        let mut state = ChainState {
            eta: vec![0.0; n],
            xi: 1.0,
            theta_sq: 1.0,
            gamma_sq: vec![1.0; self.op.n_rows()],
            w: vec![0.0; n],
            lambda: vec![1.0; n],
            psi: vec![0; n],
        };
        for i in 0..n {
            let side = TruncationSide::from_indicator(self.y[i] == 1);
            state.w[i] = match self.spec.link {
                Link::Logit => sample_truncated_logistic(0.0, 1.0, side, rng),
                _ => sample_truncated_normal(0.0, 1.0, side, rng),
            };
        }
        state
    }

    /// One full Gibbs sweep: eta block draw, xi, (psi,) w (and mixing
    /// scales), gamma^2, theta^2.
    pub fn sweep<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) -> Result<()> {
        self.sweep_ridged(state, rng, &[], 0.0)
    }

    /// Sweep with an extra diagonal prior term on selected voxels; the
    /// production path passes an empty list. The validation harness anchors
    /// boundary voxels this way to make the prior proper.
    pub(crate) fn sweep_ridged<R: Rng + ?Sized>(
        &mut self,
        state: &mut ChainState,
        rng: &mut R,
        ridge_voxels: &[usize],
        ridge_precision: f64,
    ) -> Result<()> {
        self.update_eta(state, rng, ridge_voxels, ridge_precision)?;
        self.update_xi(state, rng);
        self.update_w(state, rng);
        self.update_gamma_theta(state, rng);
        Ok(())
    }

    /// Block draw of the latent field from
    /// `N((xi^2 Lambda^-1 + A/theta^2)^{-1} xi Lambda^-1 w, (...)^{-1})`.
    ///
    /// When `xi` drifts very close to zero the null directions of the
    /// intrinsic prior make the posterior precision numerically singular;
    /// in that case the factorization is retried with an escalating
    /// diagonal jitter (relative to the largest diagonal entry).
    fn update_eta<R: Rng + ?Sized>(
        &mut self,
        state: &mut ChainState,
        rng: &mut R,
        ridge_voxels: &[usize],
        ridge_precision: f64,
    ) -> Result<()> {
        let mut jitter = 0.0;
        loop {
            let ws = &mut self.ws;
            ws.band.fill_zero();
            assemble_scaled_into(&self.op, &state.gamma_sq, 1.0 / state.theta_sq, &mut ws.band);
            let xi2 = state.xi * state.xi;
            for i in 0..self.grid.len() {
                ws.band.add_diag(i, xi2 / state.lambda[i]);
                ws.linear[i] = state.xi * state.w[i] / state.lambda[i];
            }
            for &v in ridge_voxels {
                ws.band.add_diag(v, ridge_precision);
            }
            if jitter > 0.0 {
                let bump = jitter * ws.band.max_diag();
                for i in 0..self.grid.len() {
                    ws.band.add_diag(i, bump);
                }
            }
            match ws.band.cholesky_in_place() {
                Ok(()) => break,
                Err(e) => {
                    jitter = if jitter == 0.0 { 1e-13 } else { jitter * 100.0 };
                    if jitter > 1e-7 {
                        return Err(e);
                    }
                }
            }
        }
        let ws = &mut self.ws;
        ws.band.solve_in_place(&mut ws.linear);
        sample_with_factor(&ws.band, &mut ws.linear, rng);
        state.eta.copy_from_slice(&ws.linear);
        Ok(())
    }

    /// `xi | eta, w, lambda ~ N(sigma^2 eta' Lambda^-1 w, sigma^2)` with
    /// `sigma^2 = (1 + eta' Lambda^-1 eta)^{-1}`.
    fn update_xi<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) {
        let mut prec = 1.0;
        let mut lin = 0.0;
        for i in 0..state.eta.len() {
            let e = state.eta[i];
            prec += e * e / state.lambda[i];
            lin += e * state.w[i] / state.lambda[i];
        }
        let var = 1.0 / prec;
        let z: f64 = rng.sample(StandardNormal);
        state.xi = lin * var + var.sqrt() * z;
    }

    /// Auxiliary-response update. With robustification active, each voxel
    /// first draws its miscoding flag from the exact conditional and the
    /// truncation side becomes `y_i + psi_i == 1`; the draw itself is the
    /// link-appropriate truncated distribution. For the logit link, `w` and
    /// the KS mixing scale are updated jointly (w marginal over lambda,
    /// then lambda given the residual); for scale-mixture links the mixing
    /// variance update follows its own conditional.
    fn update_w<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) {
        let r = self.spec.r;
        let robust = r > 0.0;
        for i in 0..state.w.len() {
            let z_i = state.xi * state.eta[i];
            let psi = if robust {
                let h = self.spec.link.h(z_i);
                let p = miscoding_probability(self.y[i], h, r);
                u8::from(rng.random::<f64>() < p)
            } else {
                0
            };
            state.psi[i] = psi;
            let side = TruncationSide::from_indicator(self.y[i] + psi == 1);
            match self.spec.link {
                Link::Probit => {
                    state.w[i] = sample_truncated_normal(z_i, 1.0, side, rng);
                }
                Link::Logit => {
                    state.w[i] = sample_truncated_logistic(z_i, 1.0, side, rng);
                    state.lambda[i] = sample_lambda_ks(state.w[i] - z_i, rng);
                }
                Link::StudentT { df } => {
                    state.w[i] = sample_truncated_normal(z_i, state.lambda[i], side, rng);
                    let resid = state.w[i] - z_i;
                    state.lambda[i] =
                        sample_inverse_gamma(0.5 * (df + 1.0), 0.5 * (resid * resid + df), rng)
                            .clamp(VARIANCE_CLAMP.0, VARIANCE_CLAMP.1);
                }
                Link::Laplace => {
                    state.w[i] = sample_truncated_normal(z_i, state.lambda[i], side, rng);
                    state.lambda[i] = sample_gig_half((state.w[i] - z_i).abs(), rng)
                        .clamp(VARIANCE_CLAMP.0, VARIANCE_CLAMP.1);
                }
            }
        }
    }

    /// `gamma_j^2 | theta^2, eta` and `theta^2 | eta, gamma` from their
    /// inverse-gamma conditionals; the nonadaptive variant keeps
    /// `gamma^2 = 1` and only updates `theta^2`.
    fn update_gamma_theta<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) {
        self.op.apply_into(&state.eta, &mut self.ws.incr);
        if self.spec.adaptive {
            let (shape, _) = gamma_conditional(self.spec.nu, state.theta_sq, 0.0);
            for (g, &inc) in state.gamma_sq.iter_mut().zip(&self.ws.incr) {
                let (_, rate) = gamma_conditional(self.spec.nu, state.theta_sq, inc);
                *g = sample_inverse_gamma(shape, rate, rng)
                    .clamp(VARIANCE_CLAMP.0, VARIANCE_CLAMP.1);
            }
        }
        let quad: f64 = self
            .ws
            .incr
            .iter()
            .zip(&state.gamma_sq)
            .map(|(inc, g)| inc * inc / g)
            .sum();
        let (shape, rate) = theta_conditional(
            self.grid.len(),
            self.d_null,
            self.spec.rho,
            self.spec.s,
            quad,
        );
        state.theta_sq =
            sample_inverse_gamma(shape, rate, rng).clamp(VARIANCE_CLAMP.0, VARIANCE_CLAMP.1);
    }
}

/// Exact miscoding-flag conditional:
/// `P(psi=1 | y=1, z) = r(1-H) / (r(1-H) + (1-r)H)` and
/// `P(psi=1 | y=0, z) = rH / (rH + (1-r)(1-H))`.
pub fn miscoding_probability(y: u8, h: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if y == 1 {
        let num = r * (1.0 - h);
        num / (num + (1.0 - r) * h)
    } else {
        let num = r * h;
        num / (num + (1.0 - r) * (1.0 - h))
    }
}

/// Inverse-gamma parameters of the local-variance conditional:
/// `IG((nu+1)/2, inc^2/(2 theta^2) + nu/2)`.
pub(crate) fn gamma_conditional(nu: f64, theta_sq: f64, inc: f64) -> (f64, f64) {
    (0.5 * (nu + 1.0), inc * inc / (2.0 * theta_sq) + 0.5 * nu)
}

/// Inverse-gamma parameters of the global-variance conditional:
/// `IG((n-d)/2 + rho/2, quad/2 + rho s^2 / 2)`.
pub(crate) fn theta_conditional(n: usize, d: usize, rho: f64, s: f64, quad: f64) -> (f64, f64) {
    (
        0.5 * (n - d) as f64 + 0.5 * rho,
        0.5 * quad + 0.5 * rho * s * s,
    )
}

/// Run metadata carried by each retained stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInfo {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub chain: u32,
}

/// Thinned posterior sample stream for one chain, in the orientation of the
/// input field. Per retained sweep: the identified field `z = xi*eta`, the
/// local variances, the global variance, and the miscoding flags.
#[derive(Debug, Clone)]
pub struct SampleStream {
    pub grid: LatticeGrid,
    pub spec: ModelSpec,
    pub run: RunInfo,
    pub retained_iters: Vec<u64>,
    /// Row-major `retained x n`.
    pub z: Vec<f64>,
    /// Row-major `retained x stencil_rows`.
    pub gamma_sq: Vec<f64>,
    pub theta_sq: Vec<f64>,
    /// Row-major `retained x n`.
    pub psi: Vec<u8>,
}

impl SampleStream {
    pub fn n_retained(&self) -> usize {
        self.retained_iters.len()
    }

    pub fn n_voxels(&self) -> usize {
        self.grid.len()
    }

    pub fn stencil_rows(&self) -> usize {
        self.grid.interior_len()
    }

    pub fn z_sample(&self, s: usize) -> &[f64] {
        let n = self.n_voxels();
        &self.z[s * n..(s + 1) * n]
    }

    pub fn psi_sample(&self, s: usize) -> &[u8] {
        let n = self.n_voxels();
        &self.psi[s * n..(s + 1) * n]
    }

    pub fn gamma_sample(&self, s: usize) -> &[f64] {
        let m = self.stencil_rows();
        &self.gamma_sq[s * m..(s + 1) * m]
    }
}

/// Per-monitor-voxel traces over retained sweeps.
#[derive(Debug, Clone)]
pub struct MonitorTraces {
    /// Monitor voxel indices, input orientation.
    pub voxels: Vec<usize>,
    pub z: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

/// A chain's retained stream plus its diagnostics traces.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub stream: SampleStream,
    pub traces: MonitorTraces,
}

/// Default monitor voxels: lattice center, one boundary-adjacent node, and
/// an optional user-specified index.
pub fn monitor_voxels(grid: &LatticeGrid, user: Option<usize>) -> Vec<usize> {
    let mut v = vec![grid.center_index(), grid.index(1, 1)];
    if let Some(u) = user {
        v.push(u);
    }
    v.dedup();
    v.sort_unstable();
    v.dedup();
    v
}

/// Run `cfg.chains` independent chains in parallel. Each chain owns its
/// random stream (ChaCha stream = chain index), so outputs are deterministic
/// under a fixed seed regardless of scheduling.
pub fn run_chains(spec: &ModelSpec, y: &PeakField, cfg: &ChainConfig) -> Result<Vec<ChainOutput>> {
    spec.validate()?;
    cfg.validate(y.grid.len())?;
    if cfg.chains == 1 {
        return Ok(vec![run_single_chain(spec, y, cfg, 0)?]);
    }
    (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_single_chain(spec, y, cfg, c))
        .collect()
}

/// Single-chain convenience wrapper.
pub fn run_chain(spec: &ModelSpec, y: &PeakField, cfg: &ChainConfig) -> Result<ChainOutput> {
    spec.validate()?;
    cfg.validate(y.grid.len())?;
    run_single_chain(spec, y, cfg, 0)
}

fn run_single_chain(
    spec: &ModelSpec,
    y: &PeakField,
    cfg: &ChainConfig,
    chain: u32,
) -> Result<ChainOutput> {
    // Work in the orientation with the smaller column count: the banded
    // half-bandwidth is 2*n2, so the shorter dimension varies fastest.
    let flip = y.grid.n2() > y.grid.n1();
    let internal = if flip { y.transposed() } else { y.clone() };
    let grid = y.grid;
    let n = grid.len();
    let m = grid.interior_len();

    // index maps between input orientation and internal orientation
    let to_internal: Vec<usize> = if flip {
        (0..n).map(|i| grid.transpose_index(i)).collect()
    } else {
        (0..n).collect()
    };
    let gamma_from_internal: Vec<usize> = if flip {
        // original interior (a,b) of (n1-2)x(n2-2) sits at internal (b,a)
        let (m1, m2) = grid.interior_dims();
        (0..m)
            .map(|r| {
                let (a, b) = (r / m2, r % m2);
                b * m1 + a
            })
            .collect()
    } else {
        (0..m).collect()
    };

    let monitors = monitor_voxels(&grid, cfg.monitor);
    let monitors_internal: Vec<usize> = monitors.iter().map(|&v| to_internal[v]).collect();

    let mut sampler = Sampler::new(spec, &internal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64);
    let mut state = sampler.init_chain(&mut rng);

    let retained = cfg.retained() as usize;
    let mut stream = SampleStream {
        grid,
        spec: *spec,
        run: RunInfo {
            iterations: cfg.iterations,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            seed: cfg.seed,
            chain,
        },
        retained_iters: Vec::with_capacity(retained),
        z: Vec::with_capacity(retained * n),
        gamma_sq: Vec::with_capacity(retained * m),
        theta_sq: Vec::with_capacity(retained),
        psi: Vec::with_capacity(retained * n),
    };
    let mut traces = MonitorTraces {
        voxels: monitors.clone(),
        z: vec![Vec::with_capacity(retained); monitors.len()],
        w: vec![Vec::with_capacity(retained); monitors.len()],
    };

    for t in 1..=cfg.iterations {
        sampler.sweep(&mut state, &mut rng).map_err(|e| Error::Step {
            iteration: t,
            source: Box::new(e),
        })?;
        if t > cfg.burn_in && (t - cfg.burn_in).is_multiple_of(cfg.thin) {
            stream.retained_iters.push(t);
            stream
                .z
                .extend(to_internal.iter().map(|&ii| state.xi * state.eta[ii]));
            stream
                .psi
                .extend(to_internal.iter().map(|&ii| state.psi[ii]));
            stream
                .gamma_sq
                .extend(gamma_from_internal.iter().map(|&ri| state.gamma_sq[ri]));
            stream.theta_sq.push(state.theta_sq);
            for (mi, &vi) in monitors_internal.iter().enumerate() {
                traces.z[mi].push(state.xi * state.eta[vi]);
                traces.w[mi].push(state.w[vi]);
            }
        }
    }

    Ok(ChainOutput { stream, traces })
}
