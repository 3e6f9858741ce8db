//! Posterior summarization and chain diagnostics: probability and
//! miscoding maps, MSPE, DIC, autocorrelation, and effective sample size.

use serde::{Deserialize, Serialize};

use crate::engine::{MonitorTraces, SampleStream};
use crate::error::{Error, Result};
use crate::model::Link;

/// Clamp applied to success probabilities before taking logs, so extreme
/// samples keep the deviance finite.
const PROB_CLAMP: f64 = 1e-12;

/// Deviance information criterion decomposition: `dic = 2*dbar - d_at_mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dic {
    pub dic: f64,
    pub dbar: f64,
    pub d_at_mean: f64,
}

/// Per-monitor-voxel mixing diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorDiagnostic {
    pub voxel: usize,
    pub acf: Vec<f64>,
    /// None when the trace is constant (degenerate).
    pub ess: Option<f64>,
}

/// Posterior summary of one fit: per-voxel activation-probability map,
/// miscoding-probability map, DIC, and monitor diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    pub prob_map: Vec<f64>,
    pub miscoding_map: Vec<f64>,
    pub dic: f64,
    pub dbar: f64,
    pub d_at_mean: f64,
    pub diagnostics: Vec<MonitorDiagnostic>,
}

/// Posterior-mean maps over one or more chains' retained samples:
/// `prob_map[i] = mean H(z_i)`, `miscoding_map[i] = mean psi_i`.
pub fn summarize(streams: &[SampleStream], link: Link) -> Result<(Vec<f64>, Vec<f64>)> {
    let total: usize = streams.iter().map(|s| s.n_retained()).sum();
    if total == 0 || streams.is_empty() {
        return Err(Error::EmptyStream);
    }
    let n = streams[0].n_voxels();
    let mut prob = vec![0.0; n];
    let mut mis = vec![0.0; n];
    for stream in streams {
        if stream.n_voxels() != n {
            return Err(Error::Dim("chains disagree on lattice size".into()));
        }
        for s in 0..stream.n_retained() {
            for (p, z) in prob.iter_mut().zip(stream.z_sample(s)) {
                *p += link.h(*z);
            }
            for (m, psi) in mis.iter_mut().zip(stream.psi_sample(s)) {
                *m += *psi as f64;
            }
        }
    }
    let tf = total as f64;
    prob.iter_mut().for_each(|p| *p /= tf);
    mis.iter_mut().for_each(|m| *m /= tf);
    Ok((prob, mis))
}

/// Plug-in activation map: the link applied to the pointwise posterior
/// mean of the latent field, `H(zbar_i)` — the same posterior-mean-field
/// convention the deviance-at-the-mean term uses. Unlike the
/// posterior-mean probability `E[H(z_i)]`, the plug-in map is not
/// inflated above the local rate by posterior spread (Jensen), which
/// matters when thresholding near a low background rate.
pub fn plugin_prob_map(streams: &[SampleStream], link: Link) -> Result<Vec<f64>> {
    let total: usize = streams.iter().map(|s| s.n_retained()).sum();
    if total == 0 || streams.is_empty() {
        return Err(Error::EmptyStream);
    }
    let n = streams[0].n_voxels();
    let mut z_mean = vec![0.0; n];
    for stream in streams {
        if stream.n_voxels() != n {
            return Err(Error::Dim("chains disagree on lattice size".into()));
        }
        for s in 0..stream.n_retained() {
            for (m, z) in z_mean.iter_mut().zip(stream.z_sample(s)) {
                *m += z;
            }
        }
    }
    Ok(z_mean.iter().map(|&m| link.h(m / total as f64)).collect())
}

/// Mean squared probability error `(1/n) sum (p_i - phat_i)^2`.
pub fn mspe(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Dim(format!(
            "probability maps differ in length: {} vs {}",
            estimate.len(),
            truth.len()
        )));
    }
    let n = estimate.len() as f64;
    Ok(estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Bernoulli log likelihood of `y` under success probability `q`,
/// miscoding-marginalized: the success probability becomes
/// `(1-r) H(z) + r (1 - H(z))`.
fn log_lik(y: u8, h: f64, r: f64) -> f64 {
    let q = ((1.0 - r) * h + r * (1.0 - h)).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if y == 1 {
        q.ln()
    } else {
        (1.0 - q).ln()
    }
}

fn deviance(z: &[f64], y: &[u8], link: Link, r: f64) -> f64 {
    -2.0 * z
        .iter()
        .zip(y)
        .map(|(z_i, y_i)| log_lik(*y_i, link.h(*z_i), r))
        .sum::<f64>()
}

/// DIC over pooled retained samples: `D(phi) = -2 log p(y | z)` with the
/// miscoding-marginalized Bernoulli likelihood, `dbar` the average deviance
/// over samples, and `d_at_mean` the deviance at the pointwise posterior
/// mean of `z`.
pub fn dic(streams: &[SampleStream], y: &[u8], link: Link, r: f64) -> Result<Dic> {
    let total: usize = streams.iter().map(|s| s.n_retained()).sum();
    if total == 0 || streams.is_empty() {
        return Err(Error::EmptyStream);
    }
    let n = streams[0].n_voxels();
    if y.len() != n {
        return Err(Error::Dim(format!(
            "response length {} != lattice size {n}",
            y.len()
        )));
    }
    let mut dbar = 0.0;
    let mut z_mean = vec![0.0; n];
    for stream in streams {
        for s in 0..stream.n_retained() {
            let z = stream.z_sample(s);
            dbar += deviance(z, y, link, r);
            for (m, z_i) in z_mean.iter_mut().zip(z) {
                *m += z_i;
            }
        }
    }
    dbar /= total as f64;
    z_mean.iter_mut().for_each(|m| *m /= total as f64);
    let d_at_mean = deviance(&z_mean, y, link, r);
    Ok(Dic {
        dic: 2.0 * dbar - d_at_mean,
        dbar,
        d_at_mean,
    })
}

/// Sample autocorrelation function up to `max_lag` (inclusive).
///
/// Standard biased estimator (denominator n). A constant trace yields the
/// flagged convention [1, 0, 0, ...].
pub fn autocorrelation(trace: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if trace.len() <= max_lag {
        return Err(Error::Dim(format!(
            "trace length {} must exceed max lag {max_lag}",
            trace.len()
        )));
    }
    let n = trace.len();
    let mean = trace.iter().sum::<f64>() / n as f64;
    let c0: f64 = trace.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let mut acf = Vec::with_capacity(max_lag + 1);
    if c0 <= 0.0 {
        acf.push(1.0);
        acf.resize(max_lag + 1, 0.0);
        return Ok(acf);
    }
    for k in 0..=max_lag {
        let ck: f64 = (0..n - k)
            .map(|t| (trace[t] - mean) * (trace[t + k] - mean))
            .sum::<f64>()
            / n as f64;
        acf.push(ck / c0);
    }
    Ok(acf)
}

/// Effective sample size by Geyer's initial-positive-sequence truncation:
/// `ess = n / (1 + 2 sum rho_k)`, summing consecutive lag pairs while their
/// sum stays positive. Lag covariances are computed on demand, so fast-
/// mixing chains cost almost nothing. Returns `None` for a constant
/// (degenerate) trace.
pub fn ess(trace: &[f64]) -> Option<f64> {
    let n = trace.len();
    if n < 4 {
        return None;
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let c0: f64 = trace.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return None;
    }
    let rho = |k: usize| -> f64 {
        (0..n - k)
            .map(|t| (trace[t] - mean) * (trace[t + k] - mean))
            .sum::<f64>()
            / (n as f64 * c0)
    };
    let max_lag = (n / 2).min(2000);
    let mut tau = 1.0;
    let mut k = 1;
    while k < max_lag {
        let pair = rho(k) + rho(k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    Some(n as f64 / tau)
}

/// Assemble the full posterior summary for a fit.
pub fn posterior_summary(
    streams: &[SampleStream],
    traces: &MonitorTraces,
    y: &[u8],
) -> Result<PosteriorSummary> {
    let spec = streams.first().ok_or(Error::EmptyStream)?.spec;
    let (prob_map, miscoding_map) = summarize(streams, spec.link)?;
    let d = dic(streams, y, spec.link, spec.r)?;
    let mut diagnostics = Vec::new();
    for (mi, &voxel) in traces.voxels.iter().enumerate() {
        let trace = &traces.z[mi];
        let max_lag = (trace.len().saturating_sub(1)).min(50);
        let acf = if trace.len() > max_lag && trace.len() > 1 {
            autocorrelation(trace, max_lag)?
        } else {
            vec![1.0]
        };
        diagnostics.push(MonitorDiagnostic {
            voxel,
            acf,
            ess: ess(trace),
        });
    }
    Ok(PosteriorSummary {
        prob_map,
        miscoding_map,
        dic: d.dic,
        dbar: d.dbar,
        d_at_mean: d.d_at_mean,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RunInfo;
    use crate::grid::LatticeGrid;
    use crate::model::ModelSpec;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stream_of(z_samples: Vec<Vec<f64>>, psi: Option<Vec<Vec<u8>>>) -> SampleStream {
        let grid = LatticeGrid::new(5, 5).unwrap();
        let n = grid.len();
        let s = z_samples.len();
        let m = grid.interior_len();
        let psi = psi.unwrap_or_else(|| vec![vec![0; n]; s]);
        SampleStream {
            grid,
            spec: ModelSpec::new(Link::Probit),
            run: RunInfo {
                iterations: s as u64,
                burn_in: 0,
                thin: 1,
                seed: 0,
                chain: 0,
            },
            retained_iters: (1..=s as u64).collect(),
            z: z_samples.into_iter().flatten().collect(),
            gamma_sq: vec![1.0; s * m],
            theta_sq: vec![1.0; s],
            psi: psi.into_iter().flatten().collect(),
        }
    }

    #[test]
    fn summarize_single_zero_sample_is_half() {
        let st = stream_of(vec![vec![0.0; 25]], None);
        let (prob, mis) = summarize(&[st], Link::Probit).unwrap();
        assert!(prob.iter().all(|&p| (p - 0.5).abs() < 1e-15));
        assert!(mis.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn summarize_symmetric_quantiles() {
        // z in {-1.6449, +1.6449} averages to (0.05 + 0.95)/2 = 0.5
        let q = 1.6448536269514722;
        let st = stream_of(vec![vec![-q; 25], vec![q; 25]], None);
        let (prob, _) = summarize(&[st], Link::Probit).unwrap();
        assert!(prob.iter().all(|&p| (p - 0.5).abs() < 1e-6));
    }

    #[test]
    fn summarize_empty_is_error() {
        assert!(matches!(
            summarize(&[], Link::Probit),
            Err(Error::EmptyStream)
        ));
    }

    #[test]
    fn mspe_basics() {
        let a = vec![0.2, 0.4, 0.6];
        assert_eq!(mspe(&a, &a).unwrap(), 0.0);
        let zeros = vec![0.0; 10];
        let tenth = vec![0.1; 10];
        assert!((mspe(&tenth, &zeros).unwrap() - 0.01).abs() < 1e-15);
        // symmetry and positivity
        let b = vec![0.5, 0.1, 0.9];
        assert_eq!(mspe(&a, &b).unwrap(), mspe(&b, &a).unwrap());
        assert!(mspe(&a, &b).unwrap() > 0.0);
        assert!(mspe(&a, &[0.0; 2]).is_err());
    }

    #[test]
    fn plugin_map_uses_posterior_mean_field() {
        // two samples z in {-1, 3}: plug-in gives H(1), below the
        // spread-inflated posterior-mean probability (H convex there)
        let st = stream_of(vec![vec![-1.0; 25], vec![3.0; 25]], None);
        let plug = plugin_prob_map(&[st.clone()], Link::Probit).unwrap();
        let want = crate::dist::normal_cdf(1.0);
        assert!(plug.iter().all(|&p| (p - want).abs() < 1e-12));
        let (mean_prob, _) = summarize(&[st], Link::Probit).unwrap();
        assert!(mean_prob[0] < plug[0]);
    }

    #[test]
    fn mspe_simulation_fixture() {
        // constant-0.5 estimate against the bimodal truth surface on the
        // default 30x30 domain; the expected value is pinned from direct
        // summation of the closed-form surface
        use crate::simgen::{bimodal_truth, BIMODAL_DOMAIN};
        let grid = LatticeGrid::new(30, 30).unwrap();
        let truth = bimodal_truth(&grid, BIMODAL_DOMAIN).unwrap();
        let estimate = vec![0.5; grid.len()];
        // independent oracle: explicit summation, no shared code path
        let mut acc = 0.0;
        for &p in &truth.p {
            acc += (p - 0.5) * (p - 0.5);
        }
        let oracle = acc / grid.len() as f64;
        let got = mspe(&estimate, &truth.p).unwrap();
        assert!((got - oracle).abs() < 1e-15);
        assert!(
            (got - 0.20325595074945252).abs() < 1e-12,
            "pinned fixture drifted: {got}"
        );
    }

    #[test]
    fn dic_degenerate_stream() {
        // identical samples make dbar == d_at_mean == dic
        let st = stream_of(vec![vec![0.3; 25]; 4], None);
        let y = vec![1u8; 25];
        let d = dic(&[st], &y, Link::Probit, 0.0).unwrap();
        assert!((d.dic - d.dbar).abs() < 1e-10);
        assert!((d.dbar - d.d_at_mean).abs() < 1e-10);
        assert!((d.dic - (2.0 * d.dbar - d.d_at_mean)).abs() < 1e-12);
    }

    #[test]
    fn dic_single_voxel_fixture() {
        // y = 1, one sample with H(z) = 0.5, r = 0: D = -2 ln 0.5 per voxel
        let st = stream_of(vec![vec![0.0; 25]], None);
        let y = vec![1u8; 25];
        let d = dic(&[st], &y, Link::Probit, 0.0).unwrap();
        let per_voxel = d.dbar / 25.0;
        assert!((per_voxel - (-2.0 * 0.5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn dic_extreme_probabilities_stay_finite() {
        let st = stream_of(vec![vec![-40.0; 25]], None);
        let y = vec![1u8; 25];
        let d = dic(&[st], &y, Link::Probit, 0.0).unwrap();
        assert!(d.dic.is_finite() && d.dbar.is_finite());
    }

    #[test]
    fn acf_iid_noise_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>() - 0.5).collect();
        let acf = autocorrelation(&trace, 5).unwrap();
        assert_eq!(acf[0], 1.0);
        assert!(acf[1].abs() < 0.03, "acf(1) = {}", acf[1]);
    }

    #[test]
    fn acf_ar1_recovers_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = 0.9;
        let mut x = 0.0;
        let trace: Vec<f64> = (0..100_000)
            .map(|_| {
                let e: f64 = rng.sample(rand_distr::StandardNormal);
                x = phi * x + e;
                x
            })
            .collect();
        let acf = autocorrelation(&trace, 3).unwrap();
        assert!((acf[1] - phi).abs() < 0.02, "acf(1) = {}", acf[1]);
        // bounded by 1 in magnitude
        assert!(acf.iter().all(|&r| r.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn constant_trace_is_flagged() {
        let trace = vec![2.5; 100];
        let acf = autocorrelation(&trace, 10).unwrap();
        assert_eq!(acf[0], 1.0);
        assert!(acf[1..].iter().all(|&r| r == 0.0));
        assert!(ess(&trace).is_none());
    }

    #[test]
    fn ess_of_iid_is_near_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trace: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let e = ess(&trace).unwrap();
        assert!(e > 10_000.0, "ess = {e}");
        // correlated chain has much smaller ess
        let mut x = 0.0;
        let slow: Vec<f64> = (0..20_000)
            .map(|_| {
                let e: f64 = rng.sample(rand_distr::StandardNormal);
                x = 0.95 * x + e;
                x
            })
            .collect();
        let es = ess(&slow).unwrap();
        assert!(es < 5_000.0, "ess = {es}");
    }

    #[test]
    fn prob_map_sign_flip_invariance() {
        // H(xi*eta) is already stored as z; flipping both signs leaves z alone.
        // Confirm at the map level: streams built from (xi, eta) and
        // (-xi, -eta) coincide.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let eta: Vec<f64> = (0..25).map(|_| rng.random::<f64>() - 0.5).collect();
        let xi = 0.8;
        let z_pos: Vec<f64> = eta.iter().map(|e| xi * e).collect();
        let z_neg: Vec<f64> = eta.iter().map(|e| (-xi) * (-e)).collect();
        let (p1, _) = summarize(&[stream_of(vec![z_pos], None)], Link::Probit).unwrap();
        let (p2, _) = summarize(&[stream_of(vec![z_neg], None)], Link::Probit).unwrap();
        assert_eq!(p1, p2);
    }
}
