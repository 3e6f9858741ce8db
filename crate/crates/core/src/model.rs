//! Model configuration: link functions and hyperparameters.

use serde::{Deserialize, Serialize};

use crate::dist::{laplace_cdf, logistic_cdf, normal_cdf, student_t_cdf};
use crate::error::{Error, Result};

/// Link function `H`: the CDF mapping the latent field to a success
/// probability. All four are scale mixtures of normal CDFs, which is what
/// the data-augmented samplers require.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Link {
    Probit,
    Logit,
    StudentT { df: f64 },
    Laplace,
}

impl Link {
    /// `P(Y = 1 | z) = H(z)`.
    pub fn h(&self, z: f64) -> f64 {
        match self {
            Link::Probit => normal_cdf(z),
            Link::Logit => logistic_cdf(z),
            Link::StudentT { df } => student_t_cdf(z, *df),
            Link::Laplace => laplace_cdf(z),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Link::Probit => "probit",
            Link::Logit => "logit",
            Link::StudentT { .. } => "student-t",
            Link::Laplace => "laplace",
        }
    }
}

/// Hyperparameters of the hierarchical model.
///
/// Defaults are the paper-standard choices: Cauchy increment prior
/// (`nu = 1`), standard half-Cauchy global scale (`rho = s = 1`),
/// robustification off (`r = 0`), adaptive smoothing on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub link: Link,
    /// Local-variance prior degrees of freedom: `1/gamma^2 ~ Gamma(nu/2, nu/2)`.
    pub nu: f64,
    /// Half-t prior degrees of freedom for the global scale.
    pub rho: f64,
    /// Half-t prior scale.
    pub s: f64,
    /// Prior miscoding probability; 0 disables robustification.
    pub r: f64,
    /// When false, the local variances are frozen at 1 (nonadaptive GMRF).
    pub adaptive: bool,
}

impl ModelSpec {
    pub fn new(link: Link) -> Self {
        ModelSpec {
            link,
            nu: 1.0,
            rho: 1.0,
            s: 1.0,
            r: 0.0,
            adaptive: true,
        }
    }

    pub fn with_miscoding(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn nonadaptive(mut self) -> Self {
        self.adaptive = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.nu.is_finite() || self.nu <= 0.0 {
            return Err(Error::Config(format!("nu must be positive: {}", self.nu)));
        }
        if !self.rho.is_finite() || self.rho <= 0.0 {
            return Err(Error::Config(format!("rho must be positive: {}", self.rho)));
        }
        if !self.s.is_finite() || self.s <= 0.0 {
            return Err(Error::Config(format!("s must be positive: {}", self.s)));
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(Error::Config(format!("r must lie in [0, 1): {}", self.r)));
        }
        if let Link::StudentT { df } = self.link {
            if !df.is_finite() || df <= 0.0 {
                return Err(Error::Config(format!("student-t df must be positive: {df}")));
            }
        }
        Ok(())
    }
}
