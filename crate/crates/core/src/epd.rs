//! The exponential power (EP) distribution.
//!
//! `f(x) = α / (2σΓ(1/α)) · exp(-|(x-μ)/σ|^α)`

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::rng;
use crate::special_fn::{integrate, ln_gamma_real, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct EpdParams {
    mu: f64,
    sigma: f64,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    mu: f64,
    sigma: f64,
    alpha: f64,
}

impl TryFrom<RawParams> for EpdParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        EpdParams::new(r.mu, r.sigma, r.alpha)
    }
}

impl From<EpdParams> for RawParams {
    fn from(p: EpdParams) -> Self {
        RawParams {
            mu: p.mu,
            sigma: p.sigma,
            alpha: p.alpha,
        }
    }
}

impl EpdParams {
    pub fn new(mu: f64, sigma: f64, alpha: f64) -> Result<Self> {
        ensure_finite("mu", mu)?;
        ensure_positive("sigma", sigma)?;
        ensure_positive("alpha", alpha)?;
        Ok(Self { mu, sigma, alpha })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.mu, self.sigma, alpha)
    }

    /// Standardized residual `y = (x - μ)/σ`.
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mu) / self.sigma
    }

    /// `ln(α / (2σΓ(1/α)))`.
    pub fn log_norm(&self) -> f64 {
        (self.alpha / (2.0 * self.sigma)).ln() - ln_gamma_real(1.0 / self.alpha)
    }

    /// Density evaluator with the normalizing constant computed once.
    pub fn density(&self) -> Density {
        Density {
            params: *self,
            log_norm: self.log_norm(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Density {
    params: EpdParams,
    log_norm: f64,
}

impl Density {
    pub fn params(&self) -> &EpdParams {
        &self.params
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.log_norm - self.params.standardize(x).abs().powf(self.params.alpha)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }
}

/// Deformation constants: `q` for the q-logarithm, `beta` for the distorted log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub q: f64,
    pub beta: f64,
}

impl DeformationParams {
    pub fn new(q: f64, beta: f64) -> Result<Self> {
        ensure_positive("q", q)?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain {
                name: "beta",
                value: beta,
                expected: "finite and >= 0",
            });
        }
        Ok(Self { q, beta })
    }
}

impl Default for DeformationParams {
    fn default() -> Self {
        Self { q: 1.0, beta: 0.0 }
    }
}

/// Transformation applied to the density inside an objective or score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// `log f`
    Log,
    /// `log_q f = (f^{1-q} - 1)/(1 - q)`
    LogQ { q: f64 },
    /// `log(β + f)`
    Distorted { beta: f64 },
}

impl Objective {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Objective::Log => Ok(()),
            Objective::LogQ { q } => ensure_positive("q", q),
            Objective::Distorted { beta } => DeformationParams::new(1.0, beta).map(|_| ()),
        }
    }

    /// Objective contribution given `ln f`.
    pub fn value(&self, log_f: f64) -> f64 {
        match *self {
            Objective::Log => log_f,
            Objective::LogQ { q } => log_q_from_log(log_f, q),
            Objective::Distorted { beta } => {
                if beta == 0.0 {
                    log_f
                } else {
                    (beta + log_f.exp()).ln()
                }
            }
        }
    }

    /// Weight `w` multiplying the plain log-score: `f^{1-q}` or `f/(β+f)`.
    pub fn weight(&self, log_f: f64) -> f64 {
        match *self {
            Objective::Log => 1.0,
            Objective::LogQ { q } => ((1.0 - q) * log_f).exp(),
            Objective::Distorted { beta } => {
                if beta == 0.0 {
                    1.0
                } else {
                    1.0 / (1.0 + beta * (-log_f).exp())
                }
            }
        }
    }
}

fn log_q_from_log(log_f: f64, q: f64) -> f64 {
    if q == 1.0 {
        log_f
    } else {
        let s = 1.0 - q;
        (s * log_f).exp_m1() / s
    }
}

/// The q-logarithm of a positive value.
pub fn log_q(value: f64, q: f64) -> f64 {
    log_q_from_log(value.ln(), q)
}

pub fn pdf(x: f64, p: &EpdParams) -> f64 {
    p.density().pdf(x)
}

pub fn log_pdf(x: f64, p: &EpdParams) -> f64 {
    p.density().log_pdf(x)
}

pub fn log_q_pdf(x: f64, p: &EpdParams, q: f64) -> f64 {
    log_q_from_log(log_pdf(x, p), q)
}

pub fn distorted_log_pdf(x: f64, p: &EpdParams, beta: f64) -> f64 {
    Objective::Distorted { beta }.value(log_pdf(x, p))
}

/// CDF by quadrature of the density over the tail beyond `x`; `cdf(μ) = 1/2` exactly.
pub fn cdf(x: f64, p: &EpdParams) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain {
            name: "x",
            value: x,
            expected: "not NaN",
        });
    }
    if x == p.mu {
        return Ok(0.5);
    }
    let d = p.density();
    let spec = QuadratureSpec::new(x, f64::INFINITY).with_tolerances(1e-13, 1e-11);
    if x > p.mu {
        let tail = integrate(|t| d.pdf(t), &spec)?.value;
        Ok((1.0 - tail).clamp(0.0, 1.0))
    } else {
        let tail = integrate(|t| d.pdf(t), &spec.on(f64::NEG_INFINITY, x))?.value;
        Ok(tail.clamp(0.0, 1.0))
    }
}

/// `x = μ + σ·Z·Y^{1/α}` for a gamma draw `Y` and sign `Z ∈ {-1, +1}`.
pub fn transform(p: &EpdParams, gamma_draw: f64, positive: bool) -> f64 {
    let z = if positive { 1.0 } else { -1.0 };
    p.mu + p.sigma * z * gamma_draw.powf(1.0 / p.alpha)
}

/// Draw `n` values with `Y ~ Gamma(1/α, 1)` and a fair random sign.
pub fn sample_with<R: Rng + ?Sized>(p: &EpdParams, n: usize, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(1.0 / p.alpha, 1.0).expect("shape 1/alpha is positive and finite");
    (0..n)
        .map(|_| {
            let y = gamma.sample(rng);
            let positive: bool = rng.random();
            transform(p, y, positive)
        })
        .collect()
}

pub fn sample(p: &EpdParams, n: usize, seed: u64) -> Vec<f64> {
    sample_with(p, n, &mut rng::stream(seed))
}
