//! Estimators: iteratively reweighted estimating equations for (μ, σ), the
//! shape equation for α, and GA-based maximization of Σ log f, Σ log_q f or
//! Σ log(β + f).

use serde::{Deserialize, Serialize};

use crate::epd::{EpdParams, Objective};
use crate::error::{ensure_positive, Error, Result};
use crate::fisher::FisherMatrix;
use crate::fisher::Variances;
use crate::optimize::{maximize_seeded, polish_with, GaConfig, NelderMead};
use crate::scores::{psi_with_weight, Psi, ScoreFamily};
use crate::select::{InformationCriteria, Volume};
use crate::special_fn::{digamma_pos, ln_gamma_real};

/// Floor applied to a collapsed MAD starting scale.
pub const SIGMA_FLOOR: f64 = 1e-6;
/// Search interval for the shape equation.
pub const ALPHA_RANGE: (f64, f64) = (0.05, 50.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for Iteration {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

impl Iteration {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        ensure_positive("tol", self.tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Estimating equations driven by a score family.
    Ee(ScoreFamily),
    /// Direct maximization of an objective over (μ, σ, α).
    Objective(Objective),
}

/// GA search box for objective fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "bounds", rename_all = "snake_case")]
pub enum SearchBounds {
    /// μ ∈ [min − range, max + range], σ ∈ [1e-2, 10·range], α ∈ [0.1, 20].
    Default,
    /// ±1e10 on μ and (1e-10, 1e10) on σ and α.
    Literal,
    Custom(Vec<(f64, f64)>),
}

impl SearchBounds {
    pub fn resolve(&self, data: &[f64]) -> Result<Vec<(f64, f64)>> {
        match self {
            SearchBounds::Default => {
                let (lo, hi) = min_max(data);
                let range = hi - lo;
                if !(range > 0.0) {
                    return Err(Error::Degenerate("all observations are equal".into()));
                }
                Ok(vec![(lo - range, hi + range), (1e-2, 10.0 * range), (0.1, 20.0)])
            }
            SearchBounds::Literal => Ok(vec![(-1e10, 1e10), (1e-10, 1e10), (1e-10, 1e10)]),
            SearchBounds::Custom(b) => {
                if b.len() != 3 {
                    return Err(Error::Config(format!(
                        "custom bounds need 3 intervals, got {}",
                        b.len()
                    )));
                }
                if b[1].0 <= 0.0 || b[2].0 <= 0.0 {
                    return Err(Error::Config("sigma and alpha bounds must be positive".into()));
                }
                Ok(b.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub method: Method,
    /// Fixed shape, or the starting shape when it is estimated. Ignored by
    /// families whose shapes are part of the family (Huber, combined).
    pub alpha: f64,
    pub estimate_alpha: bool,
    #[serde(flatten)]
    pub iteration: Iteration,
    pub ga: GaConfig,
    pub bounds: SearchBounds,
    pub polish: bool,
}

impl FitConfig {
    pub fn ee(family: ScoreFamily, alpha: f64) -> Self {
        Self {
            method: Method::Ee(family),
            alpha,
            estimate_alpha: false,
            iteration: Iteration::default(),
            ga: GaConfig::default(),
            bounds: SearchBounds::Default,
            polish: true,
        }
    }

    pub fn objective(objective: Objective) -> Self {
        Self {
            method: Method::Objective(objective),
            alpha: 2.0,
            estimate_alpha: true,
            ..Self::ee(ScoreFamily::Plain, 2.0)
        }
    }

    pub fn with_estimated_alpha(mut self) -> Self {
        self.estimate_alpha = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.ga.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.iteration.validate()?;
        ensure_positive("alpha", self.alpha)?;
        match &self.method {
            Method::Ee(f) => {
                f.validate()?;
                if self.estimate_alpha && f.fixed_shapes().is_some() {
                    return Err(Error::Config(format!(
                        "the {} family fixes its shapes; alpha cannot be estimated",
                        f.name()
                    )));
                }
                Ok(())
            }
            Method::Objective(o) => o.validate(),
        }
    }

    /// Score family whose scores describe this fit (for IC and Fisher).
    pub fn score_family(&self) -> ScoreFamily {
        match self.method {
            Method::Ee(f) => f,
            Method::Objective(Objective::Log) => ScoreFamily::Plain,
            Method::Objective(Objective::LogQ { q }) => ScoreFamily::QWeighted { q },
            Method::Objective(Objective::Distorted { beta }) => ScoreFamily::DistortedWeighted { beta },
        }
    }

    /// Whether the fitted α is an estimate rather than an input.
    pub fn estimates_alpha(&self) -> bool {
        matches!(self.method, Method::Objective(_)) || self.estimate_alpha
    }
}

/// Point estimate and convergence information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub params: EpdParams,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at the optimum for objective fits.
    pub objective: Option<f64>,
}

/// Estimate with Fisher-based and selection diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: EpdParams,
    pub fisher: Option<FisherMatrix>,
    pub variances: Option<Variances>,
    pub ic: Option<InformationCriteria>,
    pub volume: Option<Volume>,
    pub mae: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: Option<f64>,
    /// Diagnostics that could not be computed, with the reason.
    pub warnings: Vec<String>,
}

/// Median and median absolute deviation (no floor applied).
pub fn initial_values(data: &[f64]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Degenerate("no observations".into()));
    }
    let med = median(data);
    let dev: Vec<f64> = data.iter().map(|x| (x - med).abs()).collect();
    Ok((med, median(&dev)))
}

fn median(data: &[f64]) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn min_max(data: &[f64]) -> (f64, f64) {
    data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

fn check_data(data: &[f64], min_len: usize) -> Result<()> {
    if data.len() < min_len {
        return Err(Error::Degenerate(format!(
            "need at least {min_len} observations, got {}",
            data.len()
        )));
    }
    if let Some(i) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::Degenerate(format!("observation {i} is not finite")));
    }
    let (lo, hi) = min_max(data);
    if lo == hi {
        return Err(Error::Degenerate("all observations are equal".into()));
    }
    Ok(())
}

/// One reweighting pass: weighted mean for μ, then a σ step whose fixed
/// point is the weighted mean-square equation.
fn sweep(data: &[f64], family: &ScoreFamily, alpha: f64, mu: f64, sigma: f64) -> Result<(f64, f64)> {
    let shape = family.model_alpha(alpha);
    let weighting = family.weighting();
    let log_norm = (shape / (2.0 * sigma)).ln() - ln_gamma_real(1.0 / shape);
    let mut swm = 0.0;
    let mut swmx = 0.0;
    let mut sw = 0.0;
    let mut wm = Vec::with_capacity(data.len());
    for &x in data {
        let y = (x - mu) / sigma;
        let m = family.ee_weight(y, alpha);
        let w = match weighting {
            Objective::Log => 1.0,
            _ => weighting.weight(log_norm - y.abs().powf(shape)),
        };
        let c = if w == 0.0 || m == 0.0 { 0.0 } else { w * m };
        swm += c;
        swmx += c * x;
        sw += w;
        wm.push(c);
    }
    if !(swm > 0.0 && swm.is_finite() && sw > 0.0) {
        return Err(Error::Degenerate("all estimating-equation weights vanish".into()));
    }
    let mu_new = swmx / swm;
    let ss: f64 = data.iter().zip(&wm).map(|(x, c)| c * (x - mu_new) * (x - mu_new)).sum();
    let denom = if family.divides_by_weight_sum() {
        sw
    } else {
        data.len() as f64
    };
    let rhs = ss / denom;
    if !(rhs > 0.0 && rhs.is_finite()) {
        return Err(Error::Degenerate("scale equation has no positive solution".into()));
    }
    // σ ← σ·(rhs/σ²)^{1/α}: same fixed point as σ² = rhs, contracting for any shape.
    let sigma_new = sigma * (rhs / (sigma * sigma)).powf(1.0 / shape);
    if !(sigma_new > 0.0 && sigma_new.is_finite()) {
        return Err(Error::Degenerate("scale collapsed".into()));
    }
    Ok((mu_new, sigma_new))
}

/// Solve the (μ, σ) estimating equations of `family` with shape `alpha` held fixed.
pub fn fit_ee_location_scale(data: &[f64], family: &ScoreFamily, alpha: f64, it: &Iteration) -> Result<Estimate> {
    check_data(data, 2)?;
    family.validate()?;
    ensure_positive("alpha", alpha)?;
    it.validate()?;
    let (mu0, mad) = initial_values(data)?;
    let start = (mu0, mad.max(SIGMA_FLOOR));
    iterate_location_scale(data, family, alpha, start, it)
}

fn iterate_location_scale(
    data: &[f64],
    family: &ScoreFamily,
    alpha: f64,
    (mut mu, mut sigma): (f64, f64),
    it: &Iteration,
) -> Result<Estimate> {
    let shape = family.model_alpha(alpha);
    for i in 1..=it.max_iter {
        let (m, s) = sweep(data, family, alpha, mu, sigma)?;
        let change = (m - mu).abs().max((s - sigma).abs());
        mu = m;
        sigma = s;
        if change < it.tol {
            return Ok(Estimate {
                params: EpdParams::new(mu, sigma, shape)?,
                iterations: i,
                converged: true,
                objective: None,
            });
        }
    }
    Ok(Estimate {
        params: EpdParams::new(mu, sigma, shape)?,
        iterations: it.max_iter,
        converged: false,
        objective: None,
    })
}

/// Residual `Σ w_i ψ_α(x_i)` of the shape equation at `alpha`, with (μ, σ) from `current`.
pub fn alpha_residual(data: &[f64], current: &EpdParams, mode: Objective, alpha: f64) -> f64 {
    let (mu, sigma) = (current.mu(), current.sigma());
    let log_norm = (alpha / (2.0 * sigma)).ln() - ln_gamma_real(1.0 / alpha);
    let base = 1.0 / alpha + digamma_pos(1.0 / alpha) / (alpha * alpha);
    let mut total = 0.0;
    for &x in data {
        let a = ((x - mu) / sigma).abs();
        let ya = if a == 0.0 { 0.0 } else { a.powf(alpha) };
        let w = match mode {
            Objective::Log => 1.0,
            _ => mode.weight(log_norm - ya),
        };
        if w == 0.0 {
            continue;
        }
        let ylog = if a == 0.0 { 0.0 } else { ya * a.ln() };
        total += w * (base - ylog);
    }
    total
}

/// Solve the shape equation for α by bracketing and Brent's method on (0.05, 50).
pub fn fit_ee_alpha(data: &[f64], current: &EpdParams, mode: Objective) -> Result<f64> {
    check_data(data, 2)?;
    mode.validate()?;
    let g = |a: f64| alpha_residual(data, current, mode, a);
    let (lo_lim, hi_lim) = ALPHA_RANGE;
    let a0 = current.alpha().clamp(lo_lim, hi_lim);
    let g0 = g(a0);
    if g0 == 0.0 {
        return Ok(a0);
    }
    let no_root = Error::NoRoot { lo: lo_lim, hi: hi_lim };
    let expand = |upward: bool| -> Option<(f64, f64, f64, f64)> {
        let (mut a, mut ga) = (a0, g0);
        loop {
            let b = if upward {
                (a * 1.25).min(hi_lim)
            } else {
                (a / 1.25).max(lo_lim)
            };
            if b == a {
                return None;
            }
            let gb = g(b);
            if !gb.is_finite() {
                return None;
            }
            if gb.signum() != ga.signum() {
                return Some((a, ga, b, gb));
            }
            a = b;
            ga = gb;
        }
    };
    // The residual is positive for small α and negative for large α.
    let bracket = if g0 > 0.0 {
        expand(true).or_else(|| expand(false))
    } else {
        expand(false).or_else(|| expand(true))
    };
    let (a, ga, b, gb) = bracket.ok_or(no_root)?;
    Ok(brent(g, a, ga, b, gb, 1e-13))
}

/// Brent's root finder on a sign-changing bracket.
fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, tol: f64) -> f64 {
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol * b.abs();
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    b
}

/// Joint (μ, σ, α) estimating equations: one (μ, σ) sweep followed by one
/// shape update defines a fixed-point map, iterated until the joint change is
/// below `tol`.
///
/// The map contracts slowly along the σ–α direction, so it is driven by
/// squared extrapolation (SQUAREM): two map steps give a secant step length,
/// the extrapolated point is stabilized by one more map step, and that last
/// plain step is the one tested against `tol`.
pub fn fit_ee_joint(data: &[f64], family: &ScoreFamily, alpha0: f64, it: &Iteration) -> Result<Estimate> {
    check_data(data, 2)?;
    family.validate()?;
    it.validate()?;
    if family.fixed_shapes().is_some() {
        return Err(Error::Config(format!("the {} family fixes its shapes", family.name())));
    }
    let mode = family.weighting();
    let step = |t: [f64; 3]| -> Result<[f64; 3]> {
        let (m, s) = sweep(data, family, t[2], t[0], t[1])?;
        let a = fit_ee_alpha(data, &EpdParams::new(m, s, t[2])?, mode)?;
        Ok([m, s, a])
    };
    let change = |a: &[f64; 3], b: &[f64; 3]| (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
    let (mu0, mad) = initial_values(data)?;
    let mut theta = [mu0, mad.max(SIGMA_FLOOR), alpha0];
    let mut evals = 0;
    let done = |t: [f64; 3], evals: usize, converged: bool| -> Result<Estimate> {
        Ok(Estimate {
            params: EpdParams::new(t[0], t[1], t[2])?,
            iterations: evals,
            converged,
            objective: None,
        })
    };
    while evals < it.max_iter {
        let t1 = step(theta)?;
        evals += 1;
        if change(&t1, &theta) < it.tol {
            return done(t1, evals, true);
        }
        let t2 = step(t1)?;
        evals += 1;
        if change(&t2, &t1) < it.tol {
            return done(t2, evals, true);
        }
        let r: Vec<f64> = (0..3).map(|i| t1[i] - theta[i]).collect();
        let v: Vec<f64> = (0..3).map(|i| t2[i] - 2.0 * t1[i] + theta[i]).collect();
        let (rn, vn) = (norm(&r), norm(&v));
        let a = if vn > 0.0 { (-rn / vn).min(-1.0) } else { -1.0 };
        let extrapolated = [0, 1, 2].map(|i| theta[i] - 2.0 * a * r[i] + a * a * v[i]);
        let usable = extrapolated[1] > 0.0
            && (ALPHA_RANGE.0..=ALPHA_RANGE.1).contains(&extrapolated[2])
            && extrapolated.iter().all(|x| x.is_finite());
        let base = if usable { extrapolated } else { t2 };
        match step(base) {
            Ok(t3) => {
                evals += 1;
                if change(&t3, &base) < it.tol {
                    return done(t3, evals, true);
                }
                theta = t3;
            }
            Err(_) if usable => theta = t2,
            Err(e) => return Err(e),
        }
    }
    done(theta, evals, false)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `Σ objective(log f(x_i; θ))`.
pub fn objective_value(data: &[f64], params: &EpdParams, mode: Objective) -> f64 {
    let d = params.density();
    data.iter().map(|&x| mode.value(d.log_pdf(x))).sum()
}

fn objective_at(data: &[f64], theta: &[f64], mode: Objective) -> f64 {
    match EpdParams::new(theta[0], theta[1], theta[2]) {
        Ok(p) => objective_value(data, &p, mode),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Maximize the objective over (μ, σ, α) with the GA, then polish.
pub fn fit_objective(
    data: &[f64],
    mode: Objective,
    bounds: &SearchBounds,
    ga: &GaConfig,
    alpha0: f64,
    polish: bool,
) -> Result<Estimate> {
    check_data(data, 4)?;
    mode.validate()?;
    let box_ = bounds.resolve(data)?;
    let cfg = GaConfig {
        bounds: box_.clone(),
        ..ga.clone()
    };
    let (mu0, mad) = initial_values(data)?;
    let seed_point = vec![mu0, mad.max(SIGMA_FLOOR), alpha0];
    let f = |theta: &[f64]| objective_at(data, theta, mode);
    let out = maximize_seeded(f, &cfg, &[seed_point])?;
    let (point, value, iterations, converged) = if polish {
        let p = polish_with(f, &out.best_point, &box_, &NelderMead::default());
        (p.point, p.value, cfg.generations + p.evaluations, p.converged)
    } else {
        (out.best_point, out.best_value, cfg.generations, true)
    };
    Ok(Estimate {
        params: EpdParams::new(point[0], point[1], point[2])?,
        iterations,
        converged,
        objective: Some(value),
    })
}

/// Dispatch on the configured method.
pub fn fit(data: &[f64], cfg: &FitConfig) -> Result<Estimate> {
    cfg.validate()?;
    match cfg.method {
        Method::Ee(family) if cfg.estimate_alpha => fit_ee_joint(data, &family, cfg.alpha, &cfg.iteration),
        Method::Ee(family) => fit_ee_location_scale(data, &family, cfg.alpha, &cfg.iteration),
        Method::Objective(mode) => fit_objective(data, mode, &cfg.bounds, &cfg.ga, cfg.alpha, cfg.polish),
    }
}

/// `Σ_i ψ(x_i)` for the objective matching `family`, at `params`.
pub fn psi_sum(data: &[f64], params: &EpdParams, mode: Objective) -> Psi {
    let d = params.density();
    let mut s = [0.0; 3];
    for &x in data {
        let w = mode.weight(d.log_pdf(x));
        let p = psi_with_weight(params.standardize(x), params.sigma(), params.alpha(), w);
        for (acc, v) in s.iter_mut().zip(p.as_array()) {
            *acc += v;
        }
    }
    Psi {
        mu: s[0],
        sigma: s[1],
        alpha: s[2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epd::sample;
    use crate::scores::ShapeTriple;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ep(mu: f64, sigma: f64, alpha: f64) -> EpdParams {
        EpdParams::new(mu, sigma, alpha).unwrap()
    }

    #[test]
    fn initial_values_examples() {
        assert_eq!(initial_values(&[1.0, 2.0, 3.0]).unwrap(), (2.0, 1.0));
        assert_eq!(initial_values(&[0.0, 0.0, 0.0, 10.0]).unwrap(), (0.0, 0.0));
        assert_eq!(initial_values(&[-1.0, 0.0, 1.0, 2.0]).unwrap(), (0.5, 1.0));
        assert!(initial_values(&[]).is_err());
    }

    #[test]
    fn collapsed_mad_uses_floor() {
        // MAD is zero; the fit must still start and move away from the floor.
        let e = fit_ee_location_scale(&[0.0, 0.0, 0.0, 10.0], &ScoreFamily::Plain, 2.0, &Iteration::default()).unwrap();
        assert_relative_eq!(e.params.mu(), 2.5, max_relative = 1e-12);
        assert!(e.params.sigma() > 1.0);
    }

    #[test]
    fn two_point_closed_form() {
        let e = fit_ee_location_scale(&[-1.0, 1.0], &ScoreFamily::Plain, 2.0, &Iteration::default()).unwrap();
        assert_eq!(e.params.mu(), 0.0);
        assert_relative_eq!(e.params.sigma(), 2f64.sqrt(), max_relative = 1e-12);
        assert!(e.converged);
    }

    #[test]
    fn gaussian_shape_gives_mean() {
        let data = sample(&ep(1.3, 2.0, 1.5), 57, 4);
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let it = Iteration { max_iter: 1, tol: 1e-8 };
        let e = fit_ee_location_scale(&data, &ScoreFamily::Plain, 2.0, &it).unwrap();
        assert!((e.params.mu() - mean).abs() < 1e-12);
        for fam in [
            ScoreFamily::QWeighted { q: 1.0 },
            ScoreFamily::DistortedWeighted { beta: 0.0 },
        ] {
            let e = fit_ee_location_scale(&data, &fam, 2.0, &it).unwrap();
            assert!((e.params.mu() - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let it = Iteration::default();
        assert!(matches!(
            fit_ee_location_scale(&[1.0], &ScoreFamily::Plain, 2.0, &it),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            fit_ee_location_scale(&[2.0, 2.0, 2.0], &ScoreFamily::Plain, 2.0, &it),
            Err(Error::Degenerate(_))
        ));
        assert!(fit_ee_location_scale(&[1.0, f64::NAN], &ScoreFamily::Plain, 2.0, &it).is_err());
        assert!(fit_objective(
            &[1.0, 2.0, 3.0],
            Objective::Log,
            &SearchBounds::Default,
            &GaConfig::default(),
            2.0,
            true
        )
        .is_err());
    }

    #[test]
    fn reductions_to_plain_score() {
        let data = sample(&ep(0.5, 1.2, 2.6), 80, 12);
        let it = Iteration::default();
        let plain = fit_ee_location_scale(&data, &ScoreFamily::Plain, 2.6, &it).unwrap();
        let q1 = fit_ee_location_scale(&data, &ScoreFamily::QWeighted { q: 1.0 }, 2.6, &it).unwrap();
        let d0 = fit_ee_location_scale(&data, &ScoreFamily::DistortedWeighted { beta: 0.0 }, 2.6, &it).unwrap();
        assert_eq!(plain, q1);
        assert_eq!(plain, d0);
    }

    #[test]
    fn converged_fits_solve_their_equations() {
        let data = sample(&ep(3.12, 1.68, 2.1), 114, 3);
        let it = Iteration::default();
        for fam in [
            ScoreFamily::Plain,
            ScoreFamily::QWeighted { q: 0.8 },
            ScoreFamily::DistortedWeighted { beta: 0.01 },
        ] {
            let e = fit_ee_location_scale(&data, &fam, 2.1, &it).unwrap();
            assert!(e.converged);
            let s = psi_sum(&data, &e.params, fam.weighting());
            assert!(s.mu.abs() < 1e-6 && s.sigma.abs() < 1e-6, "{fam:?} {s:?}");
            let j = fit_ee_joint(&data, &fam, 2.0, &it).unwrap();
            assert!(j.converged);
            let s = psi_sum(&data, &j.params, fam.weighting());
            for c in s.as_array() {
                assert!(c.abs() < 1e-6, "{fam:?} {s:?}");
            }
        }
    }

    #[test]
    fn climate_analog_sd() {
        // The distorted score shrinks σ̂ at this β and scale (mean ≈ 1.56), so a
        // single n = 114 sample lands within 0.15 only about half the time;
        // the tolerance is applied to the Monte Carlo mean.
        let truth = ep(3.12, 1.68, 2.1);
        let fam = ScoreFamily::DistortedWeighted { beta: 1e-2 };
        let reps = 50;
        let (mut mu, mut sigma) = (0.0, 0.0);
        for seed in 0..reps {
            let data = sample(&truth, 114, seed);
            let e = fit_ee_location_scale(&data, &fam, 2.1, &Iteration::default()).unwrap();
            mu += e.params.mu() / reps as f64;
            sigma += e.params.sigma() / reps as f64;
        }
        assert!((mu - 3.12).abs() < 0.15, "{mu}");
        assert!((sigma - 1.68).abs() < 0.15, "{sigma}");
        assert!(sigma < 1.68);
    }

    #[test]
    fn combined_and_huber_families_converge() {
        let data = sample(&ep(0.0, 1.0, 2.0), 200, 8);
        let shapes = ShapeTriple::new(1.6, 2.0, 1.8).unwrap();
        for fam in [
            ScoreFamily::Huber { r: 1.345 },
            ScoreFamily::CombinedPlain { k: 1.2, t: 1.5, shapes },
            ScoreFamily::CombinedHuber { k: 1.2, t: 1.5, shapes },
        ] {
            let e = fit_ee_location_scale(&data, &fam, 2.0, &Iteration::default()).unwrap();
            assert!(e.converged, "{fam:?}");
            assert!(
                e.params.mu().abs() < 0.3 && (e.params.sigma() - 1.0).abs() < 0.4,
                "{fam:?} {:?}",
                e.params
            );
        }
    }

    #[test]
    fn alpha_equation_matches_log_likelihood_derivative() {
        let data = sample(&ep(0.0, 1.0, 1.7), 300, 5);
        let p = ep(0.05, 1.1, 1.9);
        let h = 1e-6;
        let fd = (objective_value(&data, &p.with_alpha(1.9 + h).unwrap(), Objective::Log)
            - objective_value(&data, &p.with_alpha(1.9 - h).unwrap(), Objective::Log))
            / (2.0 * h);
        assert_relative_eq!(alpha_residual(&data, &p, Objective::Log, 1.9), fd, max_relative = 1e-6);
    }

    #[test]
    fn alpha_mle_consistency() {
        for (alpha, lo, hi, seed) in [(2.0, 1.9, 2.1, 1), (1.3, 1.2, 1.4, 2)] {
            let data = sample(&ep(0.0, 1.0, alpha), 10_000, seed);
            let e = fit_ee_joint(&data, &ScoreFamily::Plain, 1.0, &Iteration::default()).unwrap();
            let a = e.params.alpha();
            assert!(a > lo && a < hi, "alpha {alpha}: {a}");
        }
    }

    #[test]
    fn alpha_self_consistency_at_truth() {
        let truth = ep(0.0, 1.0, 2.0);
        let data = sample(&truth, 100_000, 77);
        let a = fit_ee_alpha(&data, &truth, Objective::Log).unwrap();
        assert!((a - 2.0).abs() < 0.06, "{a}");
    }

    #[test]
    fn alpha_without_root_errors() {
        // At |y| = 0.95 the residual stays positive on the whole search range
        // (the likelihood keeps increasing in α).
        let data = [-0.95, 0.95, -0.95, 0.95];
        assert!(matches!(
            fit_ee_alpha(&data, &ep(0.0, 1.0, 2.0), Objective::Log),
            Err(Error::NoRoot { .. })
        ));
    }

    #[test]
    fn objective_q1_equals_log() {
        let data = sample(&ep(0.2, 0.7, 1.4), 40, 6);
        let p = ep(0.1, 0.8, 1.6);
        assert_eq!(
            objective_value(&data, &p, Objective::LogQ { q: 1.0 }),
            objective_value(&data, &p, Objective::Log)
        );
    }

    #[test]
    fn ga_polish_matches_ee_mle() {
        let data = sample(&ep(0.0, 1.0, 2.0), 1000, 31);
        let ee = fit_ee_joint(&data, &ScoreFamily::Plain, 2.0, &Iteration::default()).unwrap();
        let ob = fit_objective(
            &data,
            Objective::Log,
            &SearchBounds::Default,
            &GaConfig::default().with_seed(3),
            2.0,
            true,
        )
        .unwrap();
        assert!((ee.params.mu() - ob.params.mu()).abs() < 1e-3);
        assert!((ee.params.sigma() - ob.params.sigma()).abs() < 1e-3);
        assert!((ee.params.alpha() - ob.params.alpha()).abs() < 1e-3);
        // MDLE with β = 0 is the MLE.
        let d0 = fit_objective(
            &data,
            Objective::Distorted { beta: 0.0 },
            &SearchBounds::Default,
            &GaConfig::default().with_seed(3),
            2.0,
            true,
        )
        .unwrap();
        assert!(
            (d0.params.mu()).abs() < 0.05
                && (d0.params.sigma() - 1.0).abs() < 0.05
                && (d0.params.alpha() - 2.0).abs() < 0.15
        );
    }

    #[test]
    fn fit_config_dispatch_and_validation() {
        let data = sample(&ep(0.0, 1.0, 2.0), 60, 1);
        let shapes = ShapeTriple::uniform(2.0).unwrap();
        let bad = FitConfig::ee(ScoreFamily::CombinedHuber { k: 1.0, t: 1.0, shapes }, 2.0).with_estimated_alpha();
        assert!(matches!(fit(&data, &bad), Err(Error::Config(_))));
        let cfg = FitConfig::ee(ScoreFamily::Plain, 2.0);
        assert_eq!(fit(&data, &cfg).unwrap().params.alpha(), 2.0);
        let cfg = FitConfig::objective(Objective::LogQ { q: 0.9 }).with_seed(4);
        let e = fit(&data, &cfg).unwrap();
        assert!(e.objective.is_some() && cfg.estimates_alpha());
        assert_eq!(e, fit(&data, &cfg).unwrap());
    }

    #[test]
    fn literal_bounds_resolve() {
        let b = SearchBounds::Literal.resolve(&[0.0, 1.0]).unwrap();
        assert_eq!(b[0], (-1e10, 1e10));
        assert!(SearchBounds::Custom(vec![(0.0, 1.0)]).resolve(&[0.0, 1.0]).is_err());
        assert!(SearchBounds::Default.resolve(&[1.0, 1.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn affine_equivariance(a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0], b in -100.0f64..100.0, seed in 0u64..500) {
            let data = sample(&ep(0.0, 1.0, 2.0), 60, seed);
            let moved: Vec<f64> = data.iter().map(|x| a * x + b).collect();
            let shapes = ShapeTriple::new(1.7, 2.0, 1.9).unwrap();
            let it = Iteration::default();
            // A reflection swaps the left and right pieces of the combined scores.
            let mirrored = ShapeTriple::new(1.9, 2.0, 1.7).unwrap();
            let (kk, tt) = (1.2, 1.5);
            for (fam, moved_fam) in [
                (ScoreFamily::Plain, ScoreFamily::Plain),
                (ScoreFamily::Huber { r: 1.5 }, ScoreFamily::Huber { r: 1.5 }),
                (
                    ScoreFamily::CombinedPlain { k: kk, t: tt, shapes },
                    if a > 0.0 {
                        ScoreFamily::CombinedPlain { k: kk, t: tt, shapes }
                    } else {
                        ScoreFamily::CombinedPlain { k: tt, t: kk, shapes: mirrored }
                    },
                ),
                (
                    ScoreFamily::CombinedHuber { k: kk, t: tt, shapes },
                    if a > 0.0 {
                        ScoreFamily::CombinedHuber { k: kk, t: tt, shapes }
                    } else {
                        ScoreFamily::CombinedHuber { k: tt, t: kk, shapes: mirrored }
                    },
                ),
                (ScoreFamily::QWeighted { q: 0.8 }, ScoreFamily::QWeighted { q: 0.8 }),
            ] {
                let alpha = if fam == ScoreFamily::Plain { 1.6 } else { 2.0 };
                let e0 = fit_ee_location_scale(&data, &fam, alpha, &it).unwrap();
                let e1 = fit_ee_location_scale(&moved, &moved_fam, alpha, &it).unwrap();
                prop_assume!(e0.converged && e1.converged);
                let scale = a.abs().max(1.0);
                prop_assert!((e1.params.mu() - (a * e0.params.mu() + b)).abs() < 1e-6 * scale, "{fam:?}");
                prop_assert!((e1.params.sigma() - a.abs() * e0.params.sigma()).abs() < 1e-6 * scale, "{fam:?}");
            }
        }
    }
}
