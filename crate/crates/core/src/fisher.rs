//! Fisher information matrices for the score families, by closed form or
//! quadrature, with positive-semidefiniteness diagnostics and inversion.
//!
//! Entries are per-observation expectations multiplied by the sample size.
//! Parameters are ordered (μ, σ, α); 2×2 matrices cover (μ, σ).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::epd::EpdParams;
use crate::error::{ensure_positive, Error, Result};
use crate::scores::{branch, Branch, ScoreFamily, ShapeTriple};
use crate::special_fn::{
    digamma_pos, gamma_real, incomplete_gamma, integrate, trigamma_pos, IncompleteKind, QuadratureSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    ClosedForm,
    Quadrature,
    /// Some elements hit the subdivision limit; their bounds are recorded.
    QuadraturePartial,
}

/// Caller's choice of evaluation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FisherMode {
    Closed,
    Quadrature,
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdDiagnostics {
    pub determinant_test: bool,
    pub pivot_test: bool,
    pub leading_minors: Vec<f64>,
    pub pivots: Vec<f64>,
    /// Smallest real part among the eigenvalues of the unsymmetrized matrix.
    pub min_eigen_real: f64,
    /// ‖F − Fᵀ‖ / ‖F‖ (Frobenius).
    pub asymmetry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub entries: Vec<Vec<f64>>,
    pub n: usize,
    pub method: FisherMethod,
    pub psd: PsdDiagnostics,
    /// Quadrature error bounds per entry (already scaled by n).
    pub errors: Option<Vec<Vec<f64>>>,
}

impl FisherMatrix {
    /// Build from per-observation entries, scaling by `n`.
    pub fn from_per_observation(
        per_obs: Vec<Vec<f64>>,
        n: usize,
        method: FisherMethod,
        errors: Option<Vec<Vec<f64>>>,
    ) -> Self {
        let scale = n as f64;
        let entries: Vec<Vec<f64>> = per_obs.iter().map(|r| r.iter().map(|v| scale * v).collect()).collect();
        let errors = errors.map(|e| e.iter().map(|r| r.iter().map(|v| scale * v).collect()).collect());
        let psd = psd_check_entries(&entries);
        Self {
            entries,
            n,
            method,
            psd,
            errors,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        to_matrix(&self.entries)
    }

    /// Leading `d×d` block, e.g. the (μ, σ) part when α is held fixed.
    pub fn leading(&self, d: usize) -> FisherMatrix {
        let entries: Vec<Vec<f64>> = self.entries.iter().take(d).map(|r| r[..d].to_vec()).collect();
        let errors = self
            .errors
            .as_ref()
            .map(|e| e.iter().take(d).map(|r| r[..d].to_vec()).collect());
        FisherMatrix {
            psd: psd_check_entries(&entries),
            entries,
            n: self.n,
            method: self.method,
            errors,
        }
    }
}

fn to_matrix(entries: &[Vec<f64>]) -> DMatrix<f64> {
    let d = entries.len();
    DMatrix::from_fn(d, d, |i, j| entries[i][j])
}

/// Derivatives of `S(y) = α|y|^{α-1} sign(y)` with respect to μ, σ, α.
fn score_parts(y: f64, alpha: f64, sigma: f64) -> (f64, [f64; 3]) {
    let a = y.abs();
    let sg = y.signum();
    let pm2 = a.powf(alpha - 2.0);
    let pm1 = pm2 * a;
    let s = alpha * sg * pm1;
    let k = alpha * (alpha - 1.0) / sigma;
    (s, [-k * pm2, -k * sg * pm1, sg * pm1 * (1.0 + alpha * a.ln())])
}

fn ensure_closed_domain(name: &'static str, alpha: f64) -> Result<()> {
    if alpha > 1.5 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: alpha,
            expected: "> 3/2 for the closed form; use quadrature",
        })
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "q",
            value: q,
            expected: "in (0, 1]",
        })
    }
}

/// Closed-form per-observation information of the log_q score.
fn q_closed_per_obs(sigma: f64, alpha: f64, q: f64) -> Vec<Vec<f64>> {
    let a = alpha;
    let b = 2.0 - q;
    let g = gamma_real(1.0 / a);
    let z = 2.0 - 1.0 / a;
    let gz = gamma_real(z);
    let (psi_z, tri_z, lnb) = (digamma_pos(z), trigamma_pos(z), b.ln());
    let two_q1 = 2f64.powf(q - 1.0);

    let e_mm = two_q1
        * a.powf(3.0 - q)
        * sigma.powf(q - 3.0)
        * g.powf(q - 2.0)
        * (a - 1.0).powi(2)
        * b.powf(3.0 / a - 2.0)
        * gamma_real(2.0 - 3.0 / a)
        + (1.0 - q)
            * (1.0 - a)
            * a.powf(4.0 - q)
            * two_q1
            * sigma.powf(q - 2.0)
            * g.powf(q - 2.0)
            * b.powf(3.0 / a - 3.0)
            * gamma_real(3.0 - 3.0 / a);
    let e_sm = a.powf(4.0 - q) * (1.0 - q) * (1.0 - a) * gamma_real(3.0 - 3.0 / a)
        / (2f64.powf(1.0 - q) * (g * sigma).powf(2.0 - q) * b.powf(3.0 - 3.0 / a));
    let e_ss = two_q1
        * a.powf(3.0 - q)
        * (a - 1.0).powi(2)
        * sigma.powf(q - 3.0)
        * b.powf(1.0 / a - 2.0)
        * gz
        * g.powf(q - 2.0);
    let e_sa = two_q1 * (a - 1.0) * gz * (a / (sigma * g)).powf(2.0 - q) * b.powf(1.0 / a - 2.0) * (lnb - psi_z - 1.0);
    let e_aa = (2.0 * sigma / a).powf(q - 1.0)
        * b.powf(1.0 / a - 2.0)
        * gz
        * g.powf(q - 2.0)
        * ((1.0 + psi_z - lnb).powi(2) + tri_z);
    vec![vec![e_mm, 0.0, 0.0], vec![e_sm, e_ss, e_sa], vec![e_sm, e_sa, e_aa]]
}

/// Closed-form information of the log_q score, `α > 3/2`, `q ∈ (0, 1]`.
pub fn fisher_q(params: &EpdParams, q: f64, n: usize) -> Result<FisherMatrix> {
    check_q(q)?;
    ensure_closed_domain("alpha", params.alpha())?;
    Ok(FisherMatrix::from_per_observation(
        q_closed_per_obs(params.sigma(), params.alpha(), q),
        n,
        FisherMethod::ClosedForm,
        None,
    ))
}

/// Accumulates piecewise integrals per entry and tracks failures.
struct ElementIntegrals {
    values: Vec<Vec<f64>>,
    errors: Vec<Vec<f64>>,
    partial: bool,
}

impl ElementIntegrals {
    fn new(d: usize) -> Self {
        Self {
            values: vec![vec![0.0; d]; d],
            errors: vec![vec![0.0; d]; d],
            partial: false,
        }
    }

    fn add<F: Fn(f64) -> f64>(
        &mut self,
        i: usize,
        j: usize,
        f: F,
        spec: &QuadratureSpec,
        lo: f64,
        hi: f64,
    ) -> Result<()> {
        match integrate(f, &spec.on(lo, hi)) {
            Ok(r) => {
                self.values[i][j] += r.value;
                self.errors[i][j] += r.abs_error;
                Ok(())
            }
            Err(Error::Quadrature { estimate, bound, .. }) if estimate.is_finite() && bound.is_finite() => {
                self.values[i][j] += estimate;
                self.errors[i][j] += bound;
                self.partial = true;
                Ok(())
            }
            Err(e) => Err(Error::FisherElement {
                row: i,
                col: j,
                source: Box::new(e),
            }),
        }
    }

    fn finish(self, n: usize) -> FisherMatrix {
        let method = if self.partial {
            FisherMethod::QuadraturePartial
        } else {
            FisherMethod::Quadrature
        };
        FisherMatrix::from_per_observation(self.values, n, method, Some(self.errors))
    }
}

const SPLITS: [(f64, f64); 4] = [(f64::NEG_INFINITY, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, f64::INFINITY)];

/// Information of the weighted score `w·S` by quadrature in the standardized residual.
fn weighted_quadrature<W>(params: &EpdParams, n: usize, spec: &QuadratureSpec, kernel: W) -> Result<FisherMatrix>
where
    W: Fn(f64) -> (f64, f64),
{
    let (sigma, alpha) = (params.sigma(), params.alpha());
    let c = params.log_norm().exp();
    let mut acc = ElementIntegrals::new(3);
    for i in 0..3 {
        for j in 0..3 {
            let g = |y: f64| {
                let f = c * (-y.abs().powf(alpha)).exp();
                if f == 0.0 {
                    return 0.0;
                }
                let (s, d) = score_parts(y, alpha, sigma);
                let (cross, dens) = kernel(f);
                (cross * s * s * d[j] + d[i] * d[j]) * dens * sigma
            };
            for &(lo, hi) in &SPLITS {
                acc.add(i, j, g, spec, lo, hi)?;
            }
        }
    }
    Ok(acc.finish(n))
}

/// Information of the log_q score by quadrature.
pub fn fisher_q_quadrature(params: &EpdParams, q: f64, n: usize, spec: &QuadratureSpec) -> Result<FisherMatrix> {
    check_q(q)?;
    weighted_quadrature(params, n, spec, |f| (1.0 - q, f.powf(2.0 - q)))
}

/// Information of the distorted log score by quadrature; β = 0 gives the plain score.
pub fn fisher_distorted(params: &EpdParams, beta: f64, n: usize, spec: &QuadratureSpec) -> Result<FisherMatrix> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            expected: "finite and >= 0",
        });
    }
    weighted_quadrature(params, n, spec, |f| (beta / (beta + f), f * f / (beta + f)))
}

fn check_cutoffs(k: f64, t: f64, shapes: &ShapeTriple) -> Result<()> {
    ensure_positive("k", k)?;
    ensure_positive("t", t)?;
    shapes.validate()
}

/// Closed-form (μ, σ) information of the combined score, all shapes > 3/2.
///
/// Cutoffs are in standardized units: the branches meet at `μ − kσ` and `μ + tσ`.
/// With `huberized`, the left and right pieces are scaled by `k` and `t`.
pub fn fisher_combined(
    sigma: f64,
    shapes: &ShapeTriple,
    k: f64,
    t: f64,
    huberized: bool,
    n: usize,
) -> Result<FisherMatrix> {
    ensure_positive("sigma", sigma)?;
    check_cutoffs(k, t, shapes)?;
    ensure_closed_domain("alpha1", shapes.alpha1)?;
    ensure_closed_domain("alpha2", shapes.alpha2)?;
    ensure_closed_domain("alpha3", shapes.alpha3)?;
    let [a1, a2, a3] = shapes.as_array();
    let kk = k.powf(a2);
    let tt = t.powf(a2);
    let (m1, m3) = if huberized { (k * k, t * t) } else { (1.0, 1.0) };
    let c1 = (a1 * a1 - a1).powi(2) * m1;
    let c2 = (a2 * a2 - a2).powi(2);
    let c3 = (a3 * a3 - a3).powi(2) * m3;
    let pre = 1.0 / (2.0 * sigma * sigma * gamma_real(1.0 / a2));
    let up = |z: f64, x: f64| incomplete_gamma(z, x, IncompleteKind::Upper);
    let lo = |z: f64, x: f64| incomplete_gamma(z, x, IncompleteKind::Lower);
    let e_mm = pre
        * (c1 * up((2.0 * a1 - 3.0) / a2, kk)?
            + c3 * up((2.0 * a3 - 3.0) / a2, tt)?
            + c2 * (lo(2.0 - 3.0 / a2, kk)? + lo(2.0 - 3.0 / a2, tt)?));
    let e_ms = pre
        * (-c1 * up((2.0 * a1 - 2.0) / a2, kk)?
            + c3 * up((2.0 * a3 - 2.0) / a2, tt)?
            + c2 * (-lo(2.0 - 2.0 / a2, kk)? + lo(2.0 - 2.0 / a2, tt)?));
    let e_ss = pre
        * (c1 * up((2.0 * a1 - 1.0) / a2, kk)?
            + c3 * up((2.0 * a3 - 1.0) / a2, tt)?
            + c2 * (lo(2.0 - 1.0 / a2, kk)? + lo(2.0 - 1.0 / a2, tt)?));
    Ok(FisherMatrix::from_per_observation(
        vec![vec![e_mm, e_ms], vec![e_ms, e_ss]],
        n,
        FisherMethod::ClosedForm,
        None,
    ))
}

/// Combined-score information by quadrature; any positive shapes.
pub fn fisher_combined_quadrature(
    sigma: f64,
    shapes: &ShapeTriple,
    k: f64,
    t: f64,
    huberized: bool,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<FisherMatrix> {
    ensure_positive("sigma", sigma)?;
    check_cutoffs(k, t, shapes)?;
    let a2 = shapes.alpha2;
    let c = a2 / (2.0 * sigma * gamma_real(1.0 / a2));
    let (m1, m3) = if huberized { (k, t) } else { (1.0, 1.0) };
    let pieces = [(f64::NEG_INFINITY, -k), (-k, 0.0), (0.0, t), (t, f64::INFINITY)];
    let mut acc = ElementIntegrals::new(2);
    for i in 0..2 {
        for j in 0..2 {
            let g = |y: f64| {
                let (shape, m) = match branch(y, k, t) {
                    Branch::Left => (shapes.alpha1, m1),
                    Branch::Centre => (a2, 1.0),
                    Branch::Right => (shapes.alpha3, m3),
                };
                let f = c * (-y.abs().powf(a2)).exp();
                if f == 0.0 {
                    return 0.0;
                }
                let (_, d) = score_parts(y, shape, sigma);
                m * m * d[i] * d[j] * f * sigma
            };
            for &(lo, hi) in &pieces {
                acc.add(i, j, g, spec, lo, hi)?;
            }
        }
    }
    Ok(acc.finish(n))
}

/// Information matrix matching a fitted family.
///
/// Plain, q-weighted and distorted families give 3×3 matrices (take the
/// leading 2×2 block when α is fixed); Huber and combined families give 2×2.
/// `Auto` uses the closed form where it is defined.
pub fn fisher_for(
    family: &ScoreFamily,
    params: &EpdParams,
    n: usize,
    mode: FisherMode,
    spec: &QuadratureSpec,
) -> Result<FisherMatrix> {
    let closed_ok = |shapes: &[f64]| shapes.iter().all(|&a| a > 1.5);
    match *family {
        ScoreFamily::Plain => q_family(params, 1.0, n, mode, spec, closed_ok(&[params.alpha()])),
        ScoreFamily::QWeighted { q } => q_family(params, q, n, mode, spec, closed_ok(&[params.alpha()])),
        ScoreFamily::DistortedWeighted { beta } => match mode {
            FisherMode::Closed if beta == 0.0 => fisher_q(params, 1.0, n),
            FisherMode::Closed => Err(Error::Config(
                "the distorted score has no closed-form information; use quadrature".into(),
            )),
            _ => fisher_distorted(params, beta, n, spec),
        },
        ScoreFamily::Huber { r } => {
            let shapes = family.fixed_shapes().expect("huber shapes");
            combined(params.sigma(), &shapes, r, r, true, n, mode, spec)
        }
        ScoreFamily::CombinedPlain { k, t, shapes } => combined(params.sigma(), &shapes, k, t, false, n, mode, spec),
        ScoreFamily::CombinedHuber { k, t, shapes } => combined(params.sigma(), &shapes, k, t, true, n, mode, spec),
    }
}

fn q_family(
    params: &EpdParams,
    q: f64,
    n: usize,
    mode: FisherMode,
    spec: &QuadratureSpec,
    closed_ok: bool,
) -> Result<FisherMatrix> {
    match mode {
        FisherMode::Closed => fisher_q(params, q, n),
        FisherMode::Quadrature => fisher_q_quadrature(params, q, n, spec),
        FisherMode::Auto if closed_ok => fisher_q(params, q, n),
        FisherMode::Auto => fisher_q_quadrature(params, q, n, spec),
    }
}

#[allow(clippy::too_many_arguments)]
fn combined(
    sigma: f64,
    shapes: &ShapeTriple,
    k: f64,
    t: f64,
    huberized: bool,
    n: usize,
    mode: FisherMode,
    spec: &QuadratureSpec,
) -> Result<FisherMatrix> {
    let closed_ok = shapes.as_array().iter().all(|&a| a > 1.5);
    match mode {
        FisherMode::Closed => fisher_combined(sigma, shapes, k, t, huberized, n),
        FisherMode::Auto if closed_ok => fisher_combined(sigma, shapes, k, t, huberized, n),
        _ => fisher_combined_quadrature(sigma, shapes, k, t, huberized, n, spec),
    }
}

/// Determinant and pivot tests on the symmetrized matrix.
pub fn psd_check(f: &FisherMatrix) -> PsdDiagnostics {
    psd_check_entries(&f.entries)
}

pub fn psd_check_entries(entries: &[Vec<f64>]) -> PsdDiagnostics {
    let m = to_matrix(entries);
    let d = m.nrows();
    let sym = (&m + m.transpose()) * 0.5;
    let scale = sym
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let leading_minors: Vec<f64> = (1..=d).map(|k| sym.view((0, 0), (k, k)).determinant()).collect();
    let mut pivots = Vec::with_capacity(d);
    let mut prev = 1.0;
    for &minor in &leading_minors {
        pivots.push(if prev != 0.0 { minor / prev } else { f64::NAN });
        prev = minor;
    }
    let tol = |k: usize| -1e-13 * scale.powi(k as i32);
    let determinant_test = leading_minors.iter().enumerate().all(|(i, &v)| v >= tol(i + 1));
    let pivot_test = pivots.iter().all(|&p| p.is_nan() || p >= -1e-13 * scale);
    let min_eigen_real = if m.iter().all(|v| v.is_finite()) {
        m.complex_eigenvalues()
            .iter()
            .map(|c| c.re)
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    let norm = m.norm();
    let asymmetry = if norm > 0.0 {
        (&m - m.transpose()).norm() / norm
    } else {
        0.0
    };
    PsdDiagnostics {
        determinant_test,
        pivot_test,
        leading_minors,
        pivots,
        min_eigen_real,
        asymmetry,
    }
}

/// Diagonal of the (pseudo-)inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variances {
    pub raw: Vec<f64>,
    pub abs: Vec<f64>,
    pub negative: Vec<bool>,
    /// The Moore–Penrose inverse was used.
    pub singular: bool,
}

/// Inverts `F` as stored (no symmetrization); falls back to the
/// pseudo-inverse when `|det F| < 1e-12·‖F‖^d`.
pub fn variances(f: &FisherMatrix) -> Variances {
    variances_of(&f.entries)
}

pub fn variances_of(entries: &[Vec<f64>]) -> Variances {
    let m = to_matrix(entries);
    let d = m.nrows();
    let det = m.determinant();
    let norm = m.norm();
    let inverse = if det.abs() >= 1e-12 * norm.powi(d as i32) && det != 0.0 {
        m.clone().try_inverse()
    } else {
        None
    };
    let (inv, singular) = match inverse {
        Some(inv) => (inv, false),
        None => {
            let eps = 1e-12 * norm.max(f64::MIN_POSITIVE);
            let pinv = m.pseudo_inverse(eps).unwrap_or_else(|_| DMatrix::zeros(d, d));
            (pinv, true)
        }
    };
    let raw: Vec<f64> = (0..d).map(|i| inv[(i, i)]).collect();
    Variances {
        abs: raw.iter().map(|v| v.abs()).collect(),
        negative: raw.iter().map(|&v| v < 0.0).collect(),
        raw,
        singular,
    }
}

/// Numerical rank by singular values above `1e-12·σ_max`.
pub fn rank(entries: &[Vec<f64>]) -> usize {
    let sv = to_matrix(entries).singular_values();
    let max = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    sv.iter().filter(|&&s| s > 1e-12 * max).count()
}
