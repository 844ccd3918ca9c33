//! Model selection: ellipsoid volume, score-based information criteria,
//! sorted-sample MAE, and grid search over tuning constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epd::{sample_with, EpdParams};
use crate::error::{Error, Result};
use crate::estimate::{fit, Estimate, FitConfig, FitResult};
use crate::fisher::{fisher_for, rank, variances, FisherMatrix, FisherMode};
use crate::rng::{split_seed, stream};
use crate::scores::{s_huber, ScoreFamily, ShapeTriple};
use crate::special_fn::{gamma_real, QuadratureSpec};

pub use crate::fisher::Variances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Volume {
    /// `None` when `det F ≤ 0` (infinite volume).
    pub value: Option<f64>,
    pub singular: bool,
    pub determinant: f64,
    pub rank: usize,
}

/// `(2πv/n)^{d/2} / Γ(d/2 + 1) / √det F` with `v = rank F`, `d = dim F`.
pub fn volume(f: &FisherMatrix) -> Volume {
    let v = rank(&f.entries);
    volume_with(&f.entries, f.n, v)
}

pub fn volume_with(entries: &[Vec<f64>], n: usize, v: usize) -> Volume {
    let m = nalgebra::DMatrix::from_fn(entries.len(), entries.len(), |i, j| entries[i][j]);
    let d = entries.len() as f64;
    let det = m.determinant();
    let value = if det > 0.0 && n > 0 {
        let lead = (2.0 * std::f64::consts::PI * v as f64 / n as f64).powf(d / 2.0);
        Some(lead / gamma_real(d / 2.0 + 1.0) / det.sqrt())
    } else {
        None
    };
    Volume {
        singular: value.is_none(),
        value,
        determinant: det,
        rank: v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    /// `Σ|S(x_i)|` at the fitted parameters.
    pub score_sum: f64,
    pub aic: f64,
    pub caic: f64,
    pub bic: f64,
    pub p: usize,
    pub n: usize,
}

impl InformationCriteria {
    pub fn from_score_sum(score_sum: f64, p: usize, n: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("number of parameters must be >= 1".into()));
        }
        if n <= p + 1 {
            return Err(Error::Degenerate(format!("cAIC needs n > p + 1 (n = {n}, p = {p})")));
        }
        let (pf, nf) = (p as f64, n as f64);
        let base = 2.0 * score_sum;
        Ok(Self {
            score_sum,
            aic: base + 2.0 * pf,
            caic: base + 2.0 * pf * nf / (nf - pf - 1.0),
            bic: base + pf * nf.ln(),
            p,
            n,
        })
    }
}

/// Unweighted-family score value used by the criteria. Huber uses `S^H`
/// itself rather than the doubled estimating-equation form.
fn criterion_score(family: &ScoreFamily, y: f64, alpha: f64, log_f: f64) -> f64 {
    match *family {
        ScoreFamily::Huber { r } => s_huber(y, r),
        _ => family.score(y, alpha, log_f),
    }
}

/// AIC, cAIC and BIC with base `2Σ|S(x_i)|` over the standardized residuals.
pub fn ic_scores(data: &[f64], params: &EpdParams, family: &ScoreFamily, p: usize) -> Result<InformationCriteria> {
    let d = params.density();
    let sum: f64 = data
        .iter()
        .map(|&x| criterion_score(family, params.standardize(x), params.alpha(), d.log_pdf(x)).abs())
        .sum();
    InformationCriteria::from_score_sum(sum, p, data.len())
}

/// Mean absolute difference between the sorted samples.
pub fn mae(real: &[f64], artificial: &[f64]) -> Result<f64> {
    if real.len() != artificial.len() {
        return Err(Error::LengthMismatch {
            left: real.len(),
            right: artificial.len(),
        });
    }
    if real.is_empty() {
        return Err(Error::Degenerate("no observations".into()));
    }
    let mut a = real.to_vec();
    let mut b = artificial.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DiagnoseOptions {
    pub fisher: FisherMode,
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
}

/// Attach Fisher information, variances, volume and criteria to an estimate.
/// Diagnostics that fail are recorded as warnings.
pub fn diagnose(data: &[f64], cfg: &FitConfig, est: &Estimate, opts: &DiagnoseOptions) -> FitResult {
    let family = cfg.score_family();
    let p = if cfg.estimates_alpha() { 3 } else { 2 };
    let spec = opts.quadrature.unwrap_or_default();
    let mut warnings = Vec::new();
    let fisher = match fisher_for(&family, &est.params, data.len(), opts.fisher, &spec) {
        Ok(f) if f.dim() > p => Some(f.leading(p)),
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("fisher: {e}"));
            None
        }
    };
    if let Some(f) = &fisher {
        if f.dim() < p {
            warnings.push(format!(
                "fisher: the {} family provides a {}x{} matrix; alpha is not covered",
                family.name(),
                f.dim(),
                f.dim()
            ));
        }
    }
    let variances = fisher.as_ref().map(variances);
    let volume = fisher.as_ref().map(volume);
    let ic = match ic_scores(data, &est.params, &family, p) {
        Ok(ic) => Some(ic),
        Err(e) => {
            warnings.push(format!("ic: {e}"));
            None
        }
    };
    if !est.converged {
        warnings.push(format!("not converged after {} iterations", est.iterations));
    }
    FitResult {
        params: est.params,
        fisher,
        variances,
        ic,
        volume,
        mae: None,
        iterations: est.iterations,
        converged: est.converged,
        objective: est.objective,
        warnings,
    }
}

/// Shapes of the three components used to draw artificial samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArtificialShapes {
    /// The fitted α for all components.
    #[default]
    Fitted,
    Fixed {
        shapes: ShapeTriple,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub candidates: Vec<FitConfig>,
    pub replications: usize,
    /// Component sizes of each artificial sample; default `(7, n − 9, 2)`.
    pub sizes: Option<[usize; 3]>,
    pub shapes: ArtificialShapes,
    pub seed: u64,
    pub diagnose: DiagnoseOptions,
}

impl TuneConfig {
    pub fn new(candidates: Vec<FitConfig>, seed: u64) -> Self {
        Self {
            candidates,
            replications: 500,
            sizes: None,
            shapes: ArtificialShapes::Fitted,
            seed,
            diagnose: DiagnoseOptions::default(),
        }
    }

    fn resolve_sizes(&self, n: usize) -> Result<[usize; 3]> {
        let sizes = match self.sizes {
            Some(s) => s,
            None if n >= 10 => [7, n - 9, 2],
            None => {
                return Err(Error::Config(format!(
                    "default artificial sizes (7, n-9, 2) need n >= 10, got {n}"
                )))
            }
        };
        if sizes.iter().sum::<usize>() != n {
            return Err(Error::Config(format!(
                "artificial sizes {sizes:?} must add up to the sample size {n}"
            )));
        }
        Ok(sizes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub family: String,
    pub tuning: Vec<(String, f64)>,
    pub result: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub candidates: Vec<CandidateRecord>,
    pub chosen: usize,
    pub trace: Vec<String>,
    pub replications: usize,
    pub sizes: [usize; 3],
    pub seed: u64,
}

pub(crate) fn describe(cfg: &FitConfig) -> (String, Vec<(String, f64)>) {
    use crate::epd::Objective;
    use crate::estimate::Method;
    match cfg.method {
        Method::Ee(f) => (
            f.name().to_string(),
            f.tuning().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        ),
        Method::Objective(Objective::Log) => ("mle".into(), vec![]),
        Method::Objective(Objective::LogQ { q }) => ("mqle".into(), vec![("q".into(), q)]),
        Method::Objective(Objective::Distorted { beta }) => ("mdle".into(), vec![("beta".into(), beta)]),
    }
}

fn artificial_mae(
    data: &[f64],
    params: &EpdParams,
    cfg: &TuneConfig,
    sizes: [usize; 3],
    candidate: usize,
) -> Result<f64> {
    let shapes = match cfg.shapes {
        ArtificialShapes::Fitted => [params.alpha(); 3],
        ArtificialShapes::Fixed { shapes } => shapes.as_array(),
    };
    let comps = shapes
        .iter()
        .map(|&a| params.with_alpha(a))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(split_seed(cfg.seed, &[candidate as u64, 1, r as u64]));
            let mut x = Vec::with_capacity(data.len());
            for (p, &m) in comps.iter().zip(&sizes) {
                x.extend(sample_with(p, m, &mut rng));
            }
            mae(data, &x)
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Fit every candidate, score it by MAE against artificial samples drawn
/// from its fit, and pick the smallest MAE. Candidates within 1% of the best
/// MAE are separated by smaller volume, then smaller AIC, then grid order.
pub fn tune(data: &[f64], cfg: &TuneConfig) -> Result<SelectionReport> {
    if cfg.candidates.is_empty() {
        return Err(Error::Config("empty tuning grid".into()));
    }
    if cfg.replications == 0 {
        return Err(Error::Config("replications must be >= 1".into()));
    }
    let sizes = cfg.resolve_sizes(data.len())?;
    let records: Vec<CandidateRecord> = cfg
        .candidates
        .par_iter()
        .enumerate()
        .map(|(i, cand)| {
            let (family, tuning) = describe(cand);
            let fit_cfg = cand.clone().with_seed(split_seed(cfg.seed, &[i as u64, 0]));
            let outcome = fit(data, &fit_cfg).and_then(|est| {
                let mut res = diagnose(data, &fit_cfg, &est, &cfg.diagnose);
                res.mae = Some(artificial_mae(data, &est.params, cfg, sizes, i)?);
                Ok(res)
            });
            let (result, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            CandidateRecord {
                index: i,
                family,
                tuning,
                result,
                error,
            }
        })
        .collect();

    let scored: Vec<(usize, f64, f64, f64)> = records
        .iter()
        .filter_map(|r| {
            let res = r.result.as_ref()?;
            let mae = res.mae.filter(|m| m.is_finite())?;
            let vol = res.volume.as_ref().and_then(|v| v.value).unwrap_or(f64::INFINITY);
            let aic = res.ic.map_or(f64::INFINITY, |ic| ic.aic);
            Some((r.index, mae, vol, aic))
        })
        .collect();
    if scored.is_empty() {
        let detail: Vec<String> = records
            .iter()
            .map(|r| format!("#{} {}: {}", r.index, r.family, r.error.as_deref().unwrap_or("no MAE")))
            .collect();
        return Err(Error::Optimizer(format!(
            "no candidate could be fitted ({})",
            detail.join("; ")
        )));
    }
    let best_mae = scored.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let mut trace = vec![format!("minimum MAE {best_mae:.6e}")];
    let near: Vec<&(usize, f64, f64, f64)> = scored.iter().filter(|s| s.1 <= best_mae * 1.01).collect();
    let chosen = if near.len() == 1 {
        trace.push(format!("candidate {} has the unique minimum MAE", near[0].0));
        near[0].0
    } else {
        trace.push(format!(
            "{} candidates within 1% of the minimum MAE: {:?}",
            near.len(),
            near.iter().map(|s| s.0).collect::<Vec<_>>()
        ));
        let pick = near
            .iter()
            .min_by(|a, b| a.2.total_cmp(&b.2).then(a.3.total_cmp(&b.3)).then(a.0.cmp(&b.0)))
            .expect("non-empty");
        trace.push(format!(
            "candidate {} chosen by volume {:e}, then AIC {:.6}",
            pick.0, pick.2, pick.3
        ));
        pick.0
    };
    Ok(SelectionReport {
        candidates: records,
        chosen,
        trace,
        replications: cfg.replications,
        sizes,
        seed: cfg.seed,
    })
}
