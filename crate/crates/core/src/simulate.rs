//! Monte Carlo experiments on three-component EP mixtures.
//!
//! Component 2 is the model; components 1 and 3 contaminate it. Each
//! estimator is run on `m` independent samples and summarized by its mean,
//! the spread about that mean (Var-hat) and the spread about the truth (MSE-hat).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epd::{sample_with, EpdParams, Objective};
use crate::error::{Error, Result};
use crate::estimate::{fit, FitConfig, Method};
use crate::rng::{split_seed, stream};
use crate::scores::{ScoreFamily, ShapeTriple};
use crate::select::describe;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub alpha: f64,
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

impl Component {
    pub fn params(&self) -> Result<EpdParams> {
        EpdParams::new(self.mu, self.sigma, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationDesign {
    pub components: [Component; 3],
}

/// Component parameters `(α, μ, σ)` of the four reference designs.
const DESIGNS: [[(f64, f64, f64); 3]; 4] = [
    [(1.1, 5.0, 6.0), (2.0, 0.0, 1.0), (1.2, 4.0, 2.0)],
    [(1.1, 2.0, 3.0), (3.0, 0.0, 1.0), (1.2, 3.0, 5.0)],
    [(1.2, 3.0, 4.0), (3.0, 0.0, 1.0), (0.8, 3.0, 4.0)],
    [(0.7, 4.0, 2.0), (1.3, 0.0, 1.0), (0.9, 2.0, 3.0)],
];

/// Model sizes of the reference designs; each adds 5 + 5 contaminating draws.
pub const REFERENCE_SIZES: [usize; 3] = [100, 200, 400];

impl SimulationDesign {
    pub fn new(components: [Component; 3]) -> Result<Self> {
        let d = Self { components };
        d.validate()?;
        Ok(d)
    }

    /// Reference design `id` (1 to 4) with `n2` model draws and 5 draws from each contaminant.
    pub fn preset(id: usize, n2: usize) -> Result<Self> {
        let spec = DESIGNS
            .get(id.wrapping_sub(1))
            .ok_or_else(|| Error::Config(format!("unknown design {id}; expected 1 to 4")))?;
        let sizes = [5, n2, 5];
        let mut comps = [Component {
            alpha: 1.0,
            mu: 0.0,
            sigma: 1.0,
            n: 0,
        }; 3];
        for (c, (&(alpha, mu, sigma), &n)) in comps.iter_mut().zip(spec.iter().zip(&sizes)) {
            *c = Component { alpha, mu, sigma, n };
        }
        Self::new(comps)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            c.params()?;
        }
        if self.total() == 0 {
            return Err(Error::Config("design has no observations".into()));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.components.iter().map(|c| c.n).sum()
    }

    /// Parameters of the model component.
    pub fn truth(&self) -> Result<EpdParams> {
        self.components[1].params()
    }

    pub fn shapes(&self) -> Result<ShapeTriple> {
        let [a, b, c] = self.components.map(|c| c.alpha);
        ShapeTriple::new(a, b, c)
    }
}

/// Draw the three components in order from one stream.
pub fn generate(design: &SimulationDesign, seed: u64) -> Result<Vec<f64>> {
    design.validate()?;
    let mut rng = stream(seed);
    let mut out = Vec::with_capacity(design.total());
    for c in &design.components {
        out.extend(sample_with(&c.params()?, c.n, &mut rng));
    }
    Ok(out)
}

/// Something that maps a sample to parameter estimates.
pub trait Estimator: Sync {
    fn label(&self) -> String;
    /// Tuning constants as text, e.g. `beta=0.003`.
    fn tc(&self) -> String;
    /// Estimated parameters, a prefix of `(mu, sigma, alpha)`.
    fn parameters(&self) -> usize;
    fn estimate(&self, data: &[f64], seed: u64) -> Result<Vec<f64>>;
}

impl Estimator for FitConfig {
    fn label(&self) -> String {
        describe(self).0
    }

    fn tc(&self) -> String {
        describe(self)
            .1
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    fn parameters(&self) -> usize {
        if self.estimates_alpha() {
            3
        } else {
            2
        }
    }

    fn estimate(&self, data: &[f64], seed: u64) -> Result<Vec<f64>> {
        let est = fit(data, &self.clone().with_seed(seed))?;
        let p = est.params;
        Ok([p.mu(), p.sigma(), p.alpha()][..self.parameters()].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub estimator: String,
    pub tc: String,
    pub parameter: String,
    pub mean: f64,
    pub var_hat: f64,
    pub mse_hat: f64,
    pub failures: usize,
    /// More than 5% of replications failed.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub design: SimulationDesign,
    pub replications: usize,
    pub seed: u64,
    pub rows: Vec<Row>,
}

impl SimulationReport {
    pub fn row(&self, estimator: &str, parameter: &str) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.parameter == parameter)
    }
}

const PARAMETER_NAMES: [&str; 3] = ["mu", "sigma", "alpha"];

/// Recursive halving keeps the rounding error at O(log n).
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Run `m` replications of every estimator. Replication `r` of estimator `e`
/// uses data seed `split_seed(seed, [r, e])`; failed fits are excluded.
pub fn run<E: Estimator>(design: &SimulationDesign, estimators: &[E], m: usize, seed: u64) -> Result<SimulationReport> {
    if m < 2 {
        return Err(Error::Config("at least 2 replications are required".into()));
    }
    design.validate()?;
    let truth = design.truth()?;
    let truth = [truth.mu(), truth.sigma(), truth.alpha()];
    let mut rows = Vec::new();
    for (e, est) in estimators.iter().enumerate() {
        let p = est.parameters();
        let results: Vec<Option<Vec<f64>>> = (0..m)
            .into_par_iter()
            .map(|r| {
                let data_seed = split_seed(seed, &[r as u64, e as u64]);
                let data = generate(design, data_seed).ok()?;
                est.estimate(&data, split_seed(data_seed, &[1]))
                    .ok()
                    .filter(|v| v.len() == p && v.iter().all(|x| x.is_finite()))
            })
            .collect();
        let ok: Vec<&Vec<f64>> = results.iter().flatten().collect();
        let failures = m - ok.len();
        let flagged = failures as f64 > 0.05 * m as f64;
        for (j, &name) in PARAMETER_NAMES.iter().enumerate().take(p) {
            let vals: Vec<f64> = ok.iter().map(|v| v[j]).collect();
            let k = vals.len() as f64;
            let mean = pairwise_sum(&vals) / k;
            let dev: Vec<f64> = vals.iter().map(|x| (x - mean) * (x - mean)).collect();
            let err: Vec<f64> = vals.iter().map(|x| (x - truth[j]) * (x - truth[j])).collect();
            rows.push(Row {
                estimator: est.label(),
                tc: est.tc(),
                parameter: name.to_string(),
                mean,
                var_hat: pairwise_sum(&dev) / k,
                mse_hat: pairwise_sum(&err) / k,
                failures,
                flagged,
            });
        }
    }
    Ok(SimulationReport {
        design: *design,
        replications: m,
        seed,
        rows,
    })
}

/// Tuning constants reported for each design and model size (100, 200, 400).
struct ReferenceTc {
    huber: [f64; 3],
    combined_huber: [(f64, f64); 3],
    combined: [(f64, f64); 3],
    sq: [f64; 3],
    sd: [f64; 3],
    mqle: [f64; 3],
    mdle: [f64; 3],
}

const REFERENCE_TC: [ReferenceTc; 4] = [
    ReferenceTc {
        huber: [1.38, 2.47, 5.01],
        combined_huber: [(0.79, 0.78), (1.02, 1.01), (1.25, 1.24)],
        combined: [(0.37, 0.36), (1.04, 1.03), (1.47, 1.46)],
        sq: [0.84, 0.875, 0.905],
        sd: [3e-3, 1e-3, 0.8e-3],
        mqle: [0.625, 0.625, 0.6],
        mdle: [2.5e-3, 1.7e-3, 1.8e-3],
    },
    ReferenceTc {
        huber: [1.72, 3.31, 7.85],
        combined_huber: [(0.84, 0.84), (1.05, 1.05), (1.22, 1.22)],
        combined: [(0.57, 0.58), (1.07, 1.09), (1.28, 1.29)],
        sq: [0.86, 0.9, 0.93],
        sd: [7e-3, 4e-3, 1.5e-3],
        mqle: [0.55, 0.52, 0.6],
        mdle: [9e-3, 9.5e-3, 9e-3],
    },
    ReferenceTc {
        huber: [1.34, 2.53, 5.21],
        combined_huber: [(1.13, 1.12), (1.29, 1.28), (1.40, 1.38)],
        combined: [(1.2, 1.19), (1.37, 1.35), (1.48, 1.47)],
        sq: [0.85, 0.89, 0.92],
        sd: [4e-3, 2e-3, 1e-3],
        mqle: [0.65, 0.65, 0.65],
        mdle: [7e-3, 7e-3, 8e-3],
    },
    ReferenceTc {
        huber: [1.07, 1.38, 1.73],
        combined_huber: [(1.21, 1.22), (1.47, 1.48), (1.74, 1.76)],
        combined: [(1.76, 1.77), (2.34, 2.36), (2.71, 2.73)],
        sq: [0.815, 0.875, 0.918],
        sd: [9e-3, 4e-3, 2e-3],
        mqle: [0.525, 0.565, 0.605],
        mdle: [6e-3, 3e-3, 1.2e-3],
    },
];

/// The seven reference estimators for design `id` at model size `n2`:
/// Huber, combined-Huber, combined, S_q and S^D with the design's shapes held
/// fixed, then MqLE and MDLE over (μ, σ, α).
pub fn reference_estimators(id: usize, n2: usize) -> Result<Vec<FitConfig>> {
    let design = SimulationDesign::preset(id, n2)?;
    let col = REFERENCE_SIZES.iter().position(|&s| s == n2).ok_or_else(|| {
        Error::Config(format!(
            "reference constants exist for n2 in {REFERENCE_SIZES:?}, got {n2}"
        ))
    })?;
    let tc = &REFERENCE_TC[id - 1];
    let shapes = design.shapes()?;
    let alpha = shapes.alpha2;
    let (kh, th) = tc.combined_huber[col];
    let (kc, tcc) = tc.combined[col];
    Ok(vec![
        FitConfig::ee(ScoreFamily::Huber { r: tc.huber[col] }, alpha),
        FitConfig::ee(ScoreFamily::CombinedHuber { k: kh, t: th, shapes }, alpha),
        FitConfig::ee(ScoreFamily::CombinedPlain { k: kc, t: tcc, shapes }, alpha),
        FitConfig::ee(ScoreFamily::QWeighted { q: tc.sq[col] }, alpha),
        FitConfig::ee(ScoreFamily::DistortedWeighted { beta: tc.sd[col] }, alpha),
        FitConfig::objective(Objective::LogQ { q: tc.mqle[col] }),
        FitConfig::objective(Objective::Distorted { beta: tc.mdle[col] }),
    ])
}

/// Whether a config is an objective fit (used to pick display names).
pub fn is_objective(cfg: &FitConfig) -> bool {
    matches!(cfg.method, Method::Objective(_))
}
