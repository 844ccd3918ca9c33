//! Flags that describe one estimator, shared by the command line and the
//! TOML estimator lists.

use clap::{Args, ValueEnum};
use epfit_core::estimate::SearchBounds;
use epfit_core::{FisherMode, FitConfig, Objective, ScoreFamily, ShapeTriple};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Score {
    #[default]
    S,
    Huber,
    Combined,
    CombinedHuber,
    Sq,
    Sd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    /// Estimating equations of the chosen score.
    #[default]
    Ee,
    /// Maximize log f, log_q f or log(beta + f) over (mu, sigma, alpha).
    Objective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundsKind {
    #[default]
    Default,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FisherFlag {
    Closed,
    Quad,
    #[default]
    Auto,
}

impl From<FisherFlag> for FisherMode {
    fn from(f: FisherFlag) -> Self {
        match f {
            FisherFlag::Closed => FisherMode::Closed,
            FisherFlag::Quad => FisherMode::Quadrature,
            FisherFlag::Auto => FisherMode::Auto,
        }
    }
}

fn default_alpha() -> Vec<f64> {
    vec![2.0]
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    /// Score family.
    #[arg(long, value_enum, default_value_t = Score::S, alias = "family")]
    pub score: Score,
    #[arg(long, value_enum, default_value_t = MethodKind::Ee)]
    pub method: MethodKind,
    /// Shape: one value, or three comma-separated values for combined scores.
    #[arg(long, value_delimiter = ',', default_values_t = default_alpha())]
    pub alpha: Vec<f64>,
    /// Left cutoff of combined scores (standardized units).
    #[arg(long)]
    pub k: Option<f64>,
    /// Right cutoff of combined scores (standardized units).
    #[arg(long)]
    pub t: Option<f64>,
    /// Huber cutoff; falls back to --k.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Estimate alpha jointly with (mu, sigma).
    #[arg(long)]
    pub estimate_alpha: bool,
    #[arg(long)]
    pub ga_pop: Option<usize>,
    #[arg(long)]
    pub ga_gens: Option<usize>,
    /// Seed of the genetic search (objective fits).
    #[arg(long)]
    pub ga_seed: Option<u64>,
    /// GA search box: tightened default or the wide literal box.
    #[arg(long, value_enum, default_value_t = BoundsKind::Default)]
    pub bounds: BoundsKind,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Skip the Nelder-Mead refinement after the genetic search.
    #[arg(long)]
    pub no_polish: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            score: Score::S,
            method: MethodKind::Ee,
            alpha: default_alpha(),
            k: None,
            t: None,
            r: None,
            q: None,
            beta: None,
            estimate_alpha: false,
            ga_pop: None,
            ga_gens: None,
            ga_seed: None,
            bounds: BoundsKind::Default,
            max_iter: None,
            tol: None,
            no_polish: false,
        }
    }
}

fn need(v: Option<f64>, flag: &str, score: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --score {score}")))
}

impl ModelSpec {
    fn single_alpha(&self) -> CliResult<f64> {
        match self.alpha.as_slice() {
            [a] => Ok(*a),
            _ => Err(CliError::Usage(format!(
                "--alpha takes one value for this score, got {}",
                self.alpha.len()
            ))),
        }
    }

    fn shapes(&self) -> CliResult<ShapeTriple> {
        let triple = match self.alpha.as_slice() {
            [a] => ShapeTriple::uniform(*a),
            [a, b, c] => ShapeTriple::new(*a, *b, *c),
            _ => {
                return Err(CliError::Usage(format!(
                    "--alpha takes one or three values for combined scores, got {}",
                    self.alpha.len()
                )))
            }
        };
        Ok(triple?)
    }

    /// Score family named by the flags.
    pub fn family(&self) -> CliResult<ScoreFamily> {
        Ok(match self.score {
            Score::S => ScoreFamily::Plain,
            Score::Huber => ScoreFamily::Huber {
                r: need(self.r.or(self.k), "r", "huber")?,
            },
            Score::Combined => ScoreFamily::CombinedPlain {
                k: need(self.k, "k", "combined")?,
                t: need(self.t, "t", "combined")?,
                shapes: self.shapes()?,
            },
            Score::CombinedHuber => ScoreFamily::CombinedHuber {
                k: need(self.k, "k", "combined-huber")?,
                t: need(self.t, "t", "combined-huber")?,
                shapes: self.shapes()?,
            },
            Score::Sq => ScoreFamily::QWeighted {
                q: need(self.q, "q", "sq")?,
            },
            Score::Sd => ScoreFamily::DistortedWeighted {
                beta: need(self.beta, "beta", "sd")?,
            },
        })
    }

    /// The model shape: alpha for single-shape scores, the centre shape otherwise.
    pub fn model_alpha(&self) -> CliResult<f64> {
        match self.score {
            Score::Combined | Score::CombinedHuber => Ok(self.shapes()?.alpha2),
            Score::Huber => Ok(2.0),
            _ => self.single_alpha(),
        }
    }

    pub fn to_fit_config(&self) -> CliResult<FitConfig> {
        let mut cfg = match self.method {
            MethodKind::Ee => {
                let family = self.family()?;
                let mut cfg = FitConfig::ee(family, self.model_alpha()?);
                cfg.estimate_alpha = self.estimate_alpha;
                cfg
            }
            MethodKind::Objective => {
                let objective = match self.score {
                    Score::S => Objective::Log,
                    Score::Sq => Objective::LogQ {
                        q: need(self.q, "q", "sq")?,
                    },
                    Score::Sd => Objective::Distorted {
                        beta: need(self.beta, "beta", "sd")?,
                    },
                    other => {
                        return Err(CliError::Usage(format!(
                            "--method objective supports --score s, sq or sd, not {}",
                            other
                                .to_possible_value()
                                .map(|v| v.get_name().to_string())
                                .unwrap_or_default()
                        )))
                    }
                };
                let mut cfg = FitConfig::objective(objective);
                cfg.alpha = self.single_alpha()?;
                cfg
            }
        };
        if let Some(p) = self.ga_pop {
            cfg.ga.population = p;
        }
        if let Some(g) = self.ga_gens {
            cfg.ga.generations = g;
        }
        if let Some(s) = self.ga_seed {
            cfg.ga.seed = s;
        }
        if let Some(m) = self.max_iter {
            cfg.iteration.max_iter = m;
        }
        if let Some(t) = self.tol {
            cfg.iteration.tol = t;
        }
        cfg.bounds = match self.bounds {
            BoundsKind::Default => SearchBounds::Default,
            BoundsKind::Literal => SearchBounds::Literal,
        };
        cfg.polish = !self.no_polish;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Objective fits run a seeded genetic search.
    pub fn is_randomized(&self) -> bool {
        self.method == MethodKind::Objective
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use epfit_core::estimate::Method;

    #[test]
    fn sd_flags_build_distorted_family() {
        let spec = ModelSpec {
            score: Score::Sd,
            beta: Some(0.01),
            alpha: vec![2.1],
            ..ModelSpec::default()
        };
        let cfg = spec.to_fit_config().unwrap();
        assert_eq!(cfg.method, Method::Ee(ScoreFamily::DistortedWeighted { beta: 0.01 }));
        assert_eq!(cfg.alpha, 2.1);
    }

    #[test]
    fn combined_takes_three_shapes() {
        let spec = ModelSpec {
            score: Score::Combined,
            alpha: vec![1.6, 2.0, 1.8],
            k: Some(1.0),
            t: Some(1.5),
            ..ModelSpec::default()
        };
        match spec.family().unwrap() {
            ScoreFamily::CombinedPlain { shapes, .. } => assert_eq!(shapes.as_array(), [1.6, 2.0, 1.8]),
            f => panic!("{f:?}"),
        }
    }

    #[test]
    fn missing_tuning_constant_is_a_usage_error() {
        let spec = ModelSpec {
            score: Score::Sq,
            ..ModelSpec::default()
        };
        assert_eq!(spec.to_fit_config().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn objective_rejects_huber() {
        let spec = ModelSpec {
            score: Score::Huber,
            r: Some(1.0),
            method: MethodKind::Objective,
            ..ModelSpec::default()
        };
        assert!(matches!(spec.to_fit_config(), Err(CliError::Usage(_))));
    }

    #[test]
    fn huber_cutoff_falls_back_to_k() {
        let spec = ModelSpec {
            score: Score::Huber,
            k: Some(1.3),
            ..ModelSpec::default()
        };
        assert_eq!(spec.family().unwrap(), ScoreFamily::Huber { r: 1.3 });
    }

    #[test]
    fn toml_entry_parses_with_defaults() {
        let spec: ModelSpec = toml::from_str("score = \"sq\"\nq = 0.8\nmethod = \"objective\"\n").unwrap();
        assert_eq!(spec.alpha, vec![2.0]);
        assert!(matches!(spec.to_fit_config().unwrap().method, Method::Objective(_)));
        assert!(toml::from_str::<ModelSpec>("scroe = \"s\"").is_err());
    }
}
