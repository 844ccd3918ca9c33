//! Score functions, estimating-equation weights and ψ-vectors.

use serde::{Deserialize, Serialize};

use crate::epd::{EpdParams, Objective};
use crate::error::{ensure_positive, Error, Result};
use crate::special_fn::digamma_pos;

/// Shapes of the left tail, centre and right tail of a combined score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeTriple {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl ShapeTriple {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self> {
        let s = Self { alpha1, alpha2, alpha3 };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("alpha1", self.alpha1)?;
        ensure_positive("alpha2", self.alpha2)?;
        ensure_positive("alpha3", self.alpha3)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha1, self.alpha2, self.alpha3]
    }
}

/// Which piece of a combined score a standardized residual falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Left,
    Centre,
    Right,
}

/// `y < -k` is left, `-k <= y <= t` centre, `y > t` right.
pub fn branch(y: f64, k: f64, t: f64) -> Branch {
    if y < -k {
        Branch::Left
    } else if y > t {
        Branch::Right
    } else {
        Branch::Centre
    }
}

/// How the huberized multipliers on the tails of a combined score treat the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// Multipliers scale the magnitude; the score keeps the sign of `y`.
    Magnitude,
    /// The left tail is `-k·α₁|y|^{α₁-1}·sign(y)`, positive for `y < -k`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScoreFamily {
    Plain,
    Huber { r: f64 },
    CombinedPlain { k: f64, t: f64, shapes: ShapeTriple },
    CombinedHuber { k: f64, t: f64, shapes: ShapeTriple },
    QWeighted { q: f64 },
    DistortedWeighted { beta: f64 },
}

impl ScoreFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScoreFamily::Plain => Ok(()),
            ScoreFamily::Huber { r } => ensure_positive("r", r),
            ScoreFamily::CombinedPlain { k, t, shapes } | ScoreFamily::CombinedHuber { k, t, shapes } => {
                ensure_positive("k", k)?;
                ensure_positive("t", t)?;
                shapes.validate()
            }
            ScoreFamily::QWeighted { q } => {
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
            ScoreFamily::DistortedWeighted { beta } => Objective::Distorted { beta }.validate(),
        }
    }

    /// Short name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            ScoreFamily::Plain => "s",
            ScoreFamily::Huber { .. } => "huber",
            ScoreFamily::CombinedPlain { .. } => "combined",
            ScoreFamily::CombinedHuber { .. } => "combined-huber",
            ScoreFamily::QWeighted { .. } => "sq",
            ScoreFamily::DistortedWeighted { .. } => "sd",
        }
    }

    /// Tuning constants as `name=value` pairs.
    pub fn tuning(&self) -> Vec<(&'static str, f64)> {
        match *self {
            ScoreFamily::Plain => vec![],
            ScoreFamily::Huber { r } => vec![("r", r)],
            ScoreFamily::CombinedPlain { k, t, .. } | ScoreFamily::CombinedHuber { k, t, .. } => {
                vec![("k", k), ("t", t)]
            }
            ScoreFamily::QWeighted { q } => vec![("q", q)],
            ScoreFamily::DistortedWeighted { beta } => vec![("beta", beta)],
        }
    }

    /// Redescending weight applied on top of the score.
    pub fn weighting(&self) -> Objective {
        match *self {
            ScoreFamily::QWeighted { q } => Objective::LogQ { q },
            ScoreFamily::DistortedWeighted { beta } => Objective::Distorted { beta },
            _ => Objective::Log,
        }
    }

    /// Shapes fixed by the family itself, if any.
    ///
    /// The Huber score is the combined huberized score with shapes (1, 2, 1) and `k = t = r`.
    pub fn fixed_shapes(&self) -> Option<ShapeTriple> {
        match *self {
            ScoreFamily::Huber { .. } => Some(ShapeTriple {
                alpha1: 1.0,
                alpha2: 2.0,
                alpha3: 1.0,
            }),
            ScoreFamily::CombinedPlain { shapes, .. } | ScoreFamily::CombinedHuber { shapes, .. } => Some(shapes),
            _ => None,
        }
    }

    /// The density shape implied by the family: the centre shape when fixed, else `alpha`.
    pub fn model_alpha(&self, alpha: f64) -> f64 {
        self.fixed_shapes().map_or(alpha, |s| s.alpha2)
    }

    /// Whether the σ equation divides by Σw (weighted families) rather than n.
    pub fn divides_by_weight_sum(&self) -> bool {
        matches!(
            self,
            ScoreFamily::QWeighted { .. } | ScoreFamily::DistortedWeighted { .. }
        )
    }

    /// `S(y)/y ≥ 0` before any redescending weight; `alpha` is used by the
    /// plain, q-weighted and distorted families.
    ///
    /// The Huber family uses `dρ/dy = 2·S^H(y)` so that it coincides with the
    /// plain score at α = 2 inside `[-r, r]`. Residuals at exactly zero with a
    /// singular weight (shape < 2) contribute nothing.
    pub fn ee_weight(&self, y: f64, alpha: f64) -> f64 {
        match *self {
            ScoreFamily::Plain | ScoreFamily::QWeighted { .. } | ScoreFamily::DistortedWeighted { .. } => {
                power_weight(y, alpha)
            }
            ScoreFamily::Huber { r } => {
                let a = y.abs();
                if a <= r {
                    2.0
                } else {
                    2.0 * r / a
                }
            }
            ScoreFamily::CombinedPlain { k, t, shapes } => match branch(y, k, t) {
                Branch::Left => power_weight(y, shapes.alpha1),
                Branch::Centre => power_weight(y, shapes.alpha2),
                Branch::Right => power_weight(y, shapes.alpha3),
            },
            ScoreFamily::CombinedHuber { k, t, shapes } => match branch(y, k, t) {
                Branch::Left => k * power_weight(y, shapes.alpha1),
                Branch::Centre => power_weight(y, shapes.alpha2),
                Branch::Right => t * power_weight(y, shapes.alpha3),
            },
        }
    }

    /// The scalar score `w·S(y)` at a point, with `log_f` feeding the weight.
    pub fn score(&self, y: f64, alpha: f64, log_f: f64) -> f64 {
        let w = self.weighting().weight(log_f);
        let s = self.ee_weight(y, alpha) * y;
        if w == 0.0 {
            0.0
        } else {
            w * s
        }
    }
}

/// `α|y|^{α-2}`, with the residual-zero convention.
fn power_weight(y: f64, alpha: f64) -> f64 {
    let a = y.abs();
    if a == 0.0 {
        if alpha == 2.0 {
            2.0
        } else {
            0.0
        }
    } else {
        alpha * a.powf(alpha - 2.0)
    }
}

/// `α|y|^{α-1}·sign(y)`; zero at `y = 0`.
pub fn s_plain(y: f64, alpha: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        alpha * y.abs().powf(alpha - 1.0) * y.signum()
    }
}

/// Huber score: `clamp(y, -r, r)`.
pub fn s_huber(y: f64, r: f64) -> f64 {
    y.clamp(-r, r)
}

/// Piecewise combined score with the magnitude sign convention.
pub fn s_combined(y: f64, shapes: &ShapeTriple, k: f64, t: f64, huberized: bool) -> f64 {
    s_combined_with(y, shapes, k, t, huberized, SignConvention::Magnitude)
}

pub fn s_combined_with(
    y: f64,
    shapes: &ShapeTriple,
    k: f64,
    t: f64,
    huberized: bool,
    convention: SignConvention,
) -> f64 {
    match branch(y, k, t) {
        Branch::Left => {
            let s = s_plain(y, shapes.alpha1);
            match (huberized, convention) {
                (false, _) => s,
                (true, SignConvention::Magnitude) => k * s,
                (true, SignConvention::Literal) => -k * s,
            }
        }
        Branch::Centre => s_plain(y, shapes.alpha2),
        Branch::Right => {
            let s = s_plain(y, shapes.alpha3);
            if huberized {
                t * s
            } else {
                s
            }
        }
    }
}

pub fn weight_q(x: f64, p: &EpdParams, q: f64) -> f64 {
    Objective::LogQ { q }.weight(crate::epd::log_pdf(x, p))
}

pub fn weight_distorted(x: f64, p: &EpdParams, beta: f64) -> f64 {
    Objective::Distorted { beta }.weight(crate::epd::log_pdf(x, p))
}

/// Partial derivatives of an objective at one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psi {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl Psi {
    pub fn as_array(&self) -> [f64; 3] {
        [self.mu, self.sigma, self.alpha]
    }
}

/// Derivatives of `log f`, `log_q f` or `log(β + f)` in (μ, σ, α) at `x`.
///
/// Each is the weight `w` times the derivative of `log f`. At `x = μ` the
/// terms `|y|^{α-1}` and `|y|^α ln|y|` take their limits (zero for the
/// latter; the μ component is set to zero when α < 1). A zero weight yields
/// zero components.
pub fn psi_vector(x: f64, p: &EpdParams, mode: Objective) -> Result<Psi> {
    mode.validate()?;
    let d = p.density();
    let w = mode.weight(d.log_pdf(x));
    Ok(psi_with_weight(p.standardize(x), p.sigma(), p.alpha(), w))
}

pub(crate) fn psi_with_weight(y: f64, sigma: f64, alpha: f64, w: f64) -> Psi {
    if w == 0.0 {
        return Psi {
            mu: 0.0,
            sigma: 0.0,
            alpha: 0.0,
        };
    }
    let a = y.abs();
    let (ya, ylog) = if a == 0.0 {
        (0.0, 0.0)
    } else {
        let ya = a.powf(alpha);
        (ya, ya * a.ln())
    };
    Psi {
        mu: w * s_plain(y, alpha) / sigma,
        sigma: w * (alpha * ya - 1.0) / sigma,
        alpha: w * (1.0 / alpha + digamma_pos(1.0 / alpha) / (alpha * alpha) - ylog),
    }
}
