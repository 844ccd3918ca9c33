//! Gamma-family special functions and adaptive Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Gamma function for `z > 0`.
pub fn gamma_fn(z: f64) -> Result<f64> {
    ensure_positive("z", z)?;
    Ok(gamma_real(z))
}

/// Natural log of the gamma function for `z > 0`.
pub fn ln_gamma(z: f64) -> Result<f64> {
    ensure_positive("z", z)?;
    Ok(ln_gamma_real(z))
}

/// Gamma on the whole real line except the poles, via reflection.
pub(crate) fn gamma_real(z: f64) -> f64 {
    if z < 0.5 {
        return PI / ((PI * z).sin() * gamma_real(1.0 - z));
    }
    if z > 140.0 {
        return ln_gamma_real(z).exp();
    }
    let z = z - 1.0;
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
}

/// log|Γ(z)|.
pub(crate) fn ln_gamma_real(z: f64) -> f64 {
    if z < 0.5 {
        return (PI / (PI * z).sin().abs()).ln() - ln_gamma_real(1.0 - z);
    }
    let z = z - 1.0;
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

fn lanczos_sum(z: f64) -> f64 {
    LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (z + (i + 1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncompleteKind {
    Lower,
    Upper,
}

/// Unregularized incomplete gamma: `∫_0^a` (lower) or `∫_a^∞` (upper) of `t^{z-1} e^{-t}`.
pub fn incomplete_gamma(z: f64, a: f64, kind: IncompleteKind) -> Result<f64> {
    ensure_positive("z", z)?;
    if !(a >= 0.0) {
        return Err(Error::Domain {
            name: "a",
            value: a,
            expected: ">= 0",
        });
    }
    let full = gamma_real(z);
    if a == 0.0 {
        return Ok(match kind {
            IncompleteKind::Lower => 0.0,
            IncompleteKind::Upper => full,
        });
    }
    if a.is_infinite() {
        return Ok(match kind {
            IncompleteKind::Lower => full,
            IncompleteKind::Upper => 0.0,
        });
    }
    let prefactor = (z * a.ln() - a).exp();
    let (lower, upper) = if a < z + 1.0 {
        let lower = prefactor * lower_series(z, a);
        (lower, full - lower)
    } else {
        let upper = prefactor * upper_fraction(z, a);
        (full - upper, upper)
    };
    Ok(match kind {
        IncompleteKind::Lower => lower,
        IncompleteKind::Upper => upper,
    })
}

/// Σ a^n / (z (z+1) ... (z+n)).
fn lower_series(z: f64, a: f64) -> f64 {
    let mut term = 1.0 / z;
    let mut sum = term;
    let mut denom = z;
    for _ in 0..1000 {
        denom += 1.0;
        term *= a / denom;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum
}

/// Modified Lentz evaluation of the continued fraction for Γ(z, a) e^{a} a^{-z}.
fn upper_fraction(z: f64, a: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = a + 1.0 - z;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - z);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Digamma ψ(z) for `z > 0`.
pub fn digamma(z: f64) -> Result<f64> {
    ensure_positive("z", z)?;
    Ok(digamma_pos(z))
}

/// Trigamma ψ'(z) for `z > 0`.
pub fn trigamma(z: f64) -> Result<f64> {
    ensure_positive("z", z)?;
    Ok(trigamma_pos(z))
}

pub(crate) fn digamma_pos(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let tail =
        inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    acc + x.ln() - 0.5 / x - tail
}

pub(crate) fn trigamma_pos(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    acc + series
}

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2000;

/// Integration domain and tolerances.
///
/// Infinite endpoints are mapped onto a finite interval: `x = a + t/(1-t)` for
/// `[a, ∞)`, `x = b - t/(1-t)` for `(-∞, b]`, and `x = t/(1-t²)` for the whole line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub lower: f64,
    pub upper: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            abs_tol: DEFAULT_ABS_TOL,
            rel_tol: DEFAULT_REL_TOL,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
        }
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_subdivisions(mut self, max_subdivisions: usize) -> Self {
        self.max_subdivisions = max_subdivisions;
        self
    }

    /// Same tolerances on a different domain.
    pub fn on(self, lower: f64, upper: f64) -> Self {
        Self { lower, upper, ..self }
    }

    fn validate(&self) -> Result<()> {
        ensure_positive("abs_tol", self.abs_tol)?;
        ensure_positive("rel_tol", self.rel_tol)?;
        if self.max_subdivisions == 0 {
            return Err(Error::Config("max_subdivisions must be >= 1".into()));
        }
        if self.lower.is_nan() || self.upper.is_nan() {
            return Err(Error::Domain {
                name: "interval",
                value: f64::NAN,
                expected: "non-NaN endpoints",
            });
        }
        Ok(())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

/// Adaptive 21-point Gauss–Kronrod integration.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let (a, b) = (spec.lower, spec.upper);
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
        });
    }
    if a > b {
        return integrate(f, &spec.on(b, a)).map(|r| Integral { value: -r.value, ..r });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, spec),
        (true, false) => adaptive(
            &|t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            },
            0.0,
            1.0,
            spec,
        ),
        (false, true) => adaptive(
            &|t: f64| {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            },
            0.0,
            1.0,
            spec,
        ),
        (false, false) => adaptive(
            &|t: f64| {
                let s = 1.0 - t * t;
                f(t / s) * (1.0 + t * t) / (s * s)
            },
            -1.0,
            1.0,
            spec,
        ),
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn adaptive<F>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    let mut heap = BinaryHeap::new();
    let first = qk21(f, a, b);
    heap.push(first);
    // Segments too narrow to split further keep their error but leave the heap.
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut subdivisions = 1;

    loop {
        let (value, error) = heap.iter().fold((frozen_value, frozen_error), |acc, s| {
            (acc.0 + s.value, acc.1 + s.error)
        });
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature {
                estimate: value,
                bound: error,
                subdivisions,
            });
        }
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                abs_error: error,
                subdivisions,
            });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => {
                return Err(Error::Quadrature {
                    estimate: value,
                    bound: error,
                    subdivisions,
                })
            }
        };
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                estimate: value,
                bound: error,
                subdivisions,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-15 * mid.abs().max(1e-300) {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        heap.push(qk21(f, worst.a, mid));
        heap.push(qk21(f, mid, worst.b));
        subdivisions += 1;
    }
}

const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

fn qk21<F>(f: &F, a: f64, b: f64) -> Segment
where
    F: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = 0.0;
    let mut kronrod = fc * WGK21[10];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let x = half * XGK21[j];
        let (f1, f2) = (f(center - x), f(center + x));
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK21[j] * (f1 + f2);
        res_abs += WGK21[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG10[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut res_asc = WGK21[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK21[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let width = half.abs();
    let value = kronrod * half;
    res_abs *= width;
    res_asc *= width;
    let raw = ((kronrod - gauss) * half).abs();
    Segment {
        a,
        b,
        value,
        error: rescale_error(raw, res_abs, res_asc),
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err;
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}
