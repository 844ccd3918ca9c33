//! Bounded derivative-free maximization: a real-coded genetic algorithm and a
//! Nelder–Mead polish.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Standard deviation of a Gaussian mutation as a fraction of the box width.
    pub mutation_scale: f64,
    pub elitism: usize,
    pub seed: u64,
    pub bounds: Vec<(f64, f64)>,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 200,
            crossover_rate: 0.8,
            mutation_rate: 0.1,
            mutation_scale: 0.1,
            elitism: 2,
            seed: 0,
            bounds: Vec::new(),
        }
    }
}

impl GaConfig {
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("GA {m}")));
        if self.population < 4 {
            return bad("population must be >= 4");
        }
        if self.generations == 0 {
            return bad("generations must be >= 1");
        }
        if self.elitism >= self.population {
            return bad("elitism must be smaller than the population");
        }
        for (name, r) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.mutation_scale >= 0.0 && self.mutation_scale.is_finite()) {
            return bad("mutation_scale must be finite and >= 0");
        }
        if self.bounds.is_empty() {
            return bad("bounds are empty");
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(&format!("bound {i} = ({lo}, {hi}) is not a finite interval"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Best value after initialization (index 0) and after each generation.
    pub history: Vec<f64>,
}

fn fitness<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

pub fn maximize<F>(f: F, cfg: &GaConfig) -> Result<GaOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    maximize_seeded(f, cfg, &[])
}

/// GA with extra starting individuals (clamped into the box) replacing
/// uniform draws at the front of the initial population.
pub fn maximize_seeded<F>(f: F, cfg: &GaConfig, seeds: &[Vec<f64>]) -> Result<GaOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    let dim = cfg.bounds.len();
    let mut rng = rng::stream(cfg.seed);

    let mut pop: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| cfg.bounds.iter().map(|&(lo, hi)| uniform(&mut rng, lo, hi)).collect())
        .collect();
    for (slot, s) in pop.iter_mut().zip(seeds) {
        if s.len() != dim {
            return Err(Error::Config(format!(
                "seed individual has {} coordinates, expected {dim}",
                s.len()
            )));
        }
        *slot = clamp_point(s, &cfg.bounds);
    }
    let mut fit: Vec<f64> = pop.iter().map(|x| fitness(&f, x)).collect();
    if fit.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::Optimizer(
            "every individual of the initial population is infeasible".into(),
        ));
    }

    let mut history = Vec::with_capacity(cfg.generations + 1);
    history.push(best_of(&fit).1);

    for g in 0..cfg.generations {
        let order = ranked(&fit);
        let shrink = (1.0 - g as f64 / cfg.generations as f64).max(0.01);
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
        let mut next_fit: Vec<f64> = Vec::with_capacity(cfg.population);
        for &i in order.iter().take(cfg.elitism) {
            next.push(pop[i].clone());
            next_fit.push(fit[i]);
        }
        while next.len() < cfg.population {
            let a = tournament(&mut rng, &fit);
            let b = tournament(&mut rng, &fit);
            let mut child = pop[a].clone();
            if rng.random::<f64>() < cfg.crossover_rate && dim > 1 {
                let cut = rng.random_range(1..dim);
                child[cut..].copy_from_slice(&pop[b][cut..]);
            }
            for (j, &(lo, hi)) in cfg.bounds.iter().enumerate() {
                if rng.random::<f64>() < cfg.mutation_rate {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    child[j] = (child[j] + z * cfg.mutation_scale * (hi - lo) * shrink).clamp(lo, hi);
                }
            }
            next_fit.push(fitness(&f, &child));
            next.push(child);
        }
        pop = next;
        fit = next_fit;
        history.push(best_of(&fit).1);
    }

    let (i, best_value) = best_of(&fit);
    Ok(GaOutcome {
        best_point: pop[i].clone(),
        best_value,
        history,
    })
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * rng.random::<f64>()
    }
}

fn clamp_point(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect()
}

fn best_of(fit: &[f64]) -> (usize, f64) {
    fit.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
    )
}

/// Indices sorted by decreasing fitness; ties keep population order.
fn ranked(fit: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fit.len()).collect();
    order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]));
    order
}

fn tournament<R: Rng>(rng: &mut R, fit: &[f64]) -> usize {
    let a = rng.random_range(0..fit.len());
    let b = rng.random_range(0..fit.len());
    if fit[b] > fit[a] {
        b
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMead {
    pub max_evaluations: usize,
    /// Relative simplex-size tolerance.
    pub x_tol: f64,
    /// Relative spread tolerance on function values.
    pub f_tol: f64,
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evaluations: 4000,
            x_tol: 1e-10,
            f_tol: 1e-13,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolishOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Bounded Nelder–Mead maximization from `start` with default settings.
pub fn polish<F>(f: F, start: &[f64], bounds: &[(f64, f64)]) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let out = polish_with(f, start, bounds, &NelderMead::default());
    (out.point, out.value)
}

/// Never returns a point with a smaller value than `start`.
pub fn polish_with<F>(f: F, start: &[f64], bounds: &[(f64, f64)], opts: &NelderMead) -> PolishOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let start = clamp_point(start, bounds);
    let start_value = fitness(&f, &start);
    let mut best = (start.clone(), start_value);
    let mut evaluations = 1;
    let mut converged = false;
    for _ in 0..=opts.restarts {
        let budget = opts.max_evaluations.saturating_sub(evaluations);
        if budget == 0 {
            break;
        }
        let (x, v, used, ok) = nelder_mead(&f, &best.0, bounds, opts, budget);
        evaluations += used;
        let gain = v - best.1;
        if v > best.1 {
            best = (x, v);
        }
        converged = ok;
        if !(gain > opts.f_tol * (1.0 + best.1.abs())) {
            break;
        }
    }
    PolishOutcome {
        point: best.0,
        value: best.1,
        evaluations,
        converged,
    }
}

fn nelder_mead<F>(
    f: &F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMead,
    budget: usize,
) -> (Vec<f64>, f64, usize, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    // Work with the negated objective so the simplex minimizes.
    let cost = |x: &[f64]| -fitness(f, x);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let (lo, hi) = bounds[i];
        let mut step = if x0[i] != 0.0 { 0.05 * x0[i].abs() } else { 2.5e-4 };
        if x0[i] + step > hi {
            step = -step;
        }
        let mut v = x0.to_vec();
        v[i] = (x0[i] + step).clamp(lo, hi);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| cost(x)).collect();
    let mut used = n + 1;
    let mut converged = false;

    while used < budget {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.f_tol * (1.0 + values[0].abs()) && size <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let p: Vec<f64> = (0..n)
                .map(|j| centroid[j] + t * (simplex[n][j] - centroid[j]))
                .collect();
            clamp_point(&p, bounds)
        };

        let xr = along(-1.0);
        let fr = cost(&xr);
        used += 1;
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = cost(&xe);
            used += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-0.5);
            let fc = cost(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = cost(&xc);
            (xc, fc)
        };
        used += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = (0..n)
                .map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]))
                .collect();
            simplex[i] = clamp_point(&shrunk, bounds);
            values[i] = cost(&simplex[i]);
        }
        used += n;
    }

    let (i, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    (simplex[i].clone(), -values[i], used, converged)
}
