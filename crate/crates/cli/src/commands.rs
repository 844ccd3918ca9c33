use std::path::Path;

use epfit_core::data::{add_outliers, parse};
use epfit_core::epd::sample;
use epfit_core::fisher::{fisher_for, variances};
use epfit_core::select::{diagnose, tune, volume, ArtificialShapes, DiagnoseOptions};
use epfit_core::simulate::{run, SimulationReport};
use epfit_core::special_fn::QuadratureSpec;
use epfit_core::{fit, EpdParams, FitConfig, ShapeTriple, TuneConfig};

use crate::args::{FisherArgs, FitArgs, GridArgs, OutlierArgs, RngArgs, SimulateArgs, TuneArgs};
use crate::config::{default_estimators, load_design, load_estimators, parse_grid, read_bytes};
use crate::error::{CliError, CliResult};
use crate::model::{ModelSpec, Score};
use crate::report::{digest, emit, CommandEcho, Inputs, Payload, Report};

/// What a command produced, before timing is attached.
pub enum Output {
    Report(Box<Report>, Option<std::path::PathBuf>),
    Done,
}

struct Data {
    values: Vec<f64>,
    inputs: Inputs,
}

fn load_data(path: &Path, outliers: &OutlierArgs) -> CliResult<Data> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut values = parse(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if outliers.add_outliers {
        values = add_outliers(&values, outliers.outlier_abs)?;
    }
    Ok(Data {
        inputs: Inputs {
            files: vec![digest("data", path, &bytes)],
            seed: None,
            n: Some(values.len()),
            outliers_added: outliers.add_outliers,
        },
        values,
    })
}

pub fn fit_cmd(a: &FitArgs, echo: CommandEcho) -> CliResult<Output> {
    let cfg = a.model.to_fit_config()?;
    if a.model.is_randomized() && a.model.ga_seed.is_none() {
        return Err(CliError::Usage("--ga-seed is required for --method objective".into()));
    }
    let mut data = load_data(&a.data, &a.outliers)?;
    data.inputs.seed = a.model.ga_seed;
    let est = fit(&data.values, &cfg)?;
    let opts = DiagnoseOptions {
        fisher: a.fisher.into(),
        quadrature: None,
    };
    let result = diagnose(&data.values, &cfg, &est, &opts);
    let report = Report::new(echo, data.inputs, Payload::Fit { config: cfg, result });
    Ok(Output::Report(Box::new(report), a.out.clone()))
}

/// Which tuning constants a score family has.
fn grid_slots(score: Score) -> &'static [&'static str] {
    match score {
        Score::S => &[],
        Score::Huber => &["r"],
        Score::Combined | Score::CombinedHuber => &["k", "t"],
        Score::Sq => &["q"],
        Score::Sd => &["beta"],
    }
}

/// Expand grid flags into candidate specs, in row-major order of the flags.
pub fn expand_grid(base: &ModelSpec, grid: &GridArgs) -> CliResult<Vec<ModelSpec>> {
    let given: [(&str, &Option<String>); 5] = [
        ("beta", &grid.grid_beta),
        ("q", &grid.grid_q),
        ("r", &grid.grid_r),
        ("k", &grid.grid_k),
        ("t", &grid.grid_t),
    ];
    let slots = grid_slots(base.score);
    let mut specs = vec![base.clone()];
    for (name, text) in given {
        let Some(text) = text else { continue };
        if !slots.contains(&name) {
            return Err(CliError::Usage(format!(
                "--grid-{name} does not apply to this score family"
            )));
        }
        let values = parse_grid(text)?;
        specs = specs
            .into_iter()
            .flat_map(|s| {
                values.iter().map(move |&v| {
                    let mut s = s.clone();
                    match name {
                        "beta" => s.beta = Some(v),
                        "q" => s.q = Some(v),
                        "r" => s.r = Some(v),
                        "k" => s.k = Some(v),
                        _ => s.t = Some(v),
                    }
                    s
                })
            })
            .collect();
    }
    Ok(specs)
}

pub fn tune_cmd(a: &TuneArgs, echo: CommandEcho) -> CliResult<Output> {
    let mut data = load_data(&a.data, &a.outliers)?;
    let candidates: Vec<FitConfig> = match &a.candidates {
        Some(path) => {
            let loaded = load_estimators(path)?;
            data.inputs.files.push(digest("candidates", path, &loaded.bytes));
            loaded.value
        }
        None => expand_grid(&a.model, &a.grid)?
            .iter()
            .map(ModelSpec::to_fit_config)
            .collect::<CliResult<_>>()?,
    };
    let sizes = match a.sizes.as_deref() {
        None => None,
        Some([x, y, z]) => Some([*x, *y, *z]),
        Some(v) => return Err(CliError::Usage(format!("--sizes takes three values, got {}", v.len()))),
    };
    let shapes = match a.artificial_shapes.as_deref() {
        None => ArtificialShapes::Fitted,
        Some([x, y, z]) => ArtificialShapes::Fixed {
            shapes: ShapeTriple::new(*x, *y, *z)?,
        },
        Some(v) => {
            return Err(CliError::Usage(format!(
                "--artificial-shapes takes three values, got {}",
                v.len()
            )))
        }
    };
    let mut cfg = TuneConfig::new(candidates, a.seed);
    cfg.replications = a.replications;
    cfg.sizes = sizes;
    cfg.shapes = shapes;
    cfg.diagnose.fisher = a.fisher.into();
    data.inputs.seed = Some(a.seed);
    let selection = tune(&data.values, &cfg)?;
    let report = Report::new(echo, data.inputs, Payload::Tune { selection });
    Ok(Output::Report(Box::new(report), a.out.clone()))
}

pub fn simulation_csv(report: &SimulationReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Computation(format!("csv: {e}"));
    w.write_record(["estimator", "tc", "parameter", "mean", "var_hat", "mse_hat", "failures"])
        .map_err(fail)?;
    for r in &report.rows {
        w.write_record([
            r.estimator.clone(),
            r.tc.clone(),
            r.parameter.clone(),
            r.mean.to_string(),
            r.var_hat.to_string(),
            r.mse_hat.to_string(),
            r.failures.to_string(),
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Computation(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Computation(format!("csv: {e}")))
}

pub fn simulate_cmd(a: &SimulateArgs, echo: CommandEcho) -> CliResult<Output> {
    let design = load_design(&a.design)?;
    let mut files = vec![digest("design", &a.design, &design.bytes)];
    let estimators = match &a.estimators {
        Some(path) => {
            let loaded = load_estimators(path)?;
            files.push(digest("estimators", path, &loaded.bytes));
            loaded.value
        }
        None => default_estimators(&design.value)?,
    };
    let simulation = run(&design.value.design, &estimators, a.m, a.seed)?;
    for r in simulation.rows.iter().filter(|r| r.flagged) {
        eprintln!(
            "warning: {} ({}) {}: {} of {} replications failed",
            r.estimator, r.tc, r.parameter, r.failures, a.m
        );
    }
    emit(a.out.as_deref(), &simulation_csv(&simulation)?)?;
    match &a.report {
        Some(path) => {
            let inputs = Inputs {
                files,
                seed: Some(a.seed),
                n: Some(design.value.design.total()),
                outliers_added: false,
            };
            let report = Report::new(echo, inputs, Payload::Simulate { simulation });
            Ok(Output::Report(Box::new(report), Some(path.clone())))
        }
        None => Ok(Output::Done),
    }
}

pub fn rng_cmd(a: &RngArgs) -> CliResult<Output> {
    let p = EpdParams::new(a.mu, a.sigma, a.alpha)?;
    let mut text = String::with_capacity(a.n * 20);
    for v in sample(&p, a.n, a.seed) {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)?;
    Ok(Output::Done)
}

pub fn fisher_cmd(a: &FisherArgs, echo: CommandEcho) -> CliResult<Output> {
    let cfg = a.model.to_fit_config()?;
    let family = cfg.score_family();
    let params = EpdParams::new(a.mu, a.sigma, a.model.model_alpha()?)?;
    let fisher = fisher_for(&family, &params, a.n, a.fisher.into(), &QuadratureSpec::default())?;
    let payload = Payload::Fisher {
        family,
        params,
        variances: variances(&fisher),
        volume: volume(&fisher),
        fisher,
    };
    let inputs = Inputs {
        n: Some(a.n),
        ..Inputs::default()
    };
    Ok(Output::Report(
        Box::new(Report::new(echo, inputs, payload)),
        a.out.clone(),
    ))
}
