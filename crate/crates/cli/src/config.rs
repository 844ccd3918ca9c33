//! TOML input files and grid expressions.

use std::path::Path;

use epfit_core::simulate::{reference_estimators, Component, SimulationDesign};
use epfit_core::FitConfig;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::model::ModelSpec;

/// File contents together with their bytes, for digests.
pub struct Loaded<T> {
    pub value: T,
    pub bytes: Vec<u8>,
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Loaded<T>> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let value = toml::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(Loaded { value, bytes })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFile {
    preset: Option<usize>,
    n2: Option<usize>,
    #[serde(default)]
    component: Vec<Component>,
}

/// A design read from disk; `preset` is kept so reference estimators can be looked up.
#[derive(Debug, Clone)]
pub struct Design {
    pub design: SimulationDesign,
    pub preset: Option<(usize, usize)>,
}

fn design_from(file: DesignFile) -> CliResult<Design> {
    match (file.preset, file.component.len()) {
        (Some(id), 0) => {
            let n2 = file
                .n2
                .ok_or_else(|| CliError::Input("a preset design needs n2".into()))?;
            Ok(Design {
                design: SimulationDesign::preset(id, n2)?,
                preset: Some((id, n2)),
            })
        }
        (None, 3) => {
            if file.n2.is_some() {
                return Err(CliError::Input("n2 only applies to preset designs".into()));
            }
            let c = &file.component;
            Ok(Design {
                design: SimulationDesign::new([c[0], c[1], c[2]])?,
                preset: None,
            })
        }
        (Some(_), _) => Err(CliError::Input(
            "give either preset or [[component]] tables, not both".into(),
        )),
        (None, k) => Err(CliError::Input(format!(
            "a design needs exactly three [[component]] tables, found {k}"
        ))),
    }
}

pub fn load_design(path: &Path) -> CliResult<Loaded<Design>> {
    let raw: Loaded<DesignFile> = parse_toml(path)?;
    Ok(Loaded {
        value: design_from(raw.value)?,
        bytes: raw.bytes,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorFile {
    estimator: Vec<ModelSpec>,
}

pub fn load_estimators(path: &Path) -> CliResult<Loaded<Vec<FitConfig>>> {
    let raw: Loaded<EstimatorFile> = parse_toml(path)?;
    if raw.value.estimator.is_empty() {
        return Err(CliError::Input(format!("{}: no [[estimator]] tables", path.display())));
    }
    let value = raw
        .value
        .estimator
        .iter()
        .map(ModelSpec::to_fit_config)
        .collect::<CliResult<Vec<_>>>()
        .map_err(|e| match e {
            CliError::Usage(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        })?;
    Ok(Loaded {
        value,
        bytes: raw.bytes,
    })
}

/// The seven reference estimators, when the design is a reference preset.
pub fn default_estimators(design: &Design) -> CliResult<Vec<FitConfig>> {
    match design.preset {
        Some((id, n2)) => Ok(reference_estimators(id, n2)?),
        None => Err(CliError::Usage(
            "--estimators is required unless the design is a reference preset".into(),
        )),
    }
}

/// Parse `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("grid value {s:?} is not a number")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0) || b < a || !a.is_finite() || !b.is_finite() {
                return Err(CliError::Usage(format!(
                    "grid {text:?} needs start <= stop and step > 0"
                )));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize;
            if count > 100_000 {
                return Err(CliError::Usage(format!("grid {text:?} has too many points")));
            }
            // a + i*h rather than repeated addition, so points do not drift
            (0..=count).map(|i| a + i as f64 * h).collect()
        }
        [_] => text.split(',').map(num).collect::<CliResult<Vec<_>>>()?,
        _ => return Err(CliError::Usage(format!("grid {text:?} is neither a:b:step nor a list"))),
    };
    if values.is_empty() {
        return Err(CliError::Usage("empty grid".into()));
    }
    Ok(values)
}
