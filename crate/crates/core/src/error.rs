use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("quadrature stopped after {subdivisions} subdivisions: estimate {estimate}, error bound {bound}")]
    Quadrature {
        estimate: f64,
        bound: f64,
        subdivisions: usize,
    },

    #[error("Fisher element ({row}, {col}): {source}")]
    FisherElement { row: usize, col: usize, source: Box<Error> },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("no root of the shape equation in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("optimizer: {0}")]
    Optimizer(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected: "finite and > 0",
        })
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected: "finite",
        })
    }
}
