use serde::Serialize;
use thiserror::Error;

/// Failure of a command, split by who has to act on it.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or invalid input files and parameters.
    #[error("{0}")]
    Input(String),
    /// The inputs were accepted but the computation failed.
    #[error("{0}")]
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Computation(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Computation(_) => "computation",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            schema_version: &'a str,
            error: Body<'a>,
            exit_code: i32,
        }
        let env = Envelope {
            schema_version: crate::report::SCHEMA_VERSION,
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
            },
            exit_code: self.exit_code(),
        };
        serde_json::to_string(&env).expect("error envelope serializes")
    }
}

impl From<epfit_core::Error> for CliError {
    fn from(e: epfit_core::Error) -> Self {
        use epfit_core::Error as E;
        match e {
            E::Io { .. } | E::Parse { .. } | E::Config(_) | E::Domain { .. } | E::LengthMismatch { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Computation(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(CliError::Computation("x".into()).exit_code(), 1);
    }

    #[test]
    fn core_errors_are_classified() {
        let e: CliError = epfit_core::Error::Parse {
            line: 2,
            message: "bad".into(),
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = epfit_core::Error::NoRoot { lo: 0.1, hi: 20.0 }.into();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn json_envelope() {
        let v: serde_json::Value = serde_json::from_str(&CliError::Usage("missing --seed".into()).to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "usage");
        assert_eq!(v["exit_code"], 2);
        assert_eq!(v["error"]["message"], "missing --seed");
    }
}
