//! CLI error type and the exit-code contract.
//!
//! Every failure class maps to a distinct nonzero process exit code so that
//! scripts can dispatch on the cause without scraping stderr:
//!
//! | code | class |
//! |------|-------|
//! | 0    | success |
//! | 2    | configuration or usage error |
//! | 3    | domain error (invalid parameter values) |
//! | 4    | singular linear algebra |
//! | 5    | iteration did not converge |
//! | 6    | unstable drift dynamics |
//! | 7    | truncated operator space too small |
//! | 8    | unknown name (port, metric, axis) |
//! | 9    | file I/O failure |

use circulator_core::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration file.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed command line.
    #[error("usage error: {0}")]
    Usage(String),
    /// Any error surfaced by the model layer.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Filesystem failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Model(ModelError::Domain(_)) => 3,
            CliError::Model(ModelError::Singular(_)) => 4,
            CliError::Model(ModelError::NoConvergence { .. }) => 5,
            CliError::Model(ModelError::Unstable { .. }) => 6,
            CliError::Model(ModelError::Truncation { .. }) => 7,
            CliError::Model(ModelError::UnknownName { .. }) => 8,
            CliError::Io { .. } => 9,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_per_class() {
        let cases: Vec<(CliError, i32)> = vec![
            (CliError::Config("x".into()), 2),
            (CliError::Usage("x".into()), 2),
            (CliError::Model(ModelError::Domain("x".into())), 3),
            (CliError::Model(ModelError::Singular("x".into())), 4),
            (
                CliError::Model(ModelError::NoConvergence {
                    iterations: 1,
                    residual: 1.0,
                    tolerance: 0.5,
                }),
                5,
            ),
            (
                CliError::Model(ModelError::Unstable { margin: -0.1, eigenvalues: vec![] }),
                6,
            ),
            (CliError::Model(ModelError::Truncation { needed: 4, available: 2 }), 7),
            (
                CliError::Model(ModelError::UnknownName {
                    name: "x".into(),
                    valid: vec!["y".into()],
                }),
                8,
            ),
            (
                CliError::Io {
                    path: "p".into(),
                    source: std::io::Error::new(std::io::ErrorKind::Other, "x"),
                },
                9,
            ),
        ];
        for (err, code) in cases {
            assert_eq!(err.exit_code(), code, "wrong code for {err}");
        }
    }
}
