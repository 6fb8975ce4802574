//! Error taxonomy shared by all model layers.
//!
//! Each variant corresponds to one externally visible failure class so that
//! callers (in particular the command-line frontend) can map failures to
//! distinct exit codes without string matching.

use num_complex::Complex64;
use thiserror::Error;

/// Failure classes of the model-construction and solver layers.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// A parameter or argument violates its domain (sign, range, shape).
    #[error("domain error: {0}")]
    Domain(String),

    /// A linear system or elimination denominator is singular.
    #[error("singular system: {0}")]
    Singular(String),

    /// An iterative solver stopped without reaching the requested tolerance.
    #[error(
        "no convergence after {iterations} iterations: residual {residual:.6e} \
         above tolerance {tolerance:.6e}"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    /// The drift matrix has a non-decaying mode; time evolution is refused.
    #[error(
        "unstable drift: slowest decay rate {margin:.6e} is not positive; \
         drift eigenvalues: {}",
        format_eigenvalues(eigenvalues)
    )]
    Unstable {
        /// Minimum decay rate (minimum real part of the coefficient-matrix
        /// eigenvalues); non-positive when unstable.
        margin: f64,
        /// Eigenvalues of the drift matrix (−M).
        eigenvalues: Vec<Complex64>,
    },

    /// State support exceeds the configured Fock-space truncation.
    #[error("truncation exceeded: state needs dimension {needed}, truncation allows {available}")]
    Truncation { needed: usize, available: usize },

    /// A name-based lookup (sweep axis or metric) did not match.
    #[error("unknown name `{name}`; valid names: {}", valid.join(", "))]
    UnknownName { name: String, valid: Vec<String> },
}

fn format_eigenvalues(eigs: &[Complex64]) -> String {
    eigs.iter()
        .map(|z| format!("{:+.6e}{:+.6e}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_lists_valid_names() {
        let err = ModelError::UnknownName {
            name: "kapa_eff".into(),
            valid: vec!["kappa_eff".into(), "delta_eff".into()],
        };
        let msg = err.to_string();
        assert!(msg.contains("kapa_eff"));
        assert!(msg.contains("kappa_eff, delta_eff"));
    }

    #[test]
    fn unstable_reports_eigenvalues() {
        let err = ModelError::Unstable {
            margin: -0.5,
            eigenvalues: vec![Complex64::new(0.5, -1.0)],
        };
        let msg = err.to_string();
        assert!(msg.contains("-5.0"));
        assert!(msg.contains('i'));
    }
}
