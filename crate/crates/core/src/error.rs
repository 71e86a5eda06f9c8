use std::path::PathBuf;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum GelError {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("equilibrium residual does not change sign on the search grid")]
    NoBracket,

    #[error("tensor is not symmetric positive definite (smallest eigenvalue {min_eig})")]
    NonSpd { min_eig: f64 },

    #[error("mesh level {0} outside 1..=10")]
    MeshLevel(u32),

    #[error("mesh consistency: {0}")]
    MeshConsistency(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("conflicting Dirichlet values for dof {dof}")]
    ConflictingDirichlet { dof: usize },

    #[error("singular matrix{}{}", .pivot.map(|p| format!(" at pivot {p}")).unwrap_or_default(), .step.map(|s| format!(" (step {s})")).unwrap_or_default())]
    SingularMatrix { pivot: Option<usize>, step: Option<usize> },

    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("stability gate failed: {0}")]
    StabilityGate(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, GelError>;

impl GelError {
    /// Process exit code: 1 I/O and other failures, 2 configuration,
    /// 3 stability gate, 4 linear solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            GelError::Config(_) | GelError::InvalidParams(_) | GelError::MeshLevel(_) => 2,
            GelError::StabilityGate(_) => 3,
            GelError::SingularMatrix { .. } | GelError::IterationLimit { .. } => 4,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GelError::Io { path: path.into(), source }
    }
}

pub(crate) fn check_fraction(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(GelError::Domain { what, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(GelError::Config("x".into()).exit_code(), 2);
        assert_eq!(GelError::MeshLevel(12).exit_code(), 2);
        assert_eq!(GelError::StabilityGate("x".into()).exit_code(), 3);
        assert_eq!(GelError::SingularMatrix { pivot: None, step: None }.exit_code(), 4);
        assert_eq!(GelError::Domain { what: "phi", value: 2.0 }.exit_code(), 1);
    }
}
