//! Error type with the stable exit-status contract:
//! 0 success, 2 missing input, 3 I/O or format, 4 invariant violation.

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Invariant(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput(_) => 2,
            CliError::Format(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }

    /// I/O or decode failure attributed to a path.
    pub fn format_at(path: &Path, err: impl std::fmt::Display) -> CliError {
        CliError::Format(format!("{}: {err}", path.display()))
    }

    /// Wraps a read error: a nonexistent path is a missing input, anything
    /// else is an I/O problem.
    pub fn read_at(path: &Path, err: std::io::Error) -> CliError {
        if err.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingInput(path.display().to_string())
        } else {
            CliError::format_at(path, err)
        }
    }
}

impl From<panoqa_core::qa::QaError> for CliError {
    fn from(err: panoqa_core::qa::QaError) -> Self {
        CliError::Format(err.to_string())
    }
}

impl From<panoqa_core::reward::RewardError> for CliError {
    fn from(err: panoqa_core::reward::RewardError) -> Self {
        CliError::Format(err.to_string())
    }
}

impl From<panoqa_core::judge::JudgeError> for CliError {
    fn from(err: panoqa_core::judge::JudgeError) -> Self {
        CliError::Format(err.to_string())
    }
}

impl From<panoqa_core::grpo::GrpoError> for CliError {
    fn from(err: panoqa_core::grpo::GrpoError) -> Self {
        use panoqa_core::grpo::GrpoError;
        match &err {
            // Contract violations in otherwise well-formed inputs.
            GrpoError::WrongGroupSize { .. } | GrpoError::NoOpenEnded | GrpoError::NoStructured => {
                CliError::Invariant(err.to_string())
            }
            _ => CliError::Format(err.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(CliError::MissingInput("x".into()).exit_code(), 2);
        assert_eq!(CliError::Format("x".into()).exit_code(), 3);
        assert_eq!(CliError::Invariant("x".into()).exit_code(), 4);
    }

    #[test]
    fn wrong_group_size_maps_to_invariant() {
        let err: CliError = panoqa_core::grpo::GrpoError::WrongGroupSize {
            prompt_id: "p7".into(),
            expected: 4,
            got: 2,
        }
        .into();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("p7"));
    }
}
