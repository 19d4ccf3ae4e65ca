use thiserror::Error;

use sigposs::predictor::TrainError;
use sigposs::DataError;

/// A command failure, mapped to the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    /// The message flattened to a single line.
    pub fn one_line(&self) -> String {
        self.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            TrainError::Config(_) => CliError::Usage(e.to_string()),
            TrainError::EmptyTrainSet => CliError::Data(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("u".into()).exit_code(), 1);
        assert_eq!(CliError::from(DataError::Parse("p".into())).exit_code(), 2);
        assert_eq!(CliError::from(TrainError::EmptyTrainSet).exit_code(), 2);
        assert_eq!(CliError::Numeric("n".into()).exit_code(), 3);
    }

    #[test]
    fn diagnostics_are_single_line() {
        let e = CliError::Data("bad\n  input\tline".into());
        assert_eq!(e.one_line(), "bad input line");
    }
}
