use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("parameter index {index} out of range for {count} parameters")]
    ParamIndex { index: usize, count: usize },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{function} is undefined at Ritz value {value:e}")]
    Domain { function: String, value: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("probe {index}: {source}")]
    Probe {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("basis variation diagnostic failed: {0}")]
    Diagnostic(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension {
                what,
                expected,
                got,
            })
        }
    }
}
