use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("factor length mismatch for `{name}`: expected {expected}, got {found}")]
    LengthMismatch {
        name: &'static str,
        expected: usize,
        found: usize,
    },

    #[error(
        "KL divergence undefined at ({row}, {col}): data {data} > 0 but reconstruction is {recon}"
    )]
    DivergenceUndefined {
        row: usize,
        col: usize,
        data: f64,
        recon: f64,
    },

    #[error("{block} must be strictly positive, found {value} at ({row}, {col})")]
    NonPositive {
        block: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("{block} has zero total mass")]
    ZeroMass { block: &'static str },

    #[error(
        "too many missing values: the grid expansion covers {missing_rows}/{rows} rows and \
         {missing_cols}/{cols} columns, leaving no fully observed block"
    )]
    TooManyMissing {
        rows: usize,
        cols: usize,
        missing_rows: usize,
        missing_cols: usize,
    },

    #[error("mask has no observed entries")]
    EmptyMask,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index ({row}, {col}) is outside the sample space")]
    OutOfDomain { row: usize, col: usize },

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification of failures, used by the CLI to select an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    InfeasibleMask,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::TooManyMissing { .. } => ErrorKind::InfeasibleMask,
            Error::DivergenceUndefined { .. }
            | Error::NonPositive { .. }
            | Error::ZeroMass { .. } => ErrorKind::Numeric,
            Error::Context { source, .. } => source.kind(),
            _ => ErrorKind::Input,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
