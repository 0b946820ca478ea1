use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the region where the operation is defined.
    #[error("domain violation: {what} = {value} ({detail})")]
    Domain {
        what: &'static str,
        value: f64,
        detail: String,
    },

    #[error("invalid dataset: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Non-finite densities or exhausted rejection budgets.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("sampler aborted at iteration {iteration} in block `{block}`: {source}")]
    Sampler {
        iteration: usize,
        block: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("diagnostic unavailable: {0}")]
    Unavailable(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            detail: detail.into(),
        }
    }

    /// True for errors caused by the numerics rather than by user input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::Sampler { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
