use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a formula (negative density, ε ∉ (0,1), ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Array shapes or grids that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("positivity lost at node {node} (x = {x}) at t = {t}: rho = {rho}")]
    PositivityLoss {
        node: usize,
        x: f64,
        t: f64,
        rho: f64,
    },

    #[error("cannot construct initial data: {message} (limiting amplitude {limiting_amplitude})")]
    Construction {
        message: String,
        limiting_amplitude: f64,
    },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("incomplete campaign: no completed run for eps {missing:?}")]
    IncompleteCampaign { missing: Vec<f64> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: msg.into(),
        }
    }
}
