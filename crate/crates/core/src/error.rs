use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension for {what}: {value}")]
    InvalidDimension { what: &'static str, value: usize },

    #[error("invalid metric at x={x:?}, t={t}: {detail}")]
    InvalidMetric { x: Vec<f64>, t: f64, detail: String },

    #[error("lapse {value} at x={x:?}, t={t} violates bounds [{lower}, {upper}]")]
    LapseBound {
        x: Vec<f64>,
        t: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("axis {axis} has {points} points, at least {min} required")]
    ResolutionTooSmall { axis: usize, points: usize, min: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("node mismatch: {0}")]
    NodeMismatch(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{field}: {message}")]
    Input { field: String, message: String },

    #[error("iteration did not converge: residual {residual:e} after {iterations} steps")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn input(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Input {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed or out-of-range user input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Input { .. }
                | Error::Json(_)
                | Error::InvalidDimension { .. }
                | Error::InvalidMetric { .. }
                | Error::LapseBound { .. }
                | Error::ResolutionTooSmall { .. }
                | Error::Unsupported(_)
                | Error::NodeMismatch(_)
                | Error::Shape(_)
        )
    }

    /// Prefix the field path of an input error, leaving other errors intact.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Error::Input { field, message } => Error::Input {
                field: if field.is_empty() {
                    prefix.to_string()
                } else {
                    format!("{prefix}.{field}")
                },
                message,
            },
            other => other,
        }
    }
}
