use thiserror::Error;

use crate::phase::Frame;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value {value} at cell x={x_index:?} v={v_index:?}")]
    NonFinite {
        x_index: [usize; 3],
        v_index: [usize; 3],
        value: f64,
    },

    #[error("negative value {value} at cell x={x_index:?} v={v_index:?}")]
    Negative {
        x_index: [usize; 3],
        v_index: [usize; 3],
        value: f64,
    },

    #[error("field is in the {found:?} frame, operation expects {expected:?}")]
    WrongFrame { expected: Frame, found: Frame },

    #[error("field holds {found} values but the grid has {expected} cells")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("omega is not a unit vector (|omega| = {norm})")]
    NonUnitOmega { norm: f64 },

    #[error("kernel is singular at v = v_star for gamma = {gamma}")]
    Singular { gamma: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
