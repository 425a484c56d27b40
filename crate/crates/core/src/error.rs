use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    /// `det(F) <= 0` somewhere in the body.
    #[error("inverted element{}: J = {jacobian:e}", site.map(|s| format!(" at site {s}")).unwrap_or_default())]
    InvertedElement { site: Option<usize>, jacobian: f64 },

    #[error("non-finite value in `{field}` at step {step}, site {site}")]
    NonFinite {
        field: &'static str,
        step: usize,
        site: usize,
    },

    #[error("stability violation: tau ratio {tau_ratio} must exceed 0.5")]
    StabilityViolation { tau_ratio: f64 },

    #[error("boundary normal must have unit length, got |N| = {0}")]
    InvalidNormal(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("oracle failure: {what} (last residual {residual:e})")]
    Oracle { what: String, residual: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a site index to an inverted-element error raised by a
    /// pointwise material evaluation.
    pub fn at_site(self, site: usize) -> Self {
        match self {
            Error::InvertedElement { jacobian, .. } => Error::InvertedElement {
                site: Some(site),
                jacobian,
            },
            other => other,
        }
    }

    /// Process exit code: 1 configuration, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::Geometry(_)
            | Error::UnsupportedGeometry(_)
            | Error::StabilityViolation { .. }
            | Error::Config(_) => 1,
            Error::InvertedElement { .. }
            | Error::NonFinite { .. }
            | Error::InvalidNormal(_)
            | Error::Oracle { .. } => 2,
            Error::Io { .. } => 3,
        }
    }
}
