use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Precondition(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("degenerate contour: {0}")]
    Degenerate(String),

    #[error("geometry violation: {0}")]
    Geometry(String),

    #[error("singular Jacobian (condition estimate {condition:.3e}); {hint}")]
    Singular { condition: f64, hint: String },

    #[error("no bifurcation: {0}")]
    NoBifurcation(String),

    #[error("continuation seed failed: {0}")]
    Seed(String),

    #[error("contour left the unit disc at t = {time}")]
    Instability { time: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by a boundary leaving its admissible region.
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Degenerate(_) | Error::Geometry(_) | Error::Instability { .. }
        )
    }
}
