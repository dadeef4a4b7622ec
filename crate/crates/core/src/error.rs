use thiserror::Error;

/// Errors surfaced by the physics and dataset layers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid material data: {0}")]
    Material(String),

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error(
        "quadrature failed to converge: best estimate {estimate}, achieved absolute error {achieved}, requested {requested}"
    )]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("isotherm touches the search box boundary along {axis}; enlarge the box")]
    SearchBoxClipped { axis: &'static str },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
