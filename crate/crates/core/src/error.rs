use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two objects that must share a frequency grid do not.
    #[error("frequency grids differ ({0})")]
    GridMismatch(String),

    /// The frequency grid is too coarse for the requested windows/delays.
    #[error(
        "grid resolution insufficient: spacing {spacing:.4e} rad/s exceeds {max_spacing:.4e} rad/s; \
         need n_points >= {required_points}"
    )]
    Resolution { spacing: f64, max_spacing: f64, required_points: usize },

    /// The time grid of the time-domain integration would alias.
    #[error("time span {span:.4e} s too short, need more than {required:.4e} s")]
    Aliasing { span: f64, required: f64 },

    /// Transfer-matrix chain overflowed or otherwise produced non-finite values.
    #[error("invalid FBG model: {0}")]
    InvalidModel(String),

    /// Half maximum not bracketed inside the sampled delays.
    #[error("half maximum not bracketed within the sampled delays ({0})")]
    FwhmNotBracketed(&'static str),

    /// Plateau taken inside the narrow BS-window regime, where it does not
    /// represent the distinguishable rate.
    #[error("plateau unreliable: {0}")]
    UnreliablePlateau(String),

    /// Discretized probability came out complex or negative beyond round-off.
    #[error("unphysical four-photon sum: {0}")]
    Unphysical(String),

    #[error("visibility undefined: plateau is zero")]
    ZeroPlateau,

    /// Requested target cannot be reached within the allowed parameter range.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("tag stream is not sorted at index {0}")]
    Unsorted(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by numerical resolution limits rather than bad
    /// input. The CLI maps these to a dedicated exit code.
    pub fn is_numerical_refusal(&self) -> bool {
        matches!(self, Error::Resolution { .. } | Error::Aliasing { .. } | Error::UnreliablePlateau(_))
    }
}
