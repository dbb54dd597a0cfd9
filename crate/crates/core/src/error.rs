use thiserror::Error;

/// Errors produced by the channel, link, scheduling and analytic layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The weak user's target rate cannot be met at any channel gain:
    /// `share_weak - share_strong * eps_weak` must be positive.
    #[error(
        "infeasible power allocation: share_weak ({share_weak}) must exceed \
         share_strong * eps_weak ({rhs}) for the weak user's target rate to be reachable"
    )]
    InfeasibleAllocation { share_weak: f64, rhs: f64 },

    /// Adaptive quadrature hit its subdivision limit before reaching the
    /// requested tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error estimate {error}")]
    Quadrature { estimate: f64, error: f64 },

    /// A conditional distribution was requested for an event of probability zero.
    #[error("conditioning event has zero probability: {0}")]
    DegenerateCondition(&'static str),

    /// An empirical distribution was built from no samples.
    #[error("empirical CDF requires at least one sample")]
    EmptySample,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
