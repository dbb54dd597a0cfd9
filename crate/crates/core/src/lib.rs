//! Downlink visible-light NOMA with randomly oriented receivers.
//!
//! The crate models a single ceiling LED serving `K` users whose receivers
//! tilt randomly, schedules two users per transmission under several
//! feedback schemes, and evaluates outage and sum rate both by Monte Carlo
//! and by closed-form integrals of the gain distributions.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod link;
pub mod population;
pub mod quadrature;
pub mod rng;
pub mod scheduler;
pub mod sim;

pub use analytic::{AnalyticModel, GroupRole, GroupVariant};
pub use curve::{Access, Curve, CurvePoint};
pub use error::{Error, Result};
pub use geometry::{LedGeometry, ReceiverState};
pub use link::{NomaConfig, OmaRateModel, PowerAllocation, TargetRates};
pub use population::MobilityConfig;
pub use quadrature::{Estimate, QuadratureConfig};
pub use scheduler::{EmptyGroupPolicy, FeedbackKind, FeedbackScheme, PairingStrategy};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
