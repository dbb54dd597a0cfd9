use serde::{Deserialize, Serialize};

use crate::link::db_to_linear;

/// One sample of a sum-rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Transmit SNR in dB.
    pub gamma_db: f64,
    pub sum_rate: f64,
    /// 95% half-width (Monte Carlo) or propagated quadrature error (analytic).
    pub ci_halfwidth: f64,
    pub outage_weak: f64,
    pub outage_strong: f64,
    /// Probability of the event the outages are conditioned on.
    pub conditioning_rate: f64,
}

impl CurvePoint {
    pub fn gamma(&self) -> f64 {
        db_to_linear(self.gamma_db)
    }
}

/// Whether a pair is served by superposition or by time sharing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Noma,
    Oma,
}

impl Access {
    pub fn label(self) -> &'static str {
        match self {
            Access::Noma => "noma",
            Access::Oma => "oma",
        }
    }
}

/// A labelled sum-rate curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub access: Access,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    /// Sum rate at the highest SNR of the grid.
    pub fn plateau(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.sum_rate)
    }

    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }
}
