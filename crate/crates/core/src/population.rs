//! User placement and orientation: sampling, plus the exact distributions of
//! the vertical angle used by the analytic engine.
//!
//! Each user draws `d ~ U[d_min, d_max]`, a mean vertical angle
//! `mean_phi ~ U[mean_phi_min, mean_phi_max]` and an instantaneous angle
//! `phi | mean_phi ~ U[mean_phi - delta_phi, mean_phi + delta_phi]`. The
//! marginal of `phi` is therefore the convolution of two uniforms (a
//! trapezoid), whose CDF has a closed form built from [`uniform_cdf_integral`].

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{GainEvaluator, LedGeometry, ReceiverState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub d_min: f64,
    pub d_max: f64,
    pub mean_phi_min: f64,
    pub mean_phi_max: f64,
    /// Maximum deviation of the instantaneous angle from its mean.
    pub delta_phi: f64,
    pub num_users: usize,
}

impl MobilityConfig {
    pub fn new(
        d_min: f64,
        d_max: f64,
        mean_phi_min: f64,
        mean_phi_max: f64,
        delta_phi: f64,
        num_users: usize,
    ) -> Result<Self> {
        if !(d_min >= 0.0 && d_min < d_max && d_max.is_finite()) {
            return Err(invalid(
                "d_min/d_max",
                format!("need 0 <= d_min < d_max, got [{d_min}, {d_max}]"),
            ));
        }
        if !(mean_phi_min <= mean_phi_max) {
            return Err(invalid(
                "mean_phi_min/mean_phi_max",
                format!("need mean_phi_min <= mean_phi_max, got [{mean_phi_min}, {mean_phi_max}]"),
            ));
        }
        if !(delta_phi >= 0.0) {
            return Err(invalid("delta_phi", format!("must be >= 0, got {delta_phi}")));
        }
        // a hair of slack so degree-converted presets at exactly [0, 180] pass
        const SLACK: f64 = 1e-12;
        if mean_phi_min - delta_phi < -SLACK || mean_phi_max + delta_phi > PI + SLACK {
            return Err(invalid(
                "delta_phi",
                "instantaneous angle must stay within [0, pi]: need \
                 mean_phi_min - delta_phi >= 0 and mean_phi_max + delta_phi <= pi",
            ));
        }
        if num_users < 2 {
            return Err(invalid("num_users", format!("need at least 2 users, got {num_users}")));
        }
        Ok(Self {
            d_min,
            d_max,
            mean_phi_min,
            mean_phi_max,
            delta_phi,
            num_users,
        })
    }

    /// `K` users on `d in [0, 10] m` with the mean-angle range chosen so that
    /// the instantaneous angle always spans `[0°, 180°]`.
    pub fn reference(delta_phi_deg: f64, num_users: usize) -> Result<Self> {
        let dp = delta_phi_deg.to_radians();
        Self::new(0.0, 10.0, dp, PI - dp, dp, num_users)
    }

    pub fn distance_span(&self) -> f64 {
        self.d_max - self.d_min
    }

    pub fn mean_phi_span(&self) -> f64 {
        self.mean_phi_max - self.mean_phi_min
    }
}

/// One draw of every user's state and channel gains.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopulationSnapshot {
    pub users: Vec<ReceiverState>,
    pub true_gains: Vec<f64>,
    pub mean_gains: Vec<f64>,
}

impl PopulationSnapshot {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn nonzero_count(&self) -> usize {
        self.true_gains.iter().filter(|&&h| h > 0.0).count()
    }

    /// Recomputes both gain vectors from `users`.
    pub fn refresh_gains(&mut self, evaluator: &GainEvaluator) {
        self.true_gains.clear();
        self.mean_gains.clear();
        for u in &self.users {
            let (h, hm) = evaluator.gains(u);
            self.true_gains.push(h);
            self.mean_gains.push(hm);
        }
    }
}

/// Draws one receiver state. Consumes exactly three uniforms.
#[inline]
pub fn sample_user<R: Rng + ?Sized>(config: &MobilityConfig, rng: &mut R) -> ReceiverState {
    let d = config.d_min + config.distance_span() * rng.random::<f64>();
    let mean_phi = config.mean_phi_min + config.mean_phi_span() * rng.random::<f64>();
    let phi = mean_phi + config.delta_phi * (2.0 * rng.random::<f64>() - 1.0);
    ReceiverState { d, mean_phi, phi }
}

pub fn sample_population<R: Rng + ?Sized>(
    config: &MobilityConfig,
    geom: &LedGeometry,
    rng: &mut R,
) -> PopulationSnapshot {
    let mut snap = PopulationSnapshot::default();
    sample_population_into(config, &GainEvaluator::new(geom), rng, &mut snap);
    snap
}

/// Buffer-reusing form of [`sample_population`].
pub fn sample_population_into<R: Rng + ?Sized>(
    config: &MobilityConfig,
    evaluator: &GainEvaluator,
    rng: &mut R,
    snap: &mut PopulationSnapshot,
) {
    snap.users.clear();
    snap.users
        .extend((0..config.num_users).map(|_| sample_user(config, rng)));
    snap.refresh_gains(evaluator);
}

/// `C(s) = ∫_{-inf}^{s} clamp((t + delta) / (2 delta), 0, 1) dt`, the
/// antiderivative of a centred `U[-delta, delta]` CDF. For `delta = 0` this
/// is `max(s, 0)`.
#[inline]
pub fn uniform_cdf_integral(s: f64, delta: f64) -> f64 {
    if s <= -delta {
        0.0
    } else if s >= delta {
        s
    } else {
        let t = s + delta;
        t * t / (4.0 * delta)
    }
}

/// CDF of `U[mean_phi - delta_phi, mean_phi + delta_phi]` at `x`; a unit step
/// at `mean_phi` when `delta_phi = 0`.
pub fn conditional_phi_cdf(mean_phi: f64, delta_phi: f64, x: f64) -> f64 {
    if delta_phi <= 0.0 {
        return if x >= mean_phi { 1.0 } else { 0.0 };
    }
    ((x - mean_phi + delta_phi) / (2.0 * delta_phi)).clamp(0.0, 1.0)
}

/// Marginal CDF of the instantaneous vertical angle.
pub fn marginal_phi_cdf(config: &MobilityConfig, x: f64) -> f64 {
    let (a, b, delta) = (config.mean_phi_min, config.mean_phi_max, config.delta_phi);
    let span = b - a;
    if span <= 0.0 {
        return conditional_phi_cdf(a, delta, x);
    }
    ((uniform_cdf_integral(x - a, delta) - uniform_cdf_integral(x - b, delta)) / span)
        .clamp(0.0, 1.0)
}

/// `∫_{lo}^{hi} F_{phi | mean_phi}(t) d(mean_phi)`, integrating the
/// conditional CDF at a fixed point `t` over a range of mean angles.
pub fn integrated_conditional_cdf(t: f64, lo: f64, hi: f64, delta: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    uniform_cdf_integral(t - lo, delta) - uniform_cdf_integral(t - hi, delta)
}

/// Perturbs a state with independent zero-mean Gaussian errors for feedback
/// computation. The distance estimate is clamped at zero.
pub fn noisy_estimates<R: Rng + ?Sized>(
    state: &ReceiverState,
    sigma_d: f64,
    sigma_phi: f64,
    rng: &mut R,
) -> ReceiverState {
    let ed: f64 = rng.sample(StandardNormal);
    let ep: f64 = rng.sample(StandardNormal);
    let em: f64 = rng.sample(StandardNormal);
    ReceiverState {
        d: (state.d + sigma_d * ed).max(0.0),
        phi: state.phi + sigma_phi * ep,
        mean_phi: state.mean_phi + sigma_phi * em,
    }
}
