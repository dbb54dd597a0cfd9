//! Closed-form distributions of the nonzero squared channel gain and the
//! outage probabilities built on them, evaluated by adaptive quadrature.
//!
//! Every distance integral is over the band `|theta| <= y` of the signed
//! incidence angle, whose probability at distance `r` is
//! `delta_f_phi(r, y) = F_phi(a(r) + y) - F_phi(a(r) - y)` with
//! `a(r) = pi - atan(ell / r)` and `F_phi` the marginal CDF of the vertical
//! angle. The squared gain exceeds `x` exactly when `|theta|` is below
//! `0.5 * acos(2 x v(r) - 1)`, `v(r) = 1 / g(r)^2`.

mod group;
mod individual;
mod sweep;

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::{LedGeometry, PathGainProfile};
use crate::population::{marginal_phi_cdf, MobilityConfig};
use crate::quadrature::{integrate, Estimate, QuadratureConfig};
use crate::scheduler::FeedbackScheme;

pub use group::{GroupLaw, GroupRole, GroupVariant};
pub use individual::KnzDistribution;
pub use sweep::{analytic_sum_rate_sweep, outage_group, outage_individual, AnalyticPoint};

/// The three clipped incidence-angle helpers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedAngles {
    /// `min(theta_x, z)` with the arccos argument capped at 1.
    pub psi: f64,
    /// `max(theta_x, z)` with the arccos argument capped at 1.
    pub omega: f64,
    /// `min(theta_x, z)` with the arccos argument clamped to `[-1, 1]`.
    pub big_psi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticModel {
    pub geom: LedGeometry,
    pub mobility: MobilityConfig,
    pub scheme: FeedbackScheme,
    pub quad: QuadratureConfig,
    profile: PathGainProfile,
    nonzero: Estimate,
}

impl AnalyticModel {
    pub fn new(
        geom: LedGeometry,
        mobility: MobilityConfig,
        scheme: FeedbackScheme,
        quad: QuadratureConfig,
    ) -> Result<Self> {
        let mut model = Self {
            geom,
            mobility,
            scheme,
            quad,
            profile: geom.gain_profile(),
            nonzero: Estimate::exact(f64::NAN),
        };
        model.nonzero = model.compute_nonzero_prob()?;
        Ok(model)
    }

    /// Replaces the distance profile used for the gain-level helpers.
    /// Intended for sensitivity checks against a perturbed channel law.
    pub fn with_gain_profile(mut self, profile: PathGainProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_scheme(&self, scheme: FeedbackScheme) -> Self {
        Self {
            scheme,
            ..self.clone()
        }
    }

    pub fn with_quadrature(&self, quad: QuadratureConfig) -> Result<Self> {
        Self::new(self.geom, self.mobility, self.scheme, quad)
            .map(|m| m.with_gain_profile(self.profile))
    }

    pub fn profile(&self) -> &PathGainProfile {
        &self.profile
    }

    /// `pi - atan(ell / r)`.
    #[inline]
    pub(crate) fn base_angle(&self, r: f64) -> f64 {
        PI - self.geom.ell.atan2(r)
    }

    /// Probability that `|theta| <= y` for a user at distance `r`.
    pub fn delta_f_phi(&self, r: f64, y: f64) -> f64 {
        let a = self.base_angle(r);
        (marginal_phi_cdf(&self.mobility, a + y) - marginal_phi_cdf(&self.mobility, a - y)).max(0.0)
    }

    /// Angle below which `|theta|` must stay for `h^2 > x`.
    #[inline]
    fn level_angle(&self, x: f64, r: f64) -> f64 {
        let arg = 2.0 * (x * self.profile.inverse_square_gain(r)).min(1.0) - 1.0;
        0.5 * arg.clamp(-1.0, 1.0).acos()
    }

    pub fn clipped_angle_helpers(&self, x: f64, r: f64, z: f64) -> ClippedAngles {
        let t = self.level_angle(x, r);
        ClippedAngles {
            psi: t.min(z),
            omega: t.max(z),
            big_psi: t.min(z),
        }
    }

    /// Probability that a user has nonzero gain.
    pub fn nonzero_prob(&self) -> Estimate {
        self.nonzero
    }

    fn compute_nonzero_prob(&self) -> Result<Estimate> {
        let m = &self.mobility;
        let theta = self.geom.half_fov;
        let bp = self.band_kinks(theta);
        let i = integrate(|r| self.delta_f_phi(r, theta), m.d_min, m.d_max, &bp, &self.quad)?;
        let span = m.distance_span();
        Ok(Estimate {
            value: (i.value / span).clamp(0.0, 1.0),
            error: i.error / span,
        })
    }

    /// Kinks of the marginal vertical-angle CDF.
    fn phi_kinks(&self) -> Vec<f64> {
        let m = &self.mobility;
        let dp = m.delta_phi;
        vec![m.mean_phi_min - dp, m.mean_phi_min + dp, m.mean_phi_max - dp, m.mean_phi_max + dp]
    }

    /// Distance at which `base_angle(r) = c`, if any.
    pub(crate) fn distance_at_base_angle(&self, c: f64) -> Option<f64> {
        let t = PI - c;
        if t > 0.0 && t <= PI / 2.0 {
            let r = self.geom.ell / t.tan();
            Some(if r.abs() < 1e-300 { 0.0 } else { r })
        } else {
            None
        }
    }

    /// Distances where `delta_f_phi(., y)` has a kink for a fixed `y`.
    pub(crate) fn band_kinks(&self, y: f64) -> Vec<f64> {
        self.phi_kinks()
            .into_iter()
            .flat_map(|k| [k - y, k + y])
            .filter_map(|c| self.distance_at_base_angle(c))
            .collect()
    }

    /// Distances where `x v(r)` crosses each level.
    pub(crate) fn level_kinks(&self, x: f64, levels: &[f64]) -> Vec<f64> {
        levels
            .iter()
            .map(|&l| self.profile.distance_for_level(x, l))
            .filter(|r| r.is_finite() && *r > 0.0)
            .collect()
    }

    pub(crate) fn require_positive(&self, e: &Estimate, what: &'static str) -> Result<()> {
        if e.value > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateCondition(what))
        }
    }

    pub(crate) fn thresholds(&self) -> Result<(f64, f64)> {
        let (d, t) = self.scheme.thresholds()?;
        if t > self.geom.half_fov {
            return Err(invalid("theta_threshold", "must not exceed the half FOV"));
        }
        Ok((d, t))
    }
}

/// `1 - num / den` or `num / den` with first-order error propagation.
pub(crate) fn ratio(num: Estimate, den: Estimate, complement: bool) -> Estimate {
    let q = num.value / den.value;
    let err = (num.error + q.abs() * den.error) / den.value.abs();
    let v = if complement { 1.0 - q } else { q };
    Estimate {
        value: v.clamp(0.0, 1.0),
        error: err,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GainEvaluator, ReceiverState};
    use crate::population::sample_user;
    use crate::scheduler::FeedbackKind;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn reference_model(delta_phi_deg: f64) -> AnalyticModel {
        let geom = LedGeometry::reference();
        AnalyticModel::new(
            geom,
            MobilityConfig::reference(delta_phi_deg, 20).unwrap(),
            FeedbackScheme::individual(FeedbackKind::FullCsi).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn delta_f_edges() {
        let m = reference_model(25.0);
        assert_eq!(m.delta_f_phi(3.0, 0.0), 0.0);
        assert_relative_eq!(m.delta_f_phi(3.0, PI), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn delta_f_matches_conditional_sampling() {
        let m = reference_model(25.0);
        let r = 5.0;
        let theta = m.geom.half_fov;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let u = sample_user(&m.mobility, &mut rng);
                ReceiverState::new(r, u.mean_phi, u.phi).incidence(m.geom.ell).abs() <= theta
            })
            .count();
        let p = m.delta_f_phi(r, theta);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * sd, "{p}");
    }

    #[test]
    fn full_fov_means_certain_nonzero() {
        // Theta -> pi/2 does not cover every orientation, so widen the
        // band directly: y = pi captures the whole support.
        let m = reference_model(25.0);
        let p = integrate(|r| m.delta_f_phi(r, PI), 0.0, 10.0, &[], &m.quad).unwrap();
        assert_relative_eq!(p.value / 10.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_layers_give_length_fraction() {
        // mean angle fixed at 120 deg, no deviation: nonzero iff
        // |180 - atan(2/d) - 120| <= 50, i.e. atan(2/d) >= 10 deg
        let geom = LedGeometry::reference();
        let mob = MobilityConfig::new(0.0, 10.0, 120f64.to_radians(), 120f64.to_radians(), 0.0, 20)
            .unwrap();
        let m = AnalyticModel::new(
            geom,
            mob,
            FeedbackScheme::individual(FeedbackKind::FullCsi).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap();
        let r_edge = 2.0 / 10f64.to_radians().tan();
        let expect = r_edge.min(10.0) / 10.0;
        assert!((m.nonzero_prob().value - expect).abs() < 1e-7, "{:?}", m.nonzero_prob());
    }

    #[test]
    fn nonzero_prob_matches_sampling() {
        let m = reference_model(25.0);
        let ev = GainEvaluator::new(&m.geom);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 2_000_000;
        let hits = (0..n)
            .filter(|_| ev.gain(&sample_user(&m.mobility, &mut rng)) > 0.0)
            .count();
        let p = m.nonzero_prob().value;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * sd, "p {p}");
    }

    #[test]
    fn helper_examples() {
        let m = reference_model(25.0);
        let z = 50f64.to_radians();
        let h = m.clipped_angle_helpers(0.0, 3.0, z);
        assert_relative_eq!(h.psi, z);
        let big = 10.0 / m.profile().inverse_square_gain(3.0);
        let h = m.clipped_angle_helpers(big, 3.0, z);
        assert_eq!(h.psi, 0.0);
        assert_eq!(h.omega, z);
        assert_eq!(h.big_psi, 0.0);
        let r = 4.0;
        let x = 20f64.to_radians().cos().powi(2) / m.profile().inverse_square_gain(r);
        let h = m.clipped_angle_helpers(x, r, z);
        assert_relative_eq!(h.psi, 20f64.to_radians(), epsilon = 1e-7);
    }
}
