//! Line-of-sight channel geometry between a ceiling LED and a tilted
//! photodetector.
//!
//! The LED points straight down from height `ell`. A receiver at horizontal
//! distance `d` whose normal makes the vertical angle `phi` with the user
//! plane sees the signed incidence angle
//!
//! ```text
//! theta = pi - atan(ell / d) - phi
//! ```
//!
//! and the DC gain factors as `h = g(d) * cos(theta)` inside the field of
//! view, with `g(d) = h_c^2 / (ell^2 + d^2)^((m + 2) / 2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Transmitter and photodetector parameters shared by every user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedGeometry {
    /// LED height above the user plane, metres.
    pub ell: f64,
    /// Half-power beamwidth, radians.
    pub hpbw: f64,
    /// Lambertian order derived from `hpbw`.
    pub m: f64,
    /// Photodetector area, square metres.
    pub detector_area: f64,
    /// Half field of view, radians.
    pub half_fov: f64,
}

impl LedGeometry {
    pub fn new(ell: f64, hpbw: f64, detector_area: f64, half_fov: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(invalid("ell", format!("must be positive, got {ell}")));
        }
        if !(detector_area > 0.0 && detector_area.is_finite()) {
            return Err(invalid(
                "detector_area",
                format!("must be positive, got {detector_area}"),
            ));
        }
        if !(half_fov > 0.0 && half_fov <= PI / 2.0) {
            return Err(invalid(
                "half_fov",
                format!("must lie in (0, pi/2], got {half_fov}"),
            ));
        }
        let m = lambertian_order(hpbw)?;
        Ok(Self {
            ell,
            hpbw,
            m,
            detector_area,
            half_fov,
        })
    }

    /// Angles in degrees, area in cm².
    pub fn from_degrees(
        ell: f64,
        hpbw_deg: f64,
        detector_area_cm2: f64,
        half_fov_deg: f64,
    ) -> Result<Self> {
        Self::new(
            ell,
            hpbw_deg.to_radians(),
            detector_area_cm2 * 1e-4,
            half_fov_deg.to_radians(),
        )
    }

    /// 2 m LED height, 60° half-power beamwidth, 1 cm² detector, 100° FOV.
    pub fn reference() -> Self {
        Self::from_degrees(2.0, 60.0, 1.0, 50.0).expect("reference geometry is valid")
    }

    pub fn gain_profile(&self) -> PathGainProfile {
        PathGainProfile::new(self)
    }

    /// Upper bound on any channel gain, reached at `d = 0`, `theta = 0`.
    pub fn max_gain(&self) -> f64 {
        (self.m + 1.0) * self.detector_area / (2.0 * PI * self.ell * self.ell)
    }
}

/// One user's position and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverState {
    /// Horizontal distance to the LED, metres.
    pub d: f64,
    /// Mean vertical angle, radians.
    pub mean_phi: f64,
    /// Instantaneous vertical angle, radians.
    pub phi: f64,
}

impl ReceiverState {
    pub fn new(d: f64, mean_phi: f64, phi: f64) -> Self {
        Self { d, mean_phi, phi }
    }

    /// Signed incidence angle for the instantaneous orientation.
    pub fn incidence(&self, ell: f64) -> f64 {
        incidence_angle(self.d, self.phi, ell)
    }

    /// Signed incidence angle for the mean orientation.
    pub fn mean_incidence(&self, ell: f64) -> f64 {
        incidence_angle(self.d, self.mean_phi, ell)
    }
}

/// The FOV-independent distance factor of the LOS gain.
///
/// Inside the field of view `h = gain_factor(d) * cos(theta)`, so that
/// `h^2 * inverse_square_gain(d) = cos^2(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGainProfile {
    pub ell: f64,
    /// `h_c^2 = (m + 1) A_r ell^m / (2 pi)`.
    pub channel_constant: f64,
    /// Power applied to `ell^2 + d^2` in the denominator, `(m + 2) / 2`.
    pub exponent: f64,
}

impl PathGainProfile {
    pub fn new(geom: &LedGeometry) -> Self {
        Self {
            ell: geom.ell,
            channel_constant: (geom.m + 1.0) * geom.detector_area * geom.ell.powf(geom.m)
                / (2.0 * PI),
            exponent: (geom.m + 2.0) / 2.0,
        }
    }

    #[inline]
    pub fn gain_factor(&self, d: f64) -> f64 {
        self.channel_constant * (self.ell * self.ell + d * d).powf(-self.exponent)
    }

    /// `1 / g(d)^2`.
    #[inline]
    pub fn inverse_square_gain(&self, d: f64) -> f64 {
        let g = self.gain_factor(d);
        1.0 / (g * g)
    }

    /// Smallest distance at which `x * inverse_square_gain(r) >= level`,
    /// i.e. where `g(r)^2 = x / level`. Returns 0 when the level is already
    /// reached at the LED foot and infinity for `x = 0`.
    pub fn distance_for_level(&self, x: f64, level: f64) -> f64 {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        if level <= 0.0 {
            return 0.0;
        }
        let base = (self.channel_constant * self.channel_constant * level / x)
            .powf(1.0 / (2.0 * self.exponent));
        let sq = base - self.ell * self.ell;
        if sq <= 0.0 {
            0.0
        } else {
            sq.sqrt()
        }
    }
}

/// Evaluates instantaneous and mean gains for one receiver with a single
/// `atan2` and `powf`. Agrees with [`channel_gain`] and
/// [`mean_channel_gain`] to rounding.
#[derive(Debug, Clone, Copy)]
pub struct GainEvaluator {
    profile: PathGainProfile,
    half_fov: f64,
}

impl GainEvaluator {
    pub fn new(geom: &LedGeometry) -> Self {
        Self {
            profile: geom.gain_profile(),
            half_fov: geom.half_fov,
        }
    }

    /// Returns `(h, h_mean)`.
    #[inline]
    pub fn gains(&self, state: &ReceiverState) -> (f64, f64) {
        let base = PI - self.profile.ell.atan2(state.d);
        let g = self.profile.gain_factor(state.d);
        (
            self.gated(g, base - state.phi),
            self.gated(g, base - state.mean_phi),
        )
    }

    #[inline]
    pub fn gain(&self, state: &ReceiverState) -> f64 {
        let theta = incidence_angle(state.d, state.phi, self.profile.ell);
        self.gated(self.profile.gain_factor(state.d), theta)
    }

    #[inline]
    fn gated(&self, g: f64, theta: f64) -> f64 {
        if theta.abs() > self.half_fov {
            0.0
        } else {
            g * theta.cos()
        }
    }
}

/// `m = -1 / log2(cos(hpbw))`.
pub fn lambertian_order(hpbw: f64) -> Result<f64> {
    let c = hpbw.cos();
    if !(hpbw > 0.0 && hpbw < FRAC_PI_2 && c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter {
            name: "hpbw",
            reason: format!("cos(hpbw) must lie in (0, 1), got {c}"),
        });
    }
    Ok(-1.0 / c.log2())
}

/// Signed incidence angle `pi - atan(ell / d) - phi`; `atan(ell / 0) = pi / 2`.
#[inline]
pub fn incidence_angle(d: f64, phi: f64, ell: f64) -> f64 {
    PI - ell.atan2(d) - phi
}

/// Cosine of the irradiance angle for a downward-facing LED.
#[inline]
pub fn irradiance_cosine(d: f64, ell: f64) -> f64 {
    ell / (ell * ell + d * d).sqrt()
}

/// Instantaneous DC gain; exactly zero outside the field of view.
pub fn channel_gain(geom: &LedGeometry, state: &ReceiverState) -> f64 {
    let theta = incidence_angle(state.d, state.phi, geom.ell);
    if theta.abs() > geom.half_fov {
        return 0.0;
    }
    let r2 = geom.ell * geom.ell + state.d * state.d;
    (geom.m + 1.0) * geom.detector_area / (2.0 * PI * r2)
        * irradiance_cosine(state.d, geom.ell).powf(geom.m)
        * theta.cos()
}

/// Average DC gain: the mean vertical angle replaces the instantaneous one,
/// including in the field-of-view gate.
pub fn mean_channel_gain(geom: &LedGeometry, d: f64, mean_phi: f64) -> f64 {
    let mean_theta = incidence_angle(d, mean_phi, geom.ell);
    if mean_theta.abs() > geom.half_fov {
        return 0.0;
    }
    let r2 = geom.ell * geom.ell + d * d;
    (geom.m + 1.0) * geom.detector_area / (2.0 * PI * r2)
        * irradiance_cosine(d, geom.ell).powf(geom.m)
        * (geom.ell.atan2(d) + mean_phi).cos().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lambertian_order_examples() {
        assert_relative_eq!(lambertian_order(60f64.to_radians()).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(lambertian_order(45f64.to_radians()).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(lambertian_order(30f64.to_radians()).unwrap(), 4.8188, epsilon = 1e-4);
    }

    #[test]
    fn lambertian_order_domain() {
        assert!(lambertian_order(0.0).is_err());
        assert!(lambertian_order(PI / 2.0).is_err());
        assert!(lambertian_order(2.0).is_err());
    }

    #[test]
    fn incidence_examples() {
        assert_relative_eq!(incidence_angle(0.0, PI / 2.0, 2.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(incidence_angle(2.0, PI / 2.0, 2.0), PI / 4.0, epsilon = 1e-15);
        assert!(incidence_angle(1e9, PI, 2.0).abs() < 1e-8);
    }

    #[test]
    fn irradiance_examples() {
        assert_eq!(irradiance_cosine(0.0, 2.0), 1.0);
        assert_relative_eq!(irradiance_cosine(2.0, 2.0), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(irradiance_cosine(10.0, 2.0), 0.19612, epsilon = 1e-5);
    }

    #[test]
    fn gain_examples() {
        let g = LedGeometry::reference();
        let up = ReceiverState::new(0.0, PI / 2.0, PI / 2.0);
        assert_relative_eq!(channel_gain(&g, &up), 7.9577e-6, max_relative = 1e-4);
        let off = ReceiverState::new(2.0, PI / 2.0, PI / 2.0);
        assert_relative_eq!(channel_gain(&g, &off), 1.9894e-6, max_relative = 1e-4);
        // theta = 60 deg is outside the 50 deg half-FOV
        let tilted = ReceiverState::new(0.0, PI / 2.0, 30f64.to_radians());
        assert_eq!(channel_gain(&g, &tilted), 0.0);
    }

    #[test]
    fn mean_gain_examples() {
        let g = LedGeometry::reference();
        assert_relative_eq!(mean_channel_gain(&g, 0.0, PI / 2.0), 7.9577e-6, max_relative = 1e-4);
        assert_eq!(mean_channel_gain(&g, 0.0, 30f64.to_radians()), 0.0);
        assert_relative_eq!(mean_channel_gain(&g, 2.0, PI / 2.0), 1.9894e-6, max_relative = 1e-4);
    }

    #[test]
    fn gain_factor_strictly_decreasing() {
        let p = LedGeometry::reference().gain_profile();
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let g = p.gain_factor(i as f64 * 0.01);
            assert!(g > 0.0 && g < prev);
            prev = g;
        }
    }

    #[test]
    fn distance_for_level_inverts_profile() {
        let p = LedGeometry::reference().gain_profile();
        for &r in &[0.5, 3.0, 9.0] {
            let c2 = 0.4;
            let x = c2 / p.inverse_square_gain(r);
            assert_relative_eq!(p.distance_for_level(x, c2), r, max_relative = 1e-10);
        }
        assert_eq!(p.distance_for_level(1.0, 1.0), 0.0);
    }

    #[test]
    fn evaluator_matches_reference_forms() {
        let g = LedGeometry::reference();
        let ev = GainEvaluator::new(&g);
        for i in 0..200 {
            let d = 0.05 * i as f64;
            let phi = (i as f64 * 0.37) % PI;
            let mphi = (i as f64 * 0.53) % PI;
            let s = ReceiverState::new(d, mphi, phi);
            let (h, hm) = ev.gains(&s);
            let h_ref = channel_gain(&g, &s);
            let hm_ref = mean_channel_gain(&g, d, mphi);
            assert!((h - h_ref).abs() <= 1e-12 * h_ref);
            assert!((hm - hm_ref).abs() <= 1e-12 * hm_ref);
            assert_eq!(ev.gain(&s), h);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(LedGeometry::new(0.0, 1.0, 1e-4, 0.5).is_err());
        assert!(LedGeometry::new(2.0, 1.0, 0.0, 0.5).is_err());
        assert!(LedGeometry::new(2.0, 1.0, 1e-4, 2.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn factorisation_and_bounds(d in 0.0f64..10.0, phi in 0.0f64..PI) {
                let g = LedGeometry::reference();
                let p = g.gain_profile();
                let s = ReceiverState::new(d, phi, phi);
                let h = channel_gain(&g, &s);
                let theta = s.incidence(g.ell);
                prop_assert_eq!(h == 0.0, theta.abs() > g.half_fov);
                if h > 0.0 {
                    let f = p.gain_factor(d) * theta.cos();
                    prop_assert!((h - f).abs() <= 1e-12 * f);
                    let ratio = h * h * p.inverse_square_gain(d);
                    prop_assert!((ratio - theta.cos().powi(2)).abs() < 1e-12);
                }
                prop_assert!(h >= 0.0 && h <= g.max_gain() * (1.0 + 1e-12));
            }

            #[test]
            fn mean_gain_matches_zero_deviation(d in 0.0f64..10.0, mphi in 0.0f64..PI) {
                let g = LedGeometry::reference();
                let s = ReceiverState::new(d, mphi, mphi);
                let a = mean_channel_gain(&g, d, mphi);
                let b = channel_gain(&g, &s);
                prop_assert!((a - b).abs() <= 1e-15 * b.max(1e-300) + 1e-22);
            }
        }
    }
}
