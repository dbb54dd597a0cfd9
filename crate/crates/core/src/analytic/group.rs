//! Squared-gain CDFs inside the weak and strong feedback groups.
//!
//! With instantaneous-angle bits a group is a region of `(d, |theta|)`, so
//! the conditional law only needs the band probabilities `delta_f_phi`.
//! With mean-angle bits membership depends on the mean angle while the gain
//! depends on the instantaneous one; the mean angle is integrated out in
//! closed form over the membership intervals at each distance.

use serde::{Deserialize, Serialize};

use super::{ratio, AnalyticModel};
use crate::error::{Error, Result};
use crate::population::integrated_conditional_cdf;
use crate::quadrature::{integrate, Estimate};

/// Which angle the group bits were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupVariant {
    Instant,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupRole {
    Weak,
    Strong,
}

/// Precomputed normaliser for one group so that repeated CDF evaluations
/// cost a single integral each.
#[derive(Debug, Clone)]
pub struct GroupLaw<'a> {
    model: &'a AnalyticModel,
    variant: GroupVariant,
    role: GroupRole,
    lo: f64,
    hi: f64,
    theta_th: f64,
    /// Distance integral of the membership probability over `[lo, hi]`.
    mass: Estimate,
}

impl<'a> GroupLaw<'a> {
    pub fn new(model: &'a AnalyticModel, variant: GroupVariant, role: GroupRole) -> Result<Self> {
        let (d_th, theta_th) = model.thresholds()?;
        let m = &model.mobility;
        let (lo, hi) = match role {
            GroupRole::Weak => (d_th.max(m.d_min), m.d_max),
            GroupRole::Strong => (m.d_min, d_th.min(m.d_max)),
        };
        if variant == GroupVariant::Mean && !(m.mean_phi_span() > 0.0) {
            return Err(Error::DegenerateCondition(
                "mean-angle groups need a nondegenerate mean-angle range",
            ));
        }
        let mut law = Self {
            model,
            variant,
            role,
            lo,
            hi,
            theta_th,
            mass: Estimate::exact(0.0),
        };
        law.mass = law.compute_mass()?;
        Ok(law)
    }

    /// Unconditional probability that a user belongs to the group.
    pub fn membership_prob(&self) -> Estimate {
        let span = self.model.mobility.distance_span();
        let scale = match self.variant {
            GroupVariant::Instant => span,
            GroupVariant::Mean => span * self.model.mobility.mean_phi_span(),
        };
        Estimate {
            value: (self.mass.value / scale).clamp(0.0, 1.0),
            error: self.mass.error / scale,
        }
    }

    fn compute_mass(&self) -> Result<Estimate> {
        let md = self.model;
        let theta = md.geom.half_fov;
        let tth = self.theta_th;
        let bp = self.breakpoints(&[]);
        match (self.variant, self.role) {
            (GroupVariant::Instant, GroupRole::Weak) => integrate(
                |r| (md.delta_f_phi(r, theta) - md.delta_f_phi(r, tth)).max(0.0),
                self.lo,
                self.hi,
                &bp,
                &md.quad,
            ),
            (GroupVariant::Instant, GroupRole::Strong) => {
                integrate(|r| md.delta_f_phi(r, tth), self.lo, self.hi, &bp, &md.quad)
            }
            (GroupVariant::Mean, _) => integrate(
                |r| {
                    self.mean_intervals(r)
                        .iter()
                        .map(|&(a, b)| (b - a).max(0.0))
                        .sum()
                },
                self.lo,
                self.hi,
                &bp,
                &md.quad,
            ),
        }
    }

    /// Mean-angle intervals that place a user at distance `r` in the group.
    fn mean_intervals(&self, r: f64) -> [(f64, f64); 2] {
        let m = &self.model.mobility;
        let a = self.model.base_angle(r);
        let theta = self.model.geom.half_fov;
        let tth = self.theta_th;
        let clip = |x: f64, y: f64| (x.max(m.mean_phi_min), y.min(m.mean_phi_max));
        match self.role {
            GroupRole::Weak => [clip(a - theta, a - tth), clip(a + tth, a + theta)],
            GroupRole::Strong => [clip(a - tth, a + tth), (0.0, 0.0)],
        }
    }

    /// Integral over the membership intervals of `P(|theta| <= y | mean)`.
    fn mean_band(&self, r: f64, y: f64) -> f64 {
        let a = self.model.base_angle(r);
        let dp = self.model.mobility.delta_phi;
        self.mean_intervals(r)
            .iter()
            .map(|&(lo, hi)| {
                integrated_conditional_cdf(a + y, lo, hi, dp)
                    - integrated_conditional_cdf(a - y, lo, hi, dp)
            })
            .sum::<f64>()
            .max(0.0)
    }

    fn breakpoints(&self, levels: &[(f64, f64)]) -> Vec<f64> {
        let md = self.model;
        let m = &md.mobility;
        let theta = md.geom.half_fov;
        let tth = self.theta_th;
        let dp = m.delta_phi;
        let mut bp = md.band_kinks(theta);
        bp.extend(md.band_kinks(tth));
        if self.variant == GroupVariant::Mean {
            for e in [m.mean_phi_min, m.mean_phi_max] {
                for s in [e - dp, e, e + dp] {
                    for o in [-theta, -tth, tth, theta] {
                        bp.extend(md.distance_at_base_angle(s + o));
                    }
                }
            }
        }
        for &(x, l) in levels {
            bp.extend(md.level_kinks(x, &[l]));
        }
        bp
    }

    /// CDF at `x` of the squared gain of a group member.
    pub fn cdf(&self, x: f64) -> Result<Estimate> {
        if !(self.mass.value > 0.0) {
            return Err(Error::DegenerateCondition("group has zero probability"));
        }
        // Mean-angle members may still point outside the field of view, so
        // that law carries an atom at zero gain; x = 0 is evaluated in full.
        if x < 0.0 || (x == 0.0 && self.variant == GroupVariant::Instant) {
            return Ok(Estimate::exact(0.0));
        }
        let md = self.model;
        let profile = md.profile();
        let theta = md.geom.half_fov;
        let tth = self.theta_th;
        match (self.variant, self.role) {
            (GroupVariant::Instant, GroupRole::Weak) => {
                let d_star = profile
                    .distance_for_level(x, theta.cos().powi(2))
                    .clamp(self.lo, self.hi);
                let bp = self.breakpoints(&[(x, tth.cos().powi(2)), (x, 1.0)]);
                let num = integrate(
                    |r| {
                        let w = md.clipped_angle_helpers(x, r, tth).omega;
                        (md.delta_f_phi(r, theta) - md.delta_f_phi(r, w)).max(0.0)
                    },
                    d_star,
                    self.hi,
                    &bp,
                    &md.quad,
                )?;
                Ok(ratio(num, self.mass, false))
            }
            (GroupVariant::Instant, GroupRole::Strong) => {
                let top = profile.distance_for_level(x, 1.0).clamp(self.lo, self.hi);
                let bp = self.breakpoints(&[(x, tth.cos().powi(2))]);
                let num = integrate(
                    |r| md.delta_f_phi(r, md.clipped_angle_helpers(x, r, tth).psi),
                    self.lo,
                    top,
                    &bp,
                    &md.quad,
                )?;
                Ok(ratio(num, self.mass, true))
            }
            (GroupVariant::Mean, _) => {
                // Beyond d* every member has h^2 <= x; below it the member is
                // above x only inside the band |theta| < min(theta_x, Theta).
                let d_star = profile.distance_for_level(x, 1.0).clamp(self.lo, self.hi);
                let bp = self.breakpoints(&[(x, theta.cos().powi(2))]);
                let num = integrate(
                    |r| self.mean_band(r, md.clipped_angle_helpers(x, r, theta).big_psi),
                    self.lo,
                    d_star,
                    &bp,
                    &md.quad,
                )?;
                Ok(ratio(num, self.mass, true))
            }
        }
    }
}

impl AnalyticModel {
    pub fn group_law(&self, variant: GroupVariant, role: GroupRole) -> Result<GroupLaw<'_>> {
        GroupLaw::new(self, variant, role)
    }

    pub fn group_membership_prob(&self, variant: GroupVariant, role: GroupRole) -> Result<Estimate> {
        Ok(self.group_law(variant, role)?.membership_prob())
    }

    /// Group-conditional CDF with bits from the instantaneous angle.
    pub fn cdf_group_instant(&self, x: f64, role: GroupRole) -> Result<Estimate> {
        self.group_law(GroupVariant::Instant, role)?.cdf(x)
    }

    /// Group-conditional CDF with bits from the mean angle.
    pub fn cdf_group_mean(&self, x: f64, role: GroupRole) -> Result<Estimate> {
        self.group_law(GroupVariant::Mean, role)?.cdf(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GainEvaluator, LedGeometry};
    use crate::population::{sample_user, MobilityConfig};
    use crate::quadrature::QuadratureConfig;
    use crate::scheduler::{FeedbackKind, FeedbackScheme};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn group_model(delta_phi_deg: f64, kind: FeedbackKind, d_th: f64, t_deg: f64) -> AnalyticModel {
        let geom = LedGeometry::reference();
        AnalyticModel::new(
            geom,
            MobilityConfig::reference(delta_phi_deg, 20).unwrap(),
            FeedbackScheme::group(kind, d_th, t_deg.to_radians(), &geom).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap()
    }

    fn log_grid(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 10f64.powf(-16.0 + 6.0 * i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn zero_and_saturation() {
        for kind in [FeedbackKind::TwoBitInstant, FeedbackKind::TwoBitMean] {
            let m = group_model(25.0, kind, 1.0, 5.0);
            let v = if kind == FeedbackKind::TwoBitMean {
                GroupVariant::Mean
            } else {
                GroupVariant::Instant
            };
            let top = m.profile().gain_factor(0.0).powi(2) * 1.0001;
            for role in [GroupRole::Weak, GroupRole::Strong] {
                let law = m.group_law(v, role).unwrap();
                assert_eq!(law.cdf(-1.0).unwrap().value, 0.0);
                if v == GroupVariant::Instant {
                    assert_eq!(law.cdf(0.0).unwrap().value, 0.0);
                }
                assert_relative_eq!(law.cdf(top).unwrap().value, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn monotone_on_grid() {
        for kind in [FeedbackKind::TwoBitInstant, FeedbackKind::TwoBitMean] {
            let m = group_model(25.0, kind, 1.0, 5.0);
            let v = if kind == FeedbackKind::TwoBitMean {
                GroupVariant::Mean
            } else {
                GroupVariant::Instant
            };
            for role in [GroupRole::Weak, GroupRole::Strong] {
                let law = m.group_law(v, role).unwrap();
                let mut prev = 0.0f64;
                for x in log_grid(200) {
                    let e = law.cdf(x).unwrap();
                    assert!(e.value >= prev - e.error - 1e-12, "{kind:?} {role:?} {x}");
                    prev = prev.max(e.value);
                }
            }
        }
    }

    #[test]
    fn theorems_coincide_without_orientation_spread() {
        let m = group_model(0.0, FeedbackKind::TwoBitInstant, 1.0, 5.0);
        for role in [GroupRole::Weak, GroupRole::Strong] {
            let a = m.group_law(GroupVariant::Instant, role).unwrap();
            let b = m.group_law(GroupVariant::Mean, role).unwrap();
            assert_relative_eq!(
                a.membership_prob().value,
                b.membership_prob().value,
                epsilon = 1e-8
            );
            for x in log_grid(60) {
                let (fa, fb) = (a.cdf(x).unwrap().value, b.cdf(x).unwrap().value);
                assert!((fa - fb).abs() < 1e-6, "{role:?} {x}: {fa} vs {fb}");
            }
        }
    }

    #[test]
    fn strong_group_collapses_to_unordered() {
        let m = group_model(25.0, FeedbackKind::TwoBitInstant, 10.0, 50.0);
        let law = m.group_law(GroupVariant::Instant, GroupRole::Strong).unwrap();
        assert_relative_eq!(law.membership_prob().value, m.nonzero_prob().value, epsilon = 1e-9);
        for x in log_grid(40) {
            let a = law.cdf(x).unwrap().value;
            let b = m.cdf_unordered(x).unwrap().value;
            assert!((a - b).abs() < 1e-7, "{x}: {a} vs {b}");
        }
        assert!(m.group_law(GroupVariant::Instant, GroupRole::Weak).unwrap().cdf(1e-12).is_err());
    }

    #[test]
    fn membership_matches_sampling() {
        let m = group_model(25.0, FeedbackKind::TwoBitInstant, 1.0, 5.0);
        let geom = m.geom;
        let (d_th, tth) = m.scheme.thresholds().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let (mut wi, mut si, mut wm, mut sm) = (0usize, 0usize, 0usize, 0usize);
        for _ in 0..n {
            let u = sample_user(&m.mobility, &mut rng);
            let t = u.incidence(geom.ell).abs();
            let tb = u.mean_incidence(geom.ell).abs();
            let fov = geom.half_fov;
            wi += (u.d > d_th && t > tth && t <= fov) as usize;
            si += (u.d <= d_th && t <= tth) as usize;
            wm += (u.d > d_th && tb > tth && tb <= fov) as usize;
            sm += (u.d <= d_th && tb <= tth) as usize;
        }
        let check = |count: usize, v, r| {
            let p = m.group_membership_prob(v, r).unwrap().value;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            let f = count as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * sd + 1e-9, "{v:?} {r:?}: {f} vs {p}");
        };
        check(wi, GroupVariant::Instant, GroupRole::Weak);
        check(si, GroupVariant::Instant, GroupRole::Strong);
        check(wm, GroupVariant::Mean, GroupRole::Weak);
        check(sm, GroupVariant::Mean, GroupRole::Strong);
    }

    #[test]
    fn mean_groups_have_zero_gain_atom() {
        let still = group_model(0.0, FeedbackKind::TwoBitMean, 1.0, 5.0);
        let m = group_model(25.0, FeedbackKind::TwoBitMean, 1.0, 5.0);
        let ev = GainEvaluator::new(&m.geom);
        let (d_th, tth) = m.scheme.thresholds().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for role in [GroupRole::Weak, GroupRole::Strong] {
            let law0 = still.group_law(GroupVariant::Mean, role).unwrap();
            assert!(law0.cdf(0.0).unwrap().value < 1e-9);
            let atom = m.group_law(GroupVariant::Mean, role).unwrap().cdf(0.0).unwrap().value;
            let (mut members, mut zeros) = (0usize, 0usize);
            while members < 200_000 {
                let u = sample_user(&m.mobility, &mut rng);
                let tb = u.mean_incidence(m.geom.ell).abs();
                let inside = match role {
                    GroupRole::Weak => u.d > d_th && tb > tth && tb <= m.geom.half_fov,
                    GroupRole::Strong => u.d <= d_th && tb <= tth,
                };
                if inside {
                    members += 1;
                    zeros += (ev.gain(&u) == 0.0) as usize;
                }
            }
            let emp = zeros as f64 / members as f64;
            let sd = (atom * (1.0 - atom) / members as f64).sqrt().max(1e-6);
            assert!((emp - atom).abs() < 4.0 * sd, "{role:?}: {emp} vs {atom}");
        }
    }

    #[test]
    fn weak_mean_cdf_matches_sampling_at_a_point() {
        let m = group_model(25.0, FeedbackKind::TwoBitMean, 1.0, 5.0);
        let ev = GainEvaluator::new(&m.geom);
        let (d_th, tth) = m.scheme.thresholds().unwrap();
        let x = 2e-12;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut members, mut below) = (0usize, 0usize);
        while members < 200_000 {
            let u = sample_user(&m.mobility, &mut rng);
            let tb = u.mean_incidence(m.geom.ell).abs();
            if u.d > d_th && tb > tth && tb <= m.geom.half_fov {
                members += 1;
                below += (ev.gain(&u).powi(2) <= x) as usize;
            }
        }
        let f = m.cdf_group_mean(x, GroupRole::Weak).unwrap().value;
        let emp = below as f64 / members as f64;
        let sd = (f * (1.0 - f) / members as f64).sqrt();
        assert!((emp - f).abs() < 4.0 * sd, "{emp} vs {f}");
    }
}
