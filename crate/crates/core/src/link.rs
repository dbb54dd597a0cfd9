//! Two-user power-domain NOMA link arithmetic and the OMA baseline.
//!
//! The weak user decodes its own message treating the strong user's signal
//! as interference. The strong user first decodes the weak user's message
//! (SIC), then its own interference-free. Rates use the optical-channel
//! capacity lower bound `0.5 * log2(1 + e / (2 pi) * sinr)`.

use std::f64::consts::{E, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const OPTICAL_SNR_FACTOR: f64 = E / (2.0 * PI);

/// Power shares `beta_weak^2`, `beta_strong^2` summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub share_weak: f64,
    pub share_strong: f64,
}

/// How configured allocation coefficients map onto power shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerInterpretation {
    /// Values are `beta^2` directly.
    #[default]
    Power,
    /// Values are amplitudes `beta`; their squares are renormalised to unit sum.
    Amplitude,
}

impl PowerAllocation {
    pub fn new(share_weak: f64, share_strong: f64) -> Result<Self> {
        if !(share_weak > 0.0 && share_weak < 1.0 && share_strong > 0.0 && share_strong < 1.0) {
            return Err(invalid("power shares", "both shares must lie in (0, 1)"));
        }
        if (share_weak + share_strong - 1.0).abs() > 1e-12 {
            return Err(invalid(
                "power shares",
                format!("shares must sum to 1, got {}", share_weak + share_strong),
            ));
        }
        if share_weak <= share_strong {
            return Err(invalid(
                "power shares",
                "the weak user must receive the larger share",
            ));
        }
        Ok(Self {
            share_weak,
            share_strong,
        })
    }

    pub fn from_coefficients(weak: f64, strong: f64, how: PowerInterpretation) -> Result<Self> {
        match how {
            PowerInterpretation::Power => Self::new(weak, strong),
            PowerInterpretation::Amplitude => {
                let (w, s) = (weak * weak, strong * strong);
                let total = w + s;
                if !(total > 0.0) {
                    return Err(invalid("power shares", "amplitudes must be nonzero"));
                }
                Self::new(w / total, 1.0 - w / total)
            }
        }
    }
}

/// Target rates and the SINR thresholds they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRates {
    pub rate_weak: f64,
    pub rate_strong: f64,
    pub eps_weak: f64,
    pub eps_strong: f64,
}

impl TargetRates {
    pub fn new(rate_weak: f64, rate_strong: f64) -> Result<Self> {
        if !(rate_weak >= 0.0 && rate_strong >= 0.0) {
            return Err(invalid("target rates", "must be nonnegative"));
        }
        Ok(Self {
            rate_weak,
            rate_strong,
            eps_weak: epsilon_threshold(rate_weak),
            eps_strong: epsilon_threshold(rate_strong),
        })
    }

    pub fn total(&self) -> f64 {
        self.rate_weak + self.rate_strong
    }
}

/// Squared-gain thresholds at one transmit SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainThresholds {
    pub eta_weak: f64,
    pub eta_strong: f64,
}

/// SINR at the strong user while decoding the weak user's message.
#[inline]
pub fn sinr_cross(h_strong_sq: f64, alloc: &PowerAllocation, gamma: f64) -> f64 {
    h_strong_sq * alloc.share_weak / (h_strong_sq * alloc.share_strong + 1.0 / gamma)
}

/// SINR while a user decodes its own message.
#[inline]
pub fn sinr_own(h_sq: f64, alloc: &PowerAllocation, gamma: f64, is_strongest: bool) -> f64 {
    if is_strongest {
        h_sq * alloc.share_strong * gamma
    } else {
        sinr_cross(h_sq, alloc, gamma)
    }
}

#[inline]
pub fn rate_from_sinr(sinr: f64) -> f64 {
    0.5 * (OPTICAL_SNR_FACTOR * sinr).ln_1p() / LN_2
}

/// `(2^(2 R) - 1) * 2 pi / e`, the SINR needed for rate `R`.
#[inline]
pub fn epsilon_threshold(target_rate: f64) -> f64 {
    (2.0 * target_rate * LN_2).exp_m1() / OPTICAL_SNR_FACTOR
}

pub fn eta_thresholds(
    targets: &TargetRates,
    alloc: &PowerAllocation,
    gamma: f64,
) -> Result<GainThresholds> {
    let rhs = alloc.share_strong * targets.eps_weak;
    let denom = alloc.share_weak - rhs;
    if !(denom > 0.0) {
        return Err(Error::InfeasibleAllocation {
            share_weak: alloc.share_weak,
            rhs,
        });
    }
    let eta_weak = (targets.eps_weak / gamma) / denom;
    let eta_strong = eta_weak.max((targets.eps_strong / gamma) / alloc.share_strong);
    Ok(GainThresholds {
        eta_weak,
        eta_strong,
    })
}

/// Outage flags for one scheduled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairOutcome {
    pub weak_outage: bool,
    pub strong_outage: bool,
}

/// Success requires the squared gain to strictly exceed its threshold.
#[inline]
pub fn noma_pair_outcome(h_weak_sq: f64, h_strong_sq: f64, t: &GainThresholds) -> PairOutcome {
    PairOutcome {
        weak_outage: !(h_weak_sq > t.eta_weak),
        strong_outage: !(h_strong_sq > t.eta_strong),
    }
}

pub fn noma_sum_rate(outage: [f64; 2], targets: &TargetRates) -> f64 {
    (1.0 - outage[0]) * targets.rate_weak + (1.0 - outage[1]) * targets.rate_strong
}

/// Same form as the NOMA sum; the per-user outages come from
/// [`oma_thresholds`].
pub fn oma_sum_rate(outage: [f64; 2], targets: &TargetRates) -> f64 {
    noma_sum_rate(outage, targets)
}

/// How the OMA baseline accounts for serving each of the two users in half
/// the transmission period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmaRateModel {
    /// A user active for 1/L of the time must reach `L * R` while active to
    /// average its target `R`: the threshold is `eps(L * R) / gamma`.
    #[default]
    TimeShare,
    /// Full power, full target rate, threshold `eps(R) / gamma`.
    FullSlot,
}

/// Number of users sharing the OMA frame.
pub const OMA_USERS: f64 = 2.0;

/// Squared-gain outage thresholds for the two users under OMA.
pub fn oma_thresholds(targets: &TargetRates, gamma: f64, model: OmaRateModel) -> GainThresholds {
    let (ew, es) = match model {
        OmaRateModel::FullSlot => (targets.eps_weak, targets.eps_strong),
        OmaRateModel::TimeShare => (
            epsilon_threshold(OMA_USERS * targets.rate_weak),
            epsilon_threshold(OMA_USERS * targets.rate_strong),
        ),
    };
    GainThresholds {
        eta_weak: ew / gamma,
        eta_strong: es / gamma,
    }
}

/// OMA outage flags: each user alone, no interference.
#[inline]
pub fn oma_pair_outcome(h_weak_sq: f64, h_strong_sq: f64, t: &GainThresholds) -> PairOutcome {
    noma_pair_outcome(h_weak_sq, h_strong_sq, t)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Everything needed to turn a pair of squared gains into outage flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaConfig {
    pub alloc: PowerAllocation,
    pub targets: TargetRates,
    pub oma: OmaRateModel,
}

impl NomaConfig {
    /// Fails when the allocation cannot support the weak user's target at
    /// any SNR.
    pub fn new(alloc: PowerAllocation, targets: TargetRates, oma: OmaRateModel) -> Result<Self> {
        eta_thresholds(&targets, &alloc, 1.0)?;
        Ok(Self {
            alloc,
            targets,
            oma,
        })
    }

    pub fn thresholds(&self, gamma: f64) -> Result<GainThresholds> {
        eta_thresholds(&self.targets, &self.alloc, gamma)
    }

    pub fn oma_thresholds(&self, gamma: f64) -> GainThresholds {
        oma_thresholds(&self.targets, gamma, self.oma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_alloc() -> PowerAllocation {
        PowerAllocation::new(63.0 / 64.0, 1.0 / 64.0).unwrap()
    }

    #[test]
    fn sinr_cross_examples() {
        let a = reference_alloc();
        assert_relative_eq!(sinr_cross(1e30, &a, 1.0), 63.0, max_relative = 1e-12);
        assert_eq!(sinr_cross(0.0, &a, 1e12), 0.0);
        let (h, g) = (6.333e-11, 1e12);
        let direct = h * (63.0 / 64.0) / (h / 64.0 + 1.0 / g);
        assert_relative_eq!(sinr_cross(h, &a, g), direct, max_relative = 1e-15);
    }

    #[test]
    fn sinr_own_examples() {
        let a = reference_alloc();
        assert_relative_eq!(sinr_own(1.0, &a, 64.0, true), 1.0, epsilon = 1e-15);
        assert_eq!(sinr_own(0.0, &a, 64.0, true), 0.0);
        assert_eq!(sinr_own(0.3, &a, 5.0, false), sinr_cross(0.3, &a, 5.0));
    }

    #[test]
    fn rate_examples() {
        let k = 2.0 * PI / E;
        assert_eq!(rate_from_sinr(0.0), 0.0);
        assert_relative_eq!(rate_from_sinr(k * 15.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(rate_from_sinr(k * 3.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_examples() {
        assert_relative_eq!(epsilon_threshold(2.0), 34.672, epsilon = 1e-3);
        assert_eq!(epsilon_threshold(0.0), 0.0);
        assert_relative_eq!(epsilon_threshold(10.0), 2.4237e6, max_relative = 1e-4);
    }

    #[test]
    fn eta_examples() {
        let t = TargetRates::new(2.0, 10.0).unwrap();
        let g = 1e6;
        let eta = eta_thresholds(&t, &reference_alloc(), g).unwrap();
        assert_relative_eq!(eta.eta_weak * g, 78.33, max_relative = 1e-4);
        assert_relative_eq!(eta.eta_strong * g, 1.5512e8, max_relative = 1e-4);
        let z = TargetRates::new(0.0, 10.0).unwrap();
        assert_eq!(eta_thresholds(&z, &reference_alloc(), g).unwrap().eta_weak, 0.0);
    }

    #[test]
    fn eta_infeasible() {
        let t = TargetRates::new(4.0, 10.0).unwrap();
        let e = eta_thresholds(&t, &reference_alloc(), 1.0).unwrap_err();
        assert!(matches!(e, Error::InfeasibleAllocation { .. }));
        assert!(e.to_string().contains("share_weak"));
    }

    #[test]
    fn pair_outcome_examples() {
        let t = GainThresholds {
            eta_weak: 1.0,
            eta_strong: 4.0,
        };
        let both = noma_pair_outcome(0.0, 0.0, &t);
        assert!(both.weak_outage && both.strong_outage);
        let none = noma_pair_outcome(2.0, 8.0, &t);
        assert!(!none.weak_outage && !none.strong_outage);
        let eq = noma_pair_outcome(1.0, 4.0, &t);
        assert!(eq.weak_outage && eq.strong_outage);
    }

    #[test]
    fn sum_rate_examples() {
        let t = TargetRates::new(2.0, 10.0).unwrap();
        assert_eq!(noma_sum_rate([0.0, 0.0], &t), 12.0);
        assert_eq!(noma_sum_rate([1.0, 1.0], &t), 0.0);
        assert_eq!(noma_sum_rate([0.5, 0.5], &t), 6.0);
    }

    #[test]
    fn oma_examples() {
        let t = TargetRates::new(2.0, 10.0).unwrap();
        assert_eq!(oma_sum_rate([0.0, 0.0], &t), 12.0);
        // vanishing SNR: thresholds blow up, everything is in outage
        let th = oma_thresholds(&t, 1e-300, OmaRateModel::FullSlot);
        let o = oma_pair_outcome(1e-6, 1e-6, &th);
        let p = [o.weak_outage as u8 as f64, o.strong_outage as u8 as f64];
        assert_eq!(oma_sum_rate(p, &t), 0.0);
        // h^2 = 2 eps / gamma for the weak user alone
        let g = 1e10;
        let th = oma_thresholds(&t, g, OmaRateModel::FullSlot);
        let o = oma_pair_outcome(2.0 * t.eps_weak / g, 0.0, &th);
        assert!(!o.weak_outage && o.strong_outage);
        let p = [o.weak_outage as u8 as f64, o.strong_outage as u8 as f64];
        assert_eq!(oma_sum_rate(p, &t), 2.0);
    }

    #[test]
    fn time_share_threshold_uses_doubled_rate() {
        let t = TargetRates::new(2.0, 10.0).unwrap();
        let th = oma_thresholds(&t, 1.0, OmaRateModel::TimeShare);
        assert_relative_eq!(th.eta_weak, epsilon_threshold(4.0), max_relative = 1e-14);
        assert_relative_eq!(th.eta_strong, epsilon_threshold(20.0), max_relative = 1e-14);
    }

    #[test]
    fn allocation_validation() {
        assert!(PowerAllocation::new(0.5, 0.5).is_err());
        assert!(PowerAllocation::new(0.9, 0.2).is_err());
        assert!(PowerAllocation::new(0.1, 0.9).is_err());
        let a = PowerAllocation::from_coefficients(63.0 / 64.0, 1.0 / 64.0, PowerInterpretation::Amplitude)
            .unwrap();
        assert_relative_eq!(a.share_weak, 3969.0 / 3970.0, max_relative = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn epsilon_and_rate_are_inverse(r in 0.0f64..12.0) {
                let back = rate_from_sinr(epsilon_threshold(r));
                prop_assert!((back - r).abs() < 1e-9 * r.max(1.0));
            }

            #[test]
            fn raising_snr_never_creates_outage(
                lw in -30.0f64..-5.0, ls in -30.0f64..-5.0, lg in 0.0f64..40.0, bump in 0.0f64..10.0
            ) {
                let t = TargetRates::new(2.0, 10.0).unwrap();
                let a = reference_alloc();
                let (hw, hs) = (10f64.powf(lw), 10f64.powf(ls));
                let g = 10f64.powf(lg);
                let lo = noma_pair_outcome(hw, hs, &eta_thresholds(&t, &a, g).unwrap());
                let hi = noma_pair_outcome(hw, hs, &eta_thresholds(&t, &a, g * 10f64.powf(bump)).unwrap());
                prop_assert!(!(hi.weak_outage && !lo.weak_outage));
                prop_assert!(!(hi.strong_outage && !lo.strong_outage));
            }

            #[test]
            fn sinr_cross_increasing_and_bounded(h in 0.0f64..1e3, dh in 1e-9f64..1.0, g in 1e-3f64..1e6) {
                let a = reference_alloc();
                let s0 = sinr_cross(h, &a, g);
                let s1 = sinr_cross(h + dh, &a, g);
                prop_assert!(s1 >= s0);
                prop_assert!(s1 <= a.share_weak / a.share_strong * (1.0 + 1e-12));
            }
        }
    }
}
