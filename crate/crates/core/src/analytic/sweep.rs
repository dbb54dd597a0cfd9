//! Outage probabilities and sum-rate curves from the closed-form CDFs.

use serde::{Deserialize, Serialize};

use super::group::{GroupLaw, GroupRole, GroupVariant};
use super::individual::{ordered_from_unordered, KnzDistribution};
use super::AnalyticModel;
use crate::curve::CurvePoint;
use crate::error::{invalid, Result};
use crate::link::{db_to_linear, noma_sum_rate, oma_sum_rate, GainThresholds, NomaConfig};
use crate::quadrature::Estimate;
use crate::scheduler::{EmptyGroupPolicy, FeedbackKind, PairingStrategy};

/// NOMA and OMA values at one SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPoint {
    pub noma: CurvePoint,
    pub oma: CurvePoint,
}

/// Outage of the `weak_rank`-th and `strong_rank`-th weakest nonzero users,
/// conditioned on at least `strong_rank` nonzero users.
pub fn outage_individual(
    model: &AnalyticModel,
    noma: &NomaConfig,
    gamma: f64,
    weak_rank: usize,
    strong_rank: usize,
) -> Result<[Estimate; 2]> {
    let dist = individual_law(model, weak_rank, strong_rank)?;
    individual_at(model, &dist, &noma.thresholds(gamma)?, weak_rank, strong_rank)
}

/// Outage of the users drawn from the weak and strong groups.
pub fn outage_group(
    model: &AnalyticModel,
    noma: &NomaConfig,
    gamma: f64,
    variant: GroupVariant,
    policy: EmptyGroupPolicy,
) -> Result<[Estimate; 2]> {
    let g = GroupPair::new(model, variant)?;
    g.outage(&noma.thresholds(gamma)?, policy)
}

fn individual_law(model: &AnalyticModel, weak_rank: usize, strong_rank: usize) -> Result<KnzDistribution> {
    let kt = model.mobility.num_users;
    if !(1 <= weak_rank && weak_rank < strong_rank && strong_rank <= kt) {
        return Err(invalid(
            "ranks",
            format!("need 1 <= weak_rank < strong_rank <= {kt}"),
        ));
    }
    model.knz_distribution(strong_rank)
}

fn individual_at(
    model: &AnalyticModel,
    dist: &KnzDistribution,
    t: &GainThresholds,
    weak_rank: usize,
    strong_rank: usize,
) -> Result<[Estimate; 2]> {
    let p = model.nonzero_prob();
    let fw = model.cdf_unordered(t.eta_weak)?;
    let fs = model.cdf_unordered(t.eta_strong)?;
    Ok([
        ordered_from_unordered(dist, fw, weak_rank, p),
        ordered_from_unordered(dist, fs, strong_rank, p),
    ])
}

struct GroupPair<'a> {
    weak: GroupLaw<'a>,
    strong: GroupLaw<'a>,
    /// Probability that each group is empty.
    empty: [f64; 2],
    both_nonempty: f64,
}

impl<'a> GroupPair<'a> {
    fn new(model: &'a AnalyticModel, variant: GroupVariant) -> Result<Self> {
        let weak = model.group_law(variant, GroupRole::Weak)?;
        let strong = model.group_law(variant, GroupRole::Strong)?;
        let k = model.mobility.num_users as i32;
        let pw = weak.membership_prob().value;
        let ps = strong.membership_prob().value;
        let empty = [(1.0 - pw).powi(k), (1.0 - ps).powi(k)];
        let neither = (1.0 - pw - ps).max(0.0).powi(k);
        let both_nonempty = (1.0 - empty[0] - empty[1] + neither).clamp(0.0, 1.0);
        Ok(Self {
            weak,
            strong,
            empty,
            both_nonempty,
        })
    }

    fn conditioning_rate(&self, policy: EmptyGroupPolicy) -> f64 {
        match policy {
            EmptyGroupPolicy::Exclude => self.both_nonempty,
            EmptyGroupPolicy::Outage => 1.0,
        }
    }

    fn outage(&self, t: &GainThresholds, policy: EmptyGroupPolicy) -> Result<[Estimate; 2]> {
        let one = |law: &GroupLaw, x: f64, empty: f64| -> Result<Estimate> {
            if empty >= 1.0 {
                return Ok(Estimate::exact(1.0));
            }
            let f = law.cdf(x)?;
            Ok(match policy {
                EmptyGroupPolicy::Exclude => f,
                EmptyGroupPolicy::Outage => Estimate {
                    value: empty + (1.0 - empty) * f.value,
                    error: (1.0 - empty) * f.error,
                },
            })
        };
        Ok([
            one(&self.weak, t.eta_weak, self.empty[0])?,
            one(&self.strong, t.eta_strong, self.empty[1])?,
        ])
    }
}

fn point(gamma_db: f64, out: [Estimate; 2], sum: impl Fn([f64; 2]) -> f64, noma: &NomaConfig, cond: f64) -> CurvePoint {
    let v = [out[0].value, out[1].value];
    CurvePoint {
        gamma_db,
        sum_rate: sum(v),
        ci_halfwidth: noma.targets.rate_weak * out[0].error + noma.targets.rate_strong * out[1].error,
        outage_weak: v[0],
        outage_strong: v[1],
        conditioning_rate: cond,
    }
}

/// Analytic NOMA and OMA sum rates over an SNR grid (dB). Available for
/// full-CSI individual pairing and for both two-bit group schemes; the
/// `ci_halfwidth` field carries the propagated quadrature error.
pub fn analytic_sum_rate_sweep(
    model: &AnalyticModel,
    noma: &NomaConfig,
    strategy: PairingStrategy,
    gamma_db: &[f64],
) -> Result<Vec<AnalyticPoint>> {
    let kind = model.scheme.kind;
    let targets = noma.targets;
    let nsum = |o: [f64; 2]| noma_sum_rate(o, &targets);
    let osum = |o: [f64; 2]| oma_sum_rate(o, &targets);
    match (kind, strategy) {
        (
            FeedbackKind::FullCsi,
            PairingStrategy::Individual {
                weak_rank,
                strong_rank,
            },
        ) => {
            let dist = individual_law(model, weak_rank, strong_rank)?;
            let cond = dist.tail_mass;
            gamma_db
                .iter()
                .map(|&g| {
                    let gamma = db_to_linear(g);
                    let n = individual_at(model, &dist, &noma.thresholds(gamma)?, weak_rank, strong_rank)?;
                    let o = individual_at(model, &dist, &noma.oma_thresholds(gamma), weak_rank, strong_rank)?;
                    Ok(AnalyticPoint {
                        noma: point(g, n, nsum, noma, cond),
                        oma: point(g, o, osum, noma, cond),
                    })
                })
                .collect()
        }
        (
            FeedbackKind::TwoBitInstant | FeedbackKind::TwoBitMean,
            PairingStrategy::Group { empty_group },
        ) => {
            let variant = if kind == FeedbackKind::TwoBitInstant {
                GroupVariant::Instant
            } else {
                GroupVariant::Mean
            };
            let pair = GroupPair::new(model, variant)?;
            let cond = pair.conditioning_rate(empty_group);
            gamma_db
                .iter()
                .map(|&g| {
                    let gamma = db_to_linear(g);
                    let n = pair.outage(&noma.thresholds(gamma)?, empty_group)?;
                    let o = pair.outage(&noma.oma_thresholds(gamma), empty_group)?;
                    Ok(AnalyticPoint {
                        noma: point(g, n, nsum, noma, cond),
                        oma: point(g, o, osum, noma, cond),
                    })
                })
                .collect()
        }
        _ => Err(invalid(
            "scheme",
            format!("no closed form for {} with this pairing", kind.label()),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::reference_model;
    use super::*;
    use crate::geometry::LedGeometry;
    use crate::link::{OmaRateModel, PowerAllocation, TargetRates};
    use crate::population::MobilityConfig;
    use crate::quadrature::QuadratureConfig;
    use crate::scheduler::FeedbackScheme;

    fn noma() -> NomaConfig {
        NomaConfig::new(
            PowerAllocation::new(63.0 / 64.0, 1.0 / 64.0).unwrap(),
            TargetRates::new(2.0, 10.0).unwrap(),
            OmaRateModel::TimeShare,
        )
        .unwrap()
    }

    #[test]
    fn individual_outage_vanishes_at_high_snr() {
        let m = reference_model(25.0);
        let o = outage_individual(&m, &noma(), db_to_linear(400.0), 1, 10).unwrap();
        assert!(o[0].value < 1e-9 && o[1].value < 1e-9, "{o:?}");
        let o = outage_individual(&m, &noma(), db_to_linear(0.0), 1, 10).unwrap();
        assert!(o[0].value > 1.0 - 1e-9 && o[1].value > 1.0 - 1e-9);
    }

    #[test]
    fn sweep_is_monotone_and_plateaus() {
        let m = reference_model(25.0);
        let grid: Vec<f64> = (0..=40).map(|i| 120.0 + 5.0 * i as f64).collect();
        let pts = analytic_sum_rate_sweep(&m, &noma(), PairingStrategy::individual(1, 10).unwrap(), &grid)
            .unwrap();
        for w in pts.windows(2) {
            assert!(w[1].noma.sum_rate >= w[0].noma.sum_rate - 1e-6);
            assert!(w[1].oma.sum_rate >= w[0].oma.sum_rate - 1e-6);
        }
        let last = pts.last().unwrap();
        assert!((last.noma.sum_rate - 12.0).abs() < 1e-6);
        assert!((last.oma.sum_rate - 12.0).abs() < 1e-6);
    }

    #[test]
    fn group_outage_floor_with_outage_policy() {
        let geom = LedGeometry::reference();
        let scheme =
            FeedbackScheme::group(FeedbackKind::TwoBitInstant, 1.0, 5f64.to_radians(), &geom).unwrap();
        let m = AnalyticModel::new(
            geom,
            MobilityConfig::reference(25.0, 20).unwrap(),
            scheme,
            QuadratureConfig::default(),
        )
        .unwrap();
        let pair = GroupPair::new(&m, GroupVariant::Instant).unwrap();
        let o = outage_group(&m, &noma(), db_to_linear(400.0), GroupVariant::Instant, EmptyGroupPolicy::Outage)
            .unwrap();
        assert!((o[0].value - pair.empty[0]).abs() < 1e-9);
        assert!((o[1].value - pair.empty[1]).abs() < 1e-9);
        let o = outage_group(&m, &noma(), db_to_linear(400.0), GroupVariant::Instant, EmptyGroupPolicy::Exclude)
            .unwrap();
        assert!(o[0].value < 1e-9 && o[1].value < 1e-9);
    }

    #[test]
    fn unsupported_scheme_is_rejected() {
        let m = reference_model(25.0).with_scheme(FeedbackScheme::individual(FeedbackKind::MeanAngle).unwrap());
        assert!(analytic_sum_rate_sweep(&m, &noma(), PairingStrategy::individual(1, 10).unwrap(), &[100.0]).is_err());
    }
}
