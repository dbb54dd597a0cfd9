//! Cross-checks of the closed-form distributions against sampling.

use serde::{Deserialize, Serialize};

use super::empirical::{sample_group_gains, sample_nonzero_gains, sample_ordered_gains, sup_distance, EmpiricalCdf};
use super::ExperimentConfig;
use crate::analytic::{AnalyticModel, GroupRole, GroupVariant};
use crate::error::Result;
use crate::geometry::GainEvaluator;
use crate::population::{sample_population_into, sample_user, MobilityConfig, PopulationSnapshot};
use crate::quadrature::QuadratureConfig;
use crate::rng::{stream, StreamPurpose};
use crate::scheduler::{FeedbackKind, FeedbackScheme, PairingStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Samples per empirical CDF.
    pub cdf_samples: usize,
    /// Single-user draws for the nonzero probability.
    pub gain_draws: usize,
    /// Snapshots for the nonzero-count law.
    pub population_draws: usize,
    /// Quantile points at which CDFs are compared.
    pub grid_points: usize,
    pub cdf_tolerance: f64,
    pub group_tolerance: f64,
    /// Allowed deviation of frequencies, in binomial standard deviations.
    pub sigma_bound: f64,
    pub coincidence_tolerance: f64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            cdf_samples: 1_000_000,
            gain_draws: 10_000_000,
            population_draws: 1_000_000,
            grid_points: 1000,
            cdf_tolerance: 0.01,
            group_tolerance: 0.015,
            sigma_bound: 3.0,
            coincidence_tolerance: 1e-6,
            seed: 0x5eed,
        }
    }
}

impl ValidationOptions {
    /// Ten-fold fewer samples with tolerances widened to match.
    pub fn quick() -> Self {
        Self {
            cdf_samples: 100_000,
            gain_draws: 1_000_000,
            population_draws: 100_000,
            grid_points: 400,
            cdf_tolerance: 0.03,
            group_tolerance: 0.04,
            ..Self::default()
        }
    }

    /// All tolerances divided by `factor`.
    pub fn tightened(self, factor: f64) -> Self {
        Self {
            cdf_tolerance: self.cdf_tolerance / factor,
            group_tolerance: self.group_tolerance / factor,
            sigma_bound: self.sigma_bound / factor,
            coincidence_tolerance: self.coincidence_tolerance / factor,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCheck {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: impl Into<String>, measured: Result<f64>, tolerance: f64, detail: &str) {
        let name = name.into();
        let c = match measured {
            Ok(m) => ValidationCheck {
                name,
                measured: m,
                tolerance,
                passed: m <= tolerance,
                detail: detail.to_string(),
            },
            Err(e) => ValidationCheck {
                name,
                measured: f64::NAN,
                tolerance,
                passed: false,
                detail: format!("{detail}; evaluation failed: {e}"),
            },
        };
        self.checks.push(c);
    }
}

/// Ranks and group thresholds the checks use for a configuration.
fn check_setup(cfg: &ExperimentConfig) -> Result<((usize, usize), (f64, f64))> {
    let ranks = match cfg.strategy {
        PairingStrategy::Individual {
            weak_rank,
            strong_rank,
        } => (weak_rank, strong_rank),
        PairingStrategy::Group { .. } => (1, 10.min(cfg.mobility.num_users)),
    };
    let th = if cfg.scheme.kind.is_group() && cfg.scheme.kind != FeedbackKind::OneBitDistance {
        cfg.scheme.thresholds()?
    } else {
        (0.1 * cfg.mobility.d_max, 0.1 * cfg.geom.half_fov)
    };
    Ok((ranks, th))
}

fn two_bit(cfg: &ExperimentConfig, kind: FeedbackKind, th: (f64, f64)) -> Result<FeedbackScheme> {
    FeedbackScheme::group(kind, th.0, th.1, &cfg.geom)
}

/// Runs every analytic-versus-sampling check for `cfg`.
pub fn validate(cfg: &ExperimentConfig, opts: &ValidationOptions) -> Result<ValidationReport> {
    let (_, th) = check_setup(cfg)?;
    let model = AnalyticModel::new(
        cfg.geom,
        cfg.mobility,
        two_bit(cfg, FeedbackKind::TwoBitInstant, th)?,
        QuadratureConfig::default(),
    )?;
    validate_with_model(cfg, opts, &model)
}

/// As [`validate`], but with the analytic side taken from `model`; used to
/// confirm that the checks detect a perturbed channel law.
pub fn validate_with_model(
    cfg: &ExperimentConfig,
    opts: &ValidationOptions,
    model: &AnalyticModel,
) -> Result<ValidationReport> {
    let ((i, j), th) = check_setup(cfg)?;
    let mut rep = ValidationReport { checks: Vec::new() };
    let geom = &cfg.geom;
    let mob = &cfg.mobility;
    let seed = opts.seed;

    // nonzero probability
    {
        let ev = GainEvaluator::new(geom);
        let mut rng = stream(seed, StreamPurpose::Validation, 10);
        let hits = (0..opts.gain_draws)
            .filter(|_| ev.gain(&sample_user(mob, &mut rng)) > 0.0)
            .count();
        let p = model.nonzero_prob().value;
        let n = opts.gain_draws as f64;
        let z = z_score(hits as f64 / n, p, n);
        rep.push("nonzero-probability", Ok(z), opts.sigma_bound, "deviation in standard deviations");
    }

    // nonzero-count law given at least j nonzero users
    {
        let ev = GainEvaluator::new(geom);
        let mut rng = stream(seed, StreamPurpose::Validation, 11);
        let mut snap = PopulationSnapshot::default();
        let mut counts = vec![0u64; mob.num_users + 1];
        for _ in 0..opts.population_draws {
            sample_population_into(mob, &ev, &mut rng, &mut snap);
            counts[snap.nonzero_count()] += 1;
        }
        let measured = model.knz_distribution(j).map(|dist| {
            let cond: u64 = counts[j..].iter().sum();
            let n = cond as f64;
            (j..=mob.num_users)
                .map(|k| z_score(counts[k] as f64 / n, dist.pmf(k), n))
                .fold(0.0, f64::max)
        });
        rep.push("nonzero-count-pmf", measured, opts.sigma_bound, "largest per-count deviation in standard deviations");
    }

    // unordered and ordered CDFs
    {
        let s = sample_nonzero_gains(geom, mob, opts.cdf_samples, seed);
        let d = EmpiricalCdf::new(s)
            .and_then(|e| sup_distance(&e, opts.grid_points, |x| model.cdf_unordered(x).map(|v| v.value)));
        rep.push("unordered-cdf", d, opts.cdf_tolerance, "sup distance");

        let ranks = [i, j];
        match sample_ordered_gains(geom, mob, &ranks, j, opts.cdf_samples, seed) {
            Ok(samples) => {
                for (&k, s) in ranks.iter().zip(samples) {
                    let d = model.knz_distribution(j).and_then(|_| {
                        let e = EmpiricalCdf::new(s)?;
                        sup_distance(&e, opts.grid_points, |x| model.cdf_ordered(x, k, j).map(|v| v.value))
                    });
                    rep.push(format!("ordered-cdf-rank-{k}"), d, opts.cdf_tolerance, "sup distance");
                }
            }
            Err(e) => {
                for k in ranks {
                    rep.push(format!("ordered-cdf-rank-{k}"), Err(e.clone()), opts.cdf_tolerance, "sup distance");
                }
            }
        }
    }

    // group-conditional CDFs
    for (kind, variant, vname) in [
        (FeedbackKind::TwoBitInstant, GroupVariant::Instant, "instant"),
        (FeedbackKind::TwoBitMean, GroupVariant::Mean, "mean"),
    ] {
        let scheme = two_bit(cfg, kind, th)?;
        let m = model.with_scheme(scheme);
        for (role, rname) in [(GroupRole::Weak, "weak"), (GroupRole::Strong, "strong")] {
            let d = m.group_law(variant, role).and_then(|law| {
                let s = sample_group_gains(geom, mob, &scheme, role, opts.cdf_samples, seed)?;
                let e = EmpiricalCdf::new(s)?;
                sup_distance(&e, opts.grid_points, |x| law.cdf(x).map(|v| v.value))
            });
            rep.push(format!("group-{vname}-{rname}-cdf"), d, opts.group_tolerance, "sup distance");
        }
    }

    // both group theorems agree once orientation is frozen
    {
        let still = MobilityConfig {
            delta_phi: 0.0,
            ..*mob
        };
        let measured = AnalyticModel::new(*geom, still, two_bit(cfg, FeedbackKind::TwoBitInstant, th)?, model.quad)
            .and_then(|m0| {
                let top = m0.profile().gain_factor(0.0).powi(2);
                let mut worst = 0.0f64;
                for role in [GroupRole::Weak, GroupRole::Strong] {
                    let a = m0.group_law(GroupVariant::Instant, role)?;
                    let b = m0.group_law(GroupVariant::Mean, role)?;
                    for k in 0..200 {
                        let x = top * 10f64.powf(-5.0 + 5.0 * k as f64 / 199.0);
                        worst = worst.max((a.cdf(x)?.value - b.cdf(x)?.value).abs());
                    }
                }
                Ok(worst)
            });
        rep.push(
            "group-theorem-coincidence",
            measured,
            opts.coincidence_tolerance,
            "largest pointwise gap without orientation spread",
        );
    }

    Ok(rep)
}

fn z_score(freq: f64, p: f64, n: f64) -> f64 {
    let sd = (p * (1.0 - p) / n).sqrt();
    if sd > 0.0 {
        (freq - p).abs() / sd
    } else if freq == p {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::config;
    use super::*;
    use crate::geometry::PathGainProfile;

    #[test]
    fn quick_validation_passes() {
        let cfg = config(FeedbackKind::FullCsi, 25.0, 1);
        let rep = validate(&cfg, &ValidationOptions::quick()).unwrap();
        for c in &rep.checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn corrupted_channel_exponent_is_detected() {
        let cfg = config(FeedbackKind::FullCsi, 25.0, 1);
        let th = (1.0, 5f64.to_radians());
        let model = AnalyticModel::new(
            cfg.geom,
            cfg.mobility,
            two_bit(&cfg, FeedbackKind::TwoBitInstant, th).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap();
        let good = *model.profile();
        let bad = PathGainProfile {
            exponent: good.exponent * 1.5,
            ..good
        };
        let rep = validate_with_model(&cfg, &ValidationOptions::quick(), &model.with_gain_profile(bad)).unwrap();
        assert!(!rep.get("unordered-cdf").unwrap().passed);
    }
}
