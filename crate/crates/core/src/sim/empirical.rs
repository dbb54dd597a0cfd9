//! Empirical CDFs and the samplers that feed them.

use crate::analytic::{GroupRole, GroupVariant};
use crate::error::{invalid, Error, Result};
use crate::geometry::{GainEvaluator, LedGeometry};
use crate::population::{sample_population_into, sample_user, MobilityConfig, PopulationSnapshot};
use crate::rng::{stream, StreamPurpose};
use crate::scheduler::{two_bit_report, FeedbackKind, FeedbackScheme, TwoBits};

/// Right-continuous step CDF of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(invalid("samples", "must not contain NaN"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Fraction of samples `< x`.
    pub fn eval_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.len() as f64
    }

    /// `count` order statistics spread evenly over the sample.
    pub fn quantile_points(&self, count: usize) -> Vec<f64> {
        let n = self.len();
        if count <= 1 || n == 1 {
            return vec![self.sorted[n / 2]];
        }
        let mut pts: Vec<f64> = (0..count)
            .map(|k| self.sorted[k * (n - 1) / (count - 1)])
            .collect();
        pts.dedup();
        pts
    }
}

/// Largest gap between a CDF `f` and the step CDF, checked on both sides of
/// each of `points` evenly spaced sample quantiles. `f` may jump at zero
/// (an atom of zero gain) and is otherwise taken to be continuous.
pub fn sup_distance<F>(emp: &EmpiricalCdf, points: usize, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut worst = 0.0f64;
    for x in emp.quantile_points(points) {
        let v = f(x)?;
        let v_left = if x == 0.0 { f(-f64::MIN_POSITIVE)? } else { v };
        worst = worst
            .max((v - emp.eval(x)).abs())
            .max((v_left - emp.eval_left(x)).abs());
    }
    Ok(worst)
}

/// Squared gains of the first `n` users with nonzero gain.
pub fn sample_nonzero_gains(geom: &LedGeometry, mobility: &MobilityConfig, n: usize, seed: u64) -> Vec<f64> {
    let ev = GainEvaluator::new(geom);
    let mut rng = stream(seed, StreamPurpose::Validation, 1);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let h = ev.gain(&sample_user(mobility, &mut rng));
        if h > 0.0 {
            out.push(h * h);
        }
    }
    out
}

/// For `n` snapshots with at least `k_min` nonzero users, the `k`-th
/// smallest nonzero squared gain for each requested rank.
pub fn sample_ordered_gains(
    geom: &LedGeometry,
    mobility: &MobilityConfig,
    ranks: &[usize],
    k_min: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if ranks.iter().any(|&k| k == 0 || k > k_min) {
        return Err(invalid("ranks", "each rank must lie in [1, k_min]"));
    }
    let ev = GainEvaluator::new(geom);
    let mut rng = stream(seed, StreamPurpose::Validation, 2);
    let mut snap = PopulationSnapshot::default();
    let mut out = vec![Vec::with_capacity(n); ranks.len()];
    let mut nz: Vec<f64> = Vec::with_capacity(mobility.num_users);
    let mut drawn = 0usize;
    while out[0].len() < n {
        sample_population_into(mobility, &ev, &mut rng, &mut snap);
        drawn += 1;
        if drawn > 1000 * n.max(1000) {
            return Err(Error::DegenerateCondition("minimum nonzero count is practically unreachable"));
        }
        nz.clear();
        nz.extend(snap.true_gains.iter().filter(|&&h| h > 0.0).map(|h| h * h));
        if nz.len() < k_min {
            continue;
        }
        nz.sort_by(f64::total_cmp);
        for (o, &k) in out.iter_mut().zip(ranks) {
            o.push(nz[k - 1]);
        }
    }
    Ok(out)
}

/// Squared gains of `n` members of one feedback group, with membership
/// decided from the true state. Distances are drawn only over the group's
/// distance range, which leaves the conditional law unchanged.
pub fn sample_group_gains(
    geom: &LedGeometry,
    mobility: &MobilityConfig,
    scheme: &FeedbackScheme,
    role: GroupRole,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (d_th, _) = scheme.thresholds()?;
    if !matches!(scheme.kind, FeedbackKind::TwoBitInstant | FeedbackKind::TwoBitMean) {
        return Err(invalid("scheme", "group sampling needs a two-bit scheme"));
    }
    let mut sub = *mobility;
    let (tag, want) = match role {
        GroupRole::Weak => {
            sub.d_min = d_th.max(mobility.d_min);
            (3, TwoBits { near: false, aligned: false })
        }
        GroupRole::Strong => {
            sub.d_max = d_th.min(mobility.d_max);
            (4, TwoBits { near: true, aligned: true })
        }
    };
    if !(sub.d_max > sub.d_min) {
        return Err(Error::DegenerateCondition("group distance range is empty"));
    }
    let variant_tag = match scheme.kind {
        FeedbackKind::TwoBitInstant => GroupVariant::Instant,
        _ => GroupVariant::Mean,
    } as u64;
    let ev = GainEvaluator::new(geom);
    let mut rng = stream(seed, StreamPurpose::Validation, tag + 2 * variant_tag);
    let mut out = Vec::with_capacity(n);
    let mut drawn = 0usize;
    while out.len() < n {
        let u = sample_user(&sub, &mut rng);
        drawn += 1;
        if drawn > 10_000 * n.max(100) {
            return Err(Error::DegenerateCondition("group is practically empty"));
        }
        if two_bit_report(&u, scheme, geom)? == Some(want) {
            out.push(ev.gain(&u).powi(2));
        }
    }
    Ok(out)
}
