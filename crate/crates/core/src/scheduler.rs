//! Feedback encodings and user selection.
//!
//! Individual scheduling ranks every user by some channel-quality proxy and
//! serves the `i`-th and `j`-th weakest. Group-based scheduling splits users
//! by thresholded feedback bits and draws one user from each group.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{incidence_angle, LedGeometry, ReceiverState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackKind {
    /// Instantaneous channel gains.
    FullCsi,
    /// Average gains computed from distance and mean vertical angle.
    MeanAngle,
    /// Horizontal distance only.
    DistanceOnly,
    /// Two bits from distance and instantaneous incidence angle (Scheme I).
    TwoBitInstant,
    /// Two bits from distance and mean incidence angle (Scheme II).
    TwoBitMean,
    /// One bit from distance only.
    OneBitDistance,
}

impl FeedbackKind {
    pub const ALL: [FeedbackKind; 6] = [
        FeedbackKind::FullCsi,
        FeedbackKind::MeanAngle,
        FeedbackKind::DistanceOnly,
        FeedbackKind::TwoBitInstant,
        FeedbackKind::TwoBitMean,
        FeedbackKind::OneBitDistance,
    ];

    pub fn is_group(self) -> bool {
        matches!(
            self,
            FeedbackKind::TwoBitInstant | FeedbackKind::TwoBitMean | FeedbackKind::OneBitDistance
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            FeedbackKind::FullCsi => "full-csi",
            FeedbackKind::MeanAngle => "mean-angle",
            FeedbackKind::DistanceOnly => "distance-only",
            FeedbackKind::TwoBitInstant => "two-bit-instant",
            FeedbackKind::TwoBitMean => "two-bit-mean",
            FeedbackKind::OneBitDistance => "one-bit-distance",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackScheme {
    pub kind: FeedbackKind,
    /// Distance threshold, metres (group kinds).
    pub d_threshold: Option<f64>,
    /// Incidence-angle threshold, radians (two-bit kinds).
    pub theta_threshold: Option<f64>,
}

impl FeedbackScheme {
    pub fn individual(kind: FeedbackKind) -> Result<Self> {
        if kind.is_group() {
            return Err(invalid("scheme", format!("{} needs thresholds", kind.label())));
        }
        Ok(Self {
            kind,
            d_threshold: None,
            theta_threshold: None,
        })
    }

    pub fn group(
        kind: FeedbackKind,
        d_threshold: f64,
        theta_threshold: f64,
        geom: &LedGeometry,
    ) -> Result<Self> {
        if !kind.is_group() {
            return Err(invalid("scheme", format!("{} is not a group scheme", kind.label())));
        }
        if !(d_threshold > 0.0) {
            return Err(invalid("d_threshold", "must be positive"));
        }
        if kind != FeedbackKind::OneBitDistance
            && !(theta_threshold > 0.0 && theta_threshold <= geom.half_fov)
        {
            return Err(invalid(
                "theta_threshold",
                "must lie in (0, half_fov]",
            ));
        }
        Ok(Self {
            kind,
            d_threshold: Some(d_threshold),
            theta_threshold: Some(theta_threshold),
        })
    }

    pub fn thresholds(&self) -> Result<(f64, f64)> {
        match (self.d_threshold, self.theta_threshold) {
            (Some(d), Some(t)) => Ok((d, t)),
            _ => Err(invalid(
                "scheme",
                format!("{} has no thresholds set", self.kind.label()),
            )),
        }
    }
}

/// The pair chosen for one transmission. Individual scheduling fills both
/// slots or neither; group scheduling may leave either slot empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScheduleDecision {
    pub weak: Option<usize>,
    pub strong: Option<usize>,
    /// Number of users the ordering (or grouping) considered eligible.
    pub nonzero_count: usize,
}

impl ScheduleDecision {
    pub fn is_no_transmission(&self) -> bool {
        self.weak.is_none() && self.strong.is_none()
    }

    pub fn is_complete(&self) -> bool {
        self.weak.is_some() && self.strong.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub weak_group: Vec<usize>,
    pub strong_group: Vec<usize>,
}

/// Users with nonzero gain, ascending by gain; ties keep index order.
pub fn order_full_csi(gains: &[f64]) -> Vec<usize> {
    let mut idx = Vec::with_capacity(gains.len());
    order_ascending_nonzero_into(gains, &mut idx);
    idx
}

/// Same rule applied to average gains.
pub fn order_mean_gain(mean_gains: &[f64]) -> Vec<usize> {
    order_full_csi(mean_gains)
}

pub(crate) fn order_ascending_nonzero_into(gains: &[f64], out: &mut Vec<usize>) {
    out.clear();
    out.extend((0..gains.len()).filter(|&k| gains[k] > 0.0));
    // stable: equal gains stay in index order
    out.sort_by(|&a, &b| gains[a].total_cmp(&gains[b]));
}

/// All users, farthest first (the farthest is ranked weakest).
pub fn order_distance(distances: &[f64]) -> Vec<usize> {
    let mut idx = Vec::with_capacity(distances.len());
    order_distance_into(distances, &mut idx);
    idx
}

pub(crate) fn order_distance_into(distances: &[f64], out: &mut Vec<usize>) {
    out.clear();
    out.extend(0..distances.len());
    out.sort_by(|&a, &b| distances[b].total_cmp(&distances[a]));
}

/// Picks the `i`-th and `j`-th entries (1-based) of a weak-to-strong ordering,
/// or no transmission when fewer than `j` users are eligible.
pub fn select_individual(ordering: &[usize], i: usize, j: usize) -> ScheduleDecision {
    debug_assert!(1 <= i && i < j);
    let n = ordering.len();
    if n < j {
        return ScheduleDecision {
            weak: None,
            strong: None,
            nonzero_count: n,
        };
    }
    ScheduleDecision {
        weak: Some(ordering[i - 1]),
        strong: Some(ordering[j - 1]),
        nonzero_count: n,
    }
}

/// `(near, aligned)` = `(Π[d / d_th], Π[|theta| / theta_th])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoBits {
    pub near: bool,
    pub aligned: bool,
}

/// Two-bit report for a state (or its noisy estimate). Scheme I thresholds
/// the instantaneous incidence angle, Scheme II the mean one.
pub fn two_bit_feedback(
    state: &ReceiverState,
    scheme: &FeedbackScheme,
    geom: &LedGeometry,
) -> Result<TwoBits> {
    let (d_th, theta_th) = scheme.thresholds()?;
    let theta = reference_incidence(state, scheme.kind, geom)?;
    Ok(TwoBits {
        near: state.d <= d_th,
        aligned: theta.abs() <= theta_th,
    })
}

/// Report actually sent by a user under a two-bit scheme: users whose
/// reference incidence angle lies outside the field of view see no signal
/// and stay silent.
pub fn two_bit_report(
    state: &ReceiverState,
    scheme: &FeedbackScheme,
    geom: &LedGeometry,
) -> Result<Option<TwoBits>> {
    let theta = reference_incidence(state, scheme.kind, geom)?;
    if theta.abs() > geom.half_fov {
        return Ok(None);
    }
    two_bit_feedback(state, scheme, geom).map(Some)
}

fn reference_incidence(state: &ReceiverState, kind: FeedbackKind, geom: &LedGeometry) -> Result<f64> {
    match kind {
        FeedbackKind::TwoBitInstant => Ok(incidence_angle(state.d, state.phi, geom.ell)),
        FeedbackKind::TwoBitMean => Ok(incidence_angle(state.d, state.mean_phi, geom.ell)),
        other => Err(invalid(
            "scheme",
            format!("{} is not a two-bit scheme", other.label()),
        )),
    }
}

/// `Π[d / d_th]`.
pub fn one_bit_feedback(d: f64, d_th: f64) -> bool {
    d <= d_th
}

/// Report for the one-bit scheme in two-bit form: the distance bit is
/// duplicated so that [`group_users`] applies unchanged.
pub fn one_bit_report(d: f64, d_th: f64) -> TwoBits {
    let b = one_bit_feedback(d, d_th);
    TwoBits {
        near: b,
        aligned: b,
    }
}

/// `(0,0)` reporters form the weak group, `(1,1)` reporters the strong group.
/// Mixed reports and silent users are never scheduled.
pub fn group_users(reports: &[Option<TwoBits>]) -> GroupAssignment {
    let mut g = GroupAssignment::default();
    group_users_into(reports.iter().copied(), &mut g);
    g
}

pub(crate) fn group_users_into(
    reports: impl Iterator<Item = Option<TwoBits>>,
    g: &mut GroupAssignment,
) {
    g.weak_group.clear();
    g.strong_group.clear();
    for (k, r) in reports.enumerate() {
        match r {
            Some(TwoBits {
                near: false,
                aligned: false,
            }) => g.weak_group.push(k),
            Some(TwoBits {
                near: true,
                aligned: true,
            }) => g.strong_group.push(k),
            _ => {}
        }
    }
}

/// One uniformly drawn member per nonempty group. Always consumes two
/// draws so the stream position does not depend on group sizes.
pub fn select_group_pair<R: Rng + ?Sized>(groups: &GroupAssignment, rng: &mut R) -> ScheduleDecision {
    let uw: f64 = rng.random();
    let us: f64 = rng.random();
    let pick = |set: &[usize], u: f64| -> Option<usize> {
        if set.is_empty() {
            None
        } else {
            Some(set[((u * set.len() as f64) as usize).min(set.len() - 1)])
        }
    };
    ScheduleDecision {
        weak: pick(&groups.weak_group, uw),
        strong: pick(&groups.strong_group, us),
        nonzero_count: groups.weak_group.len() + groups.strong_group.len(),
    }
}

/// How a trial with an empty group is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyGroupPolicy {
    /// Drop the trial from the outage statistics, as for individual
    /// scheduling with too few nonzero users.
    #[default]
    Exclude,
    /// Record an outage for the role whose group is empty.
    Outage,
}

/// How the two served users are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingStrategy {
    /// `weak_rank`-th and `strong_rank`-th weakest users (1-based).
    Individual { weak_rank: usize, strong_rank: usize },
    Group { empty_group: EmptyGroupPolicy },
}

impl PairingStrategy {
    pub fn individual(weak_rank: usize, strong_rank: usize) -> Result<Self> {
        if !(1 <= weak_rank && weak_rank < strong_rank) {
            return Err(invalid("ranks", "need 1 <= weak_rank < strong_rank"));
        }
        Ok(Self::Individual {
            weak_rank,
            strong_rank,
        })
    }
}
