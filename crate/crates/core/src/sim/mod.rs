//! Monte Carlo engine: snapshot, schedule, evaluate, tally.
//!
//! Each trial draws its users from its own random stream and is evaluated
//! at every SNR of the grid against the same snapshot. Tallies are integer
//! counts, so merging them is exact and the result does not depend on how
//! trials are split across workers.

mod empirical;
mod validate;

use serde::{Deserialize, Serialize};

use crate::curve::CurvePoint;
use crate::error::{invalid, Result};
use crate::geometry::{GainEvaluator, LedGeometry, ReceiverState};
use crate::link::{db_to_linear, GainThresholds, NomaConfig, PairOutcome};
use crate::population::{noisy_estimates, sample_population_into, MobilityConfig, PopulationSnapshot};
use crate::rng::{stream, StreamPurpose};
use crate::scheduler::{
    group_users_into, one_bit_report, order_ascending_nonzero_into, order_distance_into,
    select_group_pair, select_individual, two_bit_report, EmptyGroupPolicy, FeedbackKind,
    FeedbackScheme, GroupAssignment, PairingStrategy, ScheduleDecision,
};

pub use empirical::{
    sample_group_gains, sample_nonzero_gains, sample_ordered_gains, sup_distance, EmpiricalCdf,
};
pub use validate::{validate, validate_with_model, ValidationCheck, ValidationOptions, ValidationReport};

/// Standard deviations of the feedback estimation errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Metres.
    pub sigma_d: f64,
    /// Radians.
    pub sigma_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub geom: LedGeometry,
    pub mobility: MobilityConfig,
    pub noma: NomaConfig,
    pub scheme: FeedbackScheme,
    pub strategy: PairingStrategy,
    pub gamma_db: Vec<f64>,
    pub trials: u64,
    pub root_seed: u64,
    pub noise: Option<NoiseConfig>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.gamma_db.is_empty() {
            return Err(invalid("gamma_db", "grid must not be empty"));
        }
        if self.gamma_db.iter().any(|g| !g.is_finite()) {
            return Err(invalid("gamma_db", "grid values must be finite"));
        }
        if self.gamma_db.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("gamma_db", "grid must be strictly increasing"));
        }
        if let Some(n) = self.noise {
            if !(n.sigma_d >= 0.0 && n.sigma_phi >= 0.0) {
                return Err(invalid("noise", "standard deviations must be nonnegative"));
            }
        }
        match (self.scheme.kind.is_group(), self.strategy) {
            (false, PairingStrategy::Individual { strong_rank, .. }) => {
                if strong_rank > self.mobility.num_users {
                    return Err(invalid("strong_rank", "must not exceed the number of users"));
                }
            }
            (true, PairingStrategy::Group { .. }) => {
                self.scheme.thresholds()?;
            }
            _ => {
                return Err(invalid(
                    "strategy",
                    format!("pairing does not match scheme {}", self.scheme.kind.label()),
                ))
            }
        }
        for &g in &self.gamma_db {
            self.noma.thresholds(db_to_linear(g))?;
        }
        Ok(())
    }
}

/// Outcome of one trial across the SNR grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub decision: ScheduleDecision,
    /// Whether the trial enters the outage statistics.
    pub conditioned: bool,
    pub noma: Vec<PairOutcome>,
    pub oma: Vec<PairOutcome>,
}

/// Integer outcome counts. Index `weak_ok | strong_ok << 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub conditioned: u64,
    pub noma: Vec<[u64; 4]>,
    pub oma: Vec<[u64; 4]>,
}

impl Tally {
    pub fn zero(grid_len: usize) -> Self {
        Self {
            trials: 0,
            conditioned: 0,
            noma: vec![[0; 4]; grid_len],
            oma: vec![[0; 4]; grid_len],
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.conditioned += other.conditioned;
        for (a, b) in self.noma.iter_mut().zip(&other.noma) {
            for k in 0..4 {
                a[k] += b[k];
            }
        }
        for (a, b) in self.oma.iter_mut().zip(&other.oma) {
            for k in 0..4 {
                a[k] += b[k];
            }
        }
        self
    }
}

/// Sweep output: NOMA and OMA curves over the same trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub noma: Vec<CurvePoint>,
    pub oma: Vec<CurvePoint>,
    pub tally: Tally,
}

struct Prepared<'a> {
    cfg: &'a ExperimentConfig,
    eval: GainEvaluator,
    noma: Vec<GainThresholds>,
    oma: Vec<GainThresholds>,
}

#[derive(Default)]
struct Scratch {
    snap: PopulationSnapshot,
    view: Vec<ReceiverState>,
    view_gains: Vec<f64>,
    order: Vec<usize>,
    groups: GroupAssignment,
}

impl<'a> Prepared<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let gammas: Vec<f64> = cfg.gamma_db.iter().map(|&g| db_to_linear(g)).collect();
        Ok(Self {
            cfg,
            eval: GainEvaluator::new(&cfg.geom),
            noma: gammas
                .iter()
                .map(|&g| cfg.noma.thresholds(g))
                .collect::<Result<_>>()?,
            oma: gammas.iter().map(|&g| cfg.noma.oma_thresholds(g)).collect(),
        })
    }

    /// Builds the feedback view of the snapshot (true or noisy states) and
    /// returns the scheduling decision.
    fn schedule(&self, t: u64, s: &mut Scratch) -> ScheduleDecision {
        let cfg = self.cfg;
        let users = &s.snap.users;
        s.view.clear();
        match cfg.noise {
            Some(n) => {
                let mut rng = stream(cfg.root_seed, StreamPurpose::FeedbackNoise, t);
                s.view
                    .extend(users.iter().map(|u| noisy_estimates(u, n.sigma_d, n.sigma_phi, &mut rng)));
            }
            None => s.view.extend_from_slice(users),
        }
        let strategy_ranks = match cfg.strategy {
            PairingStrategy::Individual {
                weak_rank,
                strong_rank,
            } => Some((weak_rank, strong_rank)),
            PairingStrategy::Group { .. } => None,
        };
        let kind = cfg.scheme.kind;
        match kind {
            FeedbackKind::FullCsi | FeedbackKind::MeanAngle | FeedbackKind::DistanceOnly => {
                let (i, j) = strategy_ranks.expect("validated pairing");
                s.view_gains.clear();
                match kind {
                    FeedbackKind::FullCsi if cfg.noise.is_none() => {
                        s.view_gains.extend_from_slice(&s.snap.true_gains)
                    }
                    FeedbackKind::FullCsi => {
                        s.view_gains.extend(s.view.iter().map(|u| self.eval.gains(u).0))
                    }
                    FeedbackKind::MeanAngle if cfg.noise.is_none() => {
                        s.view_gains.extend_from_slice(&s.snap.mean_gains)
                    }
                    FeedbackKind::MeanAngle => {
                        s.view_gains.extend(s.view.iter().map(|u| self.eval.gains(u).1))
                    }
                    _ => s.view_gains.extend(s.view.iter().map(|u| u.d)),
                }
                if kind == FeedbackKind::DistanceOnly {
                    order_distance_into(&s.view_gains, &mut s.order);
                } else {
                    order_ascending_nonzero_into(&s.view_gains, &mut s.order);
                }
                select_individual(&s.order, i, j)
            }
            FeedbackKind::TwoBitInstant | FeedbackKind::TwoBitMean | FeedbackKind::OneBitDistance => {
                let scheme = &cfg.scheme;
                let geom = &cfg.geom;
                if kind == FeedbackKind::OneBitDistance {
                    let d_th = scheme.d_threshold.expect("validated thresholds");
                    group_users_into(s.view.iter().map(|u| Some(one_bit_report(u.d, d_th))), &mut s.groups);
                } else {
                    group_users_into(
                        s.view
                            .iter()
                            .map(|u| two_bit_report(u, scheme, geom).expect("validated scheme")),
                        &mut s.groups,
                    );
                }
                let mut rng = stream(cfg.root_seed, StreamPurpose::GroupSelection, t);
                select_group_pair(&s.groups, &mut rng)
            }
        }
    }

    fn conditioned(&self, d: &ScheduleDecision) -> bool {
        match self.cfg.strategy {
            PairingStrategy::Individual { .. } => d.is_complete(),
            PairingStrategy::Group {
                empty_group: EmptyGroupPolicy::Exclude,
            } => d.is_complete(),
            PairingStrategy::Group {
                empty_group: EmptyGroupPolicy::Outage,
            } => true,
        }
    }

    /// Squared true gains of the scheduled users; an empty slot is `0`,
    /// which fails every positive threshold.
    fn pair_gains(&self, d: &ScheduleDecision, s: &Scratch) -> (f64, f64) {
        let g = |k: Option<usize>| k.map_or(0.0, |k| s.snap.true_gains[k].powi(2));
        (g(d.weak), g(d.strong))
    }

    fn run_into(&self, t: u64, s: &mut Scratch, tally: &mut Tally) {
        let mut rng = stream(self.cfg.root_seed, StreamPurpose::Population, t);
        sample_population_into(&self.cfg.mobility, &self.eval, &mut rng, &mut s.snap);
        let d = self.schedule(t, s);
        tally.trials += 1;
        if !self.conditioned(&d) {
            return;
        }
        tally.conditioned += 1;
        let (hw, hs) = self.pair_gains(&d, s);
        for (k, (tn, to)) in self.noma.iter().zip(&self.oma).enumerate() {
            tally.noma[k][outcome_code(hw, hs, tn)] += 1;
            tally.oma[k][outcome_code(hw, hs, to)] += 1;
        }
    }

    fn run_range(&self, range: std::ops::Range<u64>) -> Tally {
        let mut tally = Tally::zero(self.noma.len());
        let mut s = Scratch::default();
        for t in range {
            self.run_into(t, &mut s, &mut tally);
        }
        tally
    }
}

#[inline]
fn outcome_code(hw: f64, hs: f64, t: &GainThresholds) -> usize {
    (hw > t.eta_weak) as usize | (((hs > t.eta_strong) as usize) << 1)
}

fn decode(code: usize) -> PairOutcome {
    PairOutcome {
        weak_outage: code & 1 == 0,
        strong_outage: code & 2 == 0,
    }
}

/// Runs trial `trial_index` alone.
pub fn run_trial(cfg: &ExperimentConfig, trial_index: u64) -> Result<TrialRecord> {
    let p = Prepared::new(cfg)?;
    let mut s = Scratch::default();
    let mut rng = stream(cfg.root_seed, StreamPurpose::Population, trial_index);
    sample_population_into(&cfg.mobility, &p.eval, &mut rng, &mut s.snap);
    let decision = p.schedule(trial_index, &mut s);
    let conditioned = p.conditioned(&decision);
    let (hw, hs) = p.pair_gains(&decision, &s);
    let (noma, oma) = if conditioned {
        (
            p.noma.iter().map(|t| decode(outcome_code(hw, hs, t))).collect(),
            p.oma.iter().map(|t| decode(outcome_code(hw, hs, t))).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(TrialRecord {
        decision,
        conditioned,
        noma,
        oma,
    })
}

/// Trials per work unit.
#[cfg(feature = "parallel")]
const BATCH: u64 = 512;

pub fn run_sweep_sequential(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let p = Prepared::new(cfg)?;
    let tally = p.run_range(0..cfg.trials);
    Ok(summarise(cfg, tally))
}

#[cfg(feature = "parallel")]
pub fn run_sweep_parallel(cfg: &ExperimentConfig) -> Result<SweepResult> {
    use rayon::prelude::*;
    let p = Prepared::new(cfg)?;
    let batches = cfg.trials.div_ceil(BATCH);
    let tally = (0..batches)
        .into_par_iter()
        .map(|b| p.run_range(b * BATCH..((b + 1) * BATCH).min(cfg.trials)))
        .reduce(|| Tally::zero(cfg.gamma_db.len()), Tally::merge);
    Ok(summarise(cfg, tally))
}

/// Parallel when the `parallel` feature is enabled, sequential otherwise.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    #[cfg(feature = "parallel")]
    {
        run_sweep_parallel(cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sweep_sequential(cfg)
    }
}

/// Converts counts into curve points. The CI is the normal approximation
/// on the per-trial realised sum rate.
pub fn summarise(cfg: &ExperimentConfig, tally: Tally) -> SweepResult {
    let r = [cfg.noma.targets.rate_weak, cfg.noma.targets.rate_strong];
    let cond_rate = if tally.trials == 0 {
        0.0
    } else {
        tally.conditioned as f64 / tally.trials as f64
    };
    let to_points = |counts: &[[u64; 4]]| -> Vec<CurvePoint> {
        cfg.gamma_db
            .iter()
            .zip(counts)
            .map(|(&g, c)| curve_point(g, c, r, cond_rate))
            .collect()
    };
    SweepResult {
        noma: to_points(&tally.noma),
        oma: to_points(&tally.oma),
        tally,
    }
}

const Z95: f64 = 1.959_963_984_540_054;

fn curve_point(gamma_db: f64, c: &[u64; 4], r: [f64; 2], conditioning_rate: f64) -> CurvePoint {
    let n: u64 = c.iter().sum();
    if n == 0 {
        return CurvePoint {
            gamma_db,
            sum_rate: 0.0,
            ci_halfwidth: Z95 * (r[0] + r[1]) / 2.0,
            outage_weak: 1.0,
            outage_strong: 1.0,
            conditioning_rate,
        };
    }
    let nf = n as f64;
    let weak_ok = (c[1] + c[3]) as f64;
    let strong_ok = (c[2] + c[3]) as f64;
    let values = [0.0, r[0], r[1], r[0] + r[1]];
    let mean: f64 = (0..4).map(|k| c[k] as f64 * values[k]).sum::<f64>() / nf;
    let ci = if n < 2 {
        Z95 * (r[0] + r[1]) / 2.0
    } else {
        let ss: f64 = (0..4).map(|k| c[k] as f64 * (values[k] - mean).powi(2)).sum();
        Z95 * (ss / (nf - 1.0) / nf).sqrt()
    };
    CurvePoint {
        gamma_db,
        sum_rate: mean,
        ci_halfwidth: ci,
        outage_weak: 1.0 - weak_ok / nf,
        outage_strong: 1.0 - strong_ok / nf,
        conditioning_rate,
    }
}
