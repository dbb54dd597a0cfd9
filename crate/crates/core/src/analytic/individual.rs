//! Unordered and ordered CDFs of the nonzero squared gain, and the law of the
//! number of users with nonzero gain.

use serde::{Deserialize, Serialize};

use super::{ratio, AnalyticModel};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, Estimate};

/// `Binomial(K, p)` restricted to `k >= k_min` and renormalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnzDistribution {
    pub p: f64,
    pub k_total: usize,
    pub k_min: usize,
    /// Unconditional mass of `{K_nz >= k_min}`.
    pub tail_mass: f64,
    pmf: Vec<f64>,
}

/// `ln(n!)` for `n = 0..=max`.
pub(crate) fn ln_factorials(max: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(max + 1);
    let mut acc = 0.0f64;
    t.push(0.0);
    for n in 1..=max {
        acc += (n as f64).ln();
        t.push(acc);
    }
    t
}

/// `ln(C(n, k) p^k (1 - p)^(n - k))`, with `0 * ln 0 = 0`.
pub(crate) fn ln_binomial_term(lnf: &[f64], n: usize, k: usize, p: f64) -> f64 {
    let lc = lnf[n] - lnf[k] - lnf[n - k];
    let a = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let b = if k == n { 0.0 } else { (n - k) as f64 * (-p).ln_1p() };
    lc + a + b
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `P(Binomial(n, q) >= k)` summed in the log domain.
pub(crate) fn binomial_upper_tail(lnf: &[f64], n: usize, k: usize, q: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let ls = log_sum_exp((k..=n).map(|l| ln_binomial_term(lnf, n, l, q)));
    ls.exp().min(1.0)
}

impl KnzDistribution {
    pub fn new(p: f64, k_total: usize, k_min: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", format!("must lie in [0, 1], got {p}")));
        }
        if k_min > k_total {
            return Err(invalid("k_min", "must not exceed the number of users"));
        }
        let lnf = ln_factorials(k_total);
        let ln_terms: Vec<f64> = (0..=k_total)
            .map(|k| ln_binomial_term(&lnf, k_total, k, p))
            .collect();
        let ln_tail = log_sum_exp(ln_terms[k_min..].iter().copied());
        if ln_tail == f64::NEG_INFINITY {
            return Err(Error::DegenerateCondition("no users can reach the minimum nonzero count"));
        }
        let pmf = ln_terms
            .iter()
            .enumerate()
            .map(|(k, &lt)| if k < k_min { 0.0 } else { (lt - ln_tail).exp() })
            .collect();
        Ok(Self {
            p,
            k_total,
            k_min,
            tail_mass: ln_tail.exp().min(1.0),
            pmf,
        })
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn pmf_values(&self) -> &[f64] {
        &self.pmf
    }
}

impl AnalyticModel {
    /// Truncated-normalised PMF of the number of nonzero-gain users.
    pub fn knz_pmf(&self, k: usize, k_min: usize) -> Result<f64> {
        Ok(self.knz_distribution(k_min)?.pmf(k))
    }

    pub fn knz_distribution(&self, k_min: usize) -> Result<KnzDistribution> {
        KnzDistribution::new(self.nonzero.value, self.mobility.num_users, k_min)
    }

    /// CDF of the squared gain of a user with nonzero gain.
    pub fn cdf_unordered(&self, x: f64) -> Result<Estimate> {
        if x <= 0.0 {
            return Ok(Estimate::exact(0.0));
        }
        let m = &self.mobility;
        let theta = self.geom.half_fov;
        let r_top = self.profile.distance_for_level(x, 1.0).min(m.d_max);
        if r_top <= m.d_min {
            return Ok(Estimate::exact(1.0));
        }
        let mut bp = self.band_kinks(theta);
        bp.extend(self.level_kinks(x, &[theta.cos().powi(2)]));
        let num = integrate(
            |r| self.delta_f_phi(r, self.clipped_angle_helpers(x, r, theta).psi),
            m.d_min,
            r_top,
            &bp,
            &self.quad,
        )?;
        let span = m.distance_span();
        let den = Estimate {
            value: self.nonzero.value * span,
            error: self.nonzero.error * span,
        };
        self.require_positive(&den, "no user can have nonzero gain")?;
        Ok(ratio(num, den, true))
    }

    /// CDF of the `k`-th smallest nonzero squared gain given at least
    /// `k_min` nonzero users.
    pub fn cdf_ordered(&self, x: f64, k: usize, k_min: usize) -> Result<Estimate> {
        let kt = self.mobility.num_users;
        if !(1..=kt).contains(&k) {
            return Err(invalid("k", format!("rank must lie in [1, {kt}], got {k}")));
        }
        if k > k_min {
            return Err(invalid("k", "rank must not exceed the guaranteed nonzero count"));
        }
        let f = self.cdf_unordered(x)?;
        let dist = self.knz_distribution(k_min)?;
        Ok(ordered_from_unordered(&dist, f, k, self.nonzero))
    }
}

/// Mixes binomial order-statistic tails over the truncated `K_nz` law.
pub(crate) fn ordered_from_unordered(
    dist: &KnzDistribution,
    f: Estimate,
    k: usize,
    p: Estimate,
) -> Estimate {
    let lnf = ln_factorials(dist.k_total);
    let value: f64 = (dist.k_min.max(k)..=dist.k_total)
        .map(|n| dist.pmf(n) * binomial_upper_tail(&lnf, n, k, f.value))
        .sum();
    let kt = dist.k_total as f64;
    let pq = (p.value * (1.0 - p.value)).max(1e-300);
    // d/dF of a binomial tail is at most n; the p-sensitivity of the
    // truncated weights is bounded by K / (p (1 - p)).
    let error = kt * f.error + kt * p.error / pq;
    Estimate {
        value: value.clamp(0.0, 1.0),
        error,
    }
}
