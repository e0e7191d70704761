//! Diagnostics for the noisy embedded chain Z̃ and its square root W = Z̃^{1/2}.
//!
//! Transitions are drawn through a [`TransitionSampler`]: Z̃' = Z − min(κ, Z − 1)
//! with Z distributed as the simple chain's next value from the current state.

use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::kappa::{KappaSampler, KappaSpec, Q64};
use crate::stats::{gamma_cdf, ks_statistic, ols, Welford};
use crate::table::TransitionSampler;

/// One noisy-chain transition from `z`, returning (Z, Z̃').
pub fn noisy_transition(
    z: u64,
    kappa: &KappaSampler,
    sampler: &dyn TransitionSampler,
    rng: &mut dyn RngCore,
) -> (u64, u64) {
    let y = sampler.sample_next(z, rng);
    let k = kappa.sample(rng);
    (y, (y as i64 - k).max(1) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainGoal {
    /// Stop at the first k ≥ 1 with Z̃_k = 1.
    FirstReturn,
    /// Stop once both the return and the first entry into |x|+|y| = 1 are known.
    ReturnAndAbsorption,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainLimits {
    /// Stop (escaped) as soon as Z̃ exceeds this level.
    pub escape_above: Option<u64>,
    pub traversal_cap: u64,
}

impl Default for ChainLimits {
    fn default() -> Self {
        ChainLimits { escape_above: None, traversal_cap: 100_000_000 }
    }
}

/// Summary of one run of the embedded chain. Step counts follow the urn: a
/// traversal from Z̃ = a ending at distance y takes a + y − 1 steps, and the
/// axis jump one more.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainRecord {
    pub tau: Option<u64>,
    pub tau_q: Option<u64>,
    pub steps: u64,
    pub traversals: u64,
    pub final_z: u64,
    pub max_z: u64,
    pub escaped: bool,
    pub censored: bool,
}

pub fn run_chain(
    z0: u64,
    kappa: &KappaSampler,
    sampler: &dyn TransitionSampler,
    rng: &mut dyn RngCore,
    goal: ChainGoal,
    limits: ChainLimits,
) -> ChainRecord {
    assert!(z0 >= 1);
    let mut rec = ChainRecord { final_z: z0, max_z: z0, ..Default::default() };
    let mut a = z0;
    loop {
        if rec.traversals >= limits.traversal_cap {
            rec.censored = true;
            return rec;
        }
        let (y, next) = noisy_transition(a, kappa, sampler, rng);
        rec.steps += a + y - 1;
        rec.traversals += 1;
        if y == 1 && rec.tau.is_none() {
            rec.tau = Some(rec.steps);
        }
        rec.steps += 1;
        if next == 1 && rec.tau_q.is_none() {
            rec.tau_q = Some(rec.traversals);
        }
        rec.final_z = next;
        rec.max_z = rec.max_z.max(next);
        let done = match goal {
            ChainGoal::FirstReturn => rec.tau_q.is_some(),
            ChainGoal::ReturnAndAbsorption => rec.tau_q.is_some() && rec.tau.is_some(),
        };
        if done {
            return rec;
        }
        if limits.escape_above.is_some_and(|lvl| next > lvl) {
            rec.escaped = true;
            return rec;
        }
        a = next;
    }
}

/// Empirical increment moments of W at one grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentPoint {
    pub x: f64,
    pub samples: u64,
    pub mu1: f64,
    pub se_mu1: f64,
    pub mu2: f64,
    pub se_mu2: f64,
    /// 2xμ₁ − μ₂ (positive: transient).
    pub stat_minus: f64,
    pub se_stat_minus: f64,
    /// 2xμ₁ + μ₂ (negative: positive-recurrent).
    pub stat_plus: f64,
    pub se_stat_plus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentProfile {
    pub points: Vec<MomentPoint>,
}

/// Increments of W from W = x (Z̃ = x²) for each grid value.
pub fn increment_moments(
    kappa: &KappaSpec,
    x_grid: &[u64],
    samples_per_point: u64,
    sampler: &dyn TransitionSampler,
    rng: &mut dyn RngCore,
) -> MomentProfile {
    assert!(samples_per_point > 0);
    let ks = kappa.sampler();
    let points = x_grid
        .iter()
        .map(|&x| {
            let z = x * x;
            let xf = x as f64;
            let (mut d1, mut d2, mut sm, mut sp) = (Welford::default(), Welford::default(), Welford::default(), Welford::default());
            for _ in 0..samples_per_point {
                let (_, next) = noisy_transition(z, &ks, sampler, rng);
                let d = libm::sqrt(next as f64) - xf;
                d1.push(d);
                d2.push(d * d);
                sm.push(2.0 * xf * d - d * d);
                sp.push(2.0 * xf * d + d * d);
            }
            MomentPoint {
                x: xf,
                samples: samples_per_point,
                mu1: d1.mean,
                se_mu1: d1.se(),
                mu2: d2.mean,
                se_mu2: d2.se(),
                stat_minus: sm.mean,
                se_stat_minus: sm.se(),
                stat_plus: sp.mean,
                se_stat_plus: sp.se(),
            }
        })
        .collect();
    MomentProfile { points }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
}

/// Recurrence class of the urn walk itself (not the embedded chain).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WalkClass {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
    /// Mean discard exactly 1: recurrent, null or positive not settled.
    RecurrentUnresolved,
}

/// Class of the embedded chain from the exact mean of κ.
pub fn verdict_from_mean(mean: Q64) -> Verdict {
    if mean < Q64::new(1, 3) {
        Verdict::Transient
    } else if mean <= Q64::new(2, 3) {
        Verdict::NullRecurrent
    } else {
        Verdict::PositiveRecurrent
    }
}

pub fn walk_class_from_mean(mean: Q64) -> WalkClass {
    let one = Q64::from_integer(1);
    if mean < Q64::new(1, 3) {
        WalkClass::Transient
    } else if mean < one {
        WalkClass::NullRecurrent
    } else if mean == one {
        WalkClass::RecurrentUnresolved
    } else {
        WalkClass::PositiveRecurrent
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyConfig {
    pub paths: u64,
    pub start: u64,
    pub escape_above: u64,
    pub grid: Vec<u64>,
    pub samples_per_point: u64,
    /// Transient verdicts need a return fraction at most this.
    pub transient_max_return: f64,
    /// Positive-recurrent verdicts need a return fraction at least this.
    pub positive_min_return: f64,
    pub band_se: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            paths: 10_000,
            start: 100,
            escape_above: 100_000,
            grid: alloc::vec![10, 20, 30],
            samples_per_point: 100_000,
            transient_max_return: 0.9,
            positive_min_return: 0.99,
            band_se: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnFrequency {
    pub paths: u64,
    pub returned: u64,
    pub escaped: u64,
    pub censored: u64,
}

impl ReturnFrequency {
    pub fn fraction(&self) -> f64 {
        self.returned as f64 / self.paths as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub kappa: KappaSpec,
    pub verdict: Verdict,
    pub walk_class: WalkClass,
    pub profile: MomentProfile,
    pub returns: ReturnFrequency,
    /// Empirical signs at the top grid point agree with the verdict.
    pub drift_consistent: bool,
    /// Return fraction meets the configured cutoff for the verdict.
    pub returns_consistent: bool,
    /// A statistic whose sign decides the verdict has a band containing 0.
    pub inconclusive: bool,
}

/// Fraction of paths from `start` that reach Z̃ = 1 before exceeding `escape_above`.
pub fn return_frequency(
    kappa: &KappaSampler,
    start: u64,
    escape_above: u64,
    paths: u64,
    sampler: &dyn TransitionSampler,
    rng: &mut dyn RngCore,
) -> ReturnFrequency {
    let limits = ChainLimits { escape_above: Some(escape_above), traversal_cap: u64::MAX };
    let mut out = ReturnFrequency { paths, returned: 0, escaped: 0, censored: 0 };
    for _ in 0..paths {
        let r = run_chain(start, kappa, sampler, rng, ChainGoal::FirstReturn, limits);
        if r.tau_q.is_some() {
            out.returned += 1;
        } else if r.escaped {
            out.escaped += 1;
        } else {
            out.censored += 1;
        }
    }
    out
}

/// Exact verdict, cross-checked by drift statistics and return frequencies.
pub fn classify(
    kappa: &KappaSpec,
    cfg: &ClassifyConfig,
    sampler: &dyn TransitionSampler,
    rng: &mut dyn RngCore,
) -> ClassificationReport {
    let verdict = verdict_from_mean(kappa.mean);
    let profile = increment_moments(kappa, &cfg.grid, cfg.samples_per_point, sampler, rng);
    let returns = return_frequency(&kappa.sampler(), cfg.start, cfg.escape_above, cfg.paths, sampler, rng);
    let top = profile.points.last().copied();
    let (mut drift_consistent, mut inconclusive) = (true, false);
    if let Some(p) = top {
        let minus_pos = p.stat_minus > cfg.band_se * p.se_stat_minus;
        let minus_neg = p.stat_minus < -cfg.band_se * p.se_stat_minus;
        let plus_pos = p.stat_plus > cfg.band_se * p.se_stat_plus;
        let plus_neg = p.stat_plus < -cfg.band_se * p.se_stat_plus;
        match verdict {
            Verdict::Transient => {
                drift_consistent = !minus_neg;
                inconclusive = !minus_pos;
            }
            Verdict::NullRecurrent => {
                drift_consistent = !minus_pos && !plus_neg;
                inconclusive = !minus_neg || !plus_pos;
            }
            Verdict::PositiveRecurrent => {
                drift_consistent = !plus_pos;
                inconclusive = !plus_neg;
            }
        }
    }
    let f = returns.fraction();
    let returns_consistent = match verdict {
        Verdict::Transient => f <= cfg.transient_max_return,
        Verdict::PositiveRecurrent => f >= cfg.positive_min_return,
        Verdict::NullRecurrent => true,
    };
    ClassificationReport {
        kappa: kappa.clone(),
        verdict,
        walk_class: walk_class_from_mean(kappa.mean),
        profile,
        returns,
        drift_consistent,
        returns_consistent,
        inconclusive,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionReport {
    pub horizon: u64,
    pub samples: usize,
    pub shape: f64,
    pub rate: f64,
    pub ks: f64,
    pub mean: f64,
    pub se_mean: f64,
    pub limit_mean: f64,
}

/// Law of Z̃_k / k from Z̃_0 = 1 against Gamma(2 − 3E[κ], rate 3).
pub fn diffusion_marginal_test(
    kappa: &KappaSpec,
    horizon: u64,
    samples: usize,
    sampler: &dyn TransitionSampler,
    rng: &mut dyn RngCore,
) -> DiffusionReport {
    let mean_k = kappa.mean_f64();
    assert!(kappa.mean < Q64::new(2, 3), "needs E[kappa] < 2/3");
    let ks_sampler = kappa.sampler();
    let mut xs = Vec::with_capacity(samples);
    let mut w = Welford::default();
    for _ in 0..samples {
        let mut z = 1u64;
        for _ in 0..horizon {
            z = noisy_transition(z, &ks_sampler, sampler, rng).1;
        }
        let v = z as f64 / horizon as f64;
        w.push(v);
        xs.push(v);
    }
    let shape = 2.0 - 3.0 * mean_k;
    let rate = 3.0;
    let ks = ks_statistic(&mut xs, |x| gamma_cdf(x, shape, rate));
    DiffusionReport {
        horizon,
        samples,
        shape,
        rate,
        ks,
        mean: w.mean,
        se_mean: w.se(),
        limit_mean: 2.0 / 3.0 - mean_k,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailFit {
    pub exponent: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points_used: usize,
}

/// Fit P(T ≥ t) ∝ t^{−p} by least squares on log-log scale over the upper
/// `upper_fraction` of the sample (censored values count toward the total
/// but never enter the fit).
pub fn fit_tail_exponent(values: &[u64], censored: usize, upper_fraction: f64) -> Option<(f64, usize)> {
    let total = values.len() + censored;
    let mut v: Vec<u64> = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    let keep = libm::floor(total as f64 * upper_fraction) as usize;
    if keep < 10 || n < keep {
        return None;
    }
    let tail = &v[n - keep..];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut i = 0;
    while i < tail.len() {
        let t = tail[i];
        let at_least = (tail.len() - i + censored) as f64;
        xs.push(libm::log(t as f64));
        ys.push(libm::log(at_least / total as f64));
        while i < tail.len() && tail[i] == t {
            i += 1;
        }
    }
    if xs.len() < 3 {
        return None;
    }
    let (slope, _) = ols(&xs, &ys);
    Some((-slope, xs.len()))
}

/// Exponent with a percentile bootstrap interval.
pub fn tail_exponent_with_ci(
    values: &[u64],
    censored: usize,
    upper_fraction: f64,
    resamples: usize,
    rng: &mut dyn RngCore,
) -> Option<TailFit> {
    let (exponent, points_used) = fit_tail_exponent(values, censored, upper_fraction)?;
    let total = values.len() + censored;
    let mut boots = Vec::with_capacity(resamples);
    let mut buf = Vec::with_capacity(values.len());
    for _ in 0..resamples {
        buf.clear();
        let mut cens = 0;
        for _ in 0..total {
            let j = rng.random_range(0..total);
            if j < values.len() {
                buf.push(values[j]);
            } else {
                cens += 1;
            }
        }
        if let Some((e, _)) = fit_tail_exponent(&buf, cens, upper_fraction) {
            boots.push(e);
        }
    }
    if boots.is_empty() {
        return None;
    }
    boots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| boots[((boots.len() - 1) as f64 * p) as usize];
    Some(TailFit { exponent, ci_low: q(0.025), ci_high: q(0.975), points_used })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub samples: u64,
    pub tau_q: TailFit,
    pub tau: TailFit,
    pub predicted_tau_q: f64,
    pub predicted_tau: f64,
    pub censored: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailConfig {
    pub start: u64,
    pub samples: u64,
    pub traversal_cap: u64,
    pub upper_fraction: f64,
    pub resamples: usize,
}

impl Default for TailConfig {
    fn default() -> Self {
        TailConfig { start: 1, samples: 100_000, traversal_cap: 10_000_000, upper_fraction: 0.1, resamples: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TailError {
    NeedsRecurrence,
    InsufficientMass,
}

/// Tail exponents of τ_q and τ for E[κ] ≥ 1/3.
pub fn tail_exponent_tau_q(
    kappa: &KappaSpec,
    cfg: TailConfig,
    sampler: &dyn TransitionSampler,
    rng: &mut dyn RngCore,
) -> Result<TailReport, TailError> {
    if kappa.mean < Q64::new(1, 3) {
        return Err(TailError::NeedsRecurrence);
    }
    let ks = kappa.sampler();
    let limits = ChainLimits { escape_above: None, traversal_cap: cfg.traversal_cap };
    let (mut tq, mut tt) = (Vec::new(), Vec::new());
    let (mut cens_q, mut cens_t) = (0usize, 0usize);
    for _ in 0..cfg.samples {
        let r = run_chain(cfg.start, &ks, sampler, rng, ChainGoal::ReturnAndAbsorption, limits);
        match r.tau_q {
            Some(v) => tq.push(v),
            None => cens_q += 1,
        }
        match r.tau {
            Some(v) => tt.push(v),
            None => cens_t += 1,
        }
    }
    let fq = tail_exponent_with_ci(&tq, cens_q, cfg.upper_fraction, cfg.resamples, rng).ok_or(TailError::InsufficientMass)?;
    let ft = tail_exponent_with_ci(&tt, cens_t, cfg.upper_fraction, cfg.resamples, rng).ok_or(TailError::InsufficientMass)?;
    let m = kappa.mean_f64();
    Ok(TailReport {
        samples: cfg.samples,
        tau_q: fq,
        tau: ft,
        predicted_tau_q: 3.0 * m - 1.0,
        predicted_tau: (3.0 * m - 1.0) / 2.0,
        censored: cens_q.max(cens_t) as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;
    use crate::table::DirectSampler;

    #[test]
    fn verdict_thresholds() {
        assert_eq!(verdict_from_mean(Q64::from_integer(0)), Verdict::Transient);
        assert_eq!(verdict_from_mean(Q64::new(1, 3)), Verdict::NullRecurrent);
        assert_eq!(verdict_from_mean(Q64::new(1, 2)), Verdict::NullRecurrent);
        assert_eq!(verdict_from_mean(Q64::new(2, 3)), Verdict::NullRecurrent);
        assert_eq!(verdict_from_mean(Q64::from_integer(1)), Verdict::PositiveRecurrent);
        assert_eq!(walk_class_from_mean(Q64::from_integer(1)), WalkClass::RecurrentUnresolved);
        assert_eq!(walk_class_from_mean(Q64::new(3, 2)), WalkClass::PositiveRecurrent);
        assert_eq!(walk_class_from_mean(Q64::new(1, 2)), WalkClass::NullRecurrent);
    }

    #[test]
    fn chain_step_accounting_matches_urn() {
        use crate::urn::{simulate_noisy, NoisyCaps};
        // Same law of (τ_q, τ) for κ = 1: compare P(τ_q = 1) and mean τ on short runs.
        let ks = KappaSpec::point(1).sampler();
        let mut r = rng_stream(4, "chain", 0);
        let n = 20_000;
        let (mut a, mut b) = (Welford::default(), Welford::default());
        for _ in 0..n {
            let c = run_chain(3, &ks, &DirectSampler, &mut r, ChainGoal::ReturnAndAbsorption, ChainLimits::default());
            a.push((c.tau_q == Some(1)) as u8 as f64);
            let u = simulate_noisy(3, &ks, &mut r, NoisyCaps { record_z: false, ..Default::default() }).unwrap();
            b.push((u.tau_q == Some(1)) as u8 as f64);
        }
        assert!((a.mean - b.mean).abs() < 4.0 * libm::sqrt(a.se() * a.se() + b.se() * b.se()));
    }

    #[test]
    fn tail_fit_recovers_pareto() {
        let mut r = rng_stream(5, "pareto", 0);
        let vals: Vec<u64> = (0..50_000)
            .map(|_| {
                let u = crate::rng::uniform_pos(&mut r);
                libm::floor(1000.0 * libm::pow(u, -1.0 / 1.5)) as u64
            })
            .collect();
        let (p, _) = fit_tail_exponent(&vals, 0, 0.1).unwrap();
        assert!((p - 1.5).abs() < 0.1, "{p}");
    }
}
