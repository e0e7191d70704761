//! Random walk across the positive quadrant driven by a general jump law X.
//!
//! From (a, 0) the walk moves by (−X′, X) while its first coordinate is
//! non-negative; once it goes negative at (−r, s) it restarts from (s, 0).

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::RngCore;

use crate::kappa::Q64;
use crate::rng::{exponential, uniform, uniform_pos};
use crate::stats::Welford;

#[derive(Clone, Copy, Debug)]
pub enum IncrementLaw {
    Uniform01,
    Exponential,
    /// Sum of two independent unit exponentials.
    Erlang2,
    /// Square root of a U(0,1) variable.
    SqrtUniform,
    Custom {
        sampler: fn(&mut dyn RngCore) -> f64,
        mean: f64,
        variance: f64,
        fourth_moment_ok: bool,
    },
}

impl PartialEq for IncrementLaw {
    fn eq(&self, other: &Self) -> bool {
        self.label() == other.label() && self.mean() == other.mean() && self.variance() == other.variance()
    }
}

impl IncrementLaw {
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match self {
            IncrementLaw::Uniform01 => uniform(rng),
            IncrementLaw::Exponential => exponential(rng, 1.0),
            IncrementLaw::Erlang2 => exponential(rng, 1.0) + exponential(rng, 1.0),
            IncrementLaw::SqrtUniform => libm::sqrt(uniform_pos(rng)),
            IncrementLaw::Custom { sampler, .. } => sampler(rng),
        }
    }

    /// Exact (μ, σ²) for the named laws.
    pub fn exact_moments(&self) -> Option<(Q64, Q64)> {
        match self {
            IncrementLaw::Uniform01 => Some((Q64::new(1, 2), Q64::new(1, 12))),
            IncrementLaw::Exponential => Some((Q64::from_integer(1), Q64::from_integer(1))),
            IncrementLaw::Erlang2 => Some((Q64::from_integer(2), Q64::from_integer(2))),
            IncrementLaw::SqrtUniform => Some((Q64::new(2, 3), Q64::new(1, 18))),
            IncrementLaw::Custom { .. } => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            IncrementLaw::Custom { mean, .. } => *mean,
            _ => q_to_f64(self.exact_moments().unwrap().0),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            IncrementLaw::Custom { variance, .. } => *variance,
            _ => q_to_f64(self.exact_moments().unwrap().1),
        }
    }

    pub fn fourth_moment_ok(&self) -> bool {
        match self {
            IncrementLaw::Custom { fourth_moment_ok, .. } => *fourth_moment_ok,
            _ => true,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            IncrementLaw::Uniform01 => "uniform",
            IncrementLaw::Exponential => "exponential",
            IncrementLaw::Erlang2 => "erlang2",
            IncrementLaw::SqrtUniform => "sqrt-uniform",
            IncrementLaw::Custom { .. } => "custom",
        }
    }

    /// Limit of 2yμ₁(y) − μ₂(y) for V = R^{1/2}: (μ² − σ²)/(2μ).
    pub fn drift_limit(&self) -> f64 {
        let (m, v) = (self.mean(), self.variance());
        (m * m - v) / (2.0 * m)
    }

    /// Limit of E[Δ(x)]: (σ² + μ²)/(2μ).
    pub fn overshoot_mean_limit(&self) -> f64 {
        let (m, v) = (self.mean(), self.variance());
        (v + m * m) / (2.0 * m)
    }
}

fn q_to_f64(q: Q64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownLaw(pub alloc::string::String);

impl fmt::Display for UnknownLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown jump law `{}` (expected uniform, exponential, erlang2 or sqrt-uniform)", self.0)
    }
}

impl FromStr for IncrementLaw {
    type Err = UnknownLaw;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" | "uniform01" => Ok(IncrementLaw::Uniform01),
            "exponential" | "exp" => Ok(IncrementLaw::Exponential),
            "erlang2" => Ok(IncrementLaw::Erlang2),
            "sqrt-uniform" | "sqrtuniform" => Ok(IncrementLaw::SqrtUniform),
            other => Err(UnknownLaw(other.into())),
        }
    }
}

impl fmt::Display for IncrementLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Steps needed for the partial sums of X′ to exceed `a`.
pub fn renewal_count(law: &IncrementLaw, a: f64, rng: &mut dyn RngCore) -> u64 {
    let mut s = 0.0;
    let mut n = 0;
    while s <= a {
        s += law.sample(rng);
        n += 1;
    }
    n
}

/// Sum of `m` independent copies of X.
pub fn sum_of(law: &IncrementLaw, m: u64, rng: &mut dyn RngCore) -> f64 {
    (0..m).map(|_| law.sample(rng)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    /// Steps taken inside the quadrant.
    pub steps: u64,
    /// Height reached, which is the next starting point.
    pub height: f64,
}

/// One quadrant crossing from (a, 0).
pub fn cross(law: &IncrementLaw, a: f64, rng: &mut dyn RngCore) -> Crossing {
    assert!(a >= 0.0);
    let (mut x, mut y) = (a, 0.0);
    let mut steps = 0;
    while x >= 0.0 {
        x -= law.sample(rng);
        y += law.sample(rng);
        steps += 1;
    }
    Crossing { steps, height: y }
}

pub fn simulate_crossings(law: &IncrementLaw, a0: f64, crossings: usize, rng: &mut dyn RngCore) -> Vec<Crossing> {
    assert!(a0 > 0.0);
    let mut out = Vec::with_capacity(crossings);
    let mut a = a0;
    for _ in 0..crossings {
        let c = cross(law, a, rng);
        a = c.height;
        out.push(c);
    }
    out
}

/// Next crossing length given that the previous crossing took `m` steps.
pub fn next_steps_given(law: &IncrementLaw, m: u64, rng: &mut dyn RngCore) -> u64 {
    let a = sum_of(law, m, rng);
    renewal_count(law, a, rng)
}

/// Probability that S_{k+1} = j given S_k = m for the exponential law, where
/// S = T − 1: C(j+m, m) 2^{−m−j−1}.
pub fn negative_binomial_pmf(m: u64, j: u64) -> f64 {
    let mut log = -((m + j + 1) as f64) * core::f64::consts::LN_2;
    for i in 1..=m {
        log += libm::log((j + i) as f64) - libm::log(i as f64);
    }
    libm::exp(log)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaMoments {
    pub x: f64,
    pub samples: u64,
    pub mean: f64,
    pub se_mean: f64,
    pub second_moment: f64,
    pub se_second_moment: f64,
}

/// Δ(x) = S_{N(x)} − x: the height after a crossing from x, minus x.
pub fn delta_moments(law: &IncrementLaw, x: f64, samples: u64, rng: &mut dyn RngCore) -> DeltaMoments {
    let (mut w1, mut w2) = (Welford::default(), Welford::default());
    for _ in 0..samples {
        let n = renewal_count(law, x, rng);
        let d = sum_of(law, n, rng) - x;
        w1.push(d);
        w2.push(d * d);
    }
    DeltaMoments { x, samples, mean: w1.mean, se_mean: w1.se(), second_moment: w2.mean, se_second_moment: w2.se() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadrantVerdict {
    Transient,
    Recurrent,
    /// μ² and σ² within the guard band but unequal.
    NearCritical,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftPoint {
    pub y: f64,
    pub stat: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadrantReport {
    pub law: IncrementLaw,
    pub mu: f64,
    pub sigma2: f64,
    pub verdict: QuadrantVerdict,
    /// μ² = σ² exactly.
    pub critical: bool,
    pub drift_limit: f64,
    pub drift: Vec<DriftPoint>,
    /// The band at the top grid point does not contradict the verdict.
    pub drift_consistent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadrantBudget {
    pub grid: Vec<u64>,
    pub samples_per_point: u64,
    pub guard: f64,
    pub band_se: f64,
}

impl Default for QuadrantBudget {
    fn default() -> Self {
        QuadrantBudget { grid: alloc::vec![10, 20], samples_per_point: 100_000, guard: 0.02, band_se: 3.0 }
    }
}

/// Verdict from μ² against σ²; equality is recurrent.
pub fn verdict_from_moments(mu: f64, sigma2: f64, exact_gap_sign: Option<core::cmp::Ordering>, guard: f64) -> (QuadrantVerdict, bool) {
    use core::cmp::Ordering::*;
    let sign = exact_gap_sign.unwrap_or_else(|| (mu * mu).partial_cmp(&sigma2).unwrap_or(Equal));
    if sign == Equal {
        return (QuadrantVerdict::Recurrent, true);
    }
    let rel = libm::fabs(mu * mu - sigma2) / (mu * mu + sigma2);
    if rel < guard {
        return (QuadrantVerdict::NearCritical, false);
    }
    match sign {
        Greater => (QuadrantVerdict::Transient, false),
        _ => (QuadrantVerdict::Recurrent, false),
    }
}

pub fn classify_quadrant(law: &IncrementLaw, budget: &QuadrantBudget, rng: &mut dyn RngCore) -> QuadrantReport {
    assert!(law.fourth_moment_ok(), "the classification needs a finite fourth moment");
    let (mu, sigma2) = (law.mean(), law.variance());
    let exact_sign = law.exact_moments().map(|(m, v)| (m * m).cmp(&v));
    let (verdict, critical) = verdict_from_moments(mu, sigma2, exact_sign, budget.guard);
    let drift: Vec<DriftPoint> = budget
        .grid
        .iter()
        .map(|&y| {
            let yf = y as f64;
            let r = yf * yf;
            let mut w = Welford::default();
            for _ in 0..budget.samples_per_point {
                let n = renewal_count(law, r, rng);
                let d = libm::sqrt(sum_of(law, n, rng)) - yf;
                w.push(2.0 * yf * d - d * d);
            }
            DriftPoint { y: yf, stat: w.mean, se: w.se() }
        })
        .collect();
    let drift_consistent = drift.last().is_none_or(|p| {
        let band = budget.band_se * p.se;
        match verdict {
            QuadrantVerdict::Transient => p.stat > -band,
            QuadrantVerdict::Recurrent => p.stat < band,
            QuadrantVerdict::NearCritical => true,
        }
    });
    QuadrantReport { law: *law, mu, sigma2, verdict, critical, drift_limit: law.drift_limit(), drift, drift_consistent }
}
