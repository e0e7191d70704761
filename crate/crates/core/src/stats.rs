//! Goodness-of-fit tests and streaming moment accumulators.
//!
//! The regularized incomplete gamma function is written out here because the
//! usual statistics crates need `std`.

use alloc::vec::Vec;

/// Running mean/variance (Welford), mergeable.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn se(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            libm::sqrt(self.variance() / self.n as f64)
        }
    }
}

/// Power sums of `x − shift`, enough for the mean, second moment, variance
/// and their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSums {
    pub shift: f64,
    pub n: u64,
    pub s: [f64; 4],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub se_mean: f64,
    pub second_moment: f64,
    pub se_second_moment: f64,
    pub variance: f64,
    pub se_variance: f64,
}

impl PowerSums {
    pub fn new(shift: f64) -> Self {
        PowerSums { shift, n: 0, s: [0.0; 4] }
    }

    pub fn push(&mut self, x: f64) {
        let d = x - self.shift;
        let d2 = d * d;
        self.n += 1;
        self.s[0] += d;
        self.s[1] += d2;
        self.s[2] += d2 * d;
        self.s[3] += d2 * d2;
    }

    pub fn merge(&mut self, o: &PowerSums) {
        assert_eq!(self.shift, o.shift);
        self.n += o.n;
        for i in 0..4 {
            self.s[i] += o.s[i];
        }
    }

    pub fn estimate(&self) -> MomentEstimate {
        let n = self.n as f64;
        let [a1, a2, a3, a4] = self.s.map(|v| v / n);
        let c = self.shift;
        // Central moments of d (equivalently of x).
        let var = a2 - a1 * a1;
        let mu4 = a4 - 4.0 * a3 * a1 + 6.0 * a2 * a1 * a1 - 3.0 * a1.powi(4);
        let mean = c + a1;
        // x² = d² + 2cd + c²: variance of x² from raw moments of d.
        let e_x2 = a2 + 2.0 * c * a1 + c * c;
        let e_x4 = a4 + 4.0 * c * a3 + 6.0 * c * c * a2 + 4.0 * c * c * c * a1 + c.powi(4);
        let var_x2 = (e_x4 - e_x2 * e_x2).max(0.0);
        MomentEstimate {
            mean,
            se_mean: libm::sqrt(var.max(0.0) / n),
            second_moment: e_x2,
            se_second_moment: libm::sqrt(var_x2 / n),
            variance: var * n / (n - 1.0),
            se_variance: libm::sqrt(((mu4 - var * var).max(0.0)) / n),
        }
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * libm::exp(-x + a * libm::log(x) - ln_gamma(a))
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    // Modified Lentz.
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    libm::exp(-x + a * libm::log(x) - ln_gamma(a)) * h
}

/// Survival function of the chi-square law with `dof` degrees of freedom.
pub fn chi2_sf(x: f64, dof: f64) -> f64 {
    gamma_q(dof / 2.0, x / 2.0)
}

/// CDF of the Gamma law with the given shape and rate.
pub fn gamma_cdf(x: f64, shape: f64, rate: f64) -> f64 {
    gamma_p(shape, rate * x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Pearson goodness of fit. `observed[i]` counts category i, whose model
/// probability is `probs[i]`; `overflow` counts everything else, whose model
/// mass is 1 − Σ probs. Adjacent categories are pooled until each bin expects
/// at least `min_expected`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], overflow: u64, min_expected: f64) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum::<u64>() + overflow;
    let n = total as f64;
    let rest = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    let mut cells: Vec<(f64, f64)> = observed.iter().zip(probs).map(|(&o, &p)| (o as f64, p * n)).collect();
    cells.push((overflow as f64, rest * n));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut cur = (0.0, 0.0);
    for c in cells {
        cur.0 += c.0;
        cur.1 += c.1;
        if cur.1 >= min_expected {
            pooled.push(cur);
            cur = (0.0, 0.0);
        }
    }
    if cur.1 > 0.0 || cur.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += cur.0;
                last.1 += cur.1;
            }
            None => pooled.push(cur),
        }
    }
    let statistic: f64 = pooled
        .iter()
        .map(|(o, e)| if *e > 0.0 { (o - e) * (o - e) / e } else if *o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let dof = pooled.len().saturating_sub(1);
    let p_value = if dof == 0 { 1.0 } else { chi2_sf(statistic, dof as f64) };
    ChiSquare { statistic, dof, p_value, bins: pooled.len() }
}

/// Chi-square for integer samples against a pmf on 1..=probs.len()
/// (`probs[m−1]` is the mass at m).
pub fn chi_square_pmf(samples_counts: &[u64], probs: &[f64]) -> ChiSquare {
    let k = probs.len();
    let observed: Vec<u64> = (0..k).map(|i| samples_counts.get(i + 1).copied().unwrap_or(0)).collect();
    let overflow: u64 = samples_counts.iter().skip(k + 1).sum::<u64>() + samples_counts.first().copied().unwrap_or(0);
    chi_square_gof(&observed, probs, overflow, 5.0)
}

/// Histogram of non-negative integers, index = value.
pub fn histogram(values: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut h = Vec::new();
    for v in values {
        let i = v as usize;
        if h.len() <= i {
            h.resize(i + 1, 0);
        }
        h[i] += 1;
    }
    h
}

/// Kolmogorov–Smirnov distance between the sample and `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Ordinary least squares; returns (slope, intercept).
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
