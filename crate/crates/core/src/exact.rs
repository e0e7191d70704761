//! Exact transition law of the embedded chain Z_k and its moment identities.
//!
//! All identities are checked in exact rational arithmetic; infinite sums are
//! truncated at M and the remainder is bounded with the sub-Gaussian tail
//! bound P(|Z − n| > x) ≤ 2 exp(−3x²/(4n + 2x)).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::precision::ratio_to_f64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExactError {
    Domain,
    /// The two closed forms of p(n, m) disagreed.
    Inconsistent { n: u64, m: u64 },
    /// No truncation point below the cap reaches the requested tolerance.
    Tolerance { requested: f64 },
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::Domain => write!(f, "argument outside the domain"),
            ExactError::Inconsistent { n, m } => write!(f, "closed forms of p({n},{m}) disagree"),
            ExactError::Tolerance { requested } => write!(f, "tolerance {requested:e} unreachable"),
        }
    }
}

fn rat(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Memo tables for factorials and Eulerian numbers. Not shared between
/// threads; create one per worker.
#[derive(Clone, Debug)]
pub struct ExactLaw {
    fact: Vec<BigUint>,
    /// `euler[n][k]` = A(n, k) for 1 ≤ k ≤ n; index 0 unused.
    euler: Vec<Vec<BigUint>>,
}

impl Default for ExactLaw {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactLaw {
    pub fn new() -> Self {
        ExactLaw { fact: vec![BigUint::one()], euler: vec![vec![], vec![BigUint::zero(), BigUint::one()]] }
    }

    pub fn factorial(&mut self, n: u64) -> &BigUint {
        while self.fact.len() <= n as usize {
            let k = self.fact.len() as u64;
            let next = self.fact.last().unwrap() * k;
            self.fact.push(next);
        }
        &self.fact[n as usize]
    }

    fn binom(&mut self, n: u64, k: u64) -> BigUint {
        let num = self.factorial(n).clone();
        let fk = self.factorial(k).clone();
        let d = fk * self.factorial(n - k);
        num / d
    }

    /// Eulerian number A(n, k): permutations of n letters with k − 1 descents.
    pub fn eulerian(&mut self, n: u64, k: u64) -> Result<BigUint, ExactError> {
        if n == 0 || k == 0 || k > n {
            return Err(ExactError::Domain);
        }
        while self.euler.len() <= n as usize {
            let r = self.euler.len() as u64;
            let prev = &self.euler[r as usize - 1];
            let mut row = vec![BigUint::zero(); r as usize + 1];
            for kk in 1..=r {
                let a = if kk >= 2 { &prev[kk as usize - 1] * (r - kk + 1) } else { BigUint::zero() };
                let b = if kk < r { &prev[kk as usize] * kk } else { BigUint::zero() };
                row[kk as usize] = a + b;
            }
            self.euler.push(row);
        }
        Ok(self.euler[n as usize][k as usize].clone())
    }

    /// p(n, m) = m·A(n+m−1, n)/(n+m)!.
    pub fn p_eulerian(&mut self, n: u64, m: u64) -> Result<BigRational, ExactError> {
        if n == 0 || m == 0 {
            return Err(ExactError::Domain);
        }
        let a = self.eulerian(n + m - 1, n)?;
        Ok(rat(a * m, self.factorial(n + m).clone()))
    }

    /// The alternating-sum form m Σ_r (−1)^r (m−r)^{n+m−1} / (r!(n+m−r)!).
    pub fn p_alternating(&mut self, n: u64, m: u64) -> Result<BigRational, ExactError> {
        if n == 0 || m == 0 {
            return Err(ExactError::Domain);
        }
        let total = self.factorial(n + m).clone();
        // Common denominator (n+m)!: term_r = C(n+m, r)(m−r)^{n+m−1}.
        let mut acc = BigInt::zero();
        for r in 0..=m {
            let t = BigInt::from(self.binom(n + m, r) * BigUint::from(m - r).pow((n + m - 1) as u32));
            if r % 2 == 0 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        Ok(BigRational::new(acc * BigInt::from(m), BigInt::from(total)))
    }

    /// p(n, m), computed both ways; a disagreement is an error.
    pub fn p(&mut self, n: u64, m: u64) -> Result<BigRational, ExactError> {
        let a = self.p_eulerian(n, m)?;
        if a != self.p_alternating(n, m)? {
            return Err(ExactError::Inconsistent { n, m });
        }
        Ok(a)
    }

    /// r(n, m) = (n + m) p(n, m)/m.
    pub fn r(&mut self, n: u64, m: u64) -> Result<BigRational, ExactError> {
        Ok(self.p_eulerian(n, m)? * int(n + m) / int(m))
    }

    /// P(Z_{k+1} > m | Z_k = n).
    pub fn survival(&mut self, n: u64, m: u64) -> Result<BigRational, ExactError> {
        if n == 0 {
            return Err(ExactError::Domain);
        }
        let mut acc = BigInt::zero();
        for i in 0..=n {
            let t = BigInt::from(self.binom(m + n, i) * BigUint::from(n - i).pow((n + m) as u32));
            if i % 2 == 0 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        Ok(BigRational::new(acc, BigInt::from(self.factorial(m + n).clone())))
    }

    /// Row p(n, 1..=M) with M the least value whose certified tail is below `tail_tol`.
    pub fn row(&mut self, n: u64, tail_tol: f64) -> Result<TransitionRow, ExactError> {
        let big_m = truncation_point(n, tail_tol, |m| expotail(n, m))?;
        let mut probs = Vec::with_capacity(big_m as usize);
        for m in 1..=big_m {
            probs.push(self.p_eulerian(n, m)?);
        }
        Ok(TransitionRow { n, probs, tail_bound: up(expotail(n, big_m)) })
    }

    fn moment_sum(&mut self, n: u64, big_m: u64, w: impl Fn(u64) -> BigRational) -> Result<BigRational, ExactError> {
        let mut s = BigRational::zero();
        for m in 1..=big_m {
            s += self.p_eulerian(n, m)? * w(m);
        }
        Ok(s)
    }

    /// E[Z_{k+1} | Z_k = n] bracketed to `tol`.
    pub fn mean(&mut self, n: u64, tol: f64) -> Result<Bracket, ExactError> {
        let t = |m: u64| mean_tail(n, m);
        let big_m = truncation_point(n, tol, t)?;
        Ok(Bracket { lower: self.moment_sum(n, big_m, int)?, slack: up(t(big_m)), m: big_m })
    }

    /// E[Z_{k+1}² | Z_k = n] bracketed to `tol`.
    pub fn second_moment(&mut self, n: u64, tol: f64) -> Result<Bracket, ExactError> {
        let t = |m: u64| second_tail(n, m);
        let big_m = truncation_point(n, tol, t)?;
        Ok(Bracket { lower: self.moment_sum(n, big_m, |m| int(m * m))?, slack: up(t(big_m)), m: big_m })
    }

    /// E_n[1/Z] bracketed to `tol`.
    pub fn mean_recip(&mut self, n: u64, tol: f64) -> Result<Bracket, ExactError> {
        let t = |m: u64| expotail(n, m) / (m + 1) as f64;
        let big_m = truncation_point(n, tol, t)?;
        let lower = self.moment_sum(n, big_m, |m| BigRational::new(BigInt::one(), BigInt::from(m)))?;
        Ok(Bracket { lower, slack: up(t(big_m)), m: big_m })
    }

    /// E_n[1/(Z²(Z+1))] bracketed to `tol`.
    pub fn mean_recip_cubic(&mut self, n: u64, tol: f64) -> Result<Bracket, ExactError> {
        let t = |m: u64| expotail(n, m) / ((m + 1) as f64 * (m + 1) as f64 * (m + 2) as f64);
        let big_m = truncation_point(n, tol, t)?;
        let lower = self.moment_sum(n, big_m, |m| BigRational::new(BigInt::one(), BigInt::from(m * m * (m + 1))))?;
        Ok(Bracket { lower, slack: up(t(big_m)), m: big_m })
    }

    /// Checks E[Z²] = n² + n + E[Z]; returns |residual| and its certified allowance.
    pub fn second_moment_identity(&mut self, n: u64, tol: f64) -> Result<IdentityCheck, ExactError> {
        let s1 = self.mean(n, tol)?;
        let s2 = self.second_moment(n, tol)?;
        let diff = &s2.lower - int(n * n + n) - &s1.lower;
        Ok(IdentityCheck { residual: ratio_to_f64(&diff).abs(), allowance: s1.slack + s2.slack })
    }

    /// Both reciprocal-moment identities and the supermartingale gap at n ≥ 2.
    pub fn recip_identities(&mut self, n: u64, tol: f64) -> Result<RecipReport, ExactError> {
        if n < 2 {
            return Err(ExactError::Domain);
        }
        let inv = self.mean_recip(n, tol)?;
        let inv_prev = self.mean_recip(n - 1, tol)?;
        let cub = self.mean_recip_cubic(n, tol)?;
        let mn = self.mean(n, tol)?;
        let mp = self.mean(n - 1, tol)?;
        let nn = int(n);
        let rhs1 = (&mn.lower - &mp.lower) / &nn;
        let rhs2 = (&inv_prev.lower - &inv.lower) / &nn;
        let r1 = ratio_to_f64(&(&inv.lower - &rhs1)).abs();
        let r2 = ratio_to_f64(&(&cub.lower - &rhs2)).abs();
        let a1 = inv.slack + (mn.slack + mp.slack) / n as f64;
        let a2 = cub.slack + (inv_prev.slack + inv.slack) / n as f64;
        // h(x) = 1/x − 1/(x²(x+1)); gap = h(n) − E_n[h(Z)].
        let h_n = BigRational::new(BigInt::one(), BigInt::from(n))
            - BigRational::new(BigInt::one(), BigInt::from(n * n * (n + 1)));
        let e_h = &inv.lower - &cub.lower;
        let gap = ratio_to_f64(&(h_n - e_h));
        Ok(RecipReport {
            n,
            e_recip: ratio_to_f64(&inv.lower),
            e_recip_minus_inv_n: ratio_to_f64(&(&inv.lower - BigRational::new(BigInt::one(), BigInt::from(n)))),
            identity1: IdentityCheck { residual: r1, allowance: a1 },
            identity2: IdentityCheck { residual: r2, allowance: a2 },
            h_gap: gap,
            h_gap_slack: inv.slack + cub.slack,
        })
    }
}

/// Value known to lie in [lower, lower + slack].
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    pub lower: BigRational,
    pub slack: f64,
    /// Truncation point used.
    pub m: u64,
}

impl Bracket {
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.lower)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck {
    pub residual: f64,
    pub allowance: f64,
}

impl IdentityCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= self.allowance + tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecipReport {
    pub n: u64,
    pub e_recip: f64,
    pub e_recip_minus_inv_n: f64,
    /// E_n[1/Z] = (E_n[Z] − E_{n−1}[Z])/n.
    pub identity1: IdentityCheck,
    /// E_n[1/(Z²(Z+1))] = (E_{n−1}[1/Z] − E_n[1/Z])/n.
    pub identity2: IdentityCheck,
    /// h(n) − E_n[h(Z)], a lower estimate; the truth lies within `h_gap_slack`.
    pub h_gap: f64,
    pub h_gap_slack: f64,
}

/// Exact pmf of Z_{k+1} given Z_k = n on 1..=M.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRow {
    pub n: u64,
    /// `probs[m − 1]` = p(n, m).
    pub probs: Vec<BigRational>,
    /// Upper bound on Σ_{m > M} p(n, m).
    pub tail_bound: f64,
}

impl TransitionRow {
    pub fn max_m(&self) -> u64 {
        self.probs.len() as u64
    }

    pub fn partial_sum(&self) -> BigRational {
        self.probs.iter().fold(BigRational::zero(), |a, p| a + p)
    }

    /// (n+m)·p(n,m)/m.
    pub fn r(&self, m: u64) -> BigRational {
        &self.probs[m as usize - 1] * int(self.n + m) / int(m)
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        self.probs.iter().map(ratio_to_f64).collect()
    }
}

/// Bound on P(|Z − n| > x) from the sub-Gaussian tail bound.
pub fn expotail_x(n: u64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (2.0 * libm::exp(-3.0 * x * x / (4.0 * n as f64 + 2.0 * x))).min(1.0)
}

/// Bound on P(Z > m | n).
pub fn expotail(n: u64, m: u64) -> f64 {
    expotail_x(n, m as f64 - n as f64)
}

fn up(v: f64) -> f64 {
    v * (1.0 + 1e-12) + f64::MIN_POSITIVE
}

/// Σ_{j > m} w(j) P(Z > j) bounded term by term; the remainder after the
/// terms fall below 1e-40 is bounded geometrically (the log-tail is convex).
fn weighted_tail(n: u64, m: u64, w: impl Fn(u64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut j = m + 1;
    let mut prev = f64::INFINITY;
    loop {
        let t = w(j) * expotail(n, j);
        sum += t;
        if t < 1e-40 * sum.max(1e-300) + 1e-300 && t < 0.5 * prev {
            return sum + t;
        }
        prev = t;
        j += 1;
        if j > m + 1_000_000 {
            return f64::INFINITY;
        }
    }
}

fn mean_tail(n: u64, m: u64) -> f64 {
    (m + 1) as f64 * expotail(n, m) + weighted_tail(n, m, |_| 1.0)
}

fn second_tail(n: u64, m: u64) -> f64 {
    let mp = (m + 1) as f64;
    mp * mp * expotail(n, m) + weighted_tail(n, m, |j| (2 * j + 1) as f64)
}

fn truncation_point(n: u64, tol: f64, tail: impl Fn(u64) -> f64) -> Result<u64, ExactError> {
    let cap = n + 100_000;
    let mut m = n.max(1);
    while tail(m) > tol {
        m += 1;
        if m > cap {
            return Err(ExactError::Tolerance { requested: tol });
        }
    }
    Ok(m)
}

pub fn eulerian(n: u64, k: u64) -> Result<BigUint, ExactError> {
    ExactLaw::new().eulerian(n, k)
}

pub fn p_exact(n: u64, m: u64) -> Result<BigRational, ExactError> {
    ExactLaw::new().p(n, m)
}

pub fn survival_exact(n: u64, m: u64) -> Result<BigRational, ExactError> {
    ExactLaw::new().survival(n, m)
}

/// Mean and second moment, f64 summaries of the exact law.
pub fn mean_exact(n: u64, tol: f64) -> Result<Bracket, ExactError> {
    ExactLaw::new().mean(n, tol)
}

pub fn second_moment_exact(n: u64, tol: f64) -> Result<Bracket, ExactError> {
    ExactLaw::new().second_moment(n, tol)
}

pub fn recip_identities(n: u64, tol: f64) -> Result<RecipReport, ExactError> {
    ExactLaw::new().recip_identities(n, tol)
}

/// Residual of ((n+m)/m)p(n,m) − p(n−1,m) − (n/(m−1))p(n,m−1), m ≥ 2;
/// for m = 1 the last term is absent.
pub fn recurrence_residual(law: &mut ExactLaw, n: u64, m: u64) -> Result<BigRational, ExactError> {
    if n < 2 || m == 0 {
        return Err(ExactError::Domain);
    }
    let mut r = law.p_eulerian(n, m)? * int(n + m) / int(m) - law.p_eulerian(n - 1, m)?;
    if m >= 2 {
        r -= law.p_eulerian(n, m - 1)? * int(n) / int(m - 1);
    }
    Ok(r)
}

/// Returns true when the rational is non-negative.
pub fn non_negative(r: &BigRational) -> bool {
    !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    /// Brute-force count of permutations of 1..=n with exactly `d` descents.
    fn brute_descents(n: usize, d: usize) -> u64 {
        fn perms(prefix: &mut Vec<usize>, left: &mut Vec<usize>, n: usize, d: usize, count: &mut u64) {
            if left.is_empty() {
                let desc = prefix.windows(2).filter(|w| w[0] > w[1]).count();
                if desc == d {
                    *count += 1;
                }
                return;
            }
            for i in 0..left.len() {
                let v = left.remove(i);
                prefix.push(v);
                perms(prefix, left, n, d, count);
                prefix.pop();
                left.insert(i, v);
            }
        }
        let mut c = 0;
        perms(&mut Vec::new(), &mut (1..=n).collect(), n, d, &mut c);
        c
    }

    #[test]
    fn eulerian_examples() {
        assert_eq!(eulerian(1, 1).unwrap(), BigUint::one());
        assert_eq!(eulerian(3, 2).unwrap(), BigUint::from(4u8));
        assert_eq!(eulerian(4, 2).unwrap(), BigUint::from(11u8));
        assert!(eulerian(3, 4).is_err());
        let mut law = ExactLaw::new();
        for n in 1..=6u64 {
            for k in 1..=n {
                assert_eq!(law.eulerian(n, k).unwrap(), BigUint::from(brute_descents(n as usize, k as usize - 1)));
            }
        }
    }

    #[test]
    fn p_examples() {
        assert_eq!(p_exact(1, 1).unwrap(), q(1, 2));
        assert_eq!(p_exact(1, 2).unwrap(), q(1, 3));
        assert_eq!(p_exact(2, 1).unwrap(), q(1, 6));
        let mut law = ExactLaw::new();
        for m in 1..10u64 {
            // p(1, m) = m/(m+1)!
            let f = law.factorial(m + 1).clone();
            assert_eq!(law.p(1, m).unwrap(), rat(BigUint::from(m), f));
        }
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival_exact(1, 0).unwrap(), q(1, 1));
        assert_eq!(survival_exact(1, 1).unwrap(), q(1, 2));
        let mut law = ExactLaw::new();
        for n in 1..=12u64 {
            for m in 1..=12u64 {
                let d = law.survival(n, m - 1).unwrap() - law.survival(n, m).unwrap();
                assert_eq!(d, law.p(n, m).unwrap());
            }
        }
    }

    #[test]
    fn path_enumeration_oracle() {
        // Sum over all up/left paths from (n,0) to (0,m) of the product of step probabilities.
        fn walk(x: i64, y: i64, m: i64, acc: BigRational, out: &mut BigRational) {
            if x == 0 {
                if y == m {
                    *out += acc;
                }
                return;
            }
            if y > m {
                return;
            }
            let t = x + y;
            walk(x, y + 1, m, &acc * q(x, t), out);
            if y > 0 {
                walk(x - 1, y, m, &acc * q(y, t), out);
            }
        }
        for n in 1..=5i64 {
            for m in 1..=5i64 {
                let mut out = BigRational::zero();
                walk(n, 0, m, q(1, 1), &mut out);
                assert_eq!(out, p_exact(n as u64, m as u64).unwrap(), "p({n},{m})");
            }
        }
    }

    #[test]
    fn closed_series_at_one() {
        let m1 = mean_exact(1, 1e-18).unwrap();
        assert!((m1.to_f64() - (core::f64::consts::E - 1.0)).abs() < 1e-14);
        let r = ExactLaw::new().mean_recip(1, 1e-18).unwrap();
        assert!((r.to_f64() - (core::f64::consts::E - 2.0)).abs() < 1e-14);
    }

    #[test]
    fn row_tail_is_certified() {
        let mut law = ExactLaw::new();
        for n in [1u64, 5, 17, 40] {
            let row = law.row(n, 1e-13).unwrap();
            let tail = ratio_to_f64(&law.survival(n, row.max_m()).unwrap());
            assert!(tail <= row.tail_bound, "n={n}");
            let s = row.partial_sum();
            assert!(s < BigRational::one());
            assert!(ratio_to_f64(&(BigRational::one() - s)) < 1e-12);
        }
    }

    #[test]
    fn recip_small() {
        let rep = recip_identities(2, 1e-16).unwrap();
        assert!(rep.identity1.holds(1e-10));
        assert!(rep.identity2.holds(1e-10));
        let rep = recip_identities(15, 1e-16).unwrap();
        assert!(rep.e_recip_minus_inv_n.abs() < 1e-3);
        assert!(rep.h_gap > 0.0);
    }
}
