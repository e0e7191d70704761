//! Arbitrary-precision helpers shared by the exact and transcendental code.

use alloc::vec::Vec;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as BigSign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

const RM: RoundingMode = RoundingMode::ToEven;

/// Working precision, absolute tolerance and escalation cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionConfig {
    pub bits: usize,
    pub target_tol: f64,
    pub max_bits: usize,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig { bits: 128, target_tol: 1e-20, max_bits: 16_384 }
    }
}

impl PrecisionConfig {
    pub fn with_bits(bits: usize) -> Self {
        PrecisionConfig { bits: bits.max(64), ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrecisionError {
    /// Successive precisions never agreed within tolerance.
    Escalation { max_bits: usize, last_gap: f64 },
    NoConvergence,
}

impl core::fmt::Display for PrecisionError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PrecisionError::Escalation { max_bits, last_gap } => {
                write!(f, "no agreement within tolerance up to {max_bits} bits (gap {last_gap:e})")
            }
            PrecisionError::NoConvergence => write!(f, "iteration did not converge"),
        }
    }
}

/// A precision context: bit count plus a constants cache.
pub struct Hp {
    pub p: usize,
    cc: Consts,
}

impl Hp {
    pub fn new(bits: usize) -> Self {
        Hp { p: bits.max(64), cc: Consts::new().expect("constants cache") }
    }

    pub fn int(&self, v: i64) -> BigFloat {
        BigFloat::from_i64(v, self.p)
    }

    /// Exact for every finite f64.
    pub fn f64(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.p.max(64))
    }

    pub fn bigint(&self, v: &BigInt) -> BigFloat {
        let (sign, digits) = v.to_u64_digits();
        let exact = 64 * (digits.len() + 1);
        let base = BigFloat::from_u128(1u128 << 64, exact);
        let mut acc = BigFloat::from_u64(0, exact);
        for d in digits.iter().rev() {
            acc = acc.mul(&base, exact, RM).add(&BigFloat::from_u64(*d, exact), exact, RM);
        }
        let mut out = acc;
        out.set_precision(self.p, RM).expect("precision");
        if sign == BigSign::Minus {
            out.inv_sign();
        }
        out
    }

    pub fn ratio(&self, r: &BigRational) -> BigFloat {
        self.div(&self.bigint(r.numer()), &self.bigint(r.denom()))
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }
    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }
    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }
    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }
    pub fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        if n == 0 {
            return self.int(1);
        }
        a.powi(n, self.p, RM)
    }
    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, RM, &mut self.cc)
    }
    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, RM, &mut self.cc)
    }
    pub fn sin(&mut self, a: &BigFloat) -> BigFloat {
        a.sin(self.p, RM, &mut self.cc)
    }
    pub fn cos(&mut self, a: &BigFloat) -> BigFloat {
        a.cos(self.p, RM, &mut self.cc)
    }
    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.p, RM)
    }
    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.p, RM)
    }
    pub fn e(&mut self) -> BigFloat {
        self.cc.e(self.p, RM)
    }
}

/// Nearest-ish f64 (truncates below the top 128 mantissa bits).
pub fn to_f64(v: &BigFloat) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    if v.is_nan() {
        return f64::NAN;
    }
    if v.is_inf_pos() {
        return f64::INFINITY;
    }
    if v.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let (m, _n, sign, e, _) = v.as_raw_parts().expect("finite");
    let len = m.len();
    let top = m[len - 1] as f64;
    let next = if len >= 2 { m[len - 2] as f64 } else { 0.0 };
    let mag = libm::ldexp(top, e - 64) + libm::ldexp(next, e - 128);
    if sign == Sign::Neg {
        -mag
    } else {
        mag
    }
}

/// f64 approximation of an exact rational, correct to a few ulps.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer().abs();
    let den = r.denom().clone();
    let shift = den.bits() as i64 - num.bits() as i64 + 66;
    let q = if shift >= 0 { (num << shift as usize).div_floor(&den) } else { (num >> (-shift) as usize).div_floor(&den) };
    let mag = libm::ldexp(q.to_f64().unwrap_or(f64::NAN), -shift as i32);
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Repeats `eval` at doubling precision until two results agree within `cfg.target_tol`.
pub fn escalate<F>(cfg: PrecisionConfig, start_bits: usize, mut eval: F) -> Result<(BigFloat, usize), PrecisionError>
where
    F: FnMut(&mut Hp) -> Result<BigFloat, PrecisionError>,
{
    let mut bits = start_bits.max(cfg.bits).max(64);
    let mut prev = eval(&mut Hp::new(bits))?;
    let mut gaps = Vec::new();
    loop {
        let next_bits = bits * 2;
        if next_bits > cfg.max_bits {
            return Err(PrecisionError::Escalation {
                max_bits: cfg.max_bits,
                last_gap: gaps.last().copied().unwrap_or(f64::INFINITY),
            });
        }
        let mut hp = Hp::new(next_bits);
        let cur = eval(&mut hp)?;
        let gap = to_f64(&hp.sub(&cur, &prev)).abs();
        if gap < cfg.target_tol {
            return Ok((cur, next_bits));
        }
        gaps.push(gap);
        prev = cur;
        bits = next_bits;
    }
}
