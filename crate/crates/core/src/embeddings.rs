//! Continuous-time embeddings of the urn and the exact formulas at e.
//!
//! Fast embedding: (A, B) jumps at rate |A| + |B|; A moves with probability
//! |B|/(|A|+|B|), otherwise B moves. Slow embedding: independent death and
//! birth chains U, V with holding rates 1/U and 1/V.

use alloc::vec::Vec;

use astro_float::BigFloat;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::precision::{escalate, Hp, PrecisionConfig, PrecisionError};
use crate::rng::{exponential, uniform};
use crate::stats::Welford;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CtmcState {
    pub a: i64,
    pub b: i64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FastStop {
    /// Stop when A first equals 0; give up (flagged) past the horizon.
    AHitsZero { horizon: f64 },
    /// Report the state at a fixed time.
    Horizon(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FastOutcome {
    pub tau_f: Option<f64>,
    pub state: CtmcState,
    pub events: u64,
    /// The A-hits-0 rule ran past its horizon.
    pub horizon_exceeded: bool,
    /// Lattice states visited, when requested.
    pub path: Vec<(i64, i64)>,
}

pub fn simulate_fast<R: RngCore + ?Sized>(
    a0: i64,
    b0: i64,
    rng: &mut R,
    stop: FastStop,
    record_path: bool,
) -> FastOutcome {
    assert!(a0 != 0 || b0 != 0, "(0,0) has no dynamics");
    let (mut a, mut b, mut t) = (a0, b0, 0.0);
    let mut path = Vec::new();
    if record_path {
        path.push((a, b));
    }
    let mut events = 0u64;
    let out = |a, b, t, tau_f, events, exceeded, path| FastOutcome {
        tau_f,
        state: CtmcState { a, b, t },
        events,
        horizon_exceeded: exceeded,
        path,
    };
    if let FastStop::AHitsZero { .. } = stop {
        if a == 0 {
            return out(a, b, 0.0, Some(0.0), 0, false, path);
        }
    }
    loop {
        let rate = (a.abs() + b.abs()) as f64;
        let next_t = t + exponential(rng, rate);
        match stop {
            FastStop::Horizon(h) if next_t > h => return out(a, b, h, None, events, false, path),
            FastStop::AHitsZero { horizon } if next_t > horizon => {
                return out(a, b, horizon, None, events, true, path)
            }
            _ => {}
        }
        t = next_t;
        if uniform(rng) * rate < b.abs() as f64 {
            a -= b.signum();
        } else {
            b += a.signum();
        }
        events += 1;
        if record_path {
            path.push((a, b));
        }
        if let FastStop::AHitsZero { .. } = stop {
            if a == 0 {
                return out(a, b, t, Some(t), events, false, path);
            }
        }
    }
}

/// Mean of A(t) + iB(t) minus (a0 + ib0)e^{it}, with standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MartingaleResidual {
    pub re: f64,
    pub im: f64,
    pub se_re: f64,
    pub se_im: f64,
}

pub fn martingale_residual<R: RngCore + ?Sized>(a0: i64, b0: i64, t: f64, replicas: u64, rng: &mut R) -> MartingaleResidual {
    let (mut wa, mut wb) = (Welford::default(), Welford::default());
    for _ in 0..replicas {
        let o = simulate_fast(a0, b0, rng, FastStop::Horizon(t), false);
        wa.push(o.state.a as f64);
        wb.push(o.state.b as f64);
    }
    let (c, s) = (libm::cos(t), libm::sin(t));
    let (ea, eb) = (a0 as f64 * c - b0 as f64 * s, a0 as f64 * s + b0 as f64 * c);
    MartingaleResidual { re: wa.mean - ea, im: wb.mean - eb, se_re: wa.se(), se_im: wb.se() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlowOutcome {
    /// (U, V) at each jump time, starting from (z, 1) and ending when U = 0.
    pub chain: Vec<(u64, u64)>,
    pub final_v: u64,
    /// Extinction time of U.
    pub t_end: f64,
}

/// Slow embedding from (z, 1) until U dies out.
pub fn simulate_slow<R: RngCore + ?Sized>(z: u64, rng: &mut R) -> SlowOutcome {
    assert!(z >= 1);
    let (mut u, mut v, mut t) = (z, 1u64, 0.0);
    let mut chain = alloc::vec![(u, v)];
    while u > 0 {
        // Competing clocks; both are memoryless so they restart after each jump.
        let cu = exponential(rng, 1.0 / u as f64);
        let cv = exponential(rng, 1.0 / v as f64);
        if cv < cu {
            t += cv;
            v += 1;
        } else {
            t += cu;
            u -= 1;
        }
        chain.push((u, v));
    }
    SlowOutcome { chain, final_v: v, t_end: t }
}

/// Final V of the slow embedding without storing the chain.
pub fn slow_final_v<R: RngCore + ?Sized>(z: u64, rng: &mut R) -> u64 {
    let (mut u, mut v) = (z, 1u64);
    while u > 0 {
        if exponential(rng, 1.0 / v as f64) < exponential(rng, 1.0 / u as f64) {
            v += 1;
        } else {
            u -= 1;
        }
    }
    v
}

/// Extinction time of a death chain from z and, independently, the time a
/// birth chain from 1 reaches z + 1.
pub fn slow_passage_times<R: RngCore + ?Sized>(z: u64, rng: &mut R) -> (f64, f64) {
    let mut tu = 0.0;
    for u in (1..=z).rev() {
        tu += exponential(rng, 1.0 / u as f64);
    }
    let mut tv = 0.0;
    for v in 1..=z {
        tv += exponential(rng, 1.0 / v as f64);
    }
    (tu, tv)
}

fn pow_i(i: u64, e: i64) -> BigRational {
    let b = BigInt::from(i);
    if e >= 0 {
        BigRational::from_integer(b.pow(e as u32))
    } else {
        BigRational::new(BigInt::one(), b.pow((-e) as u32))
    }
}

fn fact(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * k)
}

/// Exact rational coefficients (C_i, Σ_i C_i·P_i) of Σ_i C_i (e^i − P_i)
/// where P_i = Σ_{k<i} i^k/k!; `shift` is the extra power of i (−1 for the
/// traversal time, 0 for the area).
fn poly_coefficients(n: u64, shift: i64) -> (Vec<BigRational>, BigRational) {
    let mut cs = Vec::with_capacity(n as usize);
    let mut rational = BigRational::zero();
    for i in 1..=n {
        let sign = if (n - i) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let mut c = BigRational::zero();
        for x in 1..=i {
            let e = n as i64 - x as i64 - i as i64 + shift;
            let num = BigRational::from_integer(fact(i) * &sign);
            let den = BigRational::from_integer(fact(n - i) * fact(i - x));
            c += pow_i(i, e) * num / den;
        }
        let mut p = BigRational::zero();
        for k in 0..i {
            p += BigRational::new(BigInt::from(i).pow(k as u32), fact(k));
        }
        rational += &c * p;
        cs.push(c);
    }
    (cs, rational)
}

fn eval_poly(n: u64, shift: i64, cfg: PrecisionConfig) -> Result<BigFloat, PrecisionError> {
    let (cs, rational) = poly_coefficients(n, shift);
    let start = 128 + 8 * n as usize;
    escalate(cfg, start, |hp: &mut Hp| {
        let e = hp.e();
        let mut ei = hp.int(1);
        let mut sum = hp.int(0);
        for c in &cs {
            ei = hp.mul(&ei, &e);
            sum = hp.add(&sum, &hp.mul(&hp.ratio(c), &ei));
        }
        Ok(hp.sub(&sum, &hp.ratio(&rational)))
    })
    .map(|(v, _)| v)
}

/// E_n[τ_f] as a degree-n polynomial in e.
pub fn tau_f_poly_exact(n: u64, cfg: PrecisionConfig) -> Result<BigFloat, PrecisionError> {
    assert!(n >= 1);
    eval_poly(n, -1, cfg)
}

/// Expected area enclosed by one quadrant traversal from n, as a polynomial in e.
pub fn area_poly_exact(n: u64, cfg: PrecisionConfig) -> Result<BigFloat, PrecisionError> {
    assert!(n >= 1);
    eval_poly(n, 0, cfg)
}
