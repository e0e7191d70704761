//! The uniform renewal process: N(t) = min{i : S_i > t} with U(0,1) steps,
//! its renewal function f(t) = E[N(t)], and the roots of λ − 1 + e^{−λ} = 0
//! that drive f(t) − 2t − 2/3.

use alloc::vec::Vec;

use astro_float::BigFloat;
use rand::RngCore;

use crate::precision::{escalate, to_f64, Hp, PrecisionConfig, PrecisionError};
use crate::rng::uniform;
use crate::stats::{MomentEstimate, PowerSums};

/// Draws uniforms until their sum exceeds `t`; returns how many were needed.
pub fn sample_renewal_count<R: RngCore + ?Sized>(t: f64, rng: &mut R) -> u64 {
    let mut s = 0.0;
    let mut i = 0u64;
    while s <= t {
        s += uniform(rng);
        i += 1;
    }
    // A zero draw at t = 0 is not a renewal past 0.
    if i == 0 {
        1
    } else {
        i
    }
}

/// f(t) = Σ_{i=0}^{⌊t⌋} (i − t)^i e^{t−i} / i!, with 0⁰ = 1.
pub fn renewal_function_exact(t: f64, cfg: PrecisionConfig) -> Result<BigFloat, PrecisionError> {
    assert!(t >= 0.0 && t.is_finite());
    let start = 64 + if t > 1.0 { libm::ceil(t * libm::log2(t)) as usize } else { 0 };
    escalate(cfg, start, |hp| Ok(renewal_series(hp, t))).map(|(v, _)| v)
}

fn renewal_series(hp: &mut Hp, t: f64) -> BigFloat {
    let tb = hp.f64(t);
    let top = libm::floor(t) as i64;
    let mut sum = hp.int(0);
    let mut fact = hp.int(1);
    for i in 0..=top {
        if i > 0 {
            fact = hp.mul(&fact, &hp.int(i));
        }
        let ib = hp.int(i);
        let base = hp.sub(&ib, &tb);
        let pow = hp.powi(&base, i as usize);
        let ex = hp.exp(&hp.sub(&tb, &ib));
        let term = hp.div(&hp.mul(&pow, &ex), &fact);
        sum = hp.add(&sum, &term);
    }
    sum
}

/// A non-zero root γ = re + i·im of λ − 1 + e^{−λ} in the upper half plane.
#[derive(Clone, Debug)]
pub struct CharRoot {
    pub index: usize,
    pub re: BigFloat,
    pub im: BigFloat,
    /// |γ − 1 + e^{−γ}| at the working precision.
    pub residual: f64,
}

impl CharRoot {
    pub fn re_f64(&self) -> f64 {
        to_f64(&self.re)
    }
    pub fn im_f64(&self) -> f64 {
        to_f64(&self.im)
    }
}

#[derive(Clone)]
struct C {
    re: BigFloat,
    im: BigFloat,
}

fn c_mul(hp: &Hp, a: &C, b: &C) -> C {
    C {
        re: hp.sub(&hp.mul(&a.re, &b.re), &hp.mul(&a.im, &b.im)),
        im: hp.add(&hp.mul(&a.re, &b.im), &hp.mul(&a.im, &b.re)),
    }
}

fn c_div(hp: &Hp, a: &C, b: &C) -> C {
    let den = hp.add(&hp.mul(&b.re, &b.re), &hp.mul(&b.im, &b.im));
    let conj = C { re: b.re.clone(), im: b.im.neg() };
    let num = c_mul(hp, a, &conj);
    C { re: hp.div(&num.re, &den), im: hp.div(&num.im, &den) }
}

/// e^{z}.
fn c_exp(hp: &mut Hp, z: &C) -> C {
    let m = hp.exp(&z.re);
    let c = hp.cos(&z.im);
    let s = hp.sin(&z.im);
    C { re: hp.mul(&m, &c), im: hp.mul(&m, &s) }
}

fn c_abs_f64(z: &C) -> f64 {
    libm::hypot(to_f64(&z.re), to_f64(&z.im))
}

/// Returns (g(λ), g′(λ)) for g(λ) = λ − 1 + e^{−λ}.
fn g_and_dg(hp: &mut Hp, l: &C) -> (C, C) {
    let e = c_exp(hp, &C { re: l.re.neg(), im: l.im.neg() });
    let one = hp.int(1);
    let g = C { re: hp.add(&hp.sub(&l.re, &one), &e.re), im: hp.add(&l.im, &e.im) };
    let dg = C { re: hp.sub(&one, &e.re), im: e.im.neg() };
    (g, dg)
}

/// First `count` roots, by Newton's method from −log(2πn) + (2n + ½)πi.
pub fn char_roots(count: usize, cfg: PrecisionConfig) -> Result<Vec<CharRoot>, PrecisionError> {
    let mut hp = Hp::new(cfg.bits.max(128));
    let stop = libm::ldexp(1.0, -(hp.p as i32 - 16));
    let mut roots: Vec<CharRoot> = Vec::with_capacity(count);
    for n in 1..=count {
        let nf = n as f64;
        let seed_re = -libm::log(2.0 * core::f64::consts::PI * nf);
        let pi = hp.pi();
        let seed_im = hp.mul(&pi, &hp.f64(2.0 * nf + 0.5));
        let mut l = C { re: hp.f64(seed_re), im: seed_im };
        let mut converged = false;
        for _ in 0..200 {
            let (g, dg) = g_and_dg(&mut hp, &l);
            let step = c_div(&hp, &g, &dg);
            l = C { re: hp.sub(&l.re, &step.re), im: hp.sub(&l.im, &step.im) };
            if c_abs_f64(&step) <= stop * c_abs_f64(&l).max(1.0) {
                converged = true;
                break;
            }
        }
        let (g, _) = g_and_dg(&mut hp, &l);
        let residual = c_abs_f64(&g);
        if !converged || residual >= 1e-12 || to_f64(&l.im) <= 0.0 {
            return Err(PrecisionError::NoConvergence);
        }
        let root = CharRoot { index: n, re: l.re, im: l.im, residual };
        if let Some(prev) = roots.last() {
            if root.im_f64() <= prev.im_f64() + 1.0 {
                return Err(PrecisionError::NoConvergence);
            }
        }
        roots.push(root);
    }
    Ok(roots)
}

/// 2t + 2/3 + Σ_{n ≤ pairs} 2·Re(e^{γ_n t}/γ_n).
pub fn renewal_function_asymptotic(t: f64, pairs: usize, cfg: PrecisionConfig) -> Result<BigFloat, PrecisionError> {
    let roots = char_roots(pairs, cfg)?;
    Ok(asymptotic_with_roots(t, &roots, cfg))
}

pub fn asymptotic_with_roots(t: f64, roots: &[CharRoot], cfg: PrecisionConfig) -> BigFloat {
    let mut hp = Hp::new(cfg.bits.max(128));
    let tb = hp.f64(t);
    let mut sum = hp.add(&hp.mul(&hp.int(2), &tb), &hp.div(&hp.int(2), &hp.int(3)));
    for r in roots {
        let z = C { re: hp.mul(&r.re, &tb), im: hp.mul(&r.im, &tb) };
        let e = c_exp(&mut hp, &z);
        let q = c_div(&hp, &e, &C { re: r.re.clone(), im: r.im.clone() });
        sum = hp.add(&sum, &hp.mul(&hp.int(2), &q.re));
    }
    sum
}

/// e^{αt}(β sin βt + α cos βt)/(α² + β²), the leading oscillation.
pub fn dominant_correction(t: f64, alpha: f64, beta: f64) -> f64 {
    libm::exp(alpha * t) * (beta * libm::sin(beta * t) + alpha * libm::cos(beta * t)) / (alpha * alpha + beta * beta)
}

/// Monte Carlo moments of N(t) over `replicas` draws.
pub fn count_moments_mc<R: RngCore + ?Sized>(t: f64, replicas: u64, rng: &mut R) -> MomentEstimate {
    count_power_sums(t, replicas, rng).estimate()
}

/// Power sums of N(t) shifted by the integer nearest 2t + 2/3, for merging across replicas.
pub fn count_power_sums<R: RngCore + ?Sized>(t: f64, replicas: u64, rng: &mut R) -> PowerSums {
    let mut acc = PowerSums::new(libm::round(2.0 * t + 2.0 / 3.0));
    for _ in 0..replicas {
        acc.push(sample_renewal_count(t, rng) as f64);
    }
    acc
}

/// Slack in log φ(∓λ) ≤ ∓λ/2 + λ²/24 with φ(λ) = (e^λ − 1)/λ. Both sides
/// reduce to log(sinh(s)/s) ≤ s²/6 with s = λ/2; returns (slack at −λ, slack at +λ).
pub fn mgf_inequality_slack(lambda: f64) -> (f64, f64) {
    let lhs_minus = libm::log(-libm::expm1(-lambda) / lambda);
    let lhs_plus = if lambda < 600.0 { libm::log(libm::expm1(lambda) / lambda) } else { lambda - libm::log(lambda) };
    let q = lambda * lambda / 24.0;
    (-lambda / 2.0 + q - lhs_minus, lambda / 2.0 + q - lhs_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;

    #[test]
    fn counts_are_at_least_t_plus_one() {
        let mut r = rng_stream(1, "renewal", 0);
        assert_eq!(sample_renewal_count(0.0, &mut r), 1);
        for i in 0..2000 {
            let t = i as f64 * 0.013;
            assert!(sample_renewal_count(t, &mut r) as f64 >= libm::floor(t) + 1.0);
        }
        for n in 0..60 {
            assert!(sample_renewal_count(n as f64, &mut r) > n);
        }
    }

    #[test]
    fn exponential_piece() {
        let cfg = PrecisionConfig::default();
        for t in [0.0, 0.25, 0.5, 1.0] {
            let f = to_f64(&renewal_function_exact(t, cfg).unwrap());
            assert!((f - libm::exp(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn first_root() {
        let r = char_roots(2, PrecisionConfig::default()).unwrap();
        assert!((r[0].re_f64() + 2.088843).abs() < 1e-5);
        assert!((r[0].im_f64() - 7.461489).abs() < 1e-5);
        assert!((r[1].im_f64() - 4.5 * core::f64::consts::PI).abs() < 1.0);
        assert!(r.iter().all(|x| x.residual < 1e-12));
    }

    #[test]
    fn mgf_inequality_grid() {
        for i in 1..=1000 {
            let l = i as f64 * 0.05;
            let (a, b) = mgf_inequality_slack(l);
            assert!(a >= -1e-13 && b >= -1e-13, "λ={l}: {a} {b}");
        }
    }
}
