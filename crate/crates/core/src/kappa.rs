//! Distribution of the per-swap discard κ.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::rng::uniform;

pub type Q64 = Ratio<i64>;

#[derive(Clone, Debug, PartialEq)]
pub enum KappaKind {
    Point(i64),
    /// `a` with probability `p`, otherwise `b`.
    TwoPoint { a: i64, b: i64, p: Q64 },
    /// P(κ = k) = (1−p)^k p on k ≥ 0.
    Geometric { p: Q64 },
    Pmf(Vec<(i64, Q64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaSpec {
    pub kind: KappaKind,
    pub mean: Q64,
    /// Some exponential moment of |κ| is finite.
    pub mgf_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KappaError(pub String);

impl fmt::Display for KappaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid kappa spec: {}", self.0)
    }
}

fn err<T>(msg: &str) -> Result<T, KappaError> {
    Err(KappaError(msg.to_string()))
}

fn in_unit(p: &Q64) -> bool {
    *p > Q64::zero() && *p <= Q64::one()
}

impl KappaSpec {
    pub fn point(k: i64) -> Self {
        KappaSpec { kind: KappaKind::Point(k), mean: Q64::from_integer(k), mgf_ok: true }
    }

    pub fn two_point(a: i64, b: i64, p: Q64) -> Result<Self, KappaError> {
        if p < Q64::zero() || p > Q64::one() {
            return err("two-point probability outside [0,1]");
        }
        let mean = p * a + (Q64::one() - p) * b;
        Ok(KappaSpec { kind: KappaKind::TwoPoint { a, b, p }, mean, mgf_ok: true })
    }

    pub fn geometric(p: Q64) -> Result<Self, KappaError> {
        if !in_unit(&p) {
            return err("geometric parameter outside (0,1]");
        }
        let mean = (Q64::one() - p) / p;
        Ok(KappaSpec { kind: KappaKind::Geometric { p }, mean, mgf_ok: true })
    }

    pub fn pmf(mut atoms: Vec<(i64, Q64)>) -> Result<Self, KappaError> {
        if atoms.is_empty() {
            return err("empty pmf");
        }
        atoms.sort_by_key(|a| a.0);
        let mut total = Q64::zero();
        let mut mean = Q64::zero();
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return err("repeated atom");
            }
        }
        for (k, p) in &atoms {
            if p.is_negative() {
                return err("negative probability");
            }
            total += *p;
            mean += *p * *k;
        }
        if total != Q64::one() {
            return err("pmf does not sum to 1");
        }
        Ok(KappaSpec { kind: KappaKind::Pmf(atoms), mean, mgf_ok: true })
    }

    pub fn mean_f64(&self) -> f64 {
        self.mean.to_f64().unwrap_or(f64::NAN)
    }

    /// Short kind label used in output files.
    pub fn kind_label(&self) -> &'static str {
        match self.kind {
            KappaKind::Point(_) => "point",
            KappaKind::TwoPoint { .. } => "twopoint",
            KappaKind::Geometric { .. } => "geom",
            KappaKind::Pmf(_) => "pmf",
        }
    }

    pub fn sampler(&self) -> KappaSampler {
        let inner = match &self.kind {
            KappaKind::Point(k) => Inner::Point(*k),
            KappaKind::TwoPoint { a, b, p } => {
                Inner::TwoPoint { a: *a, b: *b, p: p.to_f64().unwrap_or(0.0) }
            }
            KappaKind::Geometric { p } => {
                let p = p.to_f64().unwrap_or(1.0);
                Inner::Geometric { log_q: libm::log1p(-p), one: p >= 1.0 }
            }
            KappaKind::Pmf(atoms) => {
                let weights: Vec<f64> =
                    atoms.iter().map(|(_, p)| p.to_f64().unwrap_or(0.0)).collect();
                let values = atoms.iter().map(|(k, _)| *k).collect();
                Inner::Alias {
                    values,
                    index: WeightedAliasIndex::new(weights).expect("validated pmf"),
                }
            }
        };
        KappaSampler { inner }
    }
}

/// Parses `point:K`, `twopoint:A:B:P`, `geom:P` and `pmf:K=P,K=P,...`.
/// Probabilities may be decimals (`0.75`) or fractions (`3/4`).
impl FromStr for KappaSpec {
    type Err = KappaError;

    fn from_str(s: &str) -> Result<Self, KappaError> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').ok_or_else(|| KappaError(s.to_string()))?;
        let int = |t: &str| t.trim().parse::<i64>().map_err(|_| KappaError(t.to_string()));
        match kind {
            "point" => Ok(KappaSpec::point(int(rest)?)),
            "twopoint" => {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() != 3 {
                    return err("twopoint expects A:B:P");
                }
                KappaSpec::two_point(int(parts[0])?, int(parts[1])?, parse_prob(parts[2])?)
            }
            "geom" => KappaSpec::geometric(parse_prob(rest)?),
            "pmf" => {
                let mut atoms = Vec::new();
                for item in rest.split(',') {
                    let (k, p) = item.split_once('=').ok_or_else(|| KappaError(item.to_string()))?;
                    atoms.push((int(k)?, parse_prob(p)?));
                }
                KappaSpec::pmf(atoms)
            }
            _ => err("unknown kind"),
        }
    }
}

impl fmt::Display for KappaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            KappaKind::Point(k) => write!(f, "point:{k}"),
            KappaKind::TwoPoint { a, b, p } => write!(f, "twopoint:{a}:{b}:{p}"),
            KappaKind::Geometric { p } => write!(f, "geom:{p}"),
            KappaKind::Pmf(atoms) => {
                write!(f, "pmf:")?;
                for (i, (k, p)) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}={p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Exact rational from `0.75`, `3/4` or `1`.
pub fn parse_prob(t: &str) -> Result<Q64, KappaError> {
    let t = t.trim();
    let bad = || KappaError(t.to_string());
    if let Some((a, b)) = t.split_once('/') {
        let a: i64 = a.parse().map_err(|_| bad())?;
        let b: i64 = b.parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Q64::new(a, b));
    }
    match t.split_once('.') {
        None => Ok(Q64::from_integer(t.parse().map_err(|_| bad())?)),
        Some((int_part, frac)) => {
            if frac.len() > 15 || !frac.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10i64.pow(frac.len() as u32);
            let whole: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
            let f: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            Ok(Q64::new(whole * den + f, den))
        }
    }
}

#[derive(Clone, Debug)]
enum Inner {
    Point(i64),
    TwoPoint { a: i64, b: i64, p: f64 },
    Geometric { log_q: f64, one: bool },
    Alias { values: Vec<i64>, index: WeightedAliasIndex<f64> },
}

/// Draws κ values; built once per spec.
#[derive(Clone, Debug)]
pub struct KappaSampler {
    inner: Inner,
}

impl KappaSampler {
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> i64 {
        match &self.inner {
            Inner::Point(k) => *k,
            Inner::TwoPoint { a, b, p } => {
                if uniform(rng) < *p {
                    *a
                } else {
                    *b
                }
            }
            Inner::Geometric { log_q, one } => {
                if *one {
                    0
                } else {
                    let u = crate::rng::uniform_pos(rng);
                    libm::floor(libm::log(u) / log_q) as i64
                }
            }
            Inner::Alias { values, index } => {
                let mut adapter = DynRng(rng);
                values[index.sample(&mut adapter)]
            }
        }
    }

    /// True when κ is a constant.
    pub fn constant(&self) -> Option<i64> {
        match self.inner {
            Inner::Point(k) => Some(k),
            _ => None,
        }
    }
}

struct DynRng<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
