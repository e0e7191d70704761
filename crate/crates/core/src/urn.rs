//! Simple, leaky and noisy urns as walks on Z²∖{0}.
//!
//! Areas are carried as twice the true area so that every quantity stays an
//! integer.

use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;

use crate::kappa::KappaSampler;
use crate::rng::uniform;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeState {
    pub x: i64,
    pub y: i64,
    /// Axis hits so far.
    pub quadrant_crossings: u64,
}

impl LatticeState {
    pub fn new(x: i64, y: i64) -> Self {
        LatticeState { x, y, quadrant_crossings: 0 }
    }

    pub fn on_axis(&self) -> bool {
        self.x == 0 || self.y == 0
    }

    pub fn l1(&self) -> i64 {
        self.x.abs() + self.y.abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UrnError {
    Origin,
    NotOnAxis,
    Censored { steps: u64 },
}

impl fmt::Display for UrnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UrnError::Origin => write!(f, "state (0,0) is outside the state space"),
            UrnError::NotOnAxis => write!(f, "axis rule applied to an interior state"),
            UrnError::Censored { steps } => write!(f, "step cap reached after {steps} steps"),
        }
    }
}

#[inline]
fn sgn(v: i64) -> i64 {
    v.signum()
}

fn landed(prev: LatticeState, x: i64, y: i64) -> LatticeState {
    let hit = (x == 0 || y == 0) as u64;
    LatticeState { x, y, quadrant_crossings: prev.quadrant_crossings + hit }
}

/// One step of the simple urn driven by the uniform `u`.
pub fn step_simple(s: LatticeState, u: f64) -> Result<LatticeState, UrnError> {
    let (x, y) = (s.x, s.y);
    if x == 0 && y == 0 {
        return Err(UrnError::Origin);
    }
    let ax = x.abs() as f64;
    let total = (x.abs() + y.abs()) as f64;
    if u * total < ax {
        Ok(landed(s, x, y + sgn(x)))
    } else {
        Ok(landed(s, x - sgn(y), y))
    }
}

/// Axis move of the noisy urn with discard `kappa`.
pub fn step_axis_noisy(s: LatticeState, kappa: i64) -> Result<LatticeState, UrnError> {
    let (x, y) = (s.x, s.y);
    match (x == 0, y == 0) {
        (true, true) => Err(UrnError::Origin),
        (true, false) => {
            let r = (y.abs() - kappa).max(1);
            Ok(LatticeState { x: -sgn(y), y: sgn(y) * r, ..s })
        }
        (false, true) => {
            let r = (x.abs() - kappa).max(1);
            Ok(LatticeState { x: sgn(x) * r, y: sgn(x), ..s })
        }
        (false, false) => Err(UrnError::NotOnAxis),
    }
}

/// Axis move of the leaky urn; the cycle |x|+|y|=1 maps into itself.
pub fn step_axis_leaky(s: LatticeState) -> Result<LatticeState, UrnError> {
    let (x, y) = (s.x, s.y);
    match (x == 0, y == 0) {
        (true, true) => Err(UrnError::Origin),
        (true, false) => Ok(landed(s, -sgn(y), y - sgn(y))),
        (false, true) => Ok(landed(s, x - sgn(x), sgn(x))),
        (false, false) => Err(UrnError::NotOnAxis),
    }
}

/// One step of the leaky urn.
pub fn step_leaky(s: LatticeState, u: f64) -> Result<LatticeState, UrnError> {
    if s.on_axis() {
        step_axis_leaky(s)
    } else {
        step_simple(s, u)
    }
}

/// Twice the area of the triangle (0, prev, next).
#[inline]
pub fn triangle_area2(prev: LatticeState, next: LatticeState) -> u64 {
    (prev.x as i128 * next.y as i128 - next.x as i128 * prev.y as i128).unsigned_abs() as u64
}

/// Area of the triangle (0, prev, next) as a `(numerator, denominator)` pair in lowest terms.
pub fn triangle_area(prev: LatticeState, next: LatticeState) -> (u64, u64) {
    half_units(triangle_area2(prev, next) as u128)
}

/// Reduces `twice / 2`.
pub fn half_units(twice: u128) -> (u64, u64) {
    if twice % 2 == 0 {
        ((twice / 2) as u64, 1)
    } else {
        (twice as u64, 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Traversal {
    pub z_next: u64,
    pub steps: u64,
    /// Twice the swept area.
    pub area2: u64,
}

/// One quadrant traversal of the simple urn from an axis point at distance `z`
/// to the next axis hit.
pub fn traverse_quadrant<R: RngCore + ?Sized>(z: u64, rng: &mut R) -> Result<Traversal, UrnError> {
    traverse_quadrant_capped(z, rng, DEFAULT_STEP_CAP)
}

pub fn traverse_quadrant_capped<R: RngCore + ?Sized>(
    z: u64,
    rng: &mut R,
    step_cap: u64,
) -> Result<Traversal, UrnError> {
    if z == 0 {
        return Err(UrnError::Origin);
    }
    // Rotated into the first quadrant; the first move off the axis is forced.
    let mut x = z;
    let mut y = 1u64;
    let mut steps = 1u64;
    let mut area2 = z;
    while x > 0 {
        if steps >= step_cap {
            return Err(UrnError::Censored { steps });
        }
        if uniform(rng) * ((x + y) as f64) < x as f64 {
            area2 += x;
            y += 1;
        } else {
            area2 += y;
            x -= 1;
        }
        steps += 1;
    }
    Ok(Traversal { z_next: y, steps, area2 })
}

/// Statistics of one excursion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathRecord {
    /// Steps until |x|+|y| = 1.
    pub tau: Option<u64>,
    /// First k ≥ 1 with Z̃_k = 1.
    pub tau_q: Option<u64>,
    /// Time of the axis hit that ends traversal `tau_q`.
    pub nu_at_tau_q: Option<u64>,
    /// Twice the swept area up to `tau` (or up to the cap).
    pub area2: u128,
    /// Z̃_0, Z̃_1, ... (empty when recording is off).
    pub z_sequence: Vec<u64>,
    pub steps: u64,
    pub censored: bool,
}

impl PathRecord {
    pub fn area(&self) -> (u64, u64) {
        half_units(self.area2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoisyCaps {
    pub step_cap: u64,
    pub traversal_cap: u64,
    pub record_z: bool,
}

impl Default for NoisyCaps {
    fn default() -> Self {
        NoisyCaps { step_cap: DEFAULT_STEP_CAP, traversal_cap: u64::MAX, record_z: true }
    }
}

/// Leaky urn from `(z0, 1)`.
pub fn simulate_leaky<R: RngCore + ?Sized>(z0: u64, rng: &mut R, step_cap: u64) -> Result<PathRecord, UrnError> {
    if z0 == 0 {
        return Err(UrnError::Origin);
    }
    simulate_leaky_from(LatticeState::new(z0 as i64, 1), rng, step_cap)
}

/// Leaky urn from an arbitrary start, run until it first enters |x|+|y| = 1
/// at a time n ≥ 1.
pub fn simulate_leaky_from<R: RngCore + ?Sized>(
    start: LatticeState,
    rng: &mut R,
    step_cap: u64,
) -> Result<PathRecord, UrnError> {
    let mut s = start;
    let mut rec = PathRecord::default();
    loop {
        if rec.steps >= step_cap {
            rec.censored = true;
            return Ok(rec);
        }
        let next = if s.on_axis() { step_axis_leaky(s)? } else { step_simple(s, uniform(rng))? };
        rec.area2 += triangle_area2(s, next) as u128;
        rec.steps += 1;
        s = next;
        if s.l1() == 1 {
            rec.tau = Some(rec.steps);
            return Ok(rec);
        }
    }
}

/// Noisy urn from `(z0, 1)`, run until both τ and τ_q are known or a cap hits.
pub fn simulate_noisy<R: RngCore + ?Sized>(
    z0: u64,
    kappa: &KappaSampler,
    rng: &mut R,
    caps: NoisyCaps,
) -> Result<PathRecord, UrnError> {
    if z0 == 0 {
        return Err(UrnError::Origin);
    }
    let mut rec = PathRecord::default();
    if caps.record_z {
        rec.z_sequence.push(z0);
    }
    // Each traversal is rotated into the first quadrant, starting at (a, 1).
    let mut a = z0;
    let mut k = 0u64;
    loop {
        let mut x = a;
        let mut y = 1u64;
        while x > 0 {
            if rec.steps >= caps.step_cap {
                rec.censored = true;
                return Ok(rec);
            }
            let d2 = if uniform(rng) * ((x + y) as f64) < x as f64 {
                y += 1;
                x
            } else {
                x -= 1;
                y
            };
            rec.steps += 1;
            if rec.tau.is_none() {
                rec.area2 += d2 as u128;
            }
        }
        k += 1;
        if y == 1 && rec.tau.is_none() {
            rec.tau = Some(rec.steps);
        }
        let kap = kappa.sample(rng);
        let next = (y as i64 - kap).max(1) as u64;
        if rec.tau.is_none() {
            rec.area2 += y as u128;
        }
        if next == 1 && rec.tau_q.is_none() {
            rec.tau_q = Some(k);
            rec.nu_at_tau_q = Some(rec.steps);
        }
        rec.steps += 1;
        if caps.record_z {
            rec.z_sequence.push(next);
        }
        if rec.tau.is_some() && rec.tau_q.is_some() {
            return Ok(rec);
        }
        if k >= caps.traversal_cap {
            rec.censored = true;
            return Ok(rec);
        }
        a = next;
    }
}

/// The conserved quantity Q′ of the leaky urn, times 4 (an integer).
pub fn leaky_q4(x: i64, y: i64) -> i64 {
    let ind = |b: bool| b as i64;
    let u = 2 * x + sgn(y) - ind(y == 0) * sgn(x);
    let v = 2 * y - sgn(x) - ind(x == 0) * sgn(y);
    u * u + v * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::KappaSpec;
    use crate::rng::rng_stream;

    fn st(x: i64, y: i64) -> LatticeState {
        LatticeState::new(x, y)
    }

    fn xy(s: LatticeState) -> (i64, i64) {
        (s.x, s.y)
    }

    #[test]
    fn simple_step_examples() {
        for u in [0.0, 0.5, 0.999] {
            assert_eq!(xy(step_simple(st(1, 0), u).unwrap()), (1, 1));
        }
        assert_eq!(xy(step_simple(st(1, 1), 0.3).unwrap()), (1, 2));
        assert_eq!(xy(step_simple(st(1, 1), 0.7).unwrap()), (0, 1));
        assert_eq!(xy(step_simple(st(3, -4), 0.42).unwrap()), (3, -3));
        assert_eq!(xy(step_simple(st(3, -4), 3.0 / 7.0).unwrap()), (4, -4));
        assert_eq!(step_simple(st(0, 0), 0.1), Err(UrnError::Origin));
        let s = step_simple(st(1, 1), 0.7).unwrap();
        assert_eq!(s.quadrant_crossings, 1);
    }

    #[test]
    fn noisy_axis_examples() {
        assert_eq!(xy(step_axis_noisy(st(0, 5), 2).unwrap()), (-1, 3));
        assert_eq!(xy(step_axis_noisy(st(0, 5), 7).unwrap()), (-1, 1));
        assert_eq!(xy(step_axis_noisy(st(4, 0), 1).unwrap()), (3, 1));
        assert_eq!(xy(step_axis_noisy(st(0, -3), -1).unwrap()), (1, -4));
        assert_eq!(step_axis_noisy(st(1, 1), 0), Err(UrnError::NotOnAxis));
        assert_eq!(xy(step_axis_leaky(st(4, 0)).unwrap()), (3, 1));
    }

    #[test]
    fn area_examples() {
        assert_eq!(triangle_area(st(1, 0), st(1, 1)), (1, 2));
        assert_eq!(triangle_area(st(0, 5), st(-1, 3)), (5, 2));
        assert_eq!(triangle_area(st(3, -4), st(4, -4)), (2, 1));
    }

    #[test]
    fn leaky_degenerate_start() {
        let mut r = rng_stream(0, "t", 0);
        let rec = simulate_leaky_from(st(0, 1), &mut r, 10).unwrap();
        assert_eq!(rec.tau, Some(1));
        assert_eq!(xy(step_axis_leaky(st(0, 1)).unwrap()), (-1, 0));
    }

    #[test]
    fn leaky_cycle_absorbing() {
        let mut s = st(1, 0);
        for _ in 0..16 {
            s = step_leaky(s, 0.5).unwrap();
            assert_eq!(s.l1(), 1);
        }
    }

    #[test]
    fn leaky_q_martingale_exact() {
        for x in -20i64..=20 {
            for y in -20i64..=20 {
                let l1 = x.abs() + y.abs();
                if !(2..=20).contains(&l1) {
                    continue;
                }
                let q = leaky_q4(x, y);
                let s = st(x, y);
                // E[Q(next)] * (|x|+|y|), compared exactly in integers.
                let expect = if s.on_axis() {
                    let n = step_axis_leaky(s).unwrap();
                    leaky_q4(n.x, n.y) * l1
                } else {
                    let up = step_simple(s, 0.0).unwrap();
                    let side = step_simple(s, 0.999_999_999).unwrap();
                    x.abs() * leaky_q4(up.x, up.y) + y.abs() * leaky_q4(side.x, side.y)
                };
                assert_eq!(expect, q * l1, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn traversal_step_identity_and_order() {
        let mut r = rng_stream(1, "t", 0);
        // General-coordinate walk: check steps = Z_k + Z_{k+1} and the cyclic order.
        let mut s = st(7, 0);
        let mut last_hit = (7i64, 0usize);
        let mut steps = 0u64;
        let half_line = |s: &LatticeState| -> usize {
            if s.x > 0 {
                0
            } else if s.y > 0 {
                1
            } else if s.x < 0 {
                2
            } else {
                3
            }
        };
        let mut hits = 0;
        while hits < 200 {
            s = step_simple(s, uniform(&mut r)).unwrap();
            steps += 1;
            if s.on_axis() {
                let z = s.l1();
                assert_eq!(steps as i64, last_hit.0 + z);
                let h = half_line(&s);
                assert_eq!(h, (last_hit.1 + 1) % 4);
                last_hit = (z, h);
                steps = 0;
                hits += 1;
            }
        }
        assert_eq!(s.quadrant_crossings, 200);
    }

    #[test]
    fn traverse_quadrant_unit() {
        let mut r = rng_stream(2, "t", 0);
        let mut ones = 0;
        for _ in 0..10_000 {
            let t = traverse_quadrant(1, &mut r).unwrap();
            assert_eq!(t.steps, 1 + t.z_next);
            if t.z_next == 1 {
                ones += 1;
                assert_eq!(t.area2, 2);
            }
        }
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.02);
        assert!(matches!(traverse_quadrant_capped(50, &mut r, 10), Err(UrnError::Censored { .. })));
    }

    #[test]
    fn noisy_kappa_one_matches_leaky_in_law() {
        // The canonical rotation maps a uniform to a different branch, so compare laws.
        let k = KappaSpec::point(1).sampler();
        let mut a = rng_stream(9, "noisy", 0);
        let mut b = rng_stream(9, "leaky", 0);
        let n = 40_000;
        let cuts = [6u64, 10, 20, 60, 200];
        let mut ca = [0u32; 5];
        let mut cb = [0u32; 5];
        for _ in 0..n {
            let caps = NoisyCaps { step_cap: 100_000, record_z: false, ..Default::default() };
            let ta = simulate_noisy(4, &k, &mut a, caps).unwrap().tau.unwrap_or(u64::MAX);
            let tb = simulate_leaky(4, &mut b, 100_000).unwrap().tau.unwrap_or(u64::MAX);
            for (i, c) in cuts.iter().enumerate() {
                ca[i] += (ta <= *c) as u32;
                cb[i] += (tb <= *c) as u32;
            }
        }
        for i in 0..5 {
            let (pa, pb) = (ca[i] as f64 / n as f64, cb[i] as f64 / n as f64);
            let se = libm::sqrt((pa * (1.0 - pa) + pb * (1.0 - pb)) / n as f64).max(1e-9);
            assert!((pa - pb).abs() < 4.0 * se, "P(tau <= {}): {pa} vs {pb}", cuts[i]);
        }
    }

    #[test]
    fn noisy_kappa_zero_tau_is_nu_at_tau_q() {
        let k = KappaSpec::point(0).sampler();
        let mut r = rng_stream(5, "t", 0);
        for _ in 0..500 {
            let rec = simulate_noisy(3, &k, &mut r, NoisyCaps { step_cap: 1_000_000, ..Default::default() }).unwrap();
            if rec.censored {
                continue;
            }
            assert_eq!(rec.tau, rec.nu_at_tau_q);
            assert!(rec.area2 >= rec.tau.unwrap() as u128);
        }
    }
}
