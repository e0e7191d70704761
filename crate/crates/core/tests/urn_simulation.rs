mod common;

use common::{clamp_shift, exact_row, gof, two_step};
use urn_core::kappa::{KappaSpec, Q64};
use urn_core::rng::rng_stream;
use urn_core::stats::Welford;
use urn_core::urn::{simulate_leaky, simulate_noisy, traverse_quadrant, LatticeState, NoisyCaps};

fn first_noisy_value(z: u64, kappa: &KappaSpec, n: usize, seed: u64) -> Vec<u64> {
    let ks = kappa.sampler();
    let mut r = rng_stream(seed, "noisy-first", 0);
    let caps = NoisyCaps { traversal_cap: 1, ..Default::default() };
    (0..n).map(|_| simulate_noisy(z, &ks, &mut r, caps).unwrap().z_sequence[1]).collect()
}

#[test]
fn unit_traversal() {
    let mut r = rng_stream(11, "traverse", 0);
    let n = 100_000;
    let mut ones = 0;
    for _ in 0..n {
        let t = traverse_quadrant(1, &mut r).unwrap();
        assert_eq!(t.steps, 1 + t.z_next);
        if t.z_next == 1 {
            assert_eq!((t.steps, t.area2), (2, 2));
            ones += 1;
        }
    }
    let f = ones as f64 / n as f64;
    assert!((f - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
}

#[test]
fn traversal_drift_at_fifty() {
    let mut r = rng_stream(12, "traverse", 0);
    let mut w = Welford::default();
    for _ in 0..100_000 {
        w.push(traverse_quadrant(50, &mut r).unwrap().z_next as f64 - 50.0);
    }
    assert!((w.mean - 2.0 / 3.0).abs() < 3.0 * w.se(), "mean {} se {}", w.mean, w.se());
}

#[test]
fn traversal_matches_exact_rows() {
    for n in [1u64, 3, 10] {
        let mut r = rng_stream(13, "traverse-gof", n);
        let s: Vec<u64> = (0..200_000).map(|_| traverse_quadrant(n, &mut r).unwrap().z_next).collect();
        let c = gof(s, &exact_row(n));
        assert!(c.p_value > 1e-3, "n={n} {c:?}");
    }
}

#[test]
fn noisy_step_is_clamped_shift_of_simple_step() {
    let kappa = KappaSpec::two_point(0, 2, Q64::new(1, 2)).unwrap();
    let s = first_noisy_value(5, &kappa, 1_000_000, 14);
    let c = gof(s, &clamp_shift(&exact_row(5), &[0.5, 0.0, 0.5]));
    assert!(c.p_value > 1e-3, "{c:?}");
}

#[test]
fn noisy_with_zero_kappa_is_the_embedded_chain() {
    let ks = KappaSpec::point(0).sampler();
    let mut r = rng_stream(15, "noisy-zero", 0);
    let caps = NoisyCaps { traversal_cap: 2, ..Default::default() };
    // A run stops once it has absorbed; the chain then continues from 1.
    let s: Vec<u64> = (0..300_000)
        .map(|_| {
            let z = simulate_noisy(3, &ks, &mut r, caps).unwrap().z_sequence;
            z.get(2).copied().unwrap_or_else(|| traverse_quadrant(z[1], &mut r).unwrap().z_next)
        })
        .collect();
    let c = gof(s, &two_step(3));
    assert!(c.p_value > 1e-3, "{c:?}");
}

#[test]
fn leaky_runs_end_on_the_unit_cycle() {
    let mut r = rng_stream(16, "leaky", 0);
    for z0 in 1..=30u64 {
        for _ in 0..200 {
            let rec = simulate_leaky(z0, &mut r, 10_000_000).unwrap();
            assert!(rec.censored || rec.tau.is_some());
            assert_eq!(rec.censored, rec.tau.is_none());
        }
    }
}

#[test]
fn origin_is_rejected() {
    let mut r = rng_stream(0, "err", 0);
    assert!(traverse_quadrant(0, &mut r).is_err());
    assert!(simulate_leaky(0, &mut r, 10).is_err());
    assert!(urn_core::urn::step_simple(LatticeState::new(0, 0), 0.5).is_err());
}
