mod common;

use std::f64::consts::{E, FRAC_PI_2, PI};

use common::{exact_row, gof};
use urn_core::embeddings::*;
use urn_core::precision::{to_f64, PrecisionConfig};
use urn_core::rng::rng_stream;
use urn_core::stats::Welford;

fn tau_f_stats(n: i64, replicas: u64, seed: u64) -> (Welford, Welford) {
    let mut r = rng_stream(seed, "fast", n as u64);
    let (mut w, mut sq) = (Welford::default(), Welford::default());
    for _ in 0..replicas {
        let t = simulate_fast(n, 0, &mut r, FastStop::AHitsZero { horizon: 1e6 }, false).tau_f.unwrap();
        w.push(t);
        sq.push((t - FRAC_PI_2) * (t - FRAC_PI_2));
    }
    (w, sq)
}

/// T(1, y) = Σ_{j≥y} (y!/j!) / (1 + j); at y = 0 this is Σ 1/(j+1)!.
fn t_one_series() -> f64 {
    let mut s = 0.0;
    let mut inv_fact = 1.0;
    for j in 0..40u64 {
        if j > 0 {
            inv_fact /= j as f64;
        }
        s += inv_fact / (1 + j) as f64;
    }
    s
}

#[test]
fn expected_time_from_one() {
    let (w, _) = tau_f_stats(1, 100_000, 30);
    let oracle = t_one_series();
    assert!((oracle - (E - 1.0)).abs() < 1e-14);
    assert!((w.mean - oracle).abs() < 3.0 * w.se());
}

#[test]
fn expected_time_from_two_matches_polynomial() {
    let (w, _) = tau_f_stats(2, 100_000, 31);
    let p = to_f64(&tau_f_poly_exact(2, PrecisionConfig::default()).unwrap());
    assert!((w.mean - p).abs() < 3.0 * w.se(), "mc {} poly {p}", w.mean);
}

#[test]
fn time_concentrates_at_quarter_turn() {
    let (w, sq) = tau_f_stats(200, 20_000, 32);
    assert!((w.mean - FRAC_PI_2).abs() < 3.0 * w.se() + 0.02);
    assert!(sq.mean < 0.1);
}

#[test]
fn complex_mean_rotates() {
    let mut r = rng_stream(33, "martingale", 0);
    let m = martingale_residual(50, 0, FRAC_PI_2, 100_000, &mut r);
    assert!(m.re.abs() < 3.0 * m.se_re && m.im.abs() < 3.0 * m.se_im, "{m:?}");
    let m = martingale_residual(0, 20, PI, 100_000, &mut r);
    assert!(m.re.abs() < 3.0 * m.se_re && m.im.abs() < 3.0 * m.se_im, "{m:?}");
}

#[test]
fn slow_embedding_final_law() {
    let mut r = rng_stream(34, "slow", 0);
    let s: Vec<u64> = (0..1_000_000).map(|_| slow_final_v(5, &mut r)).collect();
    let below = s.iter().filter(|&&v| v <= 5).count() as f64 / s.len() as f64;
    assert!((below - 0.5).abs() < 3.0 * (0.25 / s.len() as f64).sqrt());
    let c = gof(s, &exact_row(5));
    assert!(c.p_value > 1e-3, "{c:?}");
}

#[test]
fn slow_first_jump_frequency() {
    // Rates 1/3 for U and 1 for V from (3, 1): V first with probability 3/4.
    let mut r = rng_stream(35, "slow", 0);
    let n = 200_000;
    let hits = (0..n).filter(|_| simulate_slow(3, &mut r).chain[1] == (3, 2)).count();
    let f = hits as f64 / n as f64;
    assert!((f - 0.75).abs() < 3.0 * (0.75 * 0.25 / n as f64).sqrt());
}

#[test]
fn slow_passage_times_share_a_law() {
    let mut r = rng_stream(36, "slow", 0);
    let (mut a, mut b) = (Welford::default(), Welford::default());
    for _ in 0..100_000 {
        let (tu, tv) = slow_passage_times(6, &mut r);
        a.push(tu);
        b.push(tv);
    }
    let se = (a.se().powi(2) + b.se().powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 3.0 * se);
    // Both are sums of exponentials with means 1..6.
    assert!((a.mean - 21.0).abs() < 3.0 * a.se());
}

#[test]
fn area_polynomial_is_weighted_time_sum() {
    let cfg = PrecisionConfig::default();
    let mut acc = 0.0;
    for n in 1..=20u64 {
        acc += n as f64 * to_f64(&tau_f_poly_exact(n, cfg).unwrap());
        let a = to_f64(&area_poly_exact(n, cfg).unwrap());
        assert!((a - acc).abs() < 1e-10, "n={n} area={a} sum={acc}");
    }
}

#[test]
fn polynomial_values_approach_quarter_turn() {
    let cfg = PrecisionConfig::default();
    assert!((to_f64(&tau_f_poly_exact(25, cfg).unwrap()) - FRAC_PI_2).abs() < 0.05);
    let ratio = to_f64(&area_poly_exact(30, cfg).unwrap()) / (PI * 900.0 / 4.0);
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
}
