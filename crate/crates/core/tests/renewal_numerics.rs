use urn_core::precision::{to_f64, Hp, PrecisionConfig};
use urn_core::renewal::*;

fn cfg() -> PrecisionConfig {
    PrecisionConfig { bits: 128, target_tol: 1e-25, max_bits: 8192 }
}

#[test]
fn pole_expansion_matches_series() {
    let roots = char_roots(40, cfg()).unwrap();
    for t in [5.0, 10.0, 20.0, 30.0] {
        let exact = renewal_function_exact(t, cfg()).unwrap();
        let asym = asymptotic_with_roots(t, &roots, cfg());
        let hp = Hp::new(256);
        let gap = to_f64(&hp.sub(&exact, &asym)).abs();
        println!("t={t} gap={gap:e}");
        assert!(gap < 1e-9, "t={t}: {gap:e}");
    }
}

#[test]
fn f_ten_near_linear_asymptote() {
    let f = to_f64(&renewal_function_exact(10.0, cfg()).unwrap());
    assert!((f - (20.0 + 2.0 / 3.0)).abs() < 1e-8);
}

#[test]
fn differential_delay() {
    let h = 1e-6;
    for t in [1.5, 3.7, 12.2] {
        let f = |s: f64| renewal_function_exact(s, cfg()).unwrap();
        let hp = Hp::new(256);
        let deriv = to_f64(&hp.sub(&f(t + h), &f(t - h))) / (2.0 * h);
        let rhs = to_f64(&hp.sub(&f(t), &f(t - 1.0)));
        assert!((deriv - rhs).abs() < 1e-4, "t={t}");
    }
}

#[test]
fn increasing_on_grid() {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=60 {
        let v = to_f64(&renewal_function_exact(i as f64 * 0.25, cfg()).unwrap());
        assert!(v > prev);
        prev = v;
    }
}

#[test]
fn dominant_correction_sign() {
    let roots = char_roots(1, cfg()).unwrap();
    let (a, b) = (roots[0].re_f64(), roots[0].im_f64());
    let t = 5.0;
    let f = to_f64(&renewal_function_exact(t, cfg()).unwrap());
    let corr = f - 2.0 * t - 2.0 / 3.0;
    let predicted = dominant_correction(t, a, b);
    assert_eq!(corr.signum(), (b * (b * t).sin() + a * (b * t).cos()).signum());
    // The second pole pair still contributes roughly a tenth at t = 5.
    assert!((corr - 2.0 * predicted).abs() < 0.3 * corr.abs(), "{corr} vs {}", 2.0 * predicted);
}
