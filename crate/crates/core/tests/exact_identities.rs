use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use urn_core::exact::{mean_exact, recurrence_residual, ExactLaw};
use urn_core::precision::ratio_to_f64;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Sum of 1/j! for j ≥ start, to double precision.
fn inv_factorial_tail(start: u64) -> f64 {
    let mut term = 1.0;
    for j in 1..=start {
        term /= j as f64;
    }
    let mut s = 0.0;
    let mut j = start;
    while term > 1e-30 {
        s += term;
        j += 1;
        term /= j as f64;
    }
    s
}

#[test]
fn lower_half_has_mass_one_half() {
    let mut law = ExactLaw::new();
    for n in 1..=40u64 {
        let s = (1..=n).fold(BigRational::zero(), |a, m| a + law.p(n, m).unwrap());
        assert_eq!(s, q(1, 2), "n={n}");
        assert_eq!(law.survival(n, n).unwrap(), q(1, 2));
    }
}

#[test]
fn detailed_balance_and_recurrence_on_grid() {
    let mut law = ExactLaw::new();
    for n in 1..=40u64 {
        for m in 1..=40u64 {
            let l = law.p(n, m).unwrap() * BigInt::from(n);
            let r = law.p(m, n).unwrap() * BigInt::from(m);
            assert_eq!(l, r, "n={n} m={m}");
            if n >= 2 {
                assert!(recurrence_residual(&mut law, n, m).unwrap().is_zero());
            }
        }
    }
}

#[test]
fn rows_sum_to_one_within_certified_tail() {
    let mut law = ExactLaw::new();
    for n in [1u64, 5, 20, 40] {
        let row = law.row(n, 1e-12).unwrap();
        assert!(row.tail_bound < 1e-12);
        let deficit = BigRational::one() - row.partial_sum();
        let d = ratio_to_f64(&deficit);
        assert!(d >= 0.0 && d <= row.tail_bound, "n={n} deficit={d}");
    }
}

#[test]
fn mean_at_one_is_e_minus_one() {
    let direct: f64 = (1..40u64).map(|m| (m * m) as f64 / fact(m + 1)).sum();
    let b = mean_exact(1, 1e-15).unwrap();
    assert!((b.to_f64() - direct).abs() < 1e-13);
    assert!((b.to_f64() - (std::f64::consts::E - 1.0)).abs() < 1e-13);
}

fn fact(n: u64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn mean_excess_decays_like_first_root() {
    let mut law = ExactLaw::new();
    for n in 1..=15u64 {
        let b = law.mean(n, 1e-20).unwrap();
        let c = BigRational::from_integer(BigInt::from(n)) + q(2, 3);
        let lo = ratio_to_f64(&(&b.lower - &c));
        let dev = lo.abs().max((lo + b.slack).abs());
        let bound = 2.0 * (-2.0888 * n as f64).exp();
        assert!(dev <= bound, "n={n} dev={dev:e} bound={bound:e}");
    }
}

#[test]
fn second_moment_identity_to_twenty() {
    let mut law = ExactLaw::new();
    for n in 1..=20u64 {
        let c = law.second_moment_identity(n, 1e-14).unwrap();
        assert!(c.residual < 1e-12, "n={n} residual={}", c.residual);
    }
}

#[test]
fn reciprocal_moments() {
    let mut law = ExactLaw::new();
    let r2 = law.recip_identities(2, 1e-14).unwrap();
    assert!(r2.identity1.residual < 1e-10);
    assert!(r2.identity2.holds(1e-10));
    let r15 = law.recip_identities(15, 1e-14).unwrap();
    assert!(r15.e_recip_minus_inv_n.abs() < 1e-3);
    // E_1[1/Z] = Σ 1/(m+1)! = e − 2.
    let b = law.mean_recip(1, 1e-15).unwrap();
    assert!((b.to_f64() - inv_factorial_tail(2)).abs() < 1e-13);
    assert!((b.to_f64() - (std::f64::consts::E - 2.0)).abs() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detailed_balance_holds(n in 1u64..80, m in 1u64..80) {
        let mut law = ExactLaw::new();
        let l = law.p(n, m).unwrap() * BigInt::from(n);
        let r = law.p(m, n).unwrap() * BigInt::from(m);
        prop_assert_eq!(l, r);
    }

    #[test]
    fn probabilities_are_in_unit_interval(n in 1u64..60, m in 1u64..120) {
        let p = ExactLaw::new().p(n, m).unwrap();
        prop_assert!(p > BigRational::zero() && p < BigRational::one());
    }
}
