//! Acceptance criteria, each a group of pinned numerical checks.

use std::f64::consts::{E, FRAC_PI_2, PI};
use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use urn_core::asymptotics::{diffusion_marginal_test, increment_moments, return_frequency, tail_exponent_tau_q, TailConfig};
use urn_core::embeddings::{area_poly_exact, martingale_residual, simulate_fast, slow_final_v, tau_f_poly_exact, FastStop};
use urn_core::exact::{recurrence_residual, ExactLaw};
use urn_core::kappa::KappaSpec;
use urn_core::percolation::{
    in_graph_restricted, phi_map, solve_t_axis, trace_and_coalesce, Budget, Coalescence, CoverVertex, DualVertex, EdgeStore,
};
use urn_core::precision::{ratio_to_f64, to_f64, Hp, PrecisionConfig};
use urn_core::quadrant::{
    classify_quadrant, delta_moments, negative_binomial_pmf, next_steps_given, IncrementLaw, QuadrantBudget, QuadrantVerdict,
};
use urn_core::renewal::{asymptotic_with_roots, char_roots, count_moments_mc, renewal_function_exact};
use urn_core::rng::{mix64, rng_stream, Stream};
use urn_core::stats::{chi_square_gof, chi_square_pmf, histogram, Welford};
use urn_core::table::TransitionTable;
use urn_core::urn::traverse_quadrant;

/// Largest state served by the shared transition table.
pub const TABLE_MAX: u64 = 100_000;

static TABLE: OnceLock<TransitionTable> = OnceLock::new();

/// Transition table shared by every criterion in the process (about 1 GB).
pub fn shared_table() -> &'static TransitionTable {
    TABLE.get_or_init(|| TransitionTable::build(TABLE_MAX))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub check_id: String,
    /// The statement being checked.
    pub anchor: String,
    pub expected: String,
    pub observed: String,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub number: u32,
    pub title: String,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One line: number, verdict, title and any failing checks.
    pub fn line(&self) -> String {
        let failing: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.check_id.as_str()).collect();
        let mut s = format!("criterion {:>2}: {} {}", self.number, if self.pass() { "PASS" } else { "FAIL" }, self.title);
        if !failing.is_empty() {
            s.push_str(&format!(" (failing: {})", failing.join(", ")));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub criteria: Vec<Criterion>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn new(criteria: Vec<Criterion>) -> Self {
        let pass = criteria.iter().all(Criterion::pass);
        VerifyReport { criteria, pass }
    }
}

struct Builder {
    number: u32,
    title: &'static str,
    checks: Vec<Check>,
}

impl Builder {
    fn new(number: u32, title: &'static str) -> Self {
        Builder { number, title, checks: Vec::new() }
    }

    fn check(&mut self, id: impl Into<String>, anchor: &str, expected: impl ToString, observed: impl ToString, tolerance: impl ToString, pass: bool) {
        self.checks.push(Check {
            check_id: id.into(),
            anchor: anchor.to_string(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            tolerance: tolerance.to_string(),
            pass,
        });
    }

    /// |observed − expected| < k·se + slack.
    fn within_se(&mut self, id: impl Into<String>, anchor: &str, expected: f64, observed: f64, se: f64, k: f64, slack: f64) {
        let tol = k * se + slack;
        self.check(id, anchor, expected, observed, format!("{tol:.3e}"), (observed - expected).abs() < tol);
    }

    fn done(self) -> Criterion {
        Criterion { number: self.number, title: self.title.to_string(), checks: self.checks }
    }
}

fn stream(seed: u64, tag: &str, idx: u64) -> Stream {
    rng_stream(seed, tag, idx)
}

pub const CRITERIA: [u32; 14] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14];
pub const QUICK: [u32; 6] = [1, 2, 3, 4, 5, 9];

pub fn run_criterion(number: u32, seed: u64, prec_bits: usize) -> Criterion {
    match number {
        1 => exact_law_identities(),
        2 => second_moment_identity(),
        3 => drift_sharpness(prec_bits),
        4 => characteristic_root(prec_bits),
        5 => renewal_consistency(prec_bits),
        6 => renewal_moments(seed),
        7 => simulation_vs_exact(seed),
        8 => fast_embedding(seed),
        9 => polynomial_formulas(prec_bits),
        10 => percolation(seed),
        11 => classification(seed),
        12 => tail_exponents(seed),
        13 => diffusion_marginal(seed),
        14 => quadrant_walk(seed),
        _ => panic!("no criterion {number}"),
    }
}

pub fn run_suite(numbers: &[u32], seed: u64, prec_bits: usize, mut progress: impl FnMut(&Criterion)) -> VerifyReport {
    let criteria = numbers
        .iter()
        .map(|&n| {
            let c = run_criterion(n, seed, prec_bits);
            progress(&c);
            c
        })
        .collect();
    VerifyReport::new(criteria)
}

pub fn exact_law_identities() -> Criterion {
    let mut b = Builder::new(1, "exact-law identities");
    let mut law = ExactLaw::new();
    let (mut balance_bad, mut recur_bad, mut half_bad) = (0u32, 0u32, 0u32);
    let mut worst_tail: f64 = 0.0;
    let mut deficit_ok = true;
    for n in 1..=40u64 {
        for m in 1..=40u64 {
            let l = law.p(n, m).unwrap() * BigRational::from_integer(n.into());
            let r = law.p(m, n).unwrap() * BigRational::from_integer(m.into());
            balance_bad += (l != r) as u32;
            if n >= 2 {
                recur_bad += (!recurrence_residual(&mut law, n, m).unwrap().is_zero()) as u32;
            }
        }
        let half = (1..=n).fold(BigRational::from_integer(0.into()), |a, m| a + law.p(n, m).unwrap());
        half_bad += (half != BigRational::new(1.into(), 2.into())) as u32;
        let row = law.row(n, 1e-12).unwrap();
        worst_tail = worst_tail.max(row.tail_bound);
        let deficit = ratio_to_f64(&(BigRational::from_integer(1.into()) - row.partial_sum()));
        deficit_ok &= deficit >= 0.0 && deficit <= row.tail_bound;
    }
    let anchor_db = "n p(n,m) = m p(m,n)";
    b.check("detailed-balance", anchor_db, 0, balance_bad, "exact", balance_bad == 0);
    b.check("recurrence-residual", "first-step recurrence for p(n,m)", 0, recur_bad, "exact", recur_bad == 0);
    b.check("half-mass", "sum_{m<=n} p(n,m) = 1/2", 0, half_bad, "exact", half_bad == 0);
    b.check("row-tails", "certified tail of each row", "< 1e-12", format!("{worst_tail:.3e}"), "1e-12", worst_tail < 1e-12 && deficit_ok);
    b.done()
}

pub fn second_moment_identity() -> Criterion {
    let mut b = Builder::new(2, "second-moment identity");
    let mut law = ExactLaw::new();
    let mut worst: f64 = 0.0;
    for n in 1..=20u64 {
        let c = law.second_moment_identity(n, 1e-15).unwrap();
        worst = worst.max(c.residual + c.allowance);
    }
    b.check("residual", "E[Z^2] = n^2 + n + E[Z]", 0, format!("{worst:.3e}"), "1e-12", worst < 1e-12);
    b.done()
}

pub fn drift_sharpness(prec_bits: usize) -> Criterion {
    let mut b = Builder::new(3, "drift sharpness");
    let cfg = PrecisionConfig { bits: prec_bits.max(256), target_tol: 1e-30, ..Default::default() };
    let hp = Hp::new(cfg.bits.max(256));
    let mut law = ExactLaw::new();
    let (mut worst_ratio, mut agree): (f64, f64) = (0.0, 0.0);
    for n in 1..=15u64 {
        // E[Z | n] = f(n) − n, so the excess is f(n) − 2n − 2/3.
        let f = renewal_function_exact(n as f64, cfg).unwrap();
        let c = hp.add(&hp.int(2 * n as i64), &hp.div(&hp.int(2), &hp.int(3)));
        let dev = to_f64(&hp.sub(&f, &c)).abs();
        worst_ratio = worst_ratio.max(dev / (2.0 * (-2.0888 * n as f64).exp()));
        let m = law.mean(n, 1e-25).unwrap();
        let exact_dev = ratio_to_f64(&(&m.lower - BigRational::new((3 * n as i64 + 2).into(), 3.into())));
        agree = agree.max((exact_dev.abs() - dev).abs() / dev.max(f64::MIN_POSITIVE));
    }
    b.check("bound", "|E[Z|n] - n - 2/3| <= 2 exp(-2.0888 n), n <= 15", "<= 1", format!("{worst_ratio:.4}"), "ratio", worst_ratio <= 1.0);
    b.check("exact-agrees", "renewal function and exact mean agree", 0, format!("{agree:.3e}"), "1e-9 relative", agree <= 1e-9);
    b.done()
}

pub fn characteristic_root(prec_bits: usize) -> Criterion {
    let mut b = Builder::new(4, "characteristic root");
    let r = &char_roots(1, PrecisionConfig::with_bits(prec_bits)).unwrap()[0];
    let d = (r.re_f64() + 2.088843).hypot(r.im_f64() - 7.461489);
    b.check("gamma1", "first root -2.088843 + 7.461489i", "-2.088843+7.461489i", format!("{:.9}{:+.9}i", r.re_f64(), r.im_f64()), "1e-5", d < 1e-5);
    b.check("residual", "|g - 1 + exp(-g)|", 0, format!("{:.3e}", r.residual), "1e-12", r.residual < 1e-12);
    b.done()
}

pub fn renewal_consistency(prec_bits: usize) -> Criterion {
    let mut b = Builder::new(5, "renewal function consistency");
    let cfg = PrecisionConfig { bits: prec_bits.max(128), target_tol: 1e-25, max_bits: 8192 };
    let roots = char_roots(40, cfg).unwrap();
    let hp = Hp::new(256);
    for t in [5.0, 10.0, 20.0, 30.0] {
        let gap = to_f64(&hp.sub(&renewal_function_exact(t, cfg).unwrap(), &asymptotic_with_roots(t, &roots, cfg))).abs();
        b.check(format!("poles-t{t}"), "40-pair pole expansion equals the series", 0, format!("{gap:.3e}"), "1e-9", gap < 1e-9);
    }
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        let t = i as f64 / 20.0;
        worst = worst.max((to_f64(&renewal_function_exact(t, cfg).unwrap()) - t.exp()).abs());
    }
    b.check("exp-piece", "f(t) = e^t on [0,1]", 0, format!("{worst:.3e}"), "1e-12", worst < 1e-12);
    b.done()
}

pub fn renewal_moments(seed: u64) -> Criterion {
    let mut b = Builder::new(6, "renewal moments");
    let t = 40.0;
    let m = count_moments_mc(t, 1_000_000, &mut stream(seed, "c6", 0));
    b.within_se("variance", "Var N(t) = 2t/3 + 2/9", 2.0 * t / 3.0 + 2.0 / 9.0, m.variance, m.se_variance, 3.0, 0.0);
    b.within_se("second-moment", "E[N(t)^2] = 4t^2 + 10t/3 + 2/3", 4.0 * t * t + 10.0 * t / 3.0 + 2.0 / 3.0, m.second_moment, m.se_second_moment, 3.0, 0.0);
    b.done()
}

fn exact_row_f64(n: u64) -> Vec<f64> {
    ExactLaw::new().row(n, 1e-12).unwrap().probs_f64()
}

pub fn simulation_vs_exact(seed: u64) -> Criterion {
    let mut b = Builder::new(7, "simulation against the exact law");
    for n in [1u64, 3, 10] {
        let mut r = stream(seed, "c7-traverse", n);
        let h = histogram((0..1_000_000).map(|_| traverse_quadrant(n, &mut r).unwrap().z_next));
        let c = chi_square_pmf(&h, &exact_row_f64(n));
        b.check(format!("traverse-n{n}"), "traversal endpoint law is p(n,.)", "> 1e-3", format!("{:.4}", c.p_value), "p-value", c.p_value > 1e-3);
    }
    let mut r = stream(seed, "c7-slow", 5);
    let h = histogram((0..1_000_000).map(|_| slow_final_v(5, &mut r)));
    let c = chi_square_pmf(&h, &exact_row_f64(5));
    b.check("slow-z5", "slow embedding final V law is p(5,.)", "> 1e-3", format!("{:.4}", c.p_value), "p-value", c.p_value > 1e-3);
    b.done()
}

fn tau_f_moments(n: i64, replicas: u64, rng: &mut Stream) -> (Welford, Welford) {
    let (mut w, mut sq) = (Welford::default(), Welford::default());
    for _ in 0..replicas {
        let t = simulate_fast(n, 0, rng, FastStop::AHitsZero { horizon: 1e6 }, false).tau_f.expect("finite traversal");
        w.push(t);
        sq.push((t - FRAC_PI_2).powi(2));
    }
    (w, sq)
}

pub fn fast_embedding(seed: u64) -> Criterion {
    let mut b = Builder::new(8, "fast embedding");
    let (w1, _) = tau_f_moments(1, 100_000, &mut stream(seed, "c8-fast", 1));
    b.within_se("mean-n1", "E_1[tau_f] = e - 1", E - 1.0, w1.mean, w1.se(), 3.0, 0.0);
    let (w200, sq) = tau_f_moments(200, 20_000, &mut stream(seed, "c8-fast", 200));
    b.within_se("mean-n200", "E_n[tau_f] near pi/2", FRAC_PI_2, w200.mean, w200.se(), 3.0, 0.02);
    b.check("msd-n200", "E_n[(tau_f - pi/2)^2] small", "< 0.1", format!("{:.5}", sq.mean), "0.1", sq.mean < 0.1);
    let m = martingale_residual(50, 0, FRAC_PI_2, 100_000, &mut stream(seed, "c8-martingale", 0));
    b.within_se("martingale-re", "E[A + iB] rotates as e^{it}", 0.0, m.re, m.se_re, 3.0, 0.0);
    b.within_se("martingale-im", "E[A + iB] rotates as e^{it}", 0.0, m.im, m.se_im, 3.0, 0.0);
    b.done()
}

pub fn polynomial_formulas(prec_bits: usize) -> Criterion {
    let mut b = Builder::new(9, "polynomial formulas");
    let cfg = PrecisionConfig::with_bits(prec_bits);
    let t1 = to_f64(&tau_f_poly_exact(1, cfg).unwrap());
    b.check("tau-n1", "expected time from 1 is e - 1", E - 1.0, t1, "1e-12", (t1 - (E - 1.0)).abs() < 1e-12);
    let (mut acc, mut worst) = (0.0f64, 0.0f64);
    for n in 1..=20u64 {
        acc += n as f64 * to_f64(&tau_f_poly_exact(n, cfg).unwrap());
        worst = worst.max((to_f64(&area_poly_exact(n, cfg).unwrap()) - acc).abs());
    }
    b.check("area-identity", "area(n) = sum_m m tau(m)", 0, format!("{worst:.3e}"), "1e-10", worst < 1e-10);
    let ratio = to_f64(&area_poly_exact(30, cfg).unwrap()) / (PI * 900.0 / 4.0);
    b.check("area-n30", "area(n) near pi n^2/4", "[0.9, 1.1]", format!("{ratio:.5}"), "band", (0.9..=1.1).contains(&ratio));
    b.done()
}

pub fn percolation(seed: u64) -> Criterion {
    let mut b = Builder::new(10, "percolation coupling");
    let p1 = phi_map(DualVertex::new(7, 1));
    let p2 = phi_map(DualVertex::new(7, -1));
    b.check("phi", "phi sends (7/2,1/2),(7/2,-1/2) to (4,0),(3,1)", "(4,0) (3,1)", format!("{p1:?} {p2:?}"), "exact", p1 == (4, 0) && p2 == (3, 1));
    let t = solve_t_axis(5, 1e-6);
    for m in 1..=5i64 {
        let mut w = Welford::default();
        let mut censored = 0;
        for i in 0..100_000u64 {
            let c = in_graph_restricted(0, m, mix64(seed ^ mix64(m as u64 * 1_000_003 + i)), 10_000_000);
            censored += c.censored as u32;
            w.push(c.count as f64);
        }
        b.within_se(format!("ingraph-m{m}"), "E[I(0,m)] = m T(m,0)", m as f64 * t[m as usize], w.mean, w.se(), 3.0, 0.0);
        if censored > 0 {
            b.check(format!("ingraph-m{m}-censoring"), "in-graph counts complete", 0, censored, "exact", false);
        }
    }
    let mut met = 0;
    for i in 0..100u64 {
        let mut store = EdgeStore::new(mix64(seed ^ 0xc0a1_e5ce ^ mix64(i)));
        let budget = Budget { turns: 6, vertices: 10_000_000 };
        if let Coalescence::Met { .. } = trace_and_coalesce(CoverVertex::new(5, 0), CoverVertex::new(9, 0), &mut store, budget) {
            met += 1;
        }
    }
    b.check("coalescence", "paths from (5,0) and (9,0) merge within 6 turns", ">= 90 of 100", met, "count", met >= 90);
    b.done()
}

pub fn classification(seed: u64) -> Criterion {
    let mut b = Builder::new(11, "recurrence classification");
    let table = shared_table();
    for (k, tag) in [(0i64, "k0"), (1, "k1")] {
        let kappa = KappaSpec::point(k);
        let f = return_frequency(&kappa.sampler(), 100, 100_000, 10_000, table, &mut stream(seed, "c11-returns", k as u64)).fraction();
        if k == 0 {
            b.check(format!("returns-{tag}"), "transient chain rarely returns", "<= 0.9", format!("{f:.4}"), "threshold", f <= 0.9);
        } else {
            b.check(format!("returns-{tag}"), "positive-recurrent chain returns", ">= 0.99", format!("{f:.4}"), "threshold", f >= 0.99);
        }
        let p = increment_moments(&kappa, &[30], 100_000, table, &mut stream(seed, "c11-moments", k as u64)).points[0];
        let e = k as f64;
        b.within_se(format!("stat-minus-{tag}"), "2x mu1 - mu2 -> 1/3 - E[kappa]", 1.0 / 3.0 - e, p.stat_minus, p.se_stat_minus, 3.0, 0.0);
        b.within_se(format!("stat-plus-{tag}"), "2x mu1 + mu2 -> 2/3 - E[kappa]", 2.0 / 3.0 - e, p.stat_plus, p.se_stat_plus, 3.0, 0.0);
    }
    b.done()
}

pub fn tail_exponents(seed: u64) -> Criterion {
    let mut b = Builder::new(12, "tail exponents");
    let cfg = TailConfig { start: 10, samples: 100_000, traversal_cap: 10_000_000, upper_fraction: 0.1, resamples: 500 };
    match tail_exponent_tau_q(&KappaSpec::point(1), cfg, shared_table(), &mut stream(seed, "c12", 0)) {
        Ok(rep) => {
            let (q, t) = (rep.tau_q.exponent, rep.tau.exponent);
            b.check("tau-q", "P(tau_q > n) ~ n^-2", "[1.7, 2.3]", format!("{q:.3}"), "band", (1.7..=2.3).contains(&q));
            b.check("tau", "P(tau > n) ~ n^-1", "[0.7, 1.3]", format!("{t:.3}"), "band", (0.7..=1.3).contains(&t));
        }
        Err(e) => b.check("fit", "tail fit available", "fit", format!("{e:?}"), "n/a", false),
    }
    b.done()
}

pub fn diffusion_marginal(seed: u64) -> Criterion {
    let mut b = Builder::new(13, "diffusion marginal");
    let rep = diffusion_marginal_test(&KappaSpec::point(0), 2000, 10_000, shared_table(), &mut stream(seed, "c13", 0));
    b.check("ks", "Z_k/k approaches Gamma(2, rate 3)", "< 0.05", format!("{:.4}", rep.ks), "0.05", rep.ks < 0.05);
    b.within_se("mean", "limit mean 2/3", 2.0 / 3.0, rep.mean, rep.se_mean, 3.0, 0.0);
    b.done()
}

pub fn quadrant_walk(seed: u64) -> Criterion {
    let mut b = Builder::new(14, "quadrant walk");
    // With S = T − 1, S_{k+1} given S_k = m puts mass C(j+m,m) 2^{−m−j−1} on j ≥ 0.
    let m = 4u64;
    let mut r = stream(seed, "c14-nb", 0);
    let h = histogram((0..1_000_000).map(|_| next_steps_given(&IncrementLaw::Exponential, m + 1, &mut r) - 1));
    let probs: Vec<f64> = (0..80).map(|j| negative_binomial_pmf(m, j)).collect();
    let observed: Vec<u64> = (0..probs.len()).map(|j| h.get(j).copied().unwrap_or(0)).collect();
    let c = chi_square_gof(&observed, &probs, h.iter().skip(probs.len()).sum(), 5.0);
    b.check("negative-binomial", "exponential jumps give a negative binomial transition", "> 1e-3", format!("{:.4}", c.p_value), "p-value", c.p_value > 1e-3);
    for (law, target) in [(IncrementLaw::Uniform01, 1.0 / 3.0), (IncrementLaw::Exponential, 1.0)] {
        let d = delta_moments(&law, 200.0, 100_000, &mut stream(seed, "c14-delta", law.label().len() as u64));
        b.within_se(format!("overshoot-{law}"), "E[Delta(x)] -> (s^2 + m^2)/(2m)", target, d.mean, d.se_mean, 3.0, 0.0);
    }
    let budget = QuadrantBudget::default();
    for (law, expected) in [
        (IncrementLaw::Exponential, QuadrantVerdict::Recurrent),
        (IncrementLaw::Erlang2, QuadrantVerdict::Transient),
        (IncrementLaw::SqrtUniform, QuadrantVerdict::Recurrent),
    ] {
        let rep = classify_quadrant(&law, &budget, &mut stream(seed, "c14-classify", law.label().len() as u64));
        b.check(
            format!("verdict-{law}"),
            "stated examples of recurrence and transience",
            format!("{expected:?}"),
            format!("{:?} (mu^2 - s^2 = {:.4}, drift {:.4})", rep.verdict, rep.mu * rep.mu - rep.sigma2, rep.drift.last().map_or(f64::NAN, |p| p.stat)),
            "exact",
            rep.verdict == expected,
        );
    }
    b.done()
}
