//! One runner per subcommand; each returns its parameters and a result table.

use std::f64::consts::FRAC_PI_2;

use serde_json::{json, Value};
use urn_core::asymptotics::{classify, diffusion_marginal_test, tail_exponent_tau_q, ClassifyConfig, TailConfig};
use urn_core::embeddings::{area_poly_exact, martingale_residual, simulate_fast, simulate_slow, tau_f_poly_exact, FastStop};
use urn_core::exact::ExactLaw;
use urn_core::percolation::{
    dual_path_image, in_graph_restricted, solve_t, trace_and_coalesce, Budget, Coalescence, CoverVertex, DualVertex, EdgeStore,
};
use urn_core::precision::{ratio_to_f64, to_f64, PrecisionConfig};
use urn_core::quadrant::{classify_quadrant, simulate_crossings, QuadrantBudget};
use urn_core::renewal::{char_roots, count_moments_mc, renewal_function_asymptotic, renewal_function_exact};
use urn_core::rng::{mix64, rng_stream};
use urn_core::table::TransitionTable;
use urn_core::urn::{simulate_leaky, simulate_noisy, traverse_quadrant_capped, NoisyCaps};

use crate::config::{ClassifyKind, Command, EmbedKind, ExperimentConfig, Model, PercKind, Suite};
use crate::output::Table;
use crate::verify::{run_suite, CRITERIA, QUICK};

/// A failed run: either bad parameters or an internal error.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Failed(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(s) | RunError::Failed(s) => f.write_str(s),
        }
    }
}

pub struct Outcome {
    pub params: Value,
    pub table: Table,
    /// False when a verification check failed.
    pub passed: bool,
}

fn done(params: Value, table: Table) -> Result<Outcome, RunError> {
    Ok(Outcome { params, table, passed: true })
}

fn opt<T: Into<Value>>(v: Option<T>) -> Value {
    v.map_or(Value::Null, Into::into)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let seed = cfg.seed;
    let reps = cfg.replicas;
    let prec = PrecisionConfig::with_bits(cfg.prec_bits);
    match &cfg.command {
        Command::Simulate { model, z0, kappa, traversals, step_cap } => {
            let params = json!({"model": format!("{model:?}").to_lowercase(), "z0": z0, "kappa": kappa.to_string(), "traversals": traversals, "step_cap": step_cap, "replicas": reps});
            let mut t;
            match model {
                Model::Simple => {
                    t = Table::new(&["replica", "traversal", "z_start", "z_next", "steps", "area2"]);
                    for i in 0..reps {
                        let mut r = rng_stream(seed, "simulate", i);
                        let mut z = *z0;
                        for k in 0..*traversals {
                            let tr = traverse_quadrant_capped(z, &mut r, *step_cap).map_err(|e| RunError::Failed(e.to_string()))?;
                            t.push(vec![json!(i), json!(k), json!(z), json!(tr.z_next), json!(tr.steps), json!(tr.area2)]);
                            z = tr.z_next;
                        }
                    }
                }
                Model::Leaky | Model::Noisy => {
                    t = Table::new(&["replica", "tau", "tau_q", "steps", "area2", "censored"]);
                    let ks = kappa.sampler();
                    for i in 0..reps {
                        let mut r = rng_stream(seed, "simulate", i);
                        let rec = if *model == Model::Leaky {
                            simulate_leaky(*z0, &mut r, *step_cap)
                        } else {
                            simulate_noisy(*z0, &ks, &mut r, NoisyCaps { step_cap: *step_cap, traversal_cap: u64::MAX, record_z: false })
                        }
                        .map_err(|e| RunError::Failed(e.to_string()))?;
                        t.push(vec![json!(i), opt(rec.tau), opt(rec.tau_q), json!(rec.steps), json!(rec.area2.to_string()), json!(rec.censored)]);
                    }
                }
            }
            done(params, t)
        }
        Command::Exact { n, tail_tol } => {
            if !(*tail_tol > 0.0 && *tail_tol < 1.0) {
                return Err(RunError::Usage("--tail-tol must lie in (0, 1)".into()));
            }
            let row = ExactLaw::new().row(*n, *tail_tol).map_err(|e| RunError::Failed(e.to_string()))?;
            let mut t = Table::new(&["n", "m", "p_num", "p_den", "p"]);
            for (i, p) in row.probs.iter().enumerate() {
                t.push(vec![json!(n), json!(i + 1), json!(p.numer().to_string()), json!(p.denom().to_string()), json!(ratio_to_f64(p))]);
            }
            t.note("tail_bound", row.tail_bound);
            t.note("partial_sum", ratio_to_f64(&row.partial_sum()));
            done(json!({"n": n, "tail_tol": tail_tol}), t)
        }
        Command::Renewal { t: times, pairs, roots, mc } => {
            let params = json!({"t": times, "pairs": pairs, "roots": roots, "mc": mc, "replicas": reps});
            if *roots {
                let rs = char_roots(*pairs, prec).map_err(|e| RunError::Failed(e.to_string()))?;
                let mut t = Table::new(&["index", "re", "im", "residual"]);
                for r in rs {
                    t.push(vec![json!(r.index), json!(r.re_f64()), json!(r.im_f64()), json!(r.residual)]);
                }
                return done(params, t);
            }
            let mut cols = vec!["t", "f_exact", "f_asymptotic"];
            if *mc {
                cols.extend(["mean_mc", "se_mean", "variance_mc", "se_variance"]);
            }
            let mut t = Table::new(&cols);
            for (i, &x) in times.iter().enumerate() {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(RunError::Usage(format!("t must be finite and non-negative, got {x}")));
                }
                let f = renewal_function_exact(x, prec).map_err(|e| RunError::Failed(e.to_string()))?;
                let a = renewal_function_asymptotic(x, *pairs, prec).map_err(|e| RunError::Failed(e.to_string()))?;
                let mut row = vec![json!(x), json!(to_f64(&f)), json!(to_f64(&a))];
                if *mc {
                    let m = count_moments_mc(x, reps, &mut rng_stream(seed, "renewal", i as u64));
                    row.extend([json!(m.mean), json!(m.se_mean), json!(m.variance), json!(m.se_variance)]);
                }
                t.push(row);
            }
            done(params, t)
        }
        Command::Embed { kind, n, time } => {
            let params = json!({"kind": format!("{kind:?}").to_lowercase(), "n": n, "time": time, "replicas": reps});
            let mut t;
            match kind {
                EmbedKind::Fast => {
                    t = Table::new(&["replica", "tau_f", "events"]);
                    for i in 0..reps {
                        let o = simulate_fast(*n as i64, 0, &mut rng_stream(seed, "embed-fast", i), FastStop::AHitsZero { horizon: 1e6 }, false);
                        t.push(vec![json!(i), opt(o.tau_f), json!(o.events)]);
                    }
                    t.note("target_large_n", FRAC_PI_2);
                }
                EmbedKind::Slow => {
                    t = Table::new(&["replica", "final_v", "t_end", "jumps"]);
                    for i in 0..reps {
                        let o = simulate_slow(*n, &mut rng_stream(seed, "embed-slow", i));
                        t.push(vec![json!(i), json!(o.final_v), json!(o.t_end), json!(o.chain.len() - 1)]);
                    }
                }
                EmbedKind::Poly => {
                    t = Table::new(&["n", "tau_f", "area"]);
                    for k in 1..=*n {
                        let a = tau_f_poly_exact(k, prec).map_err(|e| RunError::Failed(e.to_string()))?;
                        let b = area_poly_exact(k, prec).map_err(|e| RunError::Failed(e.to_string()))?;
                        t.push(vec![json!(k), json!(to_f64(&a)), json!(to_f64(&b))]);
                    }
                }
                EmbedKind::Martingale => {
                    let m = martingale_residual(*n as i64, 0, *time, reps, &mut rng_stream(seed, "embed-martingale", 0));
                    t = Table::new(&["re", "se_re", "im", "se_im"]);
                    t.push(vec![json!(m.re), json!(m.se_re), json!(m.im), json!(m.se_im)]);
                }
            }
            done(params, t)
        }
        Command::Perc { kind, a, b, turns, max, tolerance, z0, len } => {
            let params = json!({"kind": format!("{kind:?}").to_lowercase(), "a": a, "b": b, "turns": turns, "max": max, "tolerance": tolerance, "z0": z0, "len": len, "replicas": reps});
            let mut t;
            match kind {
                PercKind::Coalesce => {
                    t = Table::new(&["replica", "met", "steps_a", "steps_b"]);
                    let mut met = 0u64;
                    for i in 0..reps {
                        let mut store = EdgeStore::new(mix64(seed ^ mix64(i)));
                        let budget = Budget { turns: *turns, vertices: 10_000_000 };
                        match trace_and_coalesce(CoverVertex::new(*a, 0), CoverVertex::new(*b, 0), &mut store, budget) {
                            Coalescence::Met { steps_a, steps_b, .. } => {
                                met += 1;
                                t.push(vec![json!(i), json!(true), json!(steps_a), json!(steps_b)]);
                            }
                            Coalescence::BudgetExhausted { .. } => t.push(vec![json!(i), json!(false), Value::Null, Value::Null]),
                        }
                    }
                    t.note("fraction_met", met as f64 / reps as f64);
                }
                PercKind::Ingraph => {
                    t = Table::new(&["m", "mean", "se", "censored"]);
                    for m in 1..=*max as i64 {
                        let (mut s, mut s2, mut cens) = (0.0, 0.0, 0u64);
                        for i in 0..reps {
                            let c = in_graph_restricted(0, m, mix64(seed ^ mix64(m as u64 * 1_000_003 + i)), 10_000_000);
                            let v = c.count as f64;
                            s += v;
                            s2 += v * v;
                            cens += c.censored as u64;
                        }
                        let n = reps as f64;
                        let mean = s / n;
                        let se = ((s2 / n - mean * mean).max(0.0) / n).sqrt();
                        t.push(vec![json!(m), json!(mean), json!(se), json!(cens)]);
                    }
                }
                PercKind::Tsolve => {
                    if *max == 0 || tolerance.is_nan() || *tolerance <= 0.0 {
                        return Err(RunError::Usage("tsolve needs --max >= 1 and --tolerance > 0".into()));
                    }
                    let tt = solve_t(*max, *tolerance);
                    t = Table::new(&["x", "y", "T"]);
                    for x in 0..=*max as usize {
                        for y in 0..=(*max as usize) {
                            if let Some(v) = tt.get(x, y) {
                                t.push(vec![json!(x), json!(y), json!(v)]);
                            }
                        }
                    }
                }
                PercKind::Dual => {
                    if *z0 < 1 {
                        return Err(RunError::Usage("dual path needs --z0 >= 1".into()));
                    }
                    t = Table::new(&["step", "x", "y"]);
                    for (k, (x, y)) in dual_path_image(mix64(seed), DualVertex::new(2 * z0 - 1, 1), *len).into_iter().enumerate() {
                        t.push(vec![json!(k), json!(x), json!(y)]);
                    }
                }
            }
            done(params, t)
        }
        Command::Classify { kind, kappa, table_max, start, escape_above, grid, samples, horizon } => {
            let params = json!({"kind": format!("{kind:?}").to_lowercase(), "kappa": kappa.to_string(), "table_max": table_max, "start": start, "escape_above": escape_above, "grid": grid, "samples": samples, "horizon": horizon, "replicas": reps});
            if *table_max == 0 {
                return Err(RunError::Usage("--table-max must be positive".into()));
            }
            let table = TransitionTable::build(*table_max);
            let mut r = rng_stream(seed, "classify", 0);
            let mut t;
            match kind {
                ClassifyKind::Verdict => {
                    let grid: Vec<u64> = grid.iter().map(|g| g.round() as u64).filter(|&g| g > 0).collect();
                    let cc = ClassifyConfig { paths: reps, start: *start, escape_above: *escape_above, grid, samples_per_point: *samples, ..Default::default() };
                    let rep = classify(kappa, &cc, &table, &mut r);
                    t = Table::new(&["x", "mu1", "mu2", "stat_minus", "se_stat_minus", "stat_plus", "se_stat_plus"]);
                    for p in &rep.profile.points {
                        t.push(vec![json!(p.x), json!(p.mu1), json!(p.mu2), json!(p.stat_minus), json!(p.se_stat_minus), json!(p.stat_plus), json!(p.se_stat_plus)]);
                    }
                    t.note("verdict", format!("{:?}", rep.verdict));
                    t.note("walk_class", format!("{:?}", rep.walk_class));
                    t.note("return_fraction", rep.returns.fraction());
                    t.note("drift_consistent", rep.drift_consistent);
                    t.note("returns_consistent", rep.returns_consistent);
                    t.note("inconclusive", rep.inconclusive);
                }
                ClassifyKind::Diffusion => {
                    if kappa.mean_f64() >= 2.0 / 3.0 {
                        return Err(RunError::Usage("diffusion limit needs E[kappa] < 2/3".into()));
                    }
                    let d = diffusion_marginal_test(kappa, *horizon, *samples as usize, &table, &mut r);
                    t = Table::new(&["horizon", "samples", "shape", "rate", "ks", "mean", "se_mean", "limit_mean"]);
                    t.push(vec![json!(d.horizon), json!(d.samples), json!(d.shape), json!(d.rate), json!(d.ks), json!(d.mean), json!(d.se_mean), json!(d.limit_mean)]);
                }
                ClassifyKind::Tail => {
                    let tc = TailConfig { start: *start, samples: *samples, ..Default::default() };
                    let rep = tail_exponent_tau_q(kappa, tc, &table, &mut r).map_err(|e| RunError::Usage(format!("tail fit: {e:?}")))?;
                    t = Table::new(&["time", "exponent", "ci_low", "ci_high", "predicted", "points"]);
                    for (name, f, p) in [("tau_q", &rep.tau_q, rep.predicted_tau_q), ("tau", &rep.tau, rep.predicted_tau)] {
                        t.push(vec![json!(name), json!(f.exponent), json!(f.ci_low), json!(f.ci_high), json!(p), json!(f.points_used)]);
                    }
                    t.note("censored", rep.censored);
                }
            }
            done(params, t)
        }
        Command::Quadrant { law, a0, crossings, samples, classify: want_class } => {
            let n = samples.unwrap_or(reps);
            let params = json!({"law": law.label(), "a0": a0, "crossings": crossings, "samples": n, "classify": want_class});
            if !(*a0 > 0.0 && a0.is_finite()) {
                return Err(RunError::Usage("--a0 must be positive".into()));
            }
            let mut t;
            if *want_class {
                let budget = QuadrantBudget { samples_per_point: n, ..Default::default() };
                let rep = classify_quadrant(law, &budget, &mut rng_stream(seed, "quadrant-classify", 0));
                t = Table::new(&["y", "stat", "se"]);
                for p in &rep.drift {
                    t.push(vec![json!(p.y), json!(p.stat), json!(p.se)]);
                }
                t.note("verdict", format!("{:?}", rep.verdict));
                t.note("critical", rep.critical);
                t.note("mu", rep.mu);
                t.note("sigma2", rep.sigma2);
                t.note("drift_limit", rep.drift_limit);
                t.note("drift_consistent", rep.drift_consistent);
            } else {
                t = Table::new(&["replica", "k", "T_k", "R_k"]);
                for i in 0..n {
                    for (k, c) in simulate_crossings(law, *a0, *crossings, &mut rng_stream(seed, "quadrant", i)).into_iter().enumerate() {
                        t.push(vec![json!(i), json!(k + 1), json!(c.steps), json!(c.height)]);
                    }
                }
            }
            done(params, t)
        }
        Command::Verify { suite } => {
            let nums: &[u32] = match suite {
                Suite::Core => &CRITERIA,
                Suite::Quick => &QUICK,
            };
            let report = run_suite(nums, seed, cfg.prec_bits, |c| eprintln!("{}", c.line()));
            let mut t = Table::new(&["criterion", "title", "check_id", "anchor", "expected", "observed", "tolerance", "pass"]);
            for c in &report.criteria {
                for k in &c.checks {
                    t.push(vec![json!(c.number), json!(c.title), json!(k.check_id), json!(k.anchor), json!(k.expected), json!(k.observed), json!(k.tolerance), json!(k.pass)]);
                }
            }
            t.note("pass", report.pass);
            Ok(Outcome { params: json!({"suite": format!("{suite:?}").to_lowercase()}), table: t, passed: report.pass })
        }
    }
}
