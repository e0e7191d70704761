use std::process::Command;

use serde_json::Value;
use urn_core::rng::rng_stream;

fn urnlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_urnlab")).args(args).output().expect("binary runs")
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = urnlab(&["simulate", "--z0", "7", "--traversals", "5", "--replicas", "50", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
    let c = dir.path().join("c.csv");
    urnlab(&["simulate", "--z0", "7", "--traversals", "5", "--replicas", "50", "--seed", "10", "--out", c.to_str().unwrap()]);
    assert_ne!(x, std::fs::read(&c).unwrap());
}

#[test]
fn exact_row_is_normalised() {
    let o = urnlab(&["exact", "--n", "10"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.split("\r\n");
    assert_eq!(lines.next(), Some("n,m,p_num,p_den,p"));
    let total: f64 = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-11, "total {total}");
}

#[test]
fn json_output_carries_schema() {
    let o = urnlab(&["--format", "json", "exact", "--n", "3"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "exact");
    assert_eq!(v["params"]["n"], 3);
    assert!(v["rows"].as_array().unwrap().len() > 10);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(urnlab(&["exact"]).status.code(), Some(2));
    assert_eq!(urnlab(&["nonsense"]).status.code(), Some(2));
    assert_eq!(urnlab(&["exact", "--n", "0"]).status.code(), Some(2));
    assert_eq!(urnlab(&["simulate", "--kappa", "point:x"]).status.code(), Some(2));
    assert_eq!(urnlab(&["renewal", "--t", "-1"]).status.code(), Some(2));
}

#[test]
fn every_subcommand_runs() {
    let runs: &[&[&str]] = &[
        &["simulate", "--replicas", "2", "--traversals", "2"],
        &["simulate", "--model", "noisy", "--kappa", "twopoint:0:2:1/2", "--replicas", "2"],
        &["simulate", "--model", "leaky", "--replicas", "2"],
        &["renewal", "--t", "0.5,5", "--mc", "--replicas", "100"],
        &["renewal", "--roots", "--pairs", "3"],
        &["embed", "--mode", "fast", "--n", "3", "--replicas", "5"],
        &["embed", "--mode", "slow", "--n", "3", "--replicas", "5"],
        &["embed", "--mode", "poly", "--n", "3"],
        &["embed", "--mode", "martingale", "--n", "5", "--replicas", "10"],
        &["perc", "--experiment", "coalesce", "--replicas", "3"],
        &["perc", "--experiment", "ingraph", "--max", "2", "--replicas", "10"],
        &["perc", "--experiment", "tsolve", "--max", "2", "--tolerance", "0.5"],
        &["perc", "--experiment", "dual", "--window", "5"],
        &["classify", "--kind", "verdict", "--kappa", "point:1", "--table-max", "50", "--replicas", "10", "--budget", "100", "--grid", "5,10"],
        &["classify", "--kind", "diffusion", "--table-max", "50", "--horizon", "20", "--budget", "100"],
        &["classify", "--kind", "tail", "--kappa", "point:1", "--table-max", "50", "--start", "10", "--budget", "300"],
        &["quadrant", "--law", "exponential", "--replicas", "2", "--crossings", "3"],
        &["quadrant", "--law", "erlang2", "--classify", "--samples", "100"],
    ];
    for args in runs {
        let o = urnlab(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.len() > 10, "{args:?}");
    }
}

#[test]
fn quick_verification_passes() {
    let o = urnlab(&["verify", "--suite", "quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().filter(|l| l.contains(": PASS")).count(), 6);
}

fn draws(i: u64, n: usize) -> Vec<f64> {
    let mut r = rng_stream(42, "simulate", i);
    (0..n).map(|_| urn_core::rng::uniform(&mut r)).collect()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn adjacent_replica_streams_are_uncorrelated() {
    let rho = correlation(&draws(0, 10_000), &draws(1, 10_000));
    assert!(rho.abs() < 0.01, "rho={rho}");
}

#[test]
fn replica_stream_correlations_look_like_noise() {
    // Independent streams give rho with standard error 1/sqrt(n); 45 pairs at 4.5 SE.
    let n = 10_000;
    let xs: Vec<Vec<f64>> = (0..10).map(|i| draws(i, n)).collect();
    let mut sum_sq = 0.0;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let z = correlation(&xs[i], &xs[j]) * (n as f64).sqrt();
            assert!(z.abs() < 4.5, "streams {i},{j}: z={z}");
            sum_sq += z * z;
        }
    }
    // Sum of 45 squared z-scores is about chi-square with 45 degrees of freedom.
    assert!(sum_sq < 80.0, "sum of squares {sum_sq}");
}
