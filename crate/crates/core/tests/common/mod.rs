#![allow(dead_code)]

use urn_core::exact::ExactLaw;
use urn_core::stats::{chi_square_pmf, histogram, ChiSquare};

/// p(n, 1..=M) as f64 with a certified tail below 1e-12.
pub fn exact_row(n: u64) -> Vec<f64> {
    ExactLaw::new().row(n, 1e-12).unwrap().probs_f64()
}

/// Chi-square of positive integer samples against a pmf on 1..=probs.len().
pub fn gof(samples: impl IntoIterator<Item = u64>, probs: &[f64]) -> ChiSquare {
    chi_square_pmf(&histogram(samples), probs)
}

/// Law of m − min(κ, m − 1) when m ~ `row` (on 1..) and κ has pmf `kappa` on 0...
pub fn clamp_shift(row: &[f64], kappa: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; row.len()];
    for (i, &p) in row.iter().enumerate() {
        let m = i + 1;
        for (k, &w) in kappa.iter().enumerate() {
            let j = m.saturating_sub(k).max(1);
            out[j - 1] += p * w;
        }
    }
    out
}

/// Two-step law of the embedded chain from `n`.
pub fn two_step(n: u64) -> Vec<f64> {
    let first = exact_row(n);
    let mut out: Vec<f64> = Vec::new();
    for (i, &p) in first.iter().enumerate() {
        if p < 1e-14 {
            continue;
        }
        let r = exact_row(i as u64 + 1);
        if out.len() < r.len() {
            out.resize(r.len(), 0.0);
        }
        for (j, &q) in r.iter().enumerate() {
            out[j] += p * q;
        }
    }
    out
}
