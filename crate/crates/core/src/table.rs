//! Tabulated transition law of the embedded chain.
//!
//! Rows p(n, ·) for n ≤ n_max are built once by the positive recurrence
//! p(n,m) = (m/(n+m)) (p(n−1,m) + (n/(m−1)) p(n,m−1)) in f64, trimmed to the
//! window where both tails exceed 2^-36, and stored as 32-bit quantized CDFs
//! with a small guide table. States above n_max are simulated directly.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::urn::traverse_quadrant;

/// Source of Z_{k+1} given Z_k = n.
pub trait TransitionSampler {
    fn sample_next(&self, n: u64, rng: &mut dyn RngCore) -> u64;
}

/// Simulates the quadrant traversal step by step.
#[derive(Clone, Copy, Debug, Default)]
pub struct DirectSampler;

impl TransitionSampler for DirectSampler {
    fn sample_next(&self, n: u64, rng: &mut dyn RngCore) -> u64 {
        traverse_quadrant(n, rng).expect("n >= 1").z_next
    }
}

const GUIDE: usize = 128;
const GUIDE_SHIFT: u32 = 25; // 2^32 / 128
const STORE_TAIL: f64 = 1.0 / (1u64 << 36) as f64;
const WORK_TAIL: f64 = 1e-40;

#[derive(Clone, Copy, Debug)]
struct RowIndex {
    lo: u64,
    start: usize,
    len: usize,
}

#[derive(Clone, Debug)]
pub struct TransitionTable {
    n_max: u64,
    rows: Vec<RowIndex>,
    cdf: Vec<u32>,
    guide: Vec<u16>,
}

impl TransitionTable {
    /// Build rows 1..=n_max. Memory is about 40·n_max^{3/2} bytes.
    pub fn build(n_max: u64) -> Self {
        assert!(n_max >= 1);
        let mut rows = Vec::with_capacity(n_max as usize + 1);
        rows.push(RowIndex { lo: 0, start: 0, len: 0 });
        let mut cdf = Vec::new();
        let mut guide = Vec::with_capacity(GUIDE * n_max as usize);

        // Working row: values p(n, work_lo + j).
        let mut work_lo = 1u64;
        let mut work: Vec<f64> = Vec::new();
        {
            let mut m = 1u64;
            let mut term = 0.5; // p(1,1) = 1/2; p(1,m+1) = p(1,m)(m+1)/(m(m+2))
            while term > WORK_TAIL || m < 3 {
                work.push(term);
                term *= (m + 1) as f64 / (m as f64 * (m + 2) as f64);
                m += 1;
            }
        }
        Self::store_row(&work, work_lo, &mut rows, &mut cdf, &mut guide);

        for n in 2..=n_max {
            let nf = n as f64;
            let mut next = Vec::with_capacity(work.len() + 8);
            let prev_at = |m: u64| -> f64 {
                if m < work_lo {
                    0.0
                } else {
                    work.get((m - work_lo) as usize).copied().unwrap_or(0.0)
                }
            };
            let mut m = work_lo;
            let mut left = 0.0;
            loop {
                let mf = m as f64;
                let from_left = if m > 1 { nf / (mf - 1.0) * left } else { 0.0 };
                let v = mf / (nf + mf) * (prev_at(m) + from_left);
                next.push(v);
                left = v;
                m += 1;
                if m >= work_lo + work.len() as u64 && v < WORK_TAIL {
                    break;
                }
            }
            // Trim the negligible left edge of the working row.
            let skip = next.iter().position(|&v| v > WORK_TAIL).unwrap_or(0);
            work = next.split_off(skip);
            work_lo += skip as u64;
            Self::store_row(&work, work_lo, &mut rows, &mut cdf, &mut guide);
        }
        TransitionTable { n_max, rows, cdf, guide }
    }

    fn store_row(work: &[f64], work_lo: u64, rows: &mut Vec<RowIndex>, cdf: &mut Vec<u32>, guide: &mut Vec<u16>) {
        let total: f64 = work.iter().sum();
        let mut acc = 0.0;
        let mut first = 0;
        for (j, &v) in work.iter().enumerate() {
            acc += v / total;
            if acc > STORE_TAIL {
                first = j;
                break;
            }
        }
        let mut acc = 0.0;
        let mut last = work.len() - 1;
        for (j, &v) in work.iter().enumerate().rev() {
            acc += v / total;
            if acc > STORE_TAIL {
                last = j;
                break;
            }
        }
        let start = cdf.len();
        let scale = 4294967296.0;
        let mut c = 0.0;
        for &v in &work[first..last] {
            c += v / total;
            cdf.push(libm::round(c * scale).min(u32::MAX as f64) as u32);
        }
        // The final entry is implicit (CDF = 1).
        let len = last - first + 1;
        assert!(len < u16::MAX as usize, "row too wide for the guide table");
        rows.push(RowIndex { lo: work_lo + first as u64, start, len });
        let row = &cdf[start..];
        for b in 0..GUIDE {
            let threshold = (b as u64) << GUIDE_SHIFT;
            let j = row.partition_point(|&x| (x as u64) <= threshold);
            guide.push(j as u16);
        }
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// Smallest and largest m with stored mass for row n.
    pub fn support(&self, n: u64) -> Option<(u64, u64)> {
        let r = self.rows.get(n as usize).filter(|_| n >= 1)?;
        Some((r.lo, r.lo + r.len as u64 - 1))
    }

    /// Quantized probability of m in row n, or None outside the table.
    pub fn prob(&self, n: u64, m: u64) -> Option<f64> {
        let (lo, hi) = self.support(n)?;
        if m < lo || m > hi {
            return Some(0.0);
        }
        let r = self.rows[n as usize];
        let row = &self.cdf[r.start..r.start + r.len - 1];
        let j = (m - lo) as usize;
        let upper = row.get(j).map_or(4294967296.0, |&x| x as f64);
        let lower = if j == 0 { 0.0 } else { row[j - 1] as f64 };
        Some((upper - lower) / 4294967296.0)
    }

    pub fn bytes(&self) -> usize {
        self.cdf.len() * 4 + self.guide.len() * 2 + self.rows.len() * core::mem::size_of::<RowIndex>()
    }

    /// Draw from row n using one 32-bit word; n must be in 1..=n_max.
    pub fn sample_row(&self, n: u64, u: u32) -> u64 {
        let r = self.rows[n as usize];
        let row = &self.cdf[r.start..r.start + r.len - 1];
        let b = (u >> GUIDE_SHIFT) as usize;
        let g = &self.guide[(n as usize - 1) * GUIDE..n as usize * GUIDE];
        let a = g[b] as usize;
        let e = if b + 1 < GUIDE { (g[b + 1] as usize + 1).min(row.len()) } else { row.len() };
        let j = a + row[a..e].partition_point(|&x| x <= u);
        r.lo + j as u64
    }
}

impl TransitionSampler for TransitionTable {
    fn sample_next(&self, n: u64, rng: &mut dyn RngCore) -> u64 {
        if n >= 1 && n <= self.n_max {
            self.sample_row(n, rng.next_u32())
        } else {
            DirectSampler.sample_next(n, rng)
        }
    }
}

/// Probability vector of row n as (first m, probabilities), for diagnostics.
pub fn row_probabilities(table: &TransitionTable, n: u64) -> Option<(u64, Vec<f64>)> {
    let (lo, hi) = table.support(n)?;
    let mut out = vec![0.0; (hi - lo + 1) as usize];
    for (i, m) in (lo..=hi).enumerate() {
        out[i] = table.prob(n, m).unwrap_or(0.0);
    }
    Some((lo, out))
}
