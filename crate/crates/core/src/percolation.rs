//! Oriented percolation on the covering surface of the punctured plane.
//!
//! A vertex is a lattice point together with a quadrant index `q` whose
//! residue mod 4 is the quadrant of the point (0: x>0,y>=0; 1: x<=0,y>0;
//! 2: x<0,y<=0; 3: x>=0,y<0). Every vertex owns one out-edge drawn from the
//! urn law by a keyed hash of (seed, vertex), so queries need no shared state.
//! Dual vertices sit at half-integer points, stored doubled.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::rng::mix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoverVertex {
    pub x: i64,
    pub y: i64,
    pub winding: i64,
}

/// Quadrant residue of a non-zero lattice point.
pub fn base_quadrant(x: i64, y: i64) -> i64 {
    match (x, y) {
        (x, y) if x > 0 && y >= 0 => 0,
        (x, y) if x <= 0 && y > 0 => 1,
        (x, y) if x < 0 && y <= 0 => 2,
        _ => 3,
    }
}

impl CoverVertex {
    /// Vertex on the reference sheet (winding in 0..4).
    pub fn new(x: i64, y: i64) -> Self {
        assert!(x != 0 || y != 0, "origin is not on the cover");
        CoverVertex { x, y, winding: base_quadrant(x, y) }
    }

    pub fn with_winding(x: i64, y: i64, winding: i64) -> Self {
        assert!(x != 0 || y != 0, "origin is not on the cover");
        assert_eq!(winding.rem_euclid(4), base_quadrant(x, y), "winding residue must match the quadrant");
        CoverVertex { x, y, winding }
    }

    /// Full turns from the reference sheet.
    pub fn turns(&self) -> i64 {
        self.winding.div_euclid(4)
    }

    /// Lift a nearby lattice point onto the sheet of `self`.
    pub fn lift(&self, x: i64, y: i64) -> CoverVertex {
        let d = (base_quadrant(x, y) - self.winding.rem_euclid(4) + 2).rem_euclid(4) - 2;
        CoverVertex { x, y, winding: self.winding + d }
    }
}

/// Per-vertex uniform in [0,1) from the keyed hash.
pub fn vertex_uniform(seed: u64, x: i64, y: i64, winding: i64) -> f64 {
    let mut h = mix64(seed ^ 0x243f_6a88_85a3_08d3);
    h = mix64(h ^ x as u64);
    h = mix64(h ^ (y as u64).rotate_left(21));
    h = mix64(h ^ (winding as u64).rotate_left(42));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Is the out-edge of `v` the vertical move (x, y + sgn x)?
pub fn moves_vertically(seed: u64, v: CoverVertex) -> bool {
    let (ax, ay) = (v.x.abs(), v.y.abs());
    if ay == 0 {
        return true;
    }
    if ax == 0 {
        return false;
    }
    vertex_uniform(seed, v.x, v.y, v.winding) * ((ax + ay) as f64) < ax as f64
}

/// Head of the out-edge of `v` as a pure function of the seed.
pub fn head(seed: u64, v: CoverVertex) -> CoverVertex {
    if moves_vertically(seed, v) {
        v.lift(v.x, v.y + v.x.signum())
    } else {
        v.lift(v.x - v.y.signum(), v.y)
    }
}

#[derive(Clone, Debug)]
pub struct EdgeStore {
    pub seed: u64,
    memo: Option<BTreeMap<CoverVertex, CoverVertex>>,
}

impl EdgeStore {
    /// Store that derives every edge on demand.
    pub fn new(seed: u64) -> Self {
        EdgeStore { seed, memo: None }
    }

    /// Store that also records every queried edge.
    pub fn memoized(seed: u64) -> Self {
        EdgeStore { seed, memo: Some(BTreeMap::new()) }
    }

    pub fn out_edge(&mut self, v: CoverVertex) -> CoverVertex {
        let seed = self.seed;
        match &mut self.memo {
            Some(m) => *m.entry(v).or_insert_with(|| head(seed, v)),
            None => head(seed, v),
        }
    }

    pub fn recorded(&self) -> usize {
        self.memo.as_ref().map_or(0, |m| m.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coalescence {
    Met { vertex: CoverVertex, steps_a: u64, steps_b: u64 },
    BudgetExhausted { steps: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Full turns either path may make beyond its start.
    pub turns: i64,
    pub vertices: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { turns: 6, vertices: 10_000_000 }
    }
}

/// Follow both oriented paths until they share a vertex.
pub fn trace_and_coalesce(a: CoverVertex, b: CoverVertex, store: &mut EdgeStore, budget: Budget) -> Coalescence {
    if a == b {
        return Coalescence::Met { vertex: a, steps_a: 0, steps_b: 0 };
    }
    let (mut seen_a, mut seen_b) = (BTreeMap::new(), BTreeMap::new());
    seen_a.insert(a, 0u64);
    seen_b.insert(b, 0u64);
    let (mut ca, mut cb) = (a, b);
    let (mut na, mut nb) = (0u64, 0u64);
    let (lim_a, lim_b) = (a.winding + 4 * budget.turns, b.winding + 4 * budget.turns);
    loop {
        let adv_a = ca.winding <= lim_a;
        let adv_b = cb.winding <= lim_b;
        if (!adv_a && !adv_b) || na + nb >= budget.vertices {
            return Coalescence::BudgetExhausted { steps: na + nb };
        }
        // Advance the path that lags in winding, so both sweep the same sheets.
        if adv_a && (!adv_b || ca.winding <= cb.winding) {
            ca = store.out_edge(ca);
            na += 1;
            if let Some(&sb) = seen_b.get(&ca) {
                return Coalescence::Met { vertex: ca, steps_a: na, steps_b: sb };
            }
            seen_a.insert(ca, na);
        } else {
            cb = store.out_edge(cb);
            nb += 1;
            if let Some(&sa) = seen_a.get(&cb) {
                return Coalescence::Met { vertex: cb, steps_a: sa, steps_b: nb };
            }
            seen_b.insert(cb, nb);
        }
    }
}

/// Oriented path of `len` edges from `v`.
pub fn trace(v: CoverVertex, store: &mut EdgeStore, len: usize) -> Vec<CoverVertex> {
    let mut out = Vec::with_capacity(len + 1);
    let mut c = v;
    out.push(c);
    for _ in 0..len {
        c = store.out_edge(c);
        out.push(c);
    }
    out
}

/// Dual vertex: coordinates are twice the half-integer position, so both are odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DualVertex {
    pub x2: i64,
    pub y2: i64,
    pub winding: i64,
}

impl DualVertex {
    pub fn new(x2: i64, y2: i64) -> Self {
        assert!(x2 % 2 != 0 && y2 % 2 != 0, "dual coordinates must be half-integers");
        DualVertex { x2, y2, winding: base_quadrant(x2, y2) }
    }

    pub fn as_f64(&self) -> (f64, f64) {
        (self.x2 as f64 / 2.0, self.y2 as f64 / 2.0)
    }

    /// Primal vertex whose out-edge fixes the dual out-edge.
    pub fn anchor(&self) -> CoverVertex {
        let (sx, sy) = (self.x2.signum(), self.y2.signum());
        let x = (self.x2 + sy) / 2;
        let y = (self.y2 - sx) / 2;
        CoverVertex { x, y, winding: self.winding }
    }
}

/// Φ(a, b) = (a + ½ sgn b, −(b − ½ sgn a)).
pub fn phi_map(v: DualVertex) -> (i64, i64) {
    let (sx, sy) = (v.x2.signum(), v.y2.signum());
    ((v.x2 + sy) / 2, -(v.y2 - sx) / 2)
}

/// Head of the dual out-edge: it runs clockwise and never crosses a primal edge.
pub fn dual_out_edge(seed: u64, v: DualVertex) -> DualVertex {
    let (sx, sy) = (v.x2.signum(), v.y2.signum());
    let (x2, y2) = if moves_vertically(seed, v.anchor()) {
        (v.x2, v.y2 - 2 * sx)
    } else {
        (v.x2 + 2 * sy, v.y2)
    };
    let d = (base_quadrant(x2, y2) - v.winding.rem_euclid(4) + 2).rem_euclid(4) - 2;
    DualVertex { x2, y2, winding: v.winding + d }
}

/// Primal unit edge crossed by the dual edge from `v` to `w`, as its two endpoints.
fn crossed_primal(v: DualVertex, w: DualVertex) -> ((i64, i64), (i64, i64)) {
    if v.x2 == w.x2 {
        let y = (v.y2 + w.y2) / 4;
        (((v.x2 - 1) / 2, y), ((v.x2 + 1) / 2, y))
    } else {
        let x = (v.x2 + w.x2) / 4;
        ((x, (v.y2 - 1) / 2), (x, (v.y2 + 1) / 2))
    }
}

/// Count dual edges, out of the dual vertices in the window |x|,|y| < half_width,
/// that cross the out-edge of a primal vertex. Zero means the dual is planar-compatible.
pub fn dual_crossings(seed: u64, half_width: i64) -> (u64, u64) {
    let (mut checked, mut bad) = (0u64, 0u64);
    let mut x2 = -2 * half_width + 1;
    while x2 < 2 * half_width {
        let mut y2 = -2 * half_width + 1;
        while y2 < 2 * half_width {
            let v = DualVertex::new(x2, y2);
            let w = dual_out_edge(seed, v);
            let (p, q) = crossed_primal(v, w);
            let reference = v.anchor();
            for (from, to) in [(p, q), (q, p)] {
                if from == (0, 0) {
                    continue;
                }
                let pv = reference.lift(from.0, from.1);
                let h = head(seed, pv);
                if (h.x, h.y) == to {
                    bad += 1;
                }
            }
            checked += 1;
            y2 += 2;
        }
        x2 += 2;
    }
    (checked, bad)
}

/// Lattice states visited by Φ along the dual path from `v`.
pub fn dual_path_image(seed: u64, v: DualVertex, len: usize) -> Vec<(i64, i64)> {
    let mut out = Vec::with_capacity(len + 1);
    let mut c = v;
    out.push(phi_map(c));
    for _ in 0..len {
        c = dual_out_edge(seed, c);
        out.push(phi_map(c));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InGraphCount {
    pub count: u64,
    pub censored: bool,
}

/// Size of the in-graph of (x, y) in the quadrant model x >= 0, y > 0 on one
/// sheet, where sites with x = 0 are terminal and sites with y = 0 are excluded.
pub fn in_graph_restricted(x: i64, y: i64, seed: u64, cap: u64) -> InGraphCount {
    assert!(x >= 0 && y >= 0);
    if y == 0 {
        return InGraphCount { count: 0, censored: false };
    }
    let mut stack = vec![(x, y)];
    let mut count = 0u64;
    while let Some((cx, cy)) = stack.pop() {
        count += 1;
        if count > cap {
            return InGraphCount { count, censored: true };
        }
        // Predecessor by a horizontal move: (cx + 1, cy) with cy > 0.
        if !moves_vertically(seed, CoverVertex { x: cx + 1, y: cy, winding: 0 }) {
            stack.push((cx + 1, cy));
        }
        // Predecessor by a vertical move: (cx, cy - 1), interior only.
        if cx >= 1 && cy >= 2 && moves_vertically(seed, CoverVertex { x: cx, y: cy - 1, winding: 0 }) {
            stack.push((cx, cy - 1));
        }
    }
    InGraphCount { count, censored: false }
}

/// Possible predecessors of `w` on the cover: those whose out-edge could be `w`.
fn candidate_predecessors(w: CoverVertex) -> [Option<CoverVertex>; 2] {
    let horiz = if w.y != 0 { Some(w.lift(w.x + w.y.signum(), w.y)) } else { None };
    let vert = if w.x != 0 {
        let py = w.y - w.x.signum();
        if w.x == 0 && py == 0 {
            None
        } else {
            Some(w.lift(w.x, py))
        }
    } else {
        None
    };
    [horiz, vert]
}

/// In-graph size of `v` on the full cover, by backward search, capped.
pub fn in_graph_cover(v: CoverVertex, seed: u64, cap: u64) -> InGraphCount {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(v);
    queue.push_back(v);
    while let Some(w) = queue.pop_front() {
        if seen.len() as u64 > cap {
            return InGraphCount { count: seen.len() as u64, censored: true };
        }
        for p in candidate_predecessors(w).into_iter().flatten() {
            if (p.x, p.y) != (0, 0) && head(seed, p) == w && seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    InGraphCount { count: seen.len() as u64, censored: false }
}

/// T(x, y): expected time for the fast chain from (x, y) to reach x = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TTable {
    pub tolerance: f64,
    /// rows[x][y] for 0 <= y <= Y(x).
    pub rows: Vec<Vec<f64>>,
}

impl TTable {
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.rows.get(x).and_then(|r| r.get(y)).copied()
    }
}

/// Truncation height: the time from (x, y) is at most x/y in mean.
pub fn truncation_height(x: u64, tolerance: f64) -> usize {
    libm::ceil(x as f64 / tolerance) as usize
}

fn sweep_row(x: u64, prev: &[f64], ymax: usize) -> Vec<f64> {
    let mut row = vec![0.0; ymax + 1];
    let xf = x as f64;
    // Above the truncation the value is taken as 0; its true value is below x/Y.
    let mut above = 0.0;
    for y in (0..=ymax).rev() {
        let s = xf + y as f64;
        let left = if x == 1 { 0.0 } else { prev.get(y).copied().unwrap_or(0.0) };
        let v = (1.0 + xf * above + y as f64 * left) / s;
        row[y] = v;
        above = v;
    }
    row
}

/// Solve the first-step recurrence by a downward sweep in y for each x.
/// Every value is a convex combination of the truncated ones, so the error
/// stays within `tolerance` for all entries.
pub fn solve_t(x_max: u64, tolerance: f64) -> TTable {
    assert!(x_max >= 1 && tolerance > 0.0);
    let mut rows = vec![vec![0.0; 1]];
    for x in 1..=x_max {
        let ymax = truncation_height(x, tolerance);
        let row = sweep_row(x, &rows[x as usize - 1], ymax);
        rows.push(row);
    }
    TTable { tolerance, rows }
}

/// T(x, 0) for 0 <= x <= x_max, keeping only two rows in memory.
pub fn solve_t_axis(x_max: u64, tolerance: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut prev = vec![0.0];
    for x in 1..=x_max {
        let row = sweep_row(x, &prev, truncation_height(x, tolerance));
        out.push(row[0]);
        prev = row;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_examples() {
        assert_eq!(phi_map(DualVertex::new(7, 1)), (4, 0));
        assert_eq!(phi_map(DualVertex::new(7, -1)), (3, 1));
    }

    #[test]
    fn axis_edge_is_vertical() {
        for s in 0..50 {
            let v = CoverVertex::new(4, 0);
            assert_eq!(head(s, v), CoverVertex::new(4, 1));
        }
    }

    #[test]
    fn winding_advances_across_axes() {
        let v = CoverVertex::with_winding(1, -1, 7);
        // (1,-1): vertical move to (1,0) enters quadrant 0, next sheet.
        for s in 0..40 {
            let h = head(s, v);
            if (h.x, h.y) == (1, 0) {
                assert_eq!(h.winding, 8);
            } else {
                assert_eq!((h.x, h.y, h.winding), (2, -1, 7));
            }
        }
    }

    #[test]
    fn memo_is_stable() {
        let mut st = EdgeStore::memoized(9);
        let v = CoverVertex::new(2, 3);
        let h = st.out_edge(v);
        for _ in 0..5 {
            assert_eq!(st.out_edge(v), h);
        }
        assert_eq!(st.recorded(), 1);
    }

    #[test]
    fn dual_never_crosses() {
        for seed in 0..5 {
            let (checked, bad) = dual_crossings(seed, 10);
            assert_eq!(checked, 400);
            assert_eq!(bad, 0);
        }
    }

    #[test]
    fn dual_image_follows_leaky_moves() {
        for seed in 0..20 {
            let path = dual_path_image(seed, DualVertex::new(9, 1), 200);
            for w in path.windows(2) {
                let (a, b) = (w[0], w[1]);
                let l1 = a.0.abs() + a.1.abs();
                if l1 == 1 {
                    continue;
                }
                let d = (b.0 - a.0).abs() + (b.1 - a.1).abs();
                if a.0 == 0 {
                    assert_eq!(b, (-a.1.signum(), a.1 - a.1.signum()));
                } else if a.1 == 0 {
                    assert_eq!(b, (a.0 - a.0.signum(), a.0.signum()));
                } else {
                    assert_eq!(d, 1);
                }
            }
        }
    }

    #[test]
    fn in_graph_axis_is_empty() {
        assert_eq!(in_graph_restricted(3, 0, 1, 100).count, 0);
        assert!(in_graph_restricted(0, 1, 1, 100).count >= 1);
    }

    #[test]
    fn t_table_boundary() {
        let t = solve_t(3, 1e-4);
        assert_eq!(t.get(0, 0), Some(0.0));
        let e1 = core::f64::consts::E - 1.0;
        assert!((t.get(1, 0).unwrap() - e1).abs() < 1e-4);
        let axis = solve_t_axis(3, 1e-4);
        assert_eq!(axis[3], t.get(3, 0).unwrap());
    }
}
