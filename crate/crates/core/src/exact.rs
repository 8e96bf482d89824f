//! Exact and brute-force reference computations.
//!
//! Everything here is deliberately simple and independent of the sampling
//! code it is used to check.

use crate::error::{Error, Result};
use crate::model::{in_violation, Box, BoxChain, Grid, Index, Point, StripDecomposition, Value};
use crate::oracle::SequenceOracle;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

pub const DP_CAP: usize = 4096;
pub const DICHOTOMY_CAP: u64 = 64;
pub const SPLITTER_CAP: u64 = 4096;

/// Length of a longest nondecreasing subsequence and, optionally, one witness
/// given as positions into the input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LisResult {
    pub length: usize,
    pub witness: Option<Vec<usize>>,
}

/// Patience sorting with rightmost pile placement, so equal values extend a
/// sequence. O(n log n).
pub fn lis_exact(values: &[Value]) -> LisResult {
    let mut tops: Vec<Value> = Vec::new();
    let mut top_pos: Vec<usize> = Vec::new();
    let mut parent = vec![usize::MAX; values.len()];
    for (i, &v) in values.iter().enumerate() {
        let pile = tops.partition_point(|&t| t <= v);
        if pile > 0 {
            parent[i] = top_pos[pile - 1];
        }
        if pile == tops.len() {
            tops.push(v);
            top_pos.push(i);
        } else {
            tops[pile] = v;
            top_pos[pile] = i;
        }
    }
    let mut witness = Vec::with_capacity(tops.len());
    if let Some(&last) = top_pos.last() {
        let mut i = last;
        loop {
            witness.push(i);
            if parent[i] == usize::MAX {
                break;
            }
            i = parent[i];
        }
    }
    witness.reverse();
    LisResult {
        length: tops.len(),
        witness: Some(witness),
    }
}

/// Length only.
pub fn lis_length(values: &[Value]) -> usize {
    let mut tops: Vec<Value> = Vec::new();
    for &v in values {
        let pile = tops.partition_point(|&t| t <= v);
        if pile == tops.len() {
            tops.push(v);
        } else {
            tops[pile] = v;
        }
    }
    tops.len()
}

/// Quadratic dynamic program, used only to cross-check `lis_exact`.
pub fn lis_exact_dp(values: &[Value], cap: usize) -> Result<usize> {
    if values.len() > cap {
        return Err(Error::CapExceeded {
            what: "lis dp",
            size: values.len() as u64,
            cap: cap as u64,
        });
    }
    let mut best = vec![1usize; values.len()];
    for j in 0..values.len() {
        for i in 0..j {
            if values[i] <= values[j] && best[i] + 1 > best[j] {
                best[j] = best[i] + 1;
            }
        }
    }
    Ok(best.into_iter().max().unwrap_or(0))
}

/// LIS restricted to one box, with the box's point count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxLis {
    pub length: usize,
    /// Indices `x` of one longest increasing sequence inside the box.
    pub witness: Vec<Index>,
    /// `|B ∩ F|`.
    pub count: usize,
}

impl BoxLis {
    pub fn loss(&self) -> usize {
        self.count - self.length
    }
}

/// Points `F(x)` of `b`, in index order.
pub fn points_in_box(oracle: &SequenceOracle, b: &Box) -> Result<Vec<Point>> {
    let mut pts = Vec::new();
    for x in b.indices() {
        let y = oracle.query(x)?;
        if b.ys.contains(y) {
            pts.push(Point::new(x, y));
        }
    }
    Ok(pts)
}

pub fn lis_in_box_exact(oracle: &SequenceOracle, b: &Box) -> Result<BoxLis> {
    let pts = points_in_box(oracle, b)?;
    let ys: Vec<Value> = pts.iter().map(|p| p.y).collect();
    let r = lis_exact(&ys);
    let witness: Vec<Index> = r
        .witness
        .unwrap_or_default()
        .into_iter()
        .map(|i| pts[i].x)
        .collect();
    let out = BoxLis {
        length: r.length,
        witness,
        count: pts.len(),
    };
    debug_assert_eq!(out.length + out.loss(), out.count);
    Ok(out)
}

/// `viol(s, S)`: points of `S ∩ F` in violation with `F(s)`.
pub fn count_violations_exact(oracle: &SequenceOracle, s: Index, strip: &Box) -> Result<u64> {
    let ps = Point::new(s, oracle.query(s)?);
    let pts = points_in_box(oracle, strip)?;
    Ok(pts.iter().filter(|&&p| in_violation(p, ps)).count() as u64)
}

/// `Z(s, S) = viol(s, S) − μ |F ∩ S|`.
pub fn z_exact(
    oracle: &SequenceOracle,
    s: Index,
    strip: &Box,
    mu: Ratio<i64>,
) -> Result<Ratio<i64>> {
    let viol = count_violations_exact(oracle, s, strip)? as i64;
    let count = points_in_box(oracle, strip)?.len() as i64;
    Ok(Ratio::from_integer(viol) - mu * count)
}

/// True when `s` is `(μ, L)`-safe for `r`: every strip of `r` ending at
/// `s − 1` or starting at `s + 1` has `Z ≤ L`.
///
/// `vals[i]` must hold `f(x_l(r) + 1 + i)`, and `fs = f(s)`.
pub fn is_safe_with(vals: &[Value], r: &Box, s: Index, fs: Value, mu: Ratio<i64>, l: f64) -> bool {
    let ps = Point::new(s, fs);
    let at = |x: Index| vals[(x - r.x_l() - 1) as usize];
    let accept = |z: Ratio<i64>| (*z.numer() as f64) <= l * (*z.denom() as f64);
    let zx = |x: Index| -> Ratio<i64> {
        let p = Point::new(x, at(x));
        if !r.ys.contains(p.y) {
            Ratio::from_integer(0)
        } else if in_violation(p, ps) {
            Ratio::from_integer(1) - mu
        } else {
            -mu
        }
    };
    // Strips (a, s - 1], widening leftwards.
    let mut z = Ratio::from_integer(0);
    let mut x = s.saturating_sub(1);
    while x > r.x_l() && x <= r.x_r() {
        z += zx(x);
        if !accept(z) {
            return false;
        }
        x -= 1;
    }
    // Strips (s, b], widening rightwards.
    let mut z = Ratio::from_integer(0);
    let mut x = s + 1;
    while x <= r.x_r() && x > r.x_l() {
        z += zx(x);
        if !accept(z) {
            return false;
        }
        x += 1;
    }
    true
}

fn strip_values(oracle: &SequenceOracle, r: &Box) -> Result<Vec<Value>> {
    r.indices().map(|x| oracle.query(x)).collect()
}

/// `s − x_l ≥ ρw` and `x_r − s ≥ ρw`.
pub fn is_balanced(t: &Box, s: Index, rho: f64) -> bool {
    let w = t.width() as f64;
    (s - t.x_l()) as f64 >= rho * w && (t.x_r() - s) as f64 >= rho * w
}

/// All `(μ, L, ρ)`-adequate splitters of `t` inside `b`, by direct check of
/// every adjacent substrip.
pub fn enumerate_adequate_splitters(
    oracle: &SequenceOracle,
    t: &Box,
    b: &Box,
    mu: Ratio<i64>,
    l: f64,
    rho: f64,
) -> Result<Vec<Index>> {
    if !t.is_subbox_of(b) {
        return Err(Error::Precondition(format!("{t} is not inside {b}")));
    }
    if t.width() > SPLITTER_CAP {
        return Err(Error::CapExceeded {
            what: "splitter enumeration",
            size: t.width(),
            cap: SPLITTER_CAP,
        });
    }
    let strip = b.strip_of(t);
    let vals = strip_values(oracle, &strip)?;
    let mut out = Vec::new();
    let mut unbalanced = 0u64;
    for s in t.indices() {
        let balanced = is_balanced(t, s, rho);
        if !balanced && s < t.x_r() {
            unbalanced += 1;
        }
        let fs = vals[(s - t.x_l() - 1) as usize];
        if balanced && t.ys.contains(fs) && is_safe_with(&vals, &strip, s, fs, mu, l) {
            out.push(s);
        }
    }
    if unbalanced as f64 > 2.0 * rho * t.width() as f64 {
        return Err(Error::Invariant(format!(
            "{unbalanced} nondegenerate unbalanced splitters in {t} at rho={rho}"
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub chi: u64,
    pub chi_in: u64,
    pub chi_out: u64,
    pub u_size: u64,
    pub s_size: u64,
    pub holds: bool,
}

/// Counts safe and unsafe chain indices of `r` under the strip-width safety
/// rule and checks `(1−μ)χ_out ≥ μ|U|` and `χ_in ≤ (1−μ)χ + μ|S|`.
pub fn check_dichotomy(
    oracle: &SequenceOracle,
    r: &Box,
    strips: &StripDecomposition,
    chain: &BoxChain,
    mu: Ratio<i64>,
) -> Result<DichotomyReport> {
    if strips.parent != *r || !strips.is_compatible(chain) {
        return Err(Error::Precondition(
            "chain is not compatible with the strip decomposition".into(),
        ));
    }
    if r.width() > DICHOTOMY_CAP {
        return Err(Error::CapExceeded {
            what: "dichotomy",
            size: r.width(),
            cap: DICHOTOMY_CAP,
        });
    }
    let vals = strip_values(oracle, r)?;
    let (mut chi, mut chi_in, mut u, mut s_safe) = (0u64, 0u64, 0u64, 0u64);
    for x in r.indices() {
        let y = vals[(x - r.x_l() - 1) as usize];
        let p = Point::new(x, y);
        if !r.contains(p) {
            continue;
        }
        chi += 1;
        if !chain.contains(p) {
            continue;
        }
        chi_in += 1;
        let width = strips.width_at(x).expect("x inside parent");
        if is_safe_with(&vals, r, x, y, mu, width as f64) {
            s_safe += 1;
        } else {
            u += 1;
        }
    }
    let chi_out = chi - chi_in;
    let one = Ratio::from_integer(1);
    let first = (one - mu) * (chi_out as i64) >= mu * (u as i64);
    let second =
        Ratio::from_integer(chi_in as i64) <= (one - mu) * (chi as i64) + mu * (s_safe as i64);
    Ok(DichotomyReport {
        chi,
        chi_in,
        chi_out,
        u_size: u,
        s_size: s_safe,
        holds: first && second,
    })
}

/// Every run of consecutive indices of `X(b)` avoiding `xs` has length at
/// most `α·w(b)`.
pub fn columns_are_fine(b: &Box, xs: &[Index], alpha: f64) -> bool {
    let limit = alpha * b.width() as f64;
    let mut run = 0u64;
    for x in b.indices() {
        if xs.binary_search(&x).is_ok() {
            run = 0;
        } else {
            run += 1;
            if run as f64 > limit {
                return false;
            }
        }
    }
    true
}

/// Brute-force value-net check: `V ⊆ Y(b)`, `y_t(b) ∈ V`, and `V` meets every
/// value interval holding at least `α·w(b)` of the values `f(x)`, `x ∈ X(b)`.
pub fn is_value_net(oracle: &SequenceOracle, b: &Box, net: &[Value], alpha: f64) -> Result<bool> {
    if net.iter().any(|&y| !b.ys.contains(y)) || !net.contains(&b.y_t()) {
        return Ok(false);
    }
    let mut sorted_net = net.to_vec();
    sorted_net.sort_unstable();
    let mut ys: Vec<Value> = points_in_box(oracle, b)?.into_iter().map(|p| p.y).collect();
    ys.sort_unstable();
    let need = (alpha * b.width() as f64).ceil().max(1.0) as usize;
    if need > ys.len() {
        return Ok(true);
    }
    // Minimal popular intervals are [ys[i], ys[i + need - 1]].
    for i in 0..=ys.len() - need {
        let (lo, hi) = (ys[i], ys[i + need - 1]);
        let k = sorted_net.partition_point(|&v| v < lo);
        if k == sorted_net.len() || sorted_net[k] > hi {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridApproxReport {
    pub missed: u64,
    pub bound: f64,
    pub holds: bool,
    pub exhaustive: bool,
}

/// Checks that some grid chain of `grid` misses at most `α·w(b)` points of a
/// longest increasing sequence of `b`.
pub fn check_grid_approx(
    oracle: &SequenceOracle,
    b: &Box,
    grid: &Grid,
    alpha: f64,
) -> Result<GridApproxReport> {
    let fine = grid.check_b_grid(b).is_ok()
        && columns_are_fine(b, &grid.xs, alpha)
        && (grid.xs.is_empty() || is_value_net(oracle, b, &grid.ys, alpha / grid.xs.len() as f64)?);
    if !fine {
        return Err(Error::Precondition("grid is not alpha-fine".into()));
    }
    let lis = lis_in_box_exact(oracle, b)?;
    let pts: Vec<Point> = lis
        .witness
        .iter()
        .map(|&x| Point::new(x, oracle.query(x).unwrap_or(0)))
        .collect();
    let bound = alpha * b.width() as f64;

    // Column i gets the least row at or above the last sequence point at or
    // before it.
    let mut corners = vec![b.bl()];
    let mut k = 0;
    let mut last_y = b.y_b();
    for &c in &grid.xs {
        while k < pts.len() && pts[k].x <= c {
            last_y = pts[k].y;
            k += 1;
        }
        let row = grid.ys[grid.ys.partition_point(|&y| y < last_y)];
        corners.push(Point::new(c, row));
    }
    corners.push(b.tr());
    let chain = BoxChain::from_points(&corners)?;
    let missed = pts.iter().filter(|&&p| !chain.contains(p)).count() as u64;
    if missed as f64 <= bound {
        return Ok(GridApproxReport {
            missed,
            bound,
            holds: true,
            exhaustive: false,
        });
    }
    let best = max_covered_by_grid_chain(b, grid, &pts);
    let missed = pts.len() as u64 - best;
    Ok(GridApproxReport {
        missed,
        bound,
        holds: missed as f64 <= bound,
        exhaustive: true,
    })
}

/// Largest number of `pts` covered by one grid chain, by a plain DP over
/// columns and rows.
fn max_covered_by_grid_chain(b: &Box, grid: &Grid, pts: &[Point]) -> u64 {
    let covered = |p: Point, q: Point| {
        pts.iter()
            .filter(|&&r| p.x < r.x && r.x <= q.x && p.y <= r.y && r.y <= q.y)
            .count() as u64
    };
    let mut best: Vec<Option<u64>> = Vec::new();
    let mut prev: Vec<Point> = vec![b.bl()];
    let mut prev_best = vec![Some(0u64)];
    for &c in &grid.xs {
        let col: Vec<Point> = grid.ys.iter().map(|&y| Point::new(c, y)).collect();
        best.clear();
        for &q in &col {
            let mut v: Option<u64> = None;
            for (p, pb) in prev.iter().zip(&prev_best) {
                if let Some(pb) = pb {
                    if p.y <= q.y {
                        let cand = pb + covered(*p, q);
                        v = Some(v.map_or(cand, |v| v.max(cand)));
                    }
                }
            }
            best.push(v);
        }
        prev = col;
        prev_best = best.clone();
    }
    let sink = b.tr();
    prev.iter()
        .zip(&prev_best)
        .filter_map(|(p, pb)| pb.map(|pb| pb + covered(*p, sink)))
        .max()
        .unwrap_or(0)
}
