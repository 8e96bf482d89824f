//! Value nets, fine grids, grid digraphs and longest grid chains.

use crate::error::{Error, Result};
use crate::exact::lis_exact;
use crate::model::{box_spanned, Box, BoxChain, Grid, Index, Point, Value};
use crate::oracle::{Key, Pid, RandomnessLedger, SequenceOracle};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Default cap on the number of samples drawn by [`build_net`].
pub const NET_SAMPLE_CAP: u64 = 1 << 16;

/// A failure probability given as `ln(1/ξ)`, so that values such as
/// `n^{-2 log n}` do not underflow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureProb {
    pub ln_inv: f64,
}

impl FailureProb {
    pub fn new(xi: f64) -> Self {
        FailureProb { ln_inv: -xi.ln() }
    }

    /// `n^{-2 log₂ n}`.
    pub fn for_grid(n: u64) -> Self {
        let lg = crate::splitter::log2_n(n);
        FailureProb {
            ln_inv: 2.0 * lg * lg * std::f64::consts::LN_2,
        }
    }

    pub fn value(&self) -> f64 {
        (-self.ln_inv).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetOutcome {
    pub values: Vec<Value>,
    /// Failure probability actually guaranteed (0 when built from all values).
    pub effective_xi: f64,
    pub samples: u64,
}

/// Builds a value net for `b`: every value interval inside `Y(b)` holding at
/// least `α·w(b)` of the values at `X(b)` contains a net value.
///
/// Samples `sM − 1` positions of `X(b)` with `s = 4⌈1/α⌉` and
/// `M = ⌈s·ln(s/2ξ)⌉`, keeps every `M`-th order statistic that lies in
/// `Y(b)`, and adds `y_t(b)`. When `sM − 1 ≥ w(b)` all values are read and
/// every `⌈α·w(b)⌉`-th order statistic is kept, which is a net outright.
/// When `sM − 1` exceeds `cap`, `M` is lowered and the weaker guarantee is
/// reported.
pub fn build_net(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    b: &Box,
    alpha: f64,
    xi: FailureProb,
    cap: u64,
) -> Result<NetOutcome> {
    if b.is_degenerate() {
        return Err(Error::InvalidBox(format!("degenerate box {b}")));
    }
    if alpha.is_nan() || alpha <= 0.0 || xi.ln_inv.is_nan() || xi.ln_inv <= 0.0 {
        return Err(Error::Precondition(format!(
            "build_net needs alpha > 0 and xi < 1, got {alpha}"
        )));
    }
    let w = b.width();
    let s = 4 * (1.0 / alpha).ceil() as u64;
    let mut m = (s as f64 * ((s as f64 / 2.0).ln() + xi.ln_inv))
        .ceil()
        .max(1.0) as u64;
    let mut effective_xi = xi.value();
    if s.saturating_mul(m) - 1 > cap {
        m = ((cap + 1) / s).max(1);
        effective_xi = (s as f64 / 2.0) * (-(m as f64) / s as f64).exp();
    }
    let total = s * m - 1;
    let mut values = Vec::with_capacity(s as usize);
    if total >= w {
        let mut all: Vec<Value> = b
            .indices()
            .map(|x| oracle.query(x))
            .collect::<Result<_>>()?;
        all.sort_unstable();
        let step = (alpha * w as f64).ceil().max(1.0) as usize;
        values.extend(
            all.iter()
                .skip(step - 1)
                .step_by(step)
                .copied()
                .filter(|&y| b.ys.contains(y)),
        );
        values.push(b.y_t());
        values.sort_unstable();
        values.dedup();
        return Ok(NetOutcome {
            values,
            effective_xi: 0.0,
            samples: w,
        });
    }
    let key = Key::new().boxed(b).real(alpha).real(xi.ln_inv).u64(cap);
    let mut stream = ledger.stream_for(Pid::BuildNet, &key);
    let mut ys: Vec<Value> = Vec::with_capacity(total as usize + 2);
    ys.push(0);
    for x in stream.sample_indices(b.xs, total)? {
        ys.push(oracle.query(x)?);
    }
    ys[1..].sort_unstable();
    ys.push(oracle.valbound());
    for i in 1..s {
        let y = ys[(i * m) as usize];
        if b.ys.contains(y) {
            values.push(y);
        }
    }
    values.push(b.y_t());
    values.sort_unstable();
    values.dedup();
    Ok(NetOutcome {
        values,
        effective_xi,
        samples: total,
    })
}

/// Columns `x_l + ⌊iαw⌋` for `i = 1..⌈1/α⌉−1`, plus repair columns wherever
/// a run of non-column indices (including the one ending at `x_r`) would be
/// longer than `αw`.
pub fn grid_columns(b: &Box, alpha: f64) -> Vec<Index> {
    let w = b.width();
    let aw = alpha * w as f64;
    let r = (1.0 / alpha).ceil() as u64;
    let mut cols: Vec<Index> = (1..r)
        .map(|i| b.x_l() + (i as f64 * aw).floor() as u64)
        .filter(|&x| x > b.x_l() && x < b.x_r())
        .collect();
    cols.dedup();
    let gap = (aw.floor() as u64).max(1);
    let mut out = Vec::with_capacity(cols.len() + 2);
    let mut prev = b.x_l();
    for next in cols.into_iter().chain(std::iter::once(b.x_r())) {
        let last = next == b.x_r();
        // Length of the run of non-column indices after `p`; the final run
        // includes x_r itself.
        let run = |p: Index| if last { next - p } else { next - p - 1 };
        while run(prev) as f64 > aw {
            let c = if last {
                (prev + gap + 1).min(b.x_r() - 1)
            } else {
                prev + gap + 1
            };
            if c <= prev {
                break;
            }
            out.push(c);
            prev = c;
        }
        if !last {
            out.push(next);
            prev = next;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub grid: Grid,
    pub full_refinement: bool,
    pub effective_xi: f64,
}

/// Full refinement: every interior index is a column and the rows are the
/// in-box values at `X(b)` plus `y_t(b)`.
pub fn full_refinement_grid(b: &Box, values: &[Value]) -> Grid {
    let xs: Vec<Index> = (b.x_l() + 1..b.x_r()).collect();
    let mut ys: Vec<Value> = values
        .iter()
        .copied()
        .filter(|&y| b.ys.contains(y))
        .collect();
    ys.push(b.y_t());
    Grid::new(xs, ys)
}

/// An `α`-fine `b`-grid (with probability at least `1 − ξ`).
pub fn build_grid(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    b: &Box,
    alpha: f64,
    xi: FailureProb,
    cap: u64,
) -> Result<GridOutcome> {
    if b.is_degenerate() {
        return Err(Error::InvalidBox(format!("degenerate box {b}")));
    }
    if b.width() as f64 <= 1.0 / alpha {
        let values: Vec<Value> = b
            .indices()
            .map(|x| oracle.query(x))
            .collect::<Result<_>>()?;
        return Ok(GridOutcome {
            grid: full_refinement_grid(b, &values),
            full_refinement: true,
            effective_xi: 0.0,
        });
    }
    let xs = grid_columns(b, alpha);
    let net = build_net(oracle, ledger, b, alpha * alpha / 2.0, xi, cap)?;
    Ok(GridOutcome {
        grid: Grid::new(xs, net.values),
        full_refinement: false,
        effective_xi: net.effective_xi,
    })
}

/// The digraph of a `b`-grid: source `bl(b)`, one column of vertices per grid
/// column, sink `tr(b)`. Arcs join the source to the first column, the last
/// column to the sink, and `P ≺ Q` across adjacent columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDigraph {
    pub source: Point,
    pub sink: Point,
    pub columns: Vec<Index>,
    pub rows: Vec<Value>,
}

impl GridDigraph {
    pub fn new(grid: &Grid, b: &Box) -> Result<Self> {
        grid.check_b_grid(b)?;
        Ok(GridDigraph {
            source: b.bl(),
            sink: b.tr(),
            columns: grid.xs.clone(),
            rows: grid.ys.clone(),
        })
    }

    pub fn column(&self, i: usize) -> impl Iterator<Item = Point> + '_ {
        let x = self.columns[i];
        self.rows.iter().map(move |&y| Point::new(x, y))
    }

    /// Every arc with its grid box.
    pub fn arcs(&self) -> Vec<(Point, Point, Box)> {
        let mut out = Vec::new();
        let mut push = |p: Point, q: Point| {
            if let Ok(bx) = box_spanned(p, q) {
                out.push((p, q, bx));
            }
        };
        if self.columns.is_empty() {
            push(self.source, self.sink);
            return out;
        }
        for q in self.column(0) {
            push(self.source, q);
        }
        for i in 1..self.columns.len() {
            for p in self.column(i - 1) {
                for q in self.column(i).filter(|q| p.y <= q.y) {
                    push(p, q);
                }
            }
        }
        for p in self.column(self.columns.len() - 1) {
            push(p, self.sink);
        }
        out
    }

    /// Number of source-to-sink paths.
    pub fn path_count(&self) -> u128 {
        if self.columns.is_empty() {
            return 1;
        }
        let k = self.rows.len();
        let mut ways: Vec<u128> = self
            .rows
            .iter()
            .map(|&y| u128::from(y >= self.source.y))
            .collect();
        for _ in 1..self.columns.len() {
            let mut next = vec![0u128; k];
            let mut acc = 0u128;
            for j in 0..k {
                acc += ways[j];
                next[j] = acc;
            }
            ways = next;
        }
        ways.iter()
            .zip(&self.rows)
            .filter(|(_, &y)| y <= self.sink.y)
            .map(|(w, _)| *w)
            .sum()
    }
}

pub type Weight = Ratio<i128>;

/// Maximum-weight source-to-sink path, returned as a box chain with its
/// weight. Among optimal paths the one with the lexicographically smallest
/// row sequence is chosen.
#[allow(clippy::needless_range_loop)]
pub fn longest_path<F>(dg: &GridDigraph, mut weight: F) -> Result<(BoxChain, Weight)>
where
    F: FnMut(&Box) -> Result<Weight>,
{
    let k = dg.columns.len();
    if k == 0 {
        let bx = box_spanned(dg.source, dg.sink)?;
        let w = weight(&bx)?;
        return Ok((BoxChain::new(vec![bx])?, w));
    }
    let rows = &dg.rows;
    let nr = rows.len();
    // best[i][j]: heaviest path from (column i, row j) to the sink.
    let mut best: Vec<Vec<Option<Weight>>> = vec![vec![None; nr]; k];
    for j in 0..nr {
        let p = Point::new(dg.columns[k - 1], rows[j]);
        if p.y <= dg.sink.y {
            best[k - 1][j] = Some(weight(&box_spanned(p, dg.sink)?)?);
        }
    }
    for i in (0..k - 1).rev() {
        for j in 0..nr {
            let p = Point::new(dg.columns[i], rows[j]);
            let mut top: Option<Weight> = None;
            for jj in j..nr {
                let Some(tail) = best[i + 1][jj] else {
                    continue;
                };
                let q = Point::new(dg.columns[i + 1], rows[jj]);
                let cand = weight(&box_spanned(p, q)?)? + tail;
                if top.is_none_or(|t| cand > t) {
                    top = Some(cand);
                }
            }
            best[i][j] = top;
        }
    }
    // Forward pass: smallest row achieving the optimum at each step.
    let mut first: Vec<Option<Weight>> = vec![None; nr];
    let mut total: Option<Weight> = None;
    for j in 0..nr {
        if rows[j] < dg.source.y {
            continue;
        }
        let Some(tail) = best[0][j] else { continue };
        let q = Point::new(dg.columns[0], rows[j]);
        let cand = weight(&box_spanned(dg.source, q)?)? + tail;
        first[j] = Some(cand);
        if total.is_none_or(|t| cand > t) {
            total = Some(cand);
        }
    }
    let total = total.ok_or_else(|| Error::Invariant("grid digraph has no path".into()))?;
    let mut corners = vec![dg.source];
    let mut j = (0..nr)
        .find(|&j| first[j] == Some(total))
        .expect("optimum attained");
    corners.push(Point::new(dg.columns[0], rows[j]));
    let mut remaining = best[0][j].expect("on a path");
    for i in 1..k {
        let p = Point::new(dg.columns[i - 1], rows[j]);
        let mut next = None;
        for jj in j..nr {
            let Some(tail) = best[i][jj] else { continue };
            let q = Point::new(dg.columns[i], rows[jj]);
            if weight(&box_spanned(p, q)?)? + tail == remaining {
                next = Some(jj);
                break;
            }
        }
        j = next.expect("optimum attained");
        corners.push(Point::new(dg.columns[i], rows[j]));
        remaining = best[i][j].expect("on a path");
    }
    corners.push(dg.sink);
    Ok((BoxChain::from_points(&corners)?, total))
}

/// Longest path of the fully refined grid of `b` with unit weights
/// `|D ∩ F|`, computed in `O(w log w)`.
///
/// `values[i]` is `f(x_l(b) + 1 + i)`. The result equals
/// [`longest_path`] on [`full_refinement_grid`] with exact weights.
pub fn full_refinement_chain(b: &Box, values: &[Value]) -> Result<(BoxChain, u64)> {
    let w = b.width() as usize;
    if w == 0 || values.len() != w {
        return Err(Error::Precondition("values must cover X(b)".into()));
    }
    let inbox = |v: Value| b.ys.contains(v);
    // ext[p]: longest nondecreasing run of in-box values starting at p.
    let mut ext = vec![0usize; w];
    {
        // Reverse patience on negated order: longest nondecreasing sequence
        // starting at p equals longest nonincreasing sequence ending at p in
        // the reversed array.
        let mut tops: Vec<Value> = Vec::new();
        for p in (0..w).rev() {
            let v = values[p];
            if !inbox(v) {
                continue;
            }
            let pile = tops.partition_point(|&t| t >= v);
            if pile == tops.len() {
                tops.push(v);
            } else {
                tops[pile] = v;
            }
            ext[p] = pile + 1;
        }
    }
    let best = ext.iter().copied().max().unwrap_or(0);
    // classes[c]: positions with ext = c, increasing; values strictly decrease.
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); best + 1];
    for p in 0..w {
        if ext[p] > 0 {
            classes[ext[p]].push(p);
        }
    }
    let mut rows: Vec<Value> = values.iter().copied().filter(|&v| inbox(v)).collect();
    rows.push(b.y_t());
    rows.sort_unstable();
    rows.dedup();
    let ceil_row = |v: Value| rows[rows.partition_point(|&r| r < v)];

    let mut corners = Vec::with_capacity(w + 1);
    corners.push(b.bl());
    let mut v = b.y_b();
    let mut h = best;
    for i in 1..w {
        // Position i-1 (0-based) sits in column i. Is there a later position
        // (0-based >= i) in class h with value >= v?
        let later = h > 0 && {
            let cls = &classes[h];
            let cnt = cls.partition_point(|&p| values[p] >= v);
            cnt > 0 && cls[cnt - 1] >= i
        };
        if h == 0 || later {
            v = ceil_row(v);
        } else {
            v = values[i - 1];
            h -= 1;
        }
        corners.push(Point::new(b.x_l() + i as u64, v));
    }
    corners.push(b.tr());
    let chain = BoxChain::from_points(&corners)?;
    debug_assert_eq!(
        best,
        lis_exact(
            &values
                .iter()
                .copied()
                .filter(|&v| inbox(v))
                .collect::<Vec<_>>()
        )
        .length
    );
    Ok((chain, best as u64))
}
