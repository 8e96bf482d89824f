//! Randomized search for balanced, safe splitters.

use crate::error::{Error, Result};
use crate::model::{in_violation, Box, Index, IndexInterval, Point, Value};
use crate::oracle::{Key, Pid, RandomnessLedger, SequenceOracle};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Sample-size constants of the splitter search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitterConfig {
    /// `log₂ n` of the root array.
    pub log_n: f64,
    /// `c` in `m = min(w(S), c·((log n)·w(S)/L)²)`.
    pub z_sample_const: f64,
    /// `c` in `⌈c·(log n)²/ρ⌉` candidate draws.
    pub candidate_const: f64,
}

impl SplitterConfig {
    pub fn new(n: u64) -> Self {
        SplitterConfig {
            log_n: log2_n(n),
            z_sample_const: 10.0,
            candidate_const: 10.0,
        }
    }
}

/// `log₂ n`, floored at 1 so that tiny arrays keep finite parameters.
pub fn log2_n(n: u64) -> f64 {
    (n.max(2) as f64).log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitterOutcome {
    pub splitter: Option<Index>,
    /// Candidate draws examined before returning.
    pub candidates: u64,
}

impl SplitterOutcome {
    pub fn found(&self) -> bool {
        self.splitter.is_some()
    }
}

fn z_term(p: Point, ps: Point, strip: &Box, mu: Ratio<i64>) -> Ratio<i64> {
    if !strip.ys.contains(p.y) {
        Ratio::from_integer(0)
    } else if in_violation(p, ps) {
        Ratio::from_integer(1) - mu
    } else {
        -mu
    }
}

/// Estimate of `Z(s, C)`; exact when `m = w(C)`.
pub fn approx_z(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    s: Index,
    c: &Box,
    m: u64,
    mu: Ratio<i64>,
) -> Result<f64> {
    let fs = oracle.query(s)?;
    approx_z_with(oracle, ledger, Point::new(s, fs), c, m, mu).map(|z| ratio_to_f64(&z))
}

fn approx_z_with(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    ps: Point,
    c: &Box,
    m: u64,
    mu: Ratio<i64>,
) -> Result<Ratio<i64>> {
    let w = c.width();
    if m > w {
        return Err(Error::Precondition(format!(
            "sample size {m} exceeds width {w}"
        )));
    }
    if m == 0 {
        return Err(Error::Precondition("empty sample".into()));
    }
    let mut sum = Ratio::from_integer(0);
    if m == w {
        for x in c.indices() {
            sum += z_term(Point::new(x, oracle.query(x)?), ps, c, mu);
        }
        return Ok(sum);
    }
    let key = Key::new().u64(ps.x).boxed(c).u64(m).ratio(mu);
    let mut stream = ledger.stream_for(Pid::ApproxZ, &key);
    for x in stream.sample_indices(c.xs, m)? {
        sum += z_term(Point::new(x, oracle.query(x)?), ps, c, mu);
    }
    Ok(sum * Ratio::new(w as i64, m as i64))
}

pub(crate) fn ratio_to_f64(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn z_sample_size(w: u64, l: f64, cfg: &SplitterConfig) -> u64 {
    let m = cfg.z_sample_const * (cfg.log_n * w as f64 / l).powi(2);
    if m >= w as f64 {
        w
    } else {
        (m.ceil() as u64).clamp(1, w)
    }
}

/// Running exact sum for nested strips growing away from `s`, so that
/// consecutive exact evaluations read each position once.
struct ExactPrefix {
    extent: u64,
    sum: Ratio<i64>,
}

/// Tests the strips of `r` adjacent to `s` whose widths are multiples of
/// `⌈L/3⌉`: left strips narrowest first, then right strips. Accepts iff every
/// estimate is below `4L/3`.
pub fn test_safe(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    s: Index,
    r: &Box,
    l: f64,
    mu: Ratio<i64>,
    cfg: &SplitterConfig,
) -> Result<bool> {
    let fs = oracle.query(s)?;
    test_safe_with(oracle, ledger, Point::new(s, fs), r, l, mu, cfg)
}

fn test_safe_with(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    ps: Point,
    r: &Box,
    l: f64,
    mu: Ratio<i64>,
    cfg: &SplitterConfig,
) -> Result<bool> {
    if l.is_nan() || l <= 0.0 {
        return Err(Error::Precondition(format!("L must be positive, got {l}")));
    }
    let s = ps.x;
    let unit = (l / 3.0).ceil().max(1.0) as u64;
    let limit = 4.0 * l / 3.0;
    for left in [true, false] {
        // Room for strips on this side.
        let room = if left {
            if s == 0 || s - 1 > r.x_r() || s - 1 < r.x_l() {
                0
            } else {
                s - 1 - r.x_l()
            }
        } else if s < r.x_l() || s >= r.x_r() {
            0
        } else {
            r.x_r() - s
        };
        let mut exact = ExactPrefix {
            extent: 0,
            sum: Ratio::from_integer(0),
        };
        let mut width = unit;
        while width <= room {
            let xs = if left {
                IndexInterval {
                    x_l: s - 1 - width,
                    x_r: s - 1,
                }
            } else {
                IndexInterval {
                    x_l: s,
                    x_r: s + width,
                }
            };
            let strip = r.strip(xs);
            let m = z_sample_size(width, l, cfg);
            let z = if m == width {
                while exact.extent < width {
                    exact.extent += 1;
                    let x = if left {
                        s - exact.extent
                    } else {
                        s + exact.extent
                    };
                    exact.sum += z_term(Point::new(x, oracle.query(x)?), ps, &strip, mu);
                }
                exact.sum
            } else {
                approx_z_with(oracle, ledger, ps, &strip, m, mu)?
            };
            if ratio_to_f64(&z) >= limit {
                return Ok(false);
            }
            width += unit;
        }
    }
    Ok(true)
}

/// The `ρ`-balanced indices of `t` as an inclusive range, or `None` when
/// `w(t)(1 − 2ρ) < 1`.
pub fn balanced_range(t: &Box, rho: f64) -> Option<(Index, Index)> {
    let w = t.width() as f64;
    if w * (1.0 - 2.0 * rho) < 1.0 {
        return None;
    }
    let margin = (rho * w).ceil() as u64;
    let lo = t.x_l() + margin.max(1);
    let hi = t.x_r() - margin;
    (lo <= hi).then_some((lo, hi))
}

/// Draws up to `⌈c(log n)²/ρ⌉` candidates from the `ρ`-balanced indices of
/// `t` and returns the first `s` with `F(s) ∈ t` that passes `test_safe` on
/// `strip(t | b)`.
#[allow(clippy::too_many_arguments)]
pub fn find_splitter(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    t: &Box,
    b: &Box,
    mu: Ratio<i64>,
    l: f64,
    rho: f64,
    cfg: &SplitterConfig,
) -> Result<SplitterOutcome> {
    if !t.is_subbox_of(b) {
        return Err(Error::Precondition(format!("{t} is not inside {b}")));
    }
    if l.is_nan() || l < 1.0 {
        return Err(Error::Precondition(format!(
            "L must be at least 1, got {l}"
        )));
    }
    let Some((lo, hi)) = balanced_range(t, rho) else {
        return Ok(SplitterOutcome {
            splitter: None,
            candidates: 0,
        });
    };
    let draws = (cfg.candidate_const * cfg.log_n * cfg.log_n / rho).ceil() as u64;
    let key = Key::new().boxed(t).boxed(b).ratio(mu).real(l).real(rho);
    let mut stream = ledger.stream_for(Pid::FindSplitter, &key);
    let strip = b.strip_of(t);
    let mut rejected: HashSet<Index> = HashSet::new();
    for k in 0..draws {
        let s = stream.between(lo, hi);
        if rejected.contains(&s) {
            continue;
        }
        let fs: Value = oracle.query(s)?;
        if t.ys.contains(fs)
            && test_safe_with(oracle, ledger, Point::new(s, fs), &strip, l, mu, cfg)?
        {
            return Ok(SplitterOutcome {
                splitter: Some(s),
                candidates: k + 1,
            });
        }
        rejected.insert(s);
    }
    Ok(SplitterOutcome {
        splitter: None,
        candidates: draws,
    })
}
