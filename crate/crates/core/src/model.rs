//! Planar view of an array: points, boxes, grids, strips and box chains.
//!
//! Index intervals are half-open on the left, `(x_l, x_r]`, and value
//! intervals are closed, `[y_b, y_t]`. Index 0 is a legal corner coordinate
//! but never a query position.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

pub type Index = u64;
pub type Value = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: Index,
    pub y: Value,
}

impl Point {
    pub const fn new(x: Index, y: Value) -> Self {
        Point { x, y }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.x, self.y)
    }
}

/// `P <= Q`: both coordinates at most.
pub fn leq(p: Point, q: Point) -> bool {
    p.x <= q.x && p.y <= q.y
}

/// `P ≺ Q`: strictly smaller index, value at most.
pub fn prec(p: Point, q: Point) -> bool {
    p.x < q.x && p.y <= q.y
}

/// `P ↘ Q`: strictly smaller index, strictly larger value.
pub fn se(p: Point, q: Point) -> bool {
    p.x < q.x && p.y > q.y
}

/// `P ↘* Q`: index at most, strictly larger value.
pub fn se_star(p: Point, q: Point) -> bool {
    p.x <= q.x && p.y > q.y
}

/// Two points are comparable when one is `<=` the other.
pub fn comparable(p: Point, q: Point) -> bool {
    leq(p, q) || leq(q, p)
}

/// A violating pair: one point strictly right of and strictly below the other.
pub fn in_violation(p: Point, q: Point) -> bool {
    se(p, q) || se(q, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Equal,
    Leq,
    Prec,
    Geq,
    Succ,
    SeViolation,
    NwViolation,
    StarSe,
    StarNw,
}

/// Primary relation of `p` to `q`. Distinct indices give one of
/// `Prec`, `Succ`, `SeViolation`, `NwViolation`; equal indices give
/// `Equal`, `Leq` (p below q) or `StarSe` (p above q).
pub fn compare_points(p: Point, q: Point) -> Relation {
    if p == q {
        Relation::Equal
    } else if prec(p, q) {
        Relation::Prec
    } else if prec(q, p) {
        Relation::Succ
    } else if se(p, q) {
        Relation::SeViolation
    } else if se(q, p) {
        Relation::NwViolation
    } else if p.y < q.y {
        Relation::Leq
    } else {
        Relation::StarSe
    }
}

/// Every relation of `p` to `q` that holds, in declaration order.
pub fn relations(p: Point, q: Point) -> Vec<Relation> {
    let checks = [
        (Relation::Equal, p == q),
        (Relation::Leq, leq(p, q)),
        (Relation::Prec, prec(p, q)),
        (Relation::Geq, leq(q, p)),
        (Relation::Succ, prec(q, p)),
        (Relation::SeViolation, se(p, q)),
        (Relation::NwViolation, se(q, p)),
        (Relation::StarSe, se_star(p, q)),
        (Relation::StarNw, se_star(q, p)),
    ];
    checks.into_iter().filter(|c| c.1).map(|c| c.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Nw,
    Ne,
    Sw,
    Se,
}

/// Which quadrant around `p` holds `q`, using the asymmetric definitions.
pub fn region_of(p: Point, q: Point) -> Region {
    if leq(q, p) {
        Region::Sw
    } else if prec(p, q) {
        Region::Ne
    } else if se_star(q, p) {
        Region::Nw
    } else {
        debug_assert!(se(p, q));
        Region::Se
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexInterval {
    pub x_l: Index,
    pub x_r: Index,
}

impl IndexInterval {
    pub fn new(x_l: Index, x_r: Index) -> Result<Self> {
        if x_l > x_r {
            return Err(Error::InvalidBox(format!("index interval ({x_l}, {x_r}]")));
        }
        Ok(IndexInterval { x_l, x_r })
    }

    pub fn width(&self) -> u64 {
        self.x_r - self.x_l
    }

    pub fn contains(&self, x: Index) -> bool {
        self.x_l < x && x <= self.x_r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValueInterval {
    pub y_b: Value,
    pub y_t: Value,
}

impl ValueInterval {
    pub fn new(y_b: Value, y_t: Value) -> Result<Self> {
        if y_b > y_t {
            return Err(Error::InvalidBox(format!("value interval [{y_b}, {y_t}]")));
        }
        Ok(ValueInterval { y_b, y_t })
    }

    pub fn contains(&self, y: Value) -> bool {
        self.y_b <= y && y <= self.y_t
    }
}

/// `(x_l, x_r] × [y_b, y_t]`. The bottom-left corner is not a member, the
/// top-right corner is.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Box {
    pub xs: IndexInterval,
    pub ys: ValueInterval,
}

impl fmt::Debug for Box {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{}]x[{},{}]",
            self.xs.x_l, self.xs.x_r, self.ys.y_b, self.ys.y_t
        )
    }
}

impl fmt::Display for Box {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Box {
    pub fn new(x_l: Index, x_r: Index, y_b: Value, y_t: Value) -> Result<Self> {
        Ok(Box {
            xs: IndexInterval::new(x_l, x_r)?,
            ys: ValueInterval::new(y_b, y_t)?,
        })
    }

    /// The universe `(0, n] × [1, valbound]`.
    pub fn universe(n: u64, valbound: Value) -> Self {
        Box {
            xs: IndexInterval { x_l: 0, x_r: n },
            ys: ValueInterval {
                y_b: 1,
                y_t: valbound.max(1),
            },
        }
    }

    pub fn x_l(&self) -> Index {
        self.xs.x_l
    }
    pub fn x_r(&self) -> Index {
        self.xs.x_r
    }
    pub fn y_b(&self) -> Value {
        self.ys.y_b
    }
    pub fn y_t(&self) -> Value {
        self.ys.y_t
    }
    pub fn width(&self) -> u64 {
        self.xs.width()
    }
    pub fn is_degenerate(&self) -> bool {
        self.width() == 0
    }
    pub fn bl(&self) -> Point {
        Point::new(self.xs.x_l, self.ys.y_b)
    }
    pub fn tr(&self) -> Point {
        Point::new(self.xs.x_r, self.ys.y_t)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.xs.contains(p.x) && self.ys.contains(p.y)
    }

    pub fn contains_index(&self, x: Index) -> bool {
        self.xs.contains(x)
    }

    pub fn is_subbox_of(&self, outer: &Box) -> bool {
        outer.x_l() <= self.x_l()
            && self.x_r() <= outer.x_r()
            && outer.y_b() <= self.y_b()
            && self.y_t() <= outer.y_t()
    }

    /// The strip `I × Y(self)`.
    pub fn strip(&self, xs: IndexInterval) -> Box {
        Box { xs, ys: self.ys }
    }

    /// `strip(inner | self) = X(inner) × Y(self)`.
    pub fn strip_of(&self, inner: &Box) -> Box {
        Box {
            xs: inner.xs,
            ys: self.ys,
        }
    }

    /// `X(self)` in increasing order.
    pub fn indices(&self) -> std::ops::RangeInclusive<Index> {
        self.x_l() + 1..=self.x_r()
    }
}

/// `Box(Q, R) = {P : Q ≺ P ≤ R}`. Equal indices give a degenerate box.
pub fn box_spanned(q: Point, r: Point) -> Result<Box> {
    if q.x > r.x || q.y > r.y {
        return Err(Error::InvalidBox(format!("Box({q}, {r})")));
    }
    Box::new(q.x, r.x, q.y, r.y)
}

/// A grid: sorted columns and rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub xs: Vec<Index>,
    pub ys: Vec<Value>,
}

impl Grid {
    pub fn new(mut xs: Vec<Index>, mut ys: Vec<Value>) -> Self {
        xs.sort_unstable();
        xs.dedup();
        ys.sort_unstable();
        ys.dedup();
        Grid { xs, ys }
    }

    /// Checks that the grid is a `b`-grid: columns strictly inside `X(b)`,
    /// rows inside `Y(b)` and `y_t(b)` present.
    pub fn check_b_grid(&self, b: &Box) -> Result<()> {
        if self.xs.iter().any(|&x| x <= b.x_l() || x >= b.x_r()) {
            return Err(Error::Precondition(format!(
                "grid column outside interior of {b}"
            )));
        }
        if self.ys.iter().any(|&y| !b.ys.contains(y)) {
            return Err(Error::Precondition(format!(
                "grid row outside values of {b}"
            )));
        }
        if self.ys.binary_search(&b.y_t()).is_err() {
            return Err(Error::Precondition(format!("grid rows miss y_t of {b}")));
        }
        Ok(())
    }
}

/// Consecutive boxes satisfy `tr(B_i) = bl(B_{i+1})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxChain {
    boxes: Vec<Box>,
}

impl BoxChain {
    pub fn new(boxes: Vec<Box>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidChain("empty chain".into()));
        }
        for pair in boxes.windows(2) {
            if pair[0].tr() != pair[1].bl() {
                return Err(Error::InvalidChain(format!(
                    "{} does not precede {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(BoxChain { boxes })
    }

    /// Chain through the increasing corner sequence `P_0 ≤ P_1 ≤ … ≤ P_k`.
    pub fn from_points(points: &[Point]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidChain(
                "need at least two corner points".into(),
            ));
        }
        let boxes = points
            .windows(2)
            .map(|w| box_spanned(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        BoxChain::new(boxes)
    }

    pub fn boxes(&self) -> &[Box] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Corner sequence `bl(B_1), tr(B_1), …, tr(B_k)`.
    pub fn points(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.boxes.len() + 1);
        pts.push(self.boxes[0].bl());
        pts.extend(self.boxes.iter().map(|b| b.tr()));
        pts
    }

    /// The box spanned by the whole chain.
    pub fn span(&self) -> Box {
        let first = self.boxes[0];
        let last = self.boxes[self.boxes.len() - 1];
        Box {
            xs: IndexInterval {
                x_l: first.x_l(),
                x_r: last.x_r(),
            },
            ys: ValueInterval {
                y_b: first.y_b(),
                y_t: last.y_t(),
            },
        }
    }

    /// The unique box whose index interval holds `x`.
    pub fn box_at(&self, x: Index) -> Result<&Box> {
        let span = self.span();
        if !span.contains_index(x) {
            return Err(Error::OutsideChain { x });
        }
        let i = self.boxes.partition_point(|b| b.x_r() < x);
        Ok(&self.boxes[i])
    }

    pub fn contains(&self, p: Point) -> bool {
        self.box_at(p.x).map(|b| b.contains(p)).unwrap_or(false)
    }
}

/// Partition of `parent` into strips `(c_{j-1}, c_j] × Y(parent)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripDecomposition {
    pub parent: Box,
    pub cuts: Vec<Index>,
}

impl StripDecomposition {
    pub fn new(parent: Box, cuts: Vec<Index>) -> Result<Self> {
        let ok = cuts.len() >= 2
            && cuts[0] == parent.x_l()
            && *cuts.last().unwrap() == parent.x_r()
            && cuts.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::Precondition(format!(
                "bad cut sequence {cuts:?} for {parent}"
            )));
        }
        Ok(StripDecomposition { parent, cuts })
    }

    pub fn strips(&self) -> impl Iterator<Item = Box> + '_ {
        self.cuts.windows(2).map(|w| {
            self.parent.strip(IndexInterval {
                x_l: w[0],
                x_r: w[1],
            })
        })
    }

    /// Width of the strip holding `x`.
    pub fn width_at(&self, x: Index) -> Option<u64> {
        if !self.parent.contains_index(x) {
            return None;
        }
        let j = self.cuts.partition_point(|&c| c < x);
        Some(self.cuts[j] - self.cuts[j - 1])
    }

    /// True when the chain's boxes have exactly the strips' index sets and
    /// the chain spans `X(parent) × Y'` with `Y' ⊆ Y(parent)`.
    pub fn is_compatible(&self, chain: &BoxChain) -> bool {
        let span = chain.span();
        chain.len() + 1 == self.cuts.len()
            && chain
                .boxes()
                .iter()
                .zip(self.cuts.windows(2))
                .all(|(b, w)| b.x_l() == w[0] && b.x_r() == w[1])
            && span.y_b() >= self.parent.y_b()
            && span.y_t() <= self.parent.y_t()
    }
}
