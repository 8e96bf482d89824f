//! Query-counted array access and argument-keyed randomness.
//!
//! Every random choice the estimator makes is drawn from a stream that is a
//! pure function of `(master key, procedure id, canonical arguments)`. The
//! stream is ChaCha20 (`rand_chacha` 0.9.0, pinned) seeded with
//! `SHA-256(master key ‖ pid ‖ len ‖ args)`. Integer draws below a bound use
//! Lemire's multiply-and-reject method and unit reals use the top 53 bits, so
//! streams do not depend on any `rand` distribution code.

use crate::error::{Error, Result};
use crate::model::{Box, Index, IndexInterval, Value};
use num_rational::Ratio;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

type ValueFn = dyn Fn(Index) -> Value + Send + Sync;

#[derive(Clone)]
enum Source {
    Array(Arc<[Value]>),
    Function(Arc<ValueFn>),
}

/// Read-only access to `f : (0, n] → [1, valbound]` that counts queries.
pub struct SequenceOracle {
    n: u64,
    valbound: Value,
    source: Source,
    total: AtomicU64,
    distinct: AtomicU64,
    seen: Vec<AtomicU64>,
}

impl fmt::Debug for SequenceOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequenceOracle")
            .field("n", &self.n)
            .field("valbound", &self.valbound)
            .field("total_queries", &self.total_queries())
            .field("distinct_queries", &self.distinct_queries())
            .finish()
    }
}

impl SequenceOracle {
    /// Wraps an array; `valbound` is computed by a scan that is not counted.
    pub fn from_values(values: Vec<Value>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("empty array".into()));
        }
        if let Some(i) = values.iter().position(|&v| v == 0) {
            return Err(Error::ValueOutOfRange {
                x: i as u64 + 1,
                value: 0,
                valbound: u64::MAX,
            });
        }
        let valbound = values.iter().copied().max().unwrap_or(1);
        Ok(Self::build(
            values.len() as u64,
            valbound,
            Source::Array(values.into()),
        ))
    }

    /// Wraps an array with an explicit value bound.
    pub fn with_valbound(values: Vec<Value>, valbound: Value) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("empty array".into()));
        }
        if let Some(i) = values.iter().position(|&v| v == 0 || v > valbound) {
            return Err(Error::ValueOutOfRange {
                x: i as u64 + 1,
                value: values[i],
                valbound,
            });
        }
        Ok(Self::build(
            values.len() as u64,
            valbound,
            Source::Array(values.into()),
        ))
    }

    /// Lazily evaluated source. Values are range-checked on every query.
    pub fn from_fn<F>(n: u64, valbound: Value, f: F) -> Result<Self>
    where
        F: Fn(Index) -> Value + Send + Sync + 'static,
    {
        if n == 0 {
            return Err(Error::Precondition("empty array".into()));
        }
        Ok(Self::build(n, valbound, Source::Function(Arc::new(f))))
    }

    fn build(n: u64, valbound: Value, source: Source) -> Self {
        let words = n.div_ceil(64) as usize;
        SequenceOracle {
            n,
            valbound,
            source,
            total: AtomicU64::new(0),
            distinct: AtomicU64::new(0),
            seen: (0..words).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    /// Same source, zeroed counters.
    pub fn fresh(&self) -> Self {
        Self::build(self.n, self.valbound, self.source.clone())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn valbound(&self) -> Value {
        self.valbound
    }

    pub fn universe(&self) -> Box {
        Box::universe(self.n, self.valbound)
    }

    pub fn query(&self, x: Index) -> Result<Value> {
        if x == 0 || x > self.n {
            return Err(Error::IndexOutOfDomain { x, n: self.n });
        }
        self.total.fetch_add(1, Ordering::Relaxed);
        let (word, bit) = (((x - 1) / 64) as usize, (x - 1) % 64);
        let prev = self.seen[word].fetch_or(1 << bit, Ordering::Relaxed);
        if prev & (1 << bit) == 0 {
            self.distinct.fetch_add(1, Ordering::Relaxed);
        }
        let v = self.peek(x);
        if v == 0 || v > self.valbound {
            return Err(Error::ValueOutOfRange {
                x,
                value: v,
                valbound: self.valbound,
            });
        }
        Ok(v)
    }

    fn peek(&self, x: Index) -> Value {
        match &self.source {
            Source::Array(a) => a[(x - 1) as usize],
            Source::Function(f) => f(x),
        }
    }

    /// Uncounted copy of the whole array, for exact reference computations.
    pub fn snapshot(&self) -> Vec<Value> {
        (1..=self.n).map(|x| self.peek(x)).collect()
    }

    pub fn total_queries(&self) -> u64 {
        self.total.load(Ordering::Relaxed)
    }

    pub fn distinct_queries(&self) -> u64 {
        self.distinct.load(Ordering::Relaxed)
    }
}

/// Procedure identifiers used as stream domain separators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum Pid {
    ApproxLis = 1,
    FindSplitter = 2,
    ApproxZ = 3,
    BuildNet = 4,
    Naive = 5,
    Generator = 6,
    Checker = 7,
    Test = 8,
}

/// Canonical little-endian argument encoding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Key(Vec<u8>);

impl Key {
    pub fn new() -> Self {
        Key(Vec::with_capacity(64))
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.0.push(b'u');
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn boxed(self, b: &Box) -> Self {
        self.u64(b.x_l()).u64(b.x_r()).u64(b.y_b()).u64(b.y_t())
    }

    /// A rational in lowest terms with positive denominator.
    pub fn ratio(mut self, r: Ratio<i64>) -> Self {
        let r = r.reduced();
        self.0.push(b'q');
        self.0.extend_from_slice(&r.numer().to_le_bytes());
        self.0.extend_from_slice(&r.denom().to_le_bytes());
        self
    }

    /// A finite real encoded exactly as `(odd mantissa, binary exponent)`.
    pub fn real(mut self, v: f64) -> Self {
        let (m, e) = exact_dyadic(v);
        self.0.push(b'r');
        self.0.extend_from_slice(&m.to_le_bytes());
        self.0.extend_from_slice(&e.to_le_bytes());
        self
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }
}

/// `v = m · 2^e` with `m` odd (or `m = e = 0` for zero).
fn exact_dyadic(v: f64) -> (i64, i32) {
    if v == 0.0 || !v.is_finite() {
        return (0, 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut m, mut e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp - 1075)
    };
    let tz = m.trailing_zeros();
    m >>= tz;
    e += tz as i32;
    (sign * m as i64, e)
}

/// Master key plus the pure map from `(pid, args)` to a random stream.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct RandomnessLedger {
    key: [u8; 32],
    seed: u64,
}

impl fmt::Debug for RandomnessLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RandomnessLedger(seed={}, key={:02x}{:02x}..)",
            self.seed, self.key[0], self.key[1]
        )
    }
}

impl RandomnessLedger {
    pub fn new(master_seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"sublis/ledger");
        h.update(master_seed.to_le_bytes());
        RandomnessLedger {
            key: h.finalize().into(),
            seed: master_seed,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.seed
    }

    /// Independent child ledger, e.g. one per amplification trial.
    pub fn derive(&self, label: &str, index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update(b"derive");
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        RandomnessLedger {
            key: h.finalize().into(),
            seed: self.seed,
        }
    }

    pub fn stream_for(&self, pid: Pid, args: &Key) -> RandomStream {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update((pid as u16).to_le_bytes());
        h.update((args.bytes().len() as u64).to_le_bytes());
        h.update(args.bytes());
        RandomStream {
            rng: ChaCha20Rng::from_seed(h.finalize().into()),
        }
    }
}

/// A reproducible random stream.
pub struct RandomStream {
    rng: ChaCha20Rng,
}

impl RandomStream {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        self.rng.fill_bytes(out)
    }

    /// Uniform integer in `[0, bound)`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let mut m = (self.next_u64() as u128) * (bound as u128);
        if (m as u64) < bound {
            let threshold = bound.wrapping_neg() % bound;
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (bound as u128);
            }
        }
        (m >> 64) as u64
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn between(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        if lo == 0 && hi == u64::MAX {
            return self.next_u64();
        }
        lo + self.below(hi - lo + 1)
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `m` independent uniform positions of `(x_l, x_r]`, with replacement.
    pub fn sample_indices(&mut self, interval: IndexInterval, m: u64) -> Result<Vec<Index>> {
        if interval.width() == 0 {
            return Err(Error::Precondition(
                "sampling from an empty interval".into(),
            ));
        }
        Ok((0..m)
            .map(|_| interval.x_l + 1 + self.below(interval.width()))
            .collect())
    }

    /// `m` distinct positions of `[1, n]` in draw order (Floyd's algorithm).
    pub fn sample_distinct(&mut self, n: u64, m: u64) -> Result<Vec<Index>> {
        if m > n {
            return Err(Error::Precondition(format!(
                "cannot draw {m} distinct from {n}"
            )));
        }
        let mut chosen = std::collections::HashSet::with_capacity(m as usize);
        let mut out = Vec::with_capacity(m as usize);
        for j in n - m + 1..=n {
            let t = 1 + self.below(j);
            let pick = if chosen.contains(&t) { j } else { t };
            chosen.insert(pick);
            out.push(pick);
        }
        Ok(out)
    }
}
