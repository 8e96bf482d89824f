//! Input generators, the naive sampling baseline, experiments, scaling
//! measurements, brute-force verification suites and report files.

use crate::error::{Error, Result};
use crate::estimator::{amplify_median, run_with, Overrides, ParameterSet};
use crate::exact::{
    check_dichotomy, check_grid_approx, columns_are_fine, enumerate_adequate_splitters,
    is_value_net, lis_exact, lis_length,
};
use crate::gridding::{build_grid, build_net, grid_columns, FailureProb, NET_SAMPLE_CAP};
use crate::model::{Box, BoxChain, Grid, Point, StripDecomposition, Value};
use crate::oracle::{Key, Pid, RandomStream, RandomnessLedger, SequenceOracle};
use crate::splitter::{find_splitter, SplitterConfig};
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Arrays up to this length get an exact LIS in experiment reports.
pub const EXACT_CAP: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Staircase {
        k: u64,
        t: u64,
    },
    /// `prime` selects the second array of the pair.
    ThreeBlock {
        r: u64,
        prime: bool,
    },
    CorruptedMonotone {
        n: u64,
        eps: f64,
        seed: u64,
    },
    RandomPermutation {
        n: u64,
        seed: u64,
    },
    Sorted {
        n: u64,
    },
    Reversed {
        n: u64,
    },
    File {
        path: PathBuf,
    },
}

/// A generated array with its value bound and, when the construction
/// determines it, its LIS.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub values: Vec<Value>,
    pub valbound: Value,
    pub reported_lis: Option<u64>,
}

impl Instance {
    pub fn oracle(&self) -> Result<SequenceOracle> {
        SequenceOracle::with_valbound(self.values.clone(), self.valbound)
    }
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Instance> {
        let plain = |values: Vec<Value>, lis: Option<u64>| {
            let valbound = values.iter().copied().max().unwrap_or(1);
            Instance {
                values,
                valbound,
                reported_lis: lis,
            }
        };
        Ok(match *self {
            GeneratorSpec::Staircase { k, t } => Instance {
                values: gen_staircase(k, t)?,
                valbound: k * t,
                reported_lis: Some(t),
            },
            GeneratorSpec::ThreeBlock { r, prime } => {
                let tb = gen_three_block(r)?;
                let (values, lis) = if prime {
                    (tb.f_prime, tb.lis_f_prime)
                } else {
                    (tb.f, tb.lis_f)
                };
                Instance {
                    values,
                    valbound: tb.valbound,
                    reported_lis: Some(lis),
                }
            }
            GeneratorSpec::CorruptedMonotone { n, eps, seed } => Instance {
                values: gen_corrupted_monotone(n, eps, seed)?,
                valbound: n,
                reported_lis: None,
            },
            GeneratorSpec::RandomPermutation { n, seed } => Instance {
                values: gen_permutation(n, seed)?,
                valbound: n,
                reported_lis: None,
            },
            GeneratorSpec::Sorted { n } => Instance {
                values: gen_sorted(n)?,
                valbound: n,
                reported_lis: Some(n),
            },
            GeneratorSpec::Reversed { n } => Instance {
                values: gen_reversed(n)?,
                valbound: n,
                reported_lis: Some(1),
            },
            GeneratorSpec::File { ref path } => plain(read_array(path)?, None),
        })
    }

    pub fn n(&self) -> Option<u64> {
        match *self {
            GeneratorSpec::Staircase { k, t } => Some(k * t),
            GeneratorSpec::ThreeBlock { r, .. } => Some(6 * r),
            GeneratorSpec::CorruptedMonotone { n, .. }
            | GeneratorSpec::RandomPermutation { n, .. }
            | GeneratorSpec::Sorted { n }
            | GeneratorSpec::Reversed { n } => Some(n),
            GeneratorSpec::File { .. } => None,
        }
    }
}

fn positive(name: &str, v: u64) -> Result<()> {
    if v == 0 {
        Err(Error::Precondition(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// `t` decreasing blocks of size `K`: `f(iK + j + 1) = iK − j + K`.
pub fn gen_staircase(k: u64, t: u64) -> Result<Vec<Value>> {
    positive("K", k)?;
    positive("t", t)?;
    Ok((0..t)
        .flat_map(|i| (0..k).map(move |j| i * k + k - j))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeBlock {
    pub f: Vec<Value>,
    pub f_prime: Vec<Value>,
    pub valbound: Value,
    pub lis_f: u64,
    pub lis_f_prime: u64,
}

/// Two arrays of length `6r` that agree on the first `3r` positions but
/// have LIS `4r` and `2r`.
///
/// Block 1 is `100r+1, …, 101r`; block 2 is `1, 101r+1, 2, 101r+2, …, r,
/// 102r`. The third block of `f` is `r+1+32k` for `k < 3r`; that of `f′` is
/// a staircase with steps of 3 on `r+1, …, 4r`.
pub fn gen_three_block(r: u64) -> Result<ThreeBlock> {
    positive("r", r)?;
    let mut head: Vec<Value> = (100 * r + 1..=101 * r).collect();
    for i in 1..=r {
        head.push(i);
        head.push(101 * r + i);
    }
    let mut f = head.clone();
    f.extend((0..3 * r).map(|k| r + 1 + 32 * k));
    let mut f_prime = head;
    f_prime.extend((0..r).flat_map(|i| (0..3).map(move |j| r + 3 * i + 3 - j)));
    Ok(ThreeBlock {
        f,
        f_prime,
        valbound: 102 * r,
        lis_f: 4 * r,
        lis_f_prime: 2 * r,
    })
}

fn generator_stream(tag: &str, seed: u64, key: Key) -> RandomStream {
    RandomnessLedger::new(seed)
        .derive(tag, 0)
        .stream_for(Pid::Generator, &key)
}

/// The identity with `⌈εn⌉` seed-chosen positions overwritten by
/// seed-chosen values of `[1, n]`.
pub fn gen_corrupted_monotone(n: u64, eps: f64, seed: u64) -> Result<Vec<Value>> {
    positive("n", n)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Precondition(format!(
            "eps must lie in [0, 1], got {eps}"
        )));
    }
    let mut values: Vec<Value> = (1..=n).collect();
    let m = ((eps * n as f64).ceil() as u64).min(n);
    let mut stream = generator_stream("corrupted-monotone", seed, Key::new().u64(n).real(eps));
    for x in stream.sample_distinct(n, m)? {
        values[(x - 1) as usize] = stream.between(1, n);
    }
    Ok(values)
}

/// Uniform permutation of `1..=n` (Fisher–Yates).
pub fn gen_permutation(n: u64, seed: u64) -> Result<Vec<Value>> {
    positive("n", n)?;
    let mut values: Vec<Value> = (1..=n).collect();
    let mut stream = generator_stream("permutation", seed, Key::new().u64(n));
    for i in (1..values.len()).rev() {
        let j = stream.below(i as u64 + 1) as usize;
        values.swap(i, j);
    }
    Ok(values)
}

pub fn gen_sorted(n: u64) -> Result<Vec<Value>> {
    positive("n", n)?;
    Ok((1..=n).collect())
}

pub fn gen_reversed(n: u64) -> Result<Vec<Value>> {
    positive("n", n)?;
    Ok((1..=n).rev().collect())
}

/// Reads newline-separated decimals, or little-endian `u64`s when the file
/// extension is `u64`.
pub fn read_array(path: &Path) -> Result<Vec<Value>> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "u64") {
        if bytes.len() % 8 != 0 {
            return Err(Error::Parse(format!(
                "{}: length {} is not a multiple of 8",
                path.display(),
                bytes.len()
            )));
        }
        return Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect());
    }
    let text =
        String::from_utf8(bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn write_array(path: &Path, values: &[Value]) -> Result<()> {
    let mut out =
        fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "u64") {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        out.write_all(&bytes)?;
    } else {
        let mut text = String::with_capacity(values.len() * 8);
        for v in values {
            text.push_str(&v.to_string());
            text.push('\n');
        }
        out.write_all(text.as_bytes())?;
    }
    Ok(())
}

/// Samples `m` distinct positions, takes the exact LIS of the sampled values
/// in index order and scales it by `n/m`.
pub fn naive_estimate(oracle: &SequenceOracle, ledger: &RandomnessLedger, m: u64) -> Result<f64> {
    let n = oracle.n();
    if m == 0 || m > n {
        return Err(Error::Precondition(format!(
            "sample size must lie in [1, {n}], got {m}"
        )));
    }
    let mut xs = ledger
        .stream_for(Pid::Naive, &Key::new().u64(m))
        .sample_distinct(n, m)?;
    xs.sort_unstable();
    let ys: Vec<Value> = xs.iter().map(|&x| oracle.query(x)).collect::<Result<_>>()?;
    Ok(n as f64 * lis_length(&ys) as f64 / m as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Basic,
    Improved,
    Naive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub tau_bar: f64,
    pub delta_bar: f64,
    pub c1: f64,
    pub c2: f64,
    /// Odd number of median-amplified trials per estimate.
    pub trials: u32,
    /// Naive sample size; defaults to `min(n, 256)`.
    pub naive_m: Option<u64>,
    /// Naive sample size as a fraction of `n`; used when `naive_m` is unset.
    pub naive_fraction: Option<f64>,
    pub overrides: Overrides,
}

impl Default for AlgoParams {
    fn default() -> Self {
        AlgoParams {
            tau_bar: 0.2,
            delta_bar: 0.2,
            c1: 2.0,
            c2: 8.0,
            trials: 1,
            naive_m: None,
            naive_fraction: None,
            overrides: Overrides::default(),
        }
    }
}

impl AlgoParams {
    pub fn parameter_set(&self, algo: Algo, n: u64, valbound: Value) -> Result<ParameterSet> {
        let p = match algo {
            Algo::Basic => ParameterSet::basic(n, valbound, self.tau_bar, self.c1)?,
            Algo::Improved => {
                ParameterSet::improved(n, valbound, self.tau_bar, self.delta_bar, self.c2)?
            }
            Algo::Naive => {
                return Err(Error::Precondition(
                    "the naive baseline has no parameter set".into(),
                ))
            }
        };
        Ok(p.with_overrides(&self.overrides))
    }

    pub fn naive_sample_size(&self, n: u64) -> u64 {
        match (self.naive_m, self.naive_fraction) {
            (Some(m), _) => m,
            (None, Some(f)) => ((f * n as f64).round() as u64).clamp(1, n),
            (None, None) => n.min(256),
        }
    }
}

/// Fixed parameters for query-scaling runs: `α = 1/4`, `γ_0 = 1/8`,
/// `ρ_0 = 1/8`, `t_max = 2`, a constant classify sample and pinned splitter
/// and net sample sizes, so that nothing grows with `n`.
pub fn desk_profile() -> AlgoParams {
    AlgoParams {
        overrides: Overrides {
            log_n: Some(1.0),
            t_max: Some(2),
            sigma: Some(8.0),
            alpha: Some(0.25),
            omega: Some(16.0),
            gamma0: Some(0.125),
            rho0: Some(0.125),
            xi: Some(1e-3),
            net_sample_cap: Some(256),
            z_sample_const: Some(0.5),
            candidate_const: Some(1.0),
            classify_budget: None,
        },
        ..AlgoParams::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub estimate: f64,
    pub total_queries: u64,
    pub distinct_queries: u64,
}

/// One (possibly amplified) estimate on `oracle`; query counts are deltas.
pub fn estimate_once(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    algo: Algo,
    params: &AlgoParams,
) -> Result<RunOutcome> {
    let (q0, d0) = (oracle.total_queries(), oracle.distinct_queries());
    let estimate = match algo {
        Algo::Naive => {
            let m = params.naive_sample_size(oracle.n());
            let mut ests = if params.trials <= 1 {
                vec![naive_estimate(oracle, ledger, m)?]
            } else {
                (0..params.trials)
                    .map(|i| naive_estimate(oracle, &ledger.derive("trial", i as u64), m))
                    .collect::<Result<Vec<_>>>()?
            };
            ests.sort_by(f64::total_cmp);
            ests[ests.len() / 2]
        }
        _ => {
            let p = params.parameter_set(algo, oracle.n(), oracle.valbound())?;
            amplify_median(ledger, params.trials.max(1), |l| {
                run_with(oracle, l, p.clone())
            })?
            .estimate
        }
    };
    Ok(RunOutcome {
        estimate,
        total_queries: oracle.total_queries() - q0,
        distinct_queries: oracle.distinct_queries() - d0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub seed: u64,
    pub estimate: f64,
    pub total_queries: u64,
    pub distinct_queries: u64,
    /// Milliseconds; omitted from deterministic reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    pub min: u64,
    pub median: f64,
    pub max: u64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median_estimate: f64,
    pub median_abs_error: Option<f64>,
    pub query_stats: QueryStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub generator: GeneratorSpec,
    pub algo: Algo,
    pub params: AlgoParams,
    pub n: u64,
    pub exact_lis: Option<u64>,
    pub estimates: Vec<EstimateRow>,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn without_timings(mut self) -> Self {
        for row in &mut self.estimates {
            row.wall_time_ms = None;
        }
        self
    }
}

/// Median; the mean of the two middle elements for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

fn summarize(rows: &[EstimateRow], exact: Option<u64>) -> Summary {
    let ests: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let qs: Vec<f64> = rows.iter().map(|r| r.total_queries as f64).collect();
    let med = median(&ests);
    Summary {
        median_estimate: med,
        median_abs_error: exact.map(|l| (med - l as f64).abs()),
        query_stats: QueryStats {
            min: rows.iter().map(|r| r.total_queries).min().unwrap_or(0),
            median: median(&qs),
            max: rows.iter().map(|r| r.total_queries).max().unwrap_or(0),
            mean: if qs.is_empty() {
                f64::NAN
            } else {
                qs.iter().sum::<f64>() / qs.len() as f64
            },
        },
    }
}

/// Generates the input once and runs one estimate per seed, in parallel,
/// each on a fresh oracle so that query counts are per run.
pub fn run_experiment(
    spec: &GeneratorSpec,
    algo: Algo,
    params: &AlgoParams,
    seeds: &[u64],
) -> Result<ExperimentResult> {
    let inst = spec.generate()?;
    let n = inst.values.len() as u64;
    let exact_lis = (n <= EXACT_CAP).then(|| lis_exact(&inst.values).length as u64);
    let base = inst.oracle()?;
    let rows: Vec<EstimateRow> = seeds
        .par_iter()
        .map(|&seed| {
            let oracle = base.fresh();
            let start = Instant::now();
            let out = estimate_once(&oracle, &RandomnessLedger::new(seed), algo, params)?;
            Ok(EstimateRow {
                seed,
                estimate: out.estimate,
                total_queries: out.total_queries,
                distinct_queries: out.distinct_queries,
                wall_time_ms: Some(start.elapsed().as_secs_f64() * 1e3),
            })
        })
        .collect::<Result<_>>()?;
    let summary = summarize(&rows, exact_lis);
    Ok(ExperimentResult {
        generator: spec.clone(),
        algo,
        params: params.clone(),
        n,
        exact_lis,
        estimates: rows,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: u64,
    pub median_total_queries: f64,
    pub median_distinct_queries: f64,
    /// `queries(n)/queries(n/4)` when the previous size is `n/4`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub algo: Algo,
    pub rows: Vec<ScalingRow>,
    pub experiments: Vec<ExperimentResult>,
}

impl ScalingTable {
    pub fn without_timings(mut self) -> Self {
        self.experiments = self
            .experiments
            .into_iter()
            .map(ExperimentResult::without_timings)
            .collect();
        self
    }
}

/// Median query counts per size and the ratio column for consecutive sizes
/// that differ by a factor of 4.
pub fn query_scaling<F>(
    family: F,
    algo: Algo,
    params: &AlgoParams,
    sizes: &[u64],
    seeds: &[u64],
) -> Result<ScalingTable>
where
    F: Fn(u64) -> GeneratorSpec,
{
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "sizes must be strictly ascending".into(),
        ));
    }
    let mut rows: Vec<ScalingRow> = Vec::new();
    let mut experiments = Vec::new();
    for &n in sizes {
        let exp = run_experiment(&family(n), algo, params, seeds)?;
        let total = exp.summary.query_stats.median;
        let distinct = median(
            &exp.estimates
                .iter()
                .map(|r| r.distinct_queries as f64)
                .collect::<Vec<_>>(),
        );
        let ratio = rows
            .last()
            .filter(|prev| prev.n * 4 == n)
            .map(|prev| total / prev.median_total_queries);
        rows.push(ScalingRow {
            n,
            median_total_queries: total,
            median_distinct_queries: distinct,
            ratio,
        });
        experiments.push(exp);
    }
    Ok(ScalingTable {
        algo,
        rows,
        experiments,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// One CSV row per experiment: generator, algorithm, size and summary.
pub fn experiments_csv(results: &[ExperimentResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "generator",
        "algo",
        "n",
        "exact_lis",
        "median_estimate",
        "median_abs_error",
        "median_queries",
        "seeds",
    ])
    .map_err(csv_err)?;
    for r in results {
        let generator =
            serde_json::to_string(&r.generator).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_record([
            generator,
            serde_json::to_string(&r.algo)
                .unwrap_or_default()
                .trim_matches('"')
                .to_string(),
            r.n.to_string(),
            r.exact_lis.map(|v| v.to_string()).unwrap_or_default(),
            r.summary.median_estimate.to_string(),
            r.summary
                .median_abs_error
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.summary.query_stats.median.to_string(),
            r.estimates.len().to_string(),
        ])
        .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
        .map_err(|e| Error::Parse(e.to_string()))
}

pub fn scaling_csv(table: &ScalingTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "n",
        "median_total_queries",
        "median_distinct_queries",
        "ratio",
    ])
    .map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.n.to_string(),
            r.median_total_queries.to_string(),
            r.median_distinct_queries.to_string(),
            r.ratio.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
        .map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Splitter,
    Net,
    Grid,
    Dichotomy,
    GridApprox,
}

/// Outcome counts of a verification suite. `eligible` instances met the
/// suite's precondition; `passed + failed = eligible`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub instances: u64,
    pub eligible: u64,
    pub passed: u64,
    pub failed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn pass_rate(&self) -> f64 {
        if self.eligible == 0 {
            0.0
        } else {
            self.passed as f64 / self.eligible as f64
        }
    }
}

enum Check {
    Skip,
    Pass(BTreeMap<String, f64>),
    Fail(String, BTreeMap<String, f64>),
}

/// A random array of length `n` drawn from a mix of shapes.
fn random_array(stream: &mut RandomStream, n: u64) -> Vec<Value> {
    match stream.below(4) {
        0 => (0..n).map(|_| stream.between(1, n)).collect(),
        1 => {
            let eps = [0.05, 0.1, 0.2, 0.4][stream.below(4) as usize];
            let mut v: Vec<Value> = (1..=n).collect();
            for x in v.iter_mut() {
                if stream.unit() < eps {
                    *x = stream.between(1, n);
                }
            }
            v
        }
        2 => {
            let k = stream.between(1, 4);
            (0..n).map(|x| (x / k) * k + k - x % k).collect()
        }
        _ => {
            let mut v: Vec<Value> = (1..=n).collect();
            for i in (1..v.len()).rev() {
                let j = stream.below(i as u64 + 1) as usize;
                v.swap(i, j);
            }
            v
        }
    }
}

/// Random sub-box of `u` with index width at least `min_w`.
fn random_box(stream: &mut RandomStream, u: &Box, min_w: u64) -> Result<Box> {
    let w = u.width();
    let width = stream.between(min_w.min(w), w);
    let x_l = u.x_l() + stream.between(0, w - width);
    let (a, b) = (
        stream.between(u.y_b(), u.y_t()),
        stream.between(u.y_b(), u.y_t()),
    );
    if stream.below(2) == 0 {
        Box::new(x_l, x_l + width, u.y_b(), u.y_t())
    } else {
        Box::new(x_l, x_l + width, a.min(b), a.max(b))
    }
}

const SPLITTER_ATTEMPTS: u64 = 32;

const MUS: [(i64, i64); 3] = [(1, 4), (1, 2), (2, 5)];

fn check_dichotomy_instance(ledger: &RandomnessLedger) -> Result<Check> {
    let mut st = ledger.stream_for(Pid::Checker, &Key::new().u64(Suite::Dichotomy as u64));
    let n = st.between(2, 64);
    let values = random_array(&mut st, n);
    let oracle = SequenceOracle::from_values(values)?;
    let r = random_box(&mut st, &oracle.universe(), 1)?;
    let mut cuts = vec![r.x_l()];
    for x in r.x_l() + 1..r.x_r() {
        if st.below(3) == 0 {
            cuts.push(x);
        }
    }
    cuts.push(r.x_r());
    let strips = StripDecomposition::new(r, cuts.clone())?;
    let mut ys: Vec<Value> = (0..cuts.len())
        .map(|_| st.between(r.y_b(), r.y_t()))
        .collect();
    ys.sort_unstable();
    let corners: Vec<Point> = cuts
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| Point::new(x, y))
        .collect();
    let chain = BoxChain::from_points(&corners)?;
    let (a, b) = MUS[st.below(3) as usize];
    let rep = check_dichotomy(&oracle, &r, &strips, &chain, Ratio::new(a, b))?;
    let metrics = BTreeMap::from([
        ("chi_in".to_string(), rep.chi_in as f64),
        ("unsafe".to_string(), rep.u_size as f64),
    ]);
    Ok(if rep.holds {
        Check::Pass(metrics)
    } else {
        Check::Fail(format!("{r} mu={a}/{b}: {rep:?}"), metrics)
    })
}

fn check_grid_approx_instance(ledger: &RandomnessLedger) -> Result<Check> {
    let mut st = ledger.stream_for(Pid::Checker, &Key::new().u64(Suite::GridApprox as u64));
    // Boxes narrower than 1/α admit no α-fine grid: the run {x_r} is too long.
    let (alpha, min_w) = if st.below(2) == 0 {
        (0.25, 4)
    } else {
        (0.5, 2)
    };
    let n = st.between(min_w, 32);
    let oracle = SequenceOracle::from_values(random_array(&mut st, n))?;
    let b = random_box(&mut st, &oracle.universe(), min_w)?;
    let xs = grid_columns(&b, alpha);
    let mut ys = vec![b.y_t()];
    if !xs.is_empty() {
        let net_alpha = alpha / xs.len() as f64;
        ys.extend(
            build_net(
                &oracle,
                ledger,
                &b,
                net_alpha,
                FailureProb::new(1e-3),
                NET_SAMPLE_CAP,
            )?
            .values,
        );
    }
    for _ in 0..st.below(4) {
        ys.push(st.between(b.y_b(), b.y_t()));
    }
    let grid = Grid::new(xs, ys);
    let rep = check_grid_approx(&oracle, &b, &grid, alpha)?;
    let metrics = BTreeMap::from([("exhaustive".to_string(), rep.exhaustive as u64 as f64)]);
    Ok(if rep.holds {
        Check::Pass(metrics)
    } else {
        Check::Fail(format!("{b} alpha={alpha}: {rep:?}"), metrics)
    })
}

fn check_net_instance(ledger: &RandomnessLedger) -> Result<Check> {
    let mut st = ledger.stream_for(Pid::Checker, &Key::new().u64(Suite::Net as u64));
    let n = st.between(2048, 8192);
    let oracle = SequenceOracle::from_values(random_array(&mut st, n))?;
    let b = random_box(&mut st, &oracle.universe(), n / 2)?;
    let alpha = if st.below(2) == 0 { 0.25 } else { 0.5 };
    let net = build_net(
        &oracle,
        ledger,
        &b,
        alpha,
        FailureProb::new(1e-3),
        NET_SAMPLE_CAP,
    )?;
    let bound = 4 * (1.0 / alpha).ceil() as usize;
    let size_ok = net.values.len() <= bound;
    let valid = is_value_net(&oracle, &b, &net.values, alpha)?;
    let metrics = BTreeMap::from([("size_violations".to_string(), (!size_ok) as u64 as f64)]);
    Ok(if valid && size_ok {
        Check::Pass(metrics)
    } else {
        Check::Fail(
            format!(
                "{b} alpha={alpha}: net of {} values, valid={valid}",
                net.values.len()
            ),
            metrics,
        )
    })
}

fn check_grid_instance(ledger: &RandomnessLedger) -> Result<Check> {
    let mut st = ledger.stream_for(Pid::Checker, &Key::new().u64(Suite::Grid as u64));
    let alpha = [0.5, 0.25, 0.125][st.below(3) as usize];
    let n = st.between(16, 4096);
    let oracle = SequenceOracle::from_values(random_array(&mut st, n))?;
    let b = random_box(&mut st, &oracle.universe(), (1.0 / alpha) as u64)?;
    let out = build_grid(
        &oracle,
        ledger,
        &b,
        alpha,
        FailureProb::new(1e-3),
        NET_SAMPLE_CAP,
    )?;
    let g = &out.grid;
    let net_ok = g.xs.is_empty() || is_value_net(&oracle, &b, &g.ys, alpha / g.xs.len() as f64)?;
    let ok = g.check_b_grid(&b).is_ok() && columns_are_fine(&b, &g.xs, alpha) && net_ok;
    let metrics = BTreeMap::from([(
        "full_refinement".to_string(),
        out.full_refinement as u64 as f64,
    )]);
    Ok(if ok {
        Check::Pass(metrics)
    } else {
        Check::Fail(format!("{b} alpha={alpha}: net_ok={net_ok}"), metrics)
    })
}

/// `L = w/8`, `ρ = 1/8`; eligible when at least `ρw` splitters are
/// `(μ, L, ρ)`-adequate. Passes when a splitter is found; the metric
/// `adequate_2l` counts returned splitters that are `(μ, 2L, ρ)`-adequate.
fn check_splitter_instance(ledger: &RandomnessLedger) -> Result<Check> {
    let rho = 0.125;
    // Redraw until the instance has enough adequate splitters.
    let mut found = None;
    for attempt in 0..SPLITTER_ATTEMPTS {
        let mut st = ledger.stream_for(
            Pid::Checker,
            &Key::new().u64(Suite::Splitter as u64).u64(attempt),
        );
        let n = st.between(64, 512);
        let oracle = SequenceOracle::from_values(random_array(&mut st, n))?;
        let b = oracle.universe();
        let t = random_box(&mut st, &b, 64)?;
        let t = Box::new(t.x_l(), t.x_r(), b.y_b(), b.y_t())?;
        let (a, d) = MUS[st.below(3) as usize];
        let l = (t.width() as f64 / 8.0).max(1.0);
        let adequate = enumerate_adequate_splitters(&oracle, &t, &b, Ratio::new(a, d), l, rho)?;
        if adequate.len() as f64 >= rho * t.width() as f64 {
            found = Some((n, oracle, b, t, (a, d), l));
            break;
        }
    }
    let Some((n, oracle, b, t, (a, d), l)) = found else {
        return Ok(Check::Skip);
    };
    let mu = Ratio::new(a, d);
    let out = find_splitter(&oracle, ledger, &t, &b, mu, l, rho, &SplitterConfig::new(n))?;
    let Some(s) = out.splitter else {
        return Ok(Check::Fail(
            format!("{t} mu={a}/{d}: no splitter in {} draws", out.candidates),
            BTreeMap::new(),
        ));
    };
    let loose = enumerate_adequate_splitters(&oracle, &t, &b, mu, 2.0 * l, rho)?;
    let metrics = BTreeMap::from([("adequate_2l".to_string(), loose.contains(&s) as u64 as f64)]);
    Ok(Check::Pass(metrics))
}

/// Runs `instances` seeded instances of a brute-force property check. Instance
/// `i` uses `ledger.derive(suite, i)`; metrics are summed over eligible
/// instances.
pub fn verify_suite(
    suite: Suite,
    instances: u64,
    ledger: &RandomnessLedger,
) -> Result<VerifyReport> {
    let label = serde_json::to_string(&suite).unwrap_or_default();
    let checks: Vec<Check> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let l = ledger.derive(&label, i);
            match suite {
                Suite::Dichotomy => check_dichotomy_instance(&l),
                Suite::GridApprox => check_grid_approx_instance(&l),
                Suite::Net => check_net_instance(&l),
                Suite::Grid => check_grid_instance(&l),
                Suite::Splitter => check_splitter_instance(&l),
            }
        })
        .collect::<Result<_>>()?;
    let mut rep = VerifyReport {
        suite,
        instances,
        eligible: 0,
        passed: 0,
        failed: 0,
        metrics: BTreeMap::new(),
        failures: Vec::new(),
    };
    let add = |rep: &mut VerifyReport, m: BTreeMap<String, f64>| {
        for (k, v) in m {
            *rep.metrics.entry(k).or_insert(0.0) += v;
        }
    };
    for c in checks {
        match c {
            Check::Skip => {}
            Check::Pass(m) => {
                rep.eligible += 1;
                rep.passed += 1;
                add(&mut rep, m);
            }
            Check::Fail(msg, m) => {
                rep.eligible += 1;
                rep.failed += 1;
                add(&mut rep, m);
                if rep.failures.len() < 10 {
                    rep.failures.push(msg);
                }
            }
        }
    }
    Ok(rep)
}
