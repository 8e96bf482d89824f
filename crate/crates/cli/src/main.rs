use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use sublis::distance::{estimate_distance_with, DistanceConfig};
use sublis::estimator::{amplify_median, run_with, EstimateReport};
use sublis::exact::lis_exact;
use sublis::harness::{
    desk_profile, estimate_once, experiments_csv, query_scaling, read_array, scaling_csv, to_json,
    verify_suite, write_array, write_json, Algo, AlgoParams, GeneratorSpec, Suite,
};
use sublis::{Error, RandomnessLedger, SequenceOracle};

#[derive(Parser)]
#[command(
    name = "sublis",
    version,
    about = "Sublinear LIS and distance-to-monotonicity estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact LIS (patience sorting) and loss of an array file.
    Exact {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Estimate the LIS of an array file.
    Estimate(EstimateArgs),
    /// Estimate the distance to monotonicity as an interval.
    Distance(DistanceArgs),
    /// Write a generated array.
    Gen(GenArgs),
    /// Query-scaling experiments over several sizes.
    Bench(BenchArgs),
    /// Run a brute-force property checker suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Master seed.
    #[arg(long, env = "SUBLIS_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Basic,
    Improved,
    Naive,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Basic => Algo::Basic,
            AlgoArg::Improved => Algo::Improved,
            AlgoArg::Naive => Algo::Naive,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    /// Parameter tables with the given constants.
    Table,
    /// Fixed parameters that do not grow with n.
    Desk,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, value_enum, default_value = "improved")]
    algo: AlgoArg,
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Odd number of median-amplified trials.
    #[arg(long, default_value_t = 1)]
    trials: u32,
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
    #[arg(long, default_value_t = 8.0)]
    c2: f64,
    /// Sample size of the naive baseline.
    #[arg(long)]
    naive_m: Option<u64>,
    #[arg(long, value_enum, default_value = "table")]
    profile: Profile,
}

impl ParamArgs {
    fn params(&self) -> AlgoParams {
        let base = if self.profile == Profile::Desk {
            desk_profile()
        } else {
            AlgoParams::default()
        };
        AlgoParams {
            tau_bar: self.tau,
            delta_bar: self.delta,
            c1: self.c1,
            c2: self.c2,
            trials: self.trials,
            naive_m: self.naive_m,
            ..base
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    input: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DistanceArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Median-amplified trials per iteration.
    #[arg(long, default_value_t = 9)]
    trials: u32,
    #[arg(long, default_value_t = 12)]
    max_iterations: u32,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Staircase,
    ThreeBlock,
    CorruptedMonotone,
    Permutation,
    Sorted,
    Reversed,
}

#[derive(Args)]
struct KindArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Staircase block size.
    #[arg(long, default_value_t = 2)]
    k: u64,
    /// Staircase block count.
    #[arg(long)]
    t: Option<u64>,
    /// Three-block unit.
    #[arg(long)]
    r: Option<u64>,
    /// Emit the second three-block array.
    #[arg(long)]
    prime: bool,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Generator seed.
    #[arg(long = "gen-seed", default_value_t = 0)]
    gen_seed: u64,
}

impl KindArgs {
    /// Generator for an array of length about `n`.
    fn spec(&self, n: Option<u64>) -> Result<GeneratorSpec, Error> {
        let need = |v: Option<u64>, what: &str| {
            v.ok_or_else(|| Error::Precondition(format!("--{what} is required")))
        };
        Ok(match self.kind {
            Kind::Staircase => GeneratorSpec::Staircase {
                k: self.k,
                t: need(self.t.or(n.map(|n| n / self.k.max(1))), "t or --n")?,
            },
            Kind::ThreeBlock => GeneratorSpec::ThreeBlock {
                r: need(self.r.or(n.map(|n| n / 6)), "r or --n")?,
                prime: self.prime,
            },
            Kind::CorruptedMonotone => GeneratorSpec::CorruptedMonotone {
                n: need(n, "n")?,
                eps: self.eps,
                seed: self.gen_seed,
            },
            Kind::Permutation => GeneratorSpec::RandomPermutation {
                n: need(n, "n")?,
                seed: self.gen_seed,
            },
            Kind::Sorted => GeneratorSpec::Sorted { n: need(n, "n")? },
            Kind::Reversed => GeneratorSpec::Reversed { n: need(n, "n")? },
        })
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    kind: KindArgs,
    /// Output file; `.u64` selects the binary format.
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    kind: KindArgs,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<u64>,
    #[command(flatten)]
    params: ParamArgs,
    /// Number of seeds per size (seeds are master, master+1, ...).
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[command(flatten)]
    seed: SeedArg,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV path for the scaling table.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Keep per-run wall times in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Splitter,
    Net,
    Grid,
    Dichotomy,
    GridApprox,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 100)]
    instances: u64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct ExactOut {
    n: u64,
    lis: u64,
    loss: u64,
}

#[derive(Serialize)]
struct EstimateOut {
    algo: Algo,
    n: u64,
    seed: u64,
    estimate: f64,
    total_queries: u64,
    distinct_queries: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    runs: Vec<EstimateReport>,
}

fn load(path: &Path) -> Result<SequenceOracle, Error> {
    SequenceOracle::from_values(read_array(path)?)
}

fn print_json<T: Serialize>(v: &T) -> Result<(), Error> {
    println!("{}", to_json(v)?);
    Ok(())
}

fn exact(input: PathBuf, json: bool) -> Result<ExitCode, Error> {
    let values = read_array(&input)?;
    let n = values.len() as u64;
    let lis = lis_exact(&values).length as u64;
    let out = ExactOut {
        n,
        lis,
        loss: n - lis,
    };
    if json {
        print_json(&out)?;
    } else {
        println!("n={} lis={} loss={}", out.n, out.lis, out.loss);
    }
    Ok(ExitCode::SUCCESS)
}

fn estimate(a: EstimateArgs) -> Result<ExitCode, Error> {
    let oracle = load(&a.input)?;
    let ledger = RandomnessLedger::new(a.seed.seed);
    let algo: Algo = a.params.algo.into();
    let params = a.params.params();
    let out = if algo == Algo::Naive {
        let r = estimate_once(&oracle, &ledger, algo, &params)?;
        EstimateOut {
            algo,
            n: oracle.n(),
            seed: a.seed.seed,
            estimate: r.estimate,
            total_queries: r.total_queries,
            distinct_queries: r.distinct_queries,
            runs: Vec::new(),
        }
    } else {
        let p = params.parameter_set(algo, oracle.n(), oracle.valbound())?;
        let amp = amplify_median(&ledger, params.trials, |l| run_with(&oracle, l, p.clone()))?;
        EstimateOut {
            algo,
            n: oracle.n(),
            seed: a.seed.seed,
            estimate: amp.estimate,
            total_queries: oracle.total_queries(),
            distinct_queries: oracle.distinct_queries(),
            runs: amp.runs,
        }
    };
    if a.json {
        print_json(&out)?;
    } else {
        println!(
            "estimate={} total_queries={} distinct_queries={} n={}",
            out.estimate, out.total_queries, out.distinct_queries, out.n
        );
        for w in out
            .runs
            .first()
            .map(|r| r.warnings.as_slice())
            .unwrap_or_default()
        {
            eprintln!("warning: {w}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn distance(a: DistanceArgs) -> Result<ExitCode, Error> {
    let oracle = load(&a.input)?;
    let cfg = DistanceConfig {
        trials: a.trials,
        max_iterations: a.max_iterations,
        ..DistanceConfig::default()
    };
    let d = estimate_distance_with(&oracle, &RandomnessLedger::new(a.seed.seed), a.tau, &cfg)?;
    if a.json {
        print_json(&d)?;
    } else {
        println!(
            "eps in [{}, {}] iterations={} delta_bar={} converged={} total_queries={}",
            d.eps_low, d.eps_high, d.iterations, d.final_delta_bar, d.converged, d.total_queries
        );
    }
    Ok(if d.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn gen(a: GenArgs) -> Result<ExitCode, Error> {
    let spec = a.kind.spec(a.kind.n)?;
    let values = spec.generate()?.values;
    write_array(&a.out, &values)?;
    eprintln!("wrote {} values to {}", values.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn bench(a: BenchArgs) -> Result<ExitCode, Error> {
    let mut specs = Vec::with_capacity(a.sizes.len());
    for &n in &a.sizes {
        specs.push((n, a.kind.spec(Some(n))?));
    }
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed.seed.wrapping_add(i)).collect();
    let params = a.params.params();
    let family = |n: u64| {
        specs
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, s)| s.clone())
            .expect("size listed")
    };
    let mut table = query_scaling(family, a.params.algo.into(), &params, &a.sizes, &seeds)?;
    if !a.timings {
        table = table.without_timings();
    }
    write_json(&a.out, &table)?;
    if let Some(csv) = &a.csv {
        std::fs::write(csv, scaling_csv(&table)?)?;
        let mut summary = csv.clone();
        summary.set_extension("experiments.csv");
        std::fs::write(summary, experiments_csv(&table.experiments)?)?;
    }
    for r in &table.rows {
        let ratio = r
            .ratio
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "n={} median_total_queries={} ratio={}",
            r.n, r.median_total_queries, ratio
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode, Error> {
    let suite = match a.suite {
        SuiteArg::Splitter => Suite::Splitter,
        SuiteArg::Net => Suite::Net,
        SuiteArg::Grid => Suite::Grid,
        SuiteArg::Dichotomy => Suite::Dichotomy,
        SuiteArg::GridApprox => Suite::GridApprox,
    };
    let rep = verify_suite(suite, a.instances, &RandomnessLedger::new(a.seed.seed))?;
    if a.json {
        print_json(&rep)?;
    } else {
        println!(
            "suite={} instances={} eligible={} passed={} failed={}",
            serde_json::to_string(&rep.suite)
                .unwrap_or_default()
                .trim_matches('"'),
            rep.instances,
            rep.eligible,
            rep.passed,
            rep.failed
        );
        for (k, v) in &rep.metrics {
            println!("  {k}={v}");
        }
        for f in &rep.failures {
            println!("  failure: {f}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Invariant(_) | Error::Budget(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Exact { input, json } => exact(input, json),
        Command::Estimate(a) => estimate(a),
        Command::Distance(a) => distance(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
