//! The recursive LIS estimator.
//!
//! `approx_lis(B, t)` samples indices of `B` and classifies each as good or
//! bad. Classifying `x` shrinks `B` around `x` with splitters until a
//! terminal box `T` is reached, picks the heaviest grid chain of `T` (its
//! weights are level `t − 1` estimates of the grid boxes) and recurses into
//! the chain box holding `x`. The good indices at any level form an
//! increasing sequence, so the estimate never exceeds the true LIS by more
//! than sampling error.
//!
//! Two variants share everything except the terminal-box loop: the basic one
//! uses fixed splitter parameters; the improved one runs in phases, relaxing
//! `γ` and `ρ` after every failed splitter search.

use crate::error::{Error, Result};
use crate::gridding::{
    self, build_grid, longest_path, FailureProb, GridDigraph, Weight, NET_SAMPLE_CAP,
};
use crate::model::{box_spanned, Box, BoxChain, Index, Point, Value};
use crate::oracle::{Key, Pid, RandomnessLedger, SequenceOracle};
use crate::splitter::{find_splitter, log2_n, SplitterConfig, SplitterOutcome};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::time::{Duration, Instant};

pub const CLASSIFY_BUDGET: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Basic,
    Improved,
}

/// Optional replacements for table-derived parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    /// Pins `log n` for splitter sample sizes instead of `log₂ n`.
    pub log_n: Option<f64>,
    pub t_max: Option<u32>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    pub gamma0: Option<f64>,
    pub rho0: Option<f64>,
    pub xi: Option<f64>,
    pub net_sample_cap: Option<u64>,
    pub z_sample_const: Option<f64>,
    pub candidate_const: Option<f64>,
    pub classify_budget: Option<u64>,
}

/// Global knobs of one estimator run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub variant: Variant,
    pub n: u64,
    pub valbound: Value,
    pub log_n: f64,
    pub tau_bar: f64,
    pub delta_bar: Option<f64>,
    pub t_max: u32,
    pub psi: Option<f64>,
    pub sigma: f64,
    pub alpha: f64,
    pub omega: f64,
    pub eta: f64,
    /// `γ` (basic) or `γ_0` (improved).
    pub gamma0: f64,
    /// `ρ` (basic) or `ρ_0` (improved).
    pub rho0: f64,
    pub c1: f64,
    pub c2: f64,
    pub xi: FailureProb,
    pub net_sample_cap: u64,
    pub splitter: SplitterConfig,
    pub classify_budget: u64,
    pub phase_assertions: bool,
    pub warnings: Vec<String>,
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{name} must lie in (0, 1), got {v}"
        )))
    }
}

impl ParameterSet {
    /// Basic table: `σ = 10(log n)⁴`, `α = γ = (C1 log n)⁻³`,
    /// `ρ = (C1 log n)⁻¹`, `ω = 1/ρ`, `η = 1/(10 log n)`.
    pub fn basic(n: u64, valbound: Value, tau_bar: f64, c1: f64) -> Result<Self> {
        check_fraction("tau_bar", tau_bar)?;
        let lg = log2_n(n);
        let rho = 1.0 / (c1 * lg);
        let alpha = rho.powi(3);
        let mut p = ParameterSet {
            variant: Variant::Basic,
            n,
            valbound,
            log_n: lg,
            tau_bar,
            delta_bar: None,
            t_max: (4.0 / tau_bar).ceil() as u32,
            psi: None,
            sigma: 10.0 * lg.powi(4),
            alpha,
            omega: 1.0 / rho,
            eta: 1.0 / (10.0 * lg),
            gamma0: alpha,
            rho0: rho,
            c1,
            c2: 8.0,
            xi: FailureProb::for_grid(n),
            net_sample_cap: NET_SAMPLE_CAP,
            splitter: SplitterConfig::new(n),
            classify_budget: CLASSIFY_BUDGET,
            phase_assertions: true,
            warnings: Vec::new(),
        };
        p.clamp();
        Ok(p)
    }

    /// Improved table: `Ψ = max(C2, t_max/δ̄)`, `σ = 100Ψ³`,
    /// `α = (C2 Ψ)⁻⁴`, `ω = 1/α`, `η = 1/(10Ψ)`, `γ_j = 16^j α/(log n)⁴`,
    /// `ρ_j = γ_j^{1/4}`.
    pub fn improved(
        n: u64,
        valbound: Value,
        tau_bar: f64,
        delta_bar: f64,
        c2: f64,
    ) -> Result<Self> {
        check_fraction("tau_bar", tau_bar)?;
        check_fraction("delta_bar", delta_bar)?;
        let lg = log2_n(n);
        let t_max = (4.0 / tau_bar).ceil() as u32;
        let psi = c2.max(t_max as f64 / delta_bar);
        let alpha = (c2 * psi).powi(-4);
        let gamma0 = alpha / lg.powi(4);
        let mut p = ParameterSet {
            variant: Variant::Improved,
            n,
            valbound,
            log_n: lg,
            tau_bar,
            delta_bar: Some(delta_bar),
            t_max,
            psi: Some(psi),
            sigma: 100.0 * psi.powi(3),
            alpha,
            omega: 1.0 / alpha,
            eta: 1.0 / (10.0 * psi),
            gamma0,
            rho0: gamma0.powf(0.25),
            c1: 2.0,
            c2,
            xi: FailureProb::for_grid(n),
            net_sample_cap: NET_SAMPLE_CAP,
            splitter: SplitterConfig::new(n),
            classify_budget: CLASSIFY_BUDGET,
            phase_assertions: true,
            warnings: Vec::new(),
        };
        p.clamp();
        Ok(p)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(v) = o.log_n {
            self.log_n = v;
            self.splitter.log_n = v;
        }
        if let Some(v) = o.t_max {
            self.t_max = v;
        }
        if let Some(v) = o.sigma {
            self.sigma = v;
        }
        if let Some(v) = o.alpha {
            self.alpha = v;
            if o.omega.is_none() && self.variant == Variant::Improved {
                self.omega = 1.0 / v;
            }
        }
        if let Some(v) = o.omega {
            self.omega = v;
        }
        if let Some(v) = o.gamma0 {
            self.gamma0 = v;
        }
        if let Some(v) = o.rho0 {
            self.rho0 = v;
            if o.omega.is_none() && self.variant == Variant::Basic {
                self.omega = 1.0 / v;
            }
        }
        if let Some(v) = o.xi {
            self.xi = FailureProb::new(v);
        }
        if let Some(v) = o.net_sample_cap {
            self.net_sample_cap = v;
        }
        if let Some(v) = o.z_sample_const {
            self.splitter.z_sample_const = v;
        }
        if let Some(v) = o.candidate_const {
            self.splitter.candidate_const = v;
        }
        if let Some(v) = o.classify_budget {
            self.classify_budget = v;
        }
        self.clamp();
        self
    }

    fn clamp(&mut self) {
        const HI: f64 = 1.0 - 1.0 / (1u64 << 20) as f64;
        let mut fix = |name: &str, v: &mut f64, hi: f64| {
            if v.is_nan() || *v <= 0.0 {
                self.warnings
                    .push(format!("{name}={v} clamped to {}", f64::MIN_POSITIVE));
                *v = f64::MIN_POSITIVE;
            } else if *v > hi {
                self.warnings.push(format!("{name}={v} clamped to {hi}"));
                *v = hi;
            }
        };
        fix("alpha", &mut self.alpha, HI);
        fix("gamma0", &mut self.gamma0, HI);
        fix("rho0", &mut self.rho0, 0.5);
        fix("eta", &mut self.eta, HI);
    }

    /// `μ_r = 2/(r + 3)`.
    pub fn mu_of(r: u32) -> Ratio<i64> {
        Ratio::new(2, r as i64 + 3)
    }

    /// `γ` in phase `j` (constant for the basic variant).
    pub fn gamma_of(&self, j: u32) -> f64 {
        match self.variant {
            Variant::Basic => self.gamma0,
            Variant::Improved => self.gamma0 * 16f64.powi(j as i32),
        }
    }

    /// `ρ` in phase `j` (constant for the basic variant).
    pub fn rho_of(&self, j: u32) -> f64 {
        match self.variant {
            Variant::Basic => self.rho0,
            Variant::Improved => (self.rho0 * 2f64.powi(j as i32)).min(0.5),
        }
    }

    /// Additive error target at level `t`: `t/Ψ` (improved) or `t/log n`.
    pub fn delta_t(&self, t: u32) -> f64 {
        t as f64 / self.psi.unwrap_or(self.log_n)
    }

    /// Multiplicative error target at level `t`: `4/t`.
    pub fn tau_t(&self, t: u32) -> f64 {
        4.0 / t as f64
    }

    /// Number of classify samples per `approx_lis` call.
    pub fn sigma_samples(&self) -> u64 {
        if self.sigma >= u64::MAX as f64 {
            u64::MAX
        } else {
            self.sigma.ceil().max(1.0) as u64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub classify_calls_by_level: Vec<u64>,
    pub max_phase_reached: u32,
    pub splitter_searches: u64,
    pub splits: u64,
    pub grid_chains: u64,
    pub full_refinements: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    /// Exact rational estimate as `numerator/denominator`.
    pub estimate_exact: String,
    pub total_queries: u64,
    pub distinct_queries: u64,
    #[serde(flatten)]
    pub stats: RunStats,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

type SplitKey = (Box, Box, Ratio<i64>, u64, u64);

/// One estimator run: caches are per run, randomness comes from the ledger.
pub struct Estimator<'a> {
    oracle: &'a SequenceOracle,
    ledger: RandomnessLedger,
    params: ParameterSet,
    lis_memo: RefCell<HashMap<(Box, u32), Weight>>,
    chain_memo: RefCell<HashMap<(Box, u32), Rc<BoxChain>>>,
    split_memo: RefCell<HashMap<SplitKey, SplitterOutcome>>,
    stats: RefCell<RunStats>,
    classify_total: RefCell<u64>,
}

impl<'a> Estimator<'a> {
    pub fn new(oracle: &'a SequenceOracle, ledger: RandomnessLedger, params: ParameterSet) -> Self {
        let levels = params.t_max as usize + 1;
        Estimator {
            oracle,
            ledger,
            params,
            lis_memo: RefCell::default(),
            chain_memo: RefCell::default(),
            split_memo: RefCell::default(),
            stats: RefCell::new(RunStats {
                classify_calls_by_level: vec![0; levels],
                ..Default::default()
            }),
            classify_total: RefCell::new(0),
        }
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn stats(&self) -> RunStats {
        self.stats.borrow().clone()
    }

    fn f(&self, x: Index) -> Result<Value> {
        self.oracle.query(x)
    }

    /// Estimate of `lis(b)` at level `t`, as an exact rational.
    pub fn approx_lis(&self, b: &Box, t: u32) -> Result<Weight> {
        if b.is_degenerate() {
            return Ok(Weight::from_integer(0));
        }
        if b.width() == 1 {
            let y = self.f(b.x_r())?;
            return Ok(Weight::from_integer(b.ys.contains(y) as i128));
        }
        if let Some(v) = self.lis_memo.borrow().get(&(*b, t)) {
            return Ok(*v);
        }
        let sigma = self.params.sigma_samples();
        let w = b.width();
        let value = if sigma >= w {
            let mut good = 0i128;
            for x in b.indices() {
                good += self.classify(x, b, t)? as i128;
            }
            Weight::from_integer(good)
        } else {
            let key = Key::new().boxed(b).u64(t as u64);
            let mut stream = self.ledger.stream_for(Pid::ApproxLis, &key);
            let mut seen: HashMap<Index, bool> = HashMap::new();
            let mut good = 0i128;
            for x in stream.sample_indices(b.xs, sigma)? {
                let g = match seen.get(&x) {
                    Some(&g) => g,
                    None => {
                        let g = self.classify(x, b, t)?;
                        seen.insert(x, g);
                        g
                    }
                };
                good += g as i128;
            }
            Weight::new(good * w as i128, sigma as i128)
        };
        self.lis_memo.borrow_mut().insert((*b, t), value);
        Ok(value)
    }

    /// Whether `x` is good for `b` at level `t`.
    pub fn classify(&self, x: Index, b: &Box, t: u32) -> Result<bool> {
        {
            let mut total = self.classify_total.borrow_mut();
            *total += 1;
            if *total > self.params.classify_budget {
                return Err(Error::Budget(*total));
            }
            let mut st = self.stats.borrow_mut();
            let lvl = t as usize;
            if st.classify_calls_by_level.len() <= lvl {
                st.classify_calls_by_level.resize(lvl + 1, 0);
            }
            st.classify_calls_by_level[lvl] += 1;
        }
        let y = self.f(x)?;
        if !b.contains(Point::new(x, y)) {
            return Ok(false);
        }
        if b.width() == 1 {
            return Ok(true);
        }
        if t == 0 {
            return Ok(false);
        }
        let c = self.critical_box(x, b, t)?;
        self.classify(x, &c, t - 1)
    }

    /// The box of the terminal box's grid chain that holds `x`.
    pub fn critical_box(&self, x: Index, b: &Box, t: u32) -> Result<Box> {
        let term = self.terminal_box(x, b, t)?;
        let chain = self.grid_chain(&term, t)?;
        Ok(*chain.box_at(x)?)
    }

    pub fn terminal_box(&self, x: Index, b: &Box, t: u32) -> Result<Box> {
        match self.params.variant {
            Variant::Basic => self.terminal_box_basic(x, b, t),
            Variant::Improved => self.terminal_box_improved(x, b, t),
        }
    }

    fn splitter(
        &self,
        t_box: &Box,
        b: &Box,
        mu: Ratio<i64>,
        l: f64,
        rho: f64,
    ) -> Result<SplitterOutcome> {
        let key = (*t_box, *b, mu, l.to_bits(), rho.to_bits());
        if let Some(o) = self.split_memo.borrow().get(&key) {
            return Ok(*o);
        }
        self.stats.borrow_mut().splitter_searches += 1;
        let out = find_splitter(
            self.oracle,
            &self.ledger,
            t_box,
            b,
            mu,
            l,
            rho,
            &self.params.splitter,
        )?;
        self.split_memo.borrow_mut().insert(key, out);
        Ok(out)
    }

    /// Shrinks `t` to the side of splitter `s` that holds `x`.
    fn shrink(&self, t: &Box, s: Index, x: Index) -> Result<Box> {
        let ps = Point::new(s, self.f(s)?);
        let next = if x <= s {
            box_spanned(t.bl(), ps)?
        } else {
            box_spanned(ps, t.tr())?
        };
        self.stats.borrow_mut().splits += 1;
        Ok(next)
    }

    /// Splits with fixed `(μ_t, γ, ρ)` until the width is at most `ω` or no
    /// splitter is found.
    pub fn terminal_box_basic(&self, x: Index, b: &Box, t: u32) -> Result<Box> {
        let p = &self.params;
        let mu = ParameterSet::mu_of(t);
        let mut cur = *b;
        while cur.width() as f64 > p.omega {
            let l = (p.gamma0 * cur.width() as f64).max(1.0);
            match self.splitter(&cur, b, mu, l, p.rho0)?.splitter {
                Some(s) => cur = self.shrink(&cur, s, x)?,
                None => break,
            }
        }
        Ok(cur)
    }

    /// Phased loop: after a failed search at width `w`, the stopping width
    /// becomes `max(θ, γ_j w/α)` and the next phase uses `γ_{j+1}, ρ_{j+1}`.
    pub fn terminal_box_improved(&self, x: Index, b: &Box, t: u32) -> Result<Box> {
        let p = &self.params;
        let mu = ParameterSet::mu_of(t);
        let mut cur = *b;
        let mut theta = p.omega;
        let mut j = 0u32;
        let mut splits_in_phase = 0u64;
        while cur.width() as f64 > theta {
            let (gamma, rho) = (p.gamma_of(j), p.rho_of(j));
            let l = (gamma * cur.width() as f64).max(1.0);
            match self.splitter(&cur, b, mu, l, rho)?.splitter {
                Some(s) => {
                    splits_in_phase += 1;
                    if p.phase_assertions {
                        self.check_phase(j, gamma, rho, splits_in_phase)?;
                    }
                    cur = self.shrink(&cur, s, x)?;
                }
                None => {
                    theta = theta.max(gamma * cur.width() as f64 / p.alpha);
                    j += 1;
                    splits_in_phase = 0;
                    let mut st = self.stats.borrow_mut();
                    st.max_phase_reached = st.max_phase_reached.max(j);
                }
            }
        }
        Ok(cur)
    }

    fn check_phase(&self, j: u32, gamma: f64, rho: f64, splits: u64) -> Result<()> {
        let a = self.params.alpha;
        let tol = 1.0 + 1e-9;
        if gamma > 16.0 * a * tol {
            return Err(Error::Invariant(format!(
                "phase {j} splits with gamma={gamma} > 16 alpha={}",
                16.0 * a
            )));
        }
        if rho > 2.0 * a.powf(0.25) * tol {
            return Err(Error::Invariant(format!(
                "phase {j} splits with rho={rho} > 2 alpha^(1/4)"
            )));
        }
        if splits as f64 > (1.0 / (rho * rho)) * tol {
            return Err(Error::Invariant(format!(
                "phase {j} made {splits} splits > 1/rho^2={}",
                1.0 / (rho * rho)
            )));
        }
        Ok(())
    }

    /// Heaviest chain of the grid of `t_box`, weighted by level `t − 1`
    /// estimates. Fully refined grids use the exact unit-weight routine.
    pub fn grid_chain(&self, t_box: &Box, t: u32) -> Result<Rc<BoxChain>> {
        if t == 0 {
            return Err(Error::Precondition("grid_chain needs t >= 1".into()));
        }
        if let Some(c) = self.chain_memo.borrow().get(&(*t_box, t)) {
            return Ok(Rc::clone(c));
        }
        self.stats.borrow_mut().grid_chains += 1;
        let chain = if t_box.width() == 1 {
            BoxChain::new(vec![*t_box])?
        } else if t_box.width() as f64 <= 1.0 / self.params.alpha {
            self.stats.borrow_mut().full_refinements += 1;
            let values: Vec<Value> = t_box.indices().map(|x| self.f(x)).collect::<Result<_>>()?;
            gridding::full_refinement_chain(t_box, &values)?.0
        } else {
            let p = &self.params;
            let grid = build_grid(
                self.oracle,
                &self.ledger,
                t_box,
                p.alpha,
                p.xi,
                p.net_sample_cap,
            )?
            .grid;
            let dg = GridDigraph::new(&grid, t_box)?;
            longest_path(&dg, |d| self.approx_lis(d, t - 1))?.0
        };
        let chain = Rc::new(chain);
        self.chain_memo
            .borrow_mut()
            .insert((*t_box, t), Rc::clone(&chain));
        Ok(chain)
    }

    /// All `x ∈ X(b)` classified good at level `t`.
    pub fn good_set(&self, b: &Box, t: u32) -> Result<Vec<Index>> {
        let mut out = Vec::new();
        for x in b.indices() {
            if self.classify(x, b, t)? {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// `approx_lis` on the universe at level `t_max`, with a report.
    pub fn run(&self) -> Result<EstimateReport> {
        let start = Instant::now();
        let (q0, d0) = (self.oracle.total_queries(), self.oracle.distinct_queries());
        let u = self.oracle.universe();
        let est = self.approx_lis(&u, self.params.t_max)?;
        let est = est
            .max(Weight::from_integer(0))
            .min(Weight::from_integer(u.width() as i128));
        Ok(EstimateReport {
            estimate: weight_to_f64(&est),
            estimate_exact: format!("{}/{}", est.numer(), est.denom()),
            total_queries: self.oracle.total_queries() - q0,
            distinct_queries: self.oracle.distinct_queries() - d0,
            stats: self.stats(),
            warnings: self.params.warnings.clone(),
            wall_time: start.elapsed(),
        })
    }
}

pub fn weight_to_f64(w: &Weight) -> f64 {
    *w.numer() as f64 / *w.denom() as f64
}

/// Runs the estimator with the given parameters.
pub fn run_with(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    params: ParameterSet,
) -> Result<EstimateReport> {
    Estimator::new(oracle, *ledger, params).run()
}

/// Basic variant with the default constant `C1 = 2`.
pub fn basic_main(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    tau_bar: f64,
) -> Result<EstimateReport> {
    let p = ParameterSet::basic(oracle.n(), oracle.valbound(), tau_bar, 2.0)?;
    run_with(oracle, ledger, p)
}

/// Improved variant with the default constant `C2 = 8`.
pub fn improved_main(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    tau_bar: f64,
    delta_bar: f64,
) -> Result<EstimateReport> {
    let p = ParameterSet::improved(oracle.n(), oracle.valbound(), tau_bar, delta_bar, 8.0)?;
    run_with(oracle, ledger, p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifiedReport {
    pub estimate: f64,
    pub runs: Vec<EstimateReport>,
}

/// Median of `trials` runs, trial `i` using `ledger.derive("trial", i)`.
/// A single trial uses `ledger` itself.
pub fn amplify_median<F>(
    ledger: &RandomnessLedger,
    trials: u32,
    mut run: F,
) -> Result<AmplifiedReport>
where
    F: FnMut(&RandomnessLedger) -> Result<EstimateReport>,
{
    if trials == 0 || trials.is_multiple_of(2) {
        return Err(Error::Precondition(format!(
            "trials must be odd and positive, got {trials}"
        )));
    }
    let runs: Vec<EstimateReport> = if trials == 1 {
        vec![run(ledger)?]
    } else {
        (0..trials)
            .map(|i| run(&ledger.derive("trial", i as u64)))
            .collect::<Result<_>>()?
    };
    let mut ests: Vec<f64> = runs.iter().map(|r| r.estimate).collect();
    ests.sort_by(f64::total_cmp);
    Ok(AmplifiedReport {
        estimate: ests[ests.len() / 2],
        runs,
    })
}
