//! Replicated simulation campaigns: empirical size, power curves and
//! asymptotic-independence diagnostics.
//!
//! Replications run in parallel on a rayon pool, one dataset per replication
//! shared by every selected test. Each replication draws from its own seeded
//! stream and results are gathered by replication index, so a report depends
//! only on the campaign, never on the thread count.
//!
//! Every grid point reuses the same replication seeds (common random
//! numbers), which keeps neighbouring points of a power curve comparable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{CovarianceModel, Family, Sampler, ScenarioSpec};
use crate::error::{Error, Result};
use crate::procedures::{evaluate, TestName};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "SPHERICITY_THREADS";

/// Signal strength used by the sparsity sweep.
pub const SPARSITY_SWEEP_A: f64 = 0.5;

/// A simulation campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub master_seed: u64,
    pub cov_grid: Vec<CovarianceModel>,
    pub tests: Vec<TestName>,
    pub reps: usize,
    pub alpha: f64,
    /// Keep the per-replication p-values in the report.
    #[serde(default)]
    pub keep_p_values: bool,
    /// Worker threads; `None` reads [`THREADS_ENV`], then falls back to rayon's default.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Campaign {
    /// Null campaign with every test and the default desk-scale 1000 replications.
    pub fn new(family: Family, n: usize, p: usize, master_seed: u64) -> Self {
        Self {
            family,
            n,
            p,
            master_seed,
            cov_grid: vec![CovarianceModel::null()],
            tests: TestName::ALL.to_vec(),
            reps: 1000,
            alpha: 0.05,
            keep_p_values: false,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidConfig("tests must not be empty".into()));
        }
        if self.cov_grid.is_empty() {
            return Err(Error::InvalidConfig("cov_grid must not be empty".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        for cov in &self.cov_grid {
            self.scenario(*cov).validate()?;
        }
        Ok(())
    }

    pub fn scenario(&self, cov: CovarianceModel) -> ScenarioSpec {
        ScenarioSpec {
            family: self.family,
            n: self.n,
            p: self.p,
            cov,
            master_seed: self.master_seed,
        }
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
}

/// One row of a report: one test at one covariance configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub test: TestName,
    pub cov: CovarianceModel,
    /// Sweep coordinate (`s` or `a`) for power curves.
    pub grid_value: Option<f64>,
    pub rejections: usize,
    pub reps: usize,
    pub rejection_rate: f64,
    pub mc_standard_error: f64,
}

/// Per-replication p-values at one grid point, `p_values[test][rep]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueTable {
    pub cov: CovarianceModel,
    pub tests: Vec<TestName>,
    pub p_values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub campaign: Campaign,
    pub rows: Vec<ReportRow>,
    pub p_values: Option<Vec<PValueTable>>,
}

impl SimulationReport {
    pub fn row(&self, test: TestName, grid_index: usize) -> Option<&ReportRow> {
        let per_point = self.campaign.tests.len();
        self.rows
            .get(grid_index * per_point..(grid_index + 1) * per_point)?
            .iter()
            .find(|r| r.test == test)
    }

    pub fn rate(&self, test: TestName, grid_index: usize) -> Option<f64> {
        self.row(test, grid_index).map(|r| r.rejection_rate)
    }
}

/// Statistics and p-values of every selected test for every replication.
struct PointRun {
    /// `statistics[rep][test]`
    statistics: Vec<Vec<f64>>,
    p_values: Vec<Vec<f64>>,
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads.or_else(threads_from_env) {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn run_point(campaign: &Campaign, tests: &[TestName], cov: CovarianceModel) -> Result<PointRun> {
    let sampler = Sampler::new(campaign.scenario(cov))?;
    let per_rep: Vec<Result<(Vec<f64>, Vec<f64>)>> = with_pool(campaign.threads, || {
        (0..campaign.reps)
            .into_par_iter()
            .map(|rep| {
                let data = sampler.sample(rep as u64);
                let mut stats = Vec::with_capacity(tests.len());
                let mut pvals = Vec::with_capacity(tests.len());
                for outcome in evaluate(&data, tests) {
                    let o = outcome.map_err(|e| match e {
                        Error::InvalidConfig(m) | Error::InvalidInput(m) => {
                            Error::InvalidConfig(m)
                        }
                        Error::Degenerate(m) => {
                            Error::Degenerate(format!("replication {rep}: {m}"))
                        }
                        other => other,
                    })?;
                    stats.push(o.statistic);
                    pvals.push(o.p_value);
                }
                Ok((stats, pvals))
            })
            .collect()
    })?;
    let mut statistics = Vec::with_capacity(per_rep.len());
    let mut p_values = Vec::with_capacity(per_rep.len());
    for r in per_rep {
        let (s, p) = r?;
        statistics.push(s);
        p_values.push(p);
    }
    Ok(PointRun {
        statistics,
        p_values,
    })
}

fn rate_and_se(rejections: usize, reps: usize) -> (f64, f64) {
    let r = rejections as f64 / reps as f64;
    (r, (r * (1.0 - r) / reps as f64).sqrt())
}

fn run_grid(campaign: &Campaign, grid_values: Option<&[f64]>) -> Result<SimulationReport> {
    campaign.validate()?;
    let tests = &campaign.tests;
    let mut rows = Vec::with_capacity(campaign.cov_grid.len() * tests.len());
    let mut tables = campaign.keep_p_values.then(Vec::new);
    for (g, &cov) in campaign.cov_grid.iter().enumerate() {
        let run = run_point(campaign, tests, cov)?;
        for (t, &test) in tests.iter().enumerate() {
            let rejections = run
                .p_values
                .iter()
                .filter(|pv| pv[t] <= campaign.alpha)
                .count();
            let (rejection_rate, mc_standard_error) = rate_and_se(rejections, campaign.reps);
            rows.push(ReportRow {
                test,
                cov,
                grid_value: grid_values.map(|v| v[g]),
                rejections,
                reps: campaign.reps,
                rejection_rate,
                mc_standard_error,
            });
        }
        if let Some(tables) = tables.as_mut() {
            tables.push(PValueTable {
                cov,
                tests: tests.clone(),
                p_values: (0..tests.len())
                    .map(|t| run.p_values.iter().map(|pv| pv[t]).collect())
                    .collect(),
            });
        }
    }
    Ok(SimulationReport {
        campaign: campaign.clone(),
        rows,
        p_values: tables,
    })
}

/// Rejection proportions for an arbitrary covariance grid.
pub fn run(campaign: &Campaign) -> Result<SimulationReport> {
    run_grid(campaign, None)
}

/// Empirical sizes; every grid entry must be a null model.
pub fn estimate_size(campaign: &Campaign) -> Result<SimulationReport> {
    if let Some(bad) = campaign.cov_grid.iter().find(|c| !c.is_null()) {
        return Err(Error::InvalidConfig(format!(
            "size estimation needs null covariance models, got {bad}"
        )));
    }
    run_grid(campaign, None)
}

/// Power against `Σ = diag(A_s, I)` with `a = 0.5` for each `s` in `s_grid`.
pub fn power_curve_sparsity(base: &Campaign, s_grid: &[usize]) -> Result<SimulationReport> {
    if s_grid.is_empty() {
        return Err(Error::InvalidConfig("s_grid must not be empty".into()));
    }
    let mut campaign = base.clone();
    campaign.cov_grid = s_grid
        .iter()
        .map(|&s| {
            if s < 2 || s > base.p {
                return Err(Error::InvalidConfig(format!(
                    "s_grid entry {s} outside [2, p = {}]",
                    base.p
                )));
            }
            Ok(CovarianceModel::BlockSpiked {
                s,
                a: SPARSITY_SWEEP_A,
            })
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = s_grid.iter().map(|&s| s as f64).collect();
    run_grid(&campaign, Some(&values))
}

/// Power against `Σ = diag(A_s, I)` for each signal strength in `a_grid`.
/// `a = 0` is the null model.
pub fn power_curve_strength(base: &Campaign, s: usize, a_grid: &[f64]) -> Result<SimulationReport> {
    if a_grid.is_empty() {
        return Err(Error::InvalidConfig("a_grid must not be empty".into()));
    }
    let mut campaign = base.clone();
    campaign.cov_grid = a_grid
        .iter()
        .map(|&a| {
            if a == 0.0 {
                return Ok(CovarianceModel::null());
            }
            if !(a > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "a_grid entries must be non-negative, got {a}"
                )));
            }
            let cov = CovarianceModel::BlockSpiked { s, a };
            cov.validate(base.p)?;
            Ok(cov)
        })
        .collect::<Result<_>>()?;
    run_grid(&campaign, Some(a_grid))
}

/// Sum/max pair whose asymptotic independence is examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestPair {
    /// (NS, NM)
    Covariance,
    /// (SS, SM)
    Sign,
}

impl TestPair {
    pub fn members(&self) -> (TestName, TestName) {
        match self {
            TestPair::Covariance => (TestName::NS, TestName::NM),
            TestPair::Sign => (TestName::SS, TestName::SM),
        }
    }
}

/// Empirical dependence between a sum-type and a max-type statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceRecord {
    pub pair: TestPair,
    pub cov: CovarianceModel,
    pub reps: usize,
    /// Pearson correlation of the two statistics across replications.
    pub correlation: f64,
    /// Marginal rejection rates at level `alpha / 2`.
    pub sum_rate: f64,
    pub max_rate: f64,
    /// Both tests reject at `alpha / 2`.
    pub joint_rate: f64,
    pub product_rate: f64,
    /// At least one test rejects at `alpha / 2`.
    pub either_rate: f64,
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Correlation and joint-versus-product rejection for each pair at every
/// grid point of `campaign`. The campaign's test list is ignored.
pub fn independence_diagnostic(
    campaign: &Campaign,
    pairs: &[TestPair],
) -> Result<Vec<IndependenceRecord>> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("no test pair requested".into()));
    }
    let mut tests = Vec::new();
    for pair in pairs {
        let (a, b) = pair.members();
        for t in [a, b] {
            if !tests.contains(&t) {
                tests.push(t);
            }
        }
    }
    let mut campaign = campaign.clone();
    campaign.tests = tests.clone();
    campaign.validate()?;
    let level = campaign.alpha / 2.0;
    let reps = campaign.reps as f64;
    let mut out = Vec::new();
    for &cov in &campaign.cov_grid {
        let run = run_point(&campaign, &tests, cov)?;
        for &pair in pairs {
            let (a, b) = pair.members();
            let ia = tests.iter().position(|&t| t == a).expect("present");
            let ib = tests.iter().position(|&t| t == b).expect("present");
            let xa: Vec<f64> = run.statistics.iter().map(|s| s[ia]).collect();
            let xb: Vec<f64> = run.statistics.iter().map(|s| s[ib]).collect();
            let (mut ra, mut rb, mut both, mut either) = (0usize, 0usize, 0usize, 0usize);
            for pv in &run.p_values {
                let (ja, jb) = (pv[ia] <= level, pv[ib] <= level);
                ra += ja as usize;
                rb += jb as usize;
                both += (ja && jb) as usize;
                either += (ja || jb) as usize;
            }
            let (sum_rate, max_rate) = (ra as f64 / reps, rb as f64 / reps);
            out.push(IndependenceRecord {
                pair,
                cov,
                reps: campaign.reps,
                correlation: pearson(&xa, &xb),
                sum_rate,
                max_rate,
                joint_rate: both as f64 / reps,
                product_rate: sum_rate * max_rate,
                either_rate: either as f64 / reps,
            });
        }
    }
    Ok(out)
}
