//! The six sphericity tests and their p-values.
//!
//! Sum-type statistics (NS, SS) are referred to `N(0,1)`, max-type statistics
//! (NM, SM) to the Gumbel law `G`; all four use upper-tail p-values. CN and CS
//! combine a sum/max pair with [`cauchy_combine`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{cauchy_combine, gumbel_quantile, gumbel_sf, normal_sf};
use crate::error::{Error, Result};
use crate::estimators::{moment_summary, sign_summary, MomentSummary, SignSummary};
use crate::matrix::DataMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestName {
    NS,
    NM,
    SS,
    SM,
    CN,
    CS,
}

impl TestName {
    /// Report order: sign-based tests first, as in the size tables.
    pub const ALL: [TestName; 6] = [
        TestName::SS,
        TestName::SM,
        TestName::CS,
        TestName::NS,
        TestName::NM,
        TestName::CN,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TestName::NS => "NS",
            TestName::NM => "NM",
            TestName::SS => "SS",
            TestName::SM => "SM",
            TestName::CN => "CN",
            TestName::CS => "CS",
        }
    }

    pub fn is_max_type(&self) -> bool {
        matches!(self, TestName::NM | TestName::SM)
    }

    pub fn is_combination(&self) -> bool {
        matches!(self, TestName::CN | TestName::CS)
    }

    /// Whether the test is built on spatial signs.
    pub fn is_sign_based(&self) -> bool {
        matches!(self, TestName::SS | TestName::SM | TestName::CS)
    }

    /// Parses a comma-separated list such as `"NS,NM,CN"` or `"all"`.
    pub fn parse_list(s: &str) -> Result<Vec<TestName>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(TestName::ALL.to_vec());
        }
        let mut out: Vec<TestName> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let t: TestName = part.parse()?;
            if !out.contains(&t) {
                out.push(t);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("test list is empty".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for TestName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().trim_start_matches("T_") {
            "NS" => Ok(TestName::NS),
            "NM" => Ok(TestName::NM),
            "SS" => Ok(TestName::SS),
            "SM" => Ok(TestName::SM),
            "CN" => Ok(TestName::CN),
            "CS" => Ok(TestName::CS),
            other => Err(Error::InvalidConfig(format!(
                "unknown test '{other}' (expected NS, NM, SS, SM, CN or CS)"
            ))),
        }
    }
}

/// Result of one test on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome<T> {
    pub name: TestName,
    /// The test statistic; for CN and CS this is the combined p-value.
    pub statistic: T,
    pub p_value: T,
    /// Columns whose `κ̂` hit its floor (NM and CN only).
    pub kappa_clamped: Vec<usize>,
}

impl<T: Real> TestOutcome<T> {
    /// Rejection at level `alpha`: `p_value ≤ alpha`.
    pub fn reject(&self, alpha: T) -> bool {
        self.p_value <= alpha
    }

    pub fn reject_at(&self, alphas: &[T]) -> Vec<(T, bool)> {
        alphas.iter().map(|&a| (a, self.reject(a))).collect()
    }

    /// Critical value `q_α` on the statistic scale for max-type tests.
    pub fn critical_value(&self, alpha: T) -> Result<Option<T>> {
        if self.name.is_max_type() {
            gumbel_quantile(alpha).map(Some)
        } else {
            Ok(None)
        }
    }
}

fn require_n<T: Real>(data: &DataMatrix<T>, min: usize, test: TestName) -> Result<()> {
    if data.n() < min {
        return Err(Error::InvalidInput(format!(
            "{test} needs at least {min} observations, got {}",
            data.n()
        )));
    }
    Ok(())
}

/// `-2 log(P) + log log(P)` with `P = p(p+1)/2`, the centring of both
/// max-type statistics.
pub fn max_type_offset<T: Real>(p: usize) -> T {
    let pairs = T::from_usize_lossy(p) * T::from_usize_lossy(p + 1) / T::lit(2.0);
    -T::lit(2.0) * pairs.ln() + pairs.ln().ln()
}

/// `σ_S² = 4(p-1) / (n(n-1)(p+2))`.
pub fn sign_sum_variance<T: Real>(n: usize, p: usize) -> T {
    let (nf, pf) = (T::from_usize_lossy(n), T::from_usize_lossy(p));
    T::lit(4.0) * (pf - T::one()) / (nf * (nf - T::one()) * (pf + T::lit(2.0)))
}

/// Kurtosis-corrected John statistic
/// `T_NS = (n-1) Q_J / (np) - (p + β̂ + 1)/2` with
/// `Q_J = (np²/2) tr(S/tr S - I/p)²` and the `1/(n-1)` covariance `S`.
pub fn ns_statistic<T: Real>(m: &MomentSummary<T>, n: usize) -> T {
    let p = m.s.dim();
    let (nf, pf) = (T::from_usize_lossy(n), T::from_usize_lossy(p));
    let tr = m.s.trace();
    // tr(A - I/p)² = ‖A‖_F² - 1/p for A = S / tr S
    let dev = m.s.frobenius_sq() / (tr * tr) - pf.recip();
    let q_j = nf * pf * pf / T::lit(2.0) * dev;
    (nf - T::one()) * q_j / (nf * pf) - (pf + m.beta_hat + T::one()) / T::lit(2.0)
}

/// Max-type covariance statistic with `1/n` scaling throughout.
pub fn nm_statistic<T: Real>(m: &MomentSummary<T>, n: usize) -> T {
    let p = m.s_n.dim();
    let nf = T::from_usize_lossy(n);
    let avg = m.s_n.trace() / T::from_usize_lossy(p);
    let mut best = T::neg_infinity();
    for k in 0..p {
        let d = m.sigma2_hat[k] - avg;
        best = best.max(nf * d * d / m.kappa_hat[k]);
    }
    for i in 0..p {
        let si = m.sigma2_hat[i];
        for j in (i + 1)..p {
            let c = m.s_n.get(i, j);
            best = best.max(nf * c * c / (si * m.sigma2_hat[j]));
        }
    }
    best + max_type_offset(p)
}

/// `Q̃_S = p/(n(n-1)) Σ_{i≠j} (Û_iᵀ Û_j)² - 1`.
///
/// The pair sum is `n² ‖Ω̂‖_F²` minus the diagonal, one per nonzero sign.
pub fn q_tilde_s<T: Real>(s: &SignSummary<T>) -> T {
    let n = s.signs.n();
    let p = s.omega_hat.dim();
    let (nf, pf) = (T::from_usize_lossy(n), T::from_usize_lossy(p));
    let pair_sum = nf * nf * s.omega_hat.frobenius_sq() - T::from_usize_lossy(s.nonzero_rows);
    pf / (nf * (nf - T::one())) * pair_sum - T::one()
}

/// Bias correction `δ̂` of the sign-based sum statistic.
pub fn sign_bias<T: Real>(c_hat: &[T; 3], n: usize) -> T {
    let [c1, c2, c3] = *c_hat;
    let nf = T::from_usize_lossy(n);
    let r = c2 / (c1 * c1);
    let two = T::lit(2.0);
    let first = two - two * r + r * r;
    let second = T::lit(8.0) * r - T::lit(6.0) * r * r + two * c2 * c3 / c1.powi(5)
        - two * c3 / c1.powi(3);
    first / (nf * nf) + second / (nf * nf * nf)
}

/// `T_SS = (Q̃_S - p δ̂) / σ_S`.
pub fn ss_statistic<T: Real>(s: &SignSummary<T>) -> T {
    let n = s.signs.n();
    let p = s.omega_hat.dim();
    let q = q_tilde_s(s);
    let delta = sign_bias(&s.c_hat, n);
    (q - T::from_usize_lossy(p) * delta) / sign_sum_variance::<T>(n, p).sqrt()
}

/// Max-type spatial-sign statistic; variances of `ψ̂_ij` are known under
/// the null so no estimate is needed.
pub fn sm_statistic<T: Real>(s: &SignSummary<T>) -> T {
    let n = s.signs.n();
    let p = s.omega_hat.dim();
    let (nf, pf) = (T::from_usize_lossy(n), T::from_usize_lossy(p));
    let scale = nf * pf * (pf + T::lit(2.0));
    let inv_p = pf.recip();
    let diag_var = T::lit(2.0) * (T::one() - inv_p);
    let mut best = T::neg_infinity();
    for i in 0..p {
        let d = s.omega_hat.get(i, i) - inv_p;
        best = best.max(scale * d * d / diag_var);
        for j in (i + 1)..p {
            let v = s.omega_hat.get(i, j);
            best = best.max(scale * v * v);
        }
    }
    best + max_type_offset(p)
}

fn ns_outcome<T: Real>(m: &MomentSummary<T>, n: usize) -> TestOutcome<T> {
    let statistic = ns_statistic(m, n);
    TestOutcome {
        name: TestName::NS,
        statistic,
        p_value: normal_sf(statistic),
        kappa_clamped: Vec::new(),
    }
}

fn nm_outcome<T: Real>(m: &MomentSummary<T>, n: usize) -> TestOutcome<T> {
    let statistic = nm_statistic(m, n);
    TestOutcome {
        name: TestName::NM,
        statistic,
        p_value: gumbel_sf(statistic),
        kappa_clamped: m.kappa_clamped.clone(),
    }
}

fn ss_outcome<T: Real>(s: &SignSummary<T>) -> TestOutcome<T> {
    let statistic = ss_statistic(s);
    TestOutcome {
        name: TestName::SS,
        statistic,
        p_value: normal_sf(statistic),
        kappa_clamped: Vec::new(),
    }
}

fn sm_outcome<T: Real>(s: &SignSummary<T>) -> TestOutcome<T> {
    let statistic = sm_statistic(s);
    TestOutcome {
        name: TestName::SM,
        statistic,
        p_value: gumbel_sf(statistic),
        kappa_clamped: Vec::new(),
    }
}

fn combine<T: Real>(
    name: TestName,
    sum: &TestOutcome<T>,
    max: &TestOutcome<T>,
) -> Result<TestOutcome<T>> {
    let p_value = cauchy_combine(sum.p_value, max.p_value)?;
    Ok(TestOutcome {
        name,
        statistic: p_value,
        p_value,
        kappa_clamped: max.kappa_clamped.clone(),
    })
}

pub fn t_ns<T: Real>(data: &DataMatrix<T>) -> Result<TestOutcome<T>> {
    require_n(data, 3, TestName::NS)?;
    Ok(ns_outcome(&moment_summary(data)?, data.n()))
}

pub fn t_nm<T: Real>(data: &DataMatrix<T>) -> Result<TestOutcome<T>> {
    require_n(data, 3, TestName::NM)?;
    Ok(nm_outcome(&moment_summary(data)?, data.n()))
}

pub fn t_ss<T: Real>(data: &DataMatrix<T>) -> Result<TestOutcome<T>> {
    require_n(data, 3, TestName::SS)?;
    Ok(ss_outcome(&sign_summary(data)?))
}

pub fn t_sm<T: Real>(data: &DataMatrix<T>) -> Result<TestOutcome<T>> {
    Ok(sm_outcome(&sign_summary(data)?))
}

pub fn t_cn<T: Real>(data: &DataMatrix<T>) -> Result<TestOutcome<T>> {
    require_n(data, 3, TestName::CN)?;
    let m = moment_summary(data)?;
    combine(TestName::CN, &ns_outcome(&m, data.n()), &nm_outcome(&m, data.n()))
}

pub fn t_cs<T: Real>(data: &DataMatrix<T>) -> Result<TestOutcome<T>> {
    require_n(data, 3, TestName::CS)?;
    let s = sign_summary(data)?;
    combine(TestName::CS, &ss_outcome(&s), &sm_outcome(&s))
}

/// Runs the requested tests, sharing the moment and sign summaries.
///
/// Results come back in the order of `tests`. A failure of one family
/// (e.g. a constant column breaks NS/NM/CN) leaves the other family intact.
pub fn evaluate<T: Real>(data: &DataMatrix<T>, tests: &[TestName]) -> Vec<Result<TestOutcome<T>>> {
    let needs_moments = tests.iter().any(|t| !t.is_sign_based());
    let needs_signs = tests.iter().any(|t| t.is_sign_based());
    let n = data.n();

    let moment_based = needs_moments.then(|| {
        require_n(data, 3, TestName::NS)?;
        let m = moment_summary(data)?;
        let ns = ns_outcome(&m, n);
        let nm = nm_outcome(&m, n);
        let cn = combine(TestName::CN, &ns, &nm)?;
        Ok::<_, Error>((ns, nm, cn))
    });
    let sign_based = needs_signs.then(|| {
        let s = sign_summary(data)?;
        let ss = (n >= 3).then(|| ss_outcome(&s));
        let sm = sm_outcome(&s);
        let cs = match &ss {
            Some(ss) => Some(combine(TestName::CS, ss, &sm)?),
            None => None,
        };
        Ok::<_, Error>((ss, sm, cs))
    });

    tests
        .iter()
        .map(|&t| match t {
            TestName::NS | TestName::NM | TestName::CN => {
                let (ns, nm, cn) = moment_based.as_ref().expect("computed").as_ref().map_err(Clone::clone)?;
                Ok(match t {
                    TestName::NS => ns.clone(),
                    TestName::NM => nm.clone(),
                    _ => cn.clone(),
                })
            }
            TestName::SS | TestName::SM | TestName::CS => {
                let (ss, sm, cs) = sign_based.as_ref().expect("computed").as_ref().map_err(Clone::clone)?;
                match t {
                    TestName::SM => Ok(sm.clone()),
                    TestName::SS => ss.clone().ok_or_else(|| require_n(data, 3, t).unwrap_err()),
                    _ => cs.clone().ok_or_else(|| require_n(data, 3, t).unwrap_err()),
                }
            }
        })
        .collect()
}
