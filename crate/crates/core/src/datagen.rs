//! Synthetic datasets for the four simulation scenarios.
//!
//! Every dataset is a pure function of `(ScenarioSpec, rep_index)`: each
//! replication gets its own ChaCha8 stream keyed by [`derive_rep_seed`], so
//! serial and parallel runs draw identical numbers.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, SquareMatrix};

/// Mixing weight of the narrow component in the normal mixture.
pub const MIXTURE_WEIGHT: f64 = 0.8;
/// Variance ratio between the wide and the narrow mixture components.
pub const MIXTURE_VARIANCE_RATIO: f64 = 9.0;
/// Degrees of freedom of the multivariate t scenario.
pub const T_DOF: f64 = 3.0;
/// Shape and rate of the gamma innovations (mean 2, variance 1).
pub const GAMMA_SHAPE: f64 = 4.0;
pub const GAMMA_RATE: f64 = 2.0;

/// Population covariance of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CovarianceModel {
    /// `Σ = σ² I_p`.
    NullIdentity { sigma2: f64 },
    /// `Σ = diag(A_s, I_{p-s})` with `A_s = (1-δ) I_s + δ 11ᵀ`, `δ = a / sqrt(s)`.
    BlockSpiked { s: usize, a: f64 },
}

impl CovarianceModel {
    pub fn null() -> Self {
        CovarianceModel::NullIdentity { sigma2: 1.0 }
    }

    /// Off-diagonal correlation inside the spiked block, zero under the null.
    pub fn delta(&self) -> f64 {
        match *self {
            CovarianceModel::NullIdentity { .. } => 0.0,
            CovarianceModel::BlockSpiked { s, a } => a / (s as f64).sqrt(),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, CovarianceModel::NullIdentity { .. })
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match *self {
            CovarianceModel::NullIdentity { sigma2 } => {
                if !(sigma2 > 0.0 && sigma2.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "sigma2 must be positive and finite, got {sigma2}"
                    )));
                }
            }
            CovarianceModel::BlockSpiked { s, a } => {
                if s == 0 {
                    return Err(Error::InvalidConfig("s must be at least 1".into()));
                }
                if s > p {
                    return Err(Error::InvalidConfig(format!(
                        "block size s = {s} exceeds dimension p = {p}"
                    )));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "signal strength a must be positive, got {a}"
                    )));
                }
                let delta = self.delta();
                if delta >= 1.0 {
                    return Err(Error::InvalidConfig(format!(
                        "delta = a / sqrt(s) = {delta} must be below 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for CovarianceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovarianceModel::NullIdentity { sigma2 } => write!(f, "null(sigma2={sigma2})"),
            CovarianceModel::BlockSpiked { s, a } => write!(f, "spiked(s={s},a={a})"),
        }
    }
}

/// Distribution family of the innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Multivariate normal.
    Normal,
    /// Multivariate t with 3 degrees of freedom, rescaled to covariance Σ.
    StudentT3,
    /// `0.8 N(0, Σ) + 0.2 N(0, 9Σ)`, rescaled by `1/sqrt(2.6)`.
    MixtureNormal,
    /// `Σ^{1/2} Z` with i.i.d. centred Gamma(4, rate 2) entries.
    IndependentComponentGamma,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Normal,
        Family::StudentT3,
        Family::MixtureNormal,
        Family::IndependentComponentGamma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::StudentT3 => "t3",
            Family::MixtureNormal => "mixture",
            Family::IndependentComponentGamma => "gamma-ic",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "i" => Ok(Family::Normal),
            "t3" | "t" | "student-t3" | "ii" => Ok(Family::StudentT3),
            "mixture" | "mixture-normal" | "iii" => Ok(Family::MixtureNormal),
            "gamma-ic" | "gamma" | "independent-component" | "iv" => {
                Ok(Family::IndependentComponentGamma)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown family '{other}' (expected normal, t3, mixture or gamma-ic)"
            ))),
        }
    }
}

/// Everything needed to reproduce one synthetic dataset per replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub cov: CovarianceModel,
    pub master_seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be >= 2, got {}", self.n)));
        }
        if self.p < 2 {
            return Err(Error::InvalidConfig(format!("p must be >= 2, got {}", self.p)));
        }
        self.cov.validate(self.p)
    }
}

/// Top-left `s × s` block `(1-δ) I + δ 11ᵀ`.
fn spiked_block(s: usize, delta: f64) -> SquareMatrix<f64> {
    let mut m = SquareMatrix::zeros(s);
    for i in 0..s {
        for j in 0..s {
            m.set(i, j, if i == j { 1.0 } else { delta });
        }
    }
    m
}

/// Exact population covariance for `cov` in dimension `p`.
pub fn make_sigma(cov: &CovarianceModel, p: usize) -> Result<SquareMatrix<f64>> {
    if p < 2 {
        return Err(Error::InvalidConfig(format!("p must be >= 2, got {p}")));
    }
    cov.validate(p)?;
    match *cov {
        CovarianceModel::NullIdentity { sigma2 } => Ok(SquareMatrix::identity(p).scaled(sigma2)),
        CovarianceModel::BlockSpiked { s, .. } => {
            let delta = cov.delta();
            let mut m = SquareMatrix::identity(p);
            for i in 0..s {
                for j in 0..s {
                    if i != j {
                        m.set(i, j, delta);
                    }
                }
            }
            Ok(m)
        }
    }
}

/// Symmetric square root of a symmetric positive semi-definite matrix.
///
/// Eigenvalues down to `-1e-10 · λ_max` are treated as rounding noise and
/// clamped to zero; anything more negative is rejected.
pub fn sqrt_psd(m: &SquareMatrix<f64>) -> Result<SquareMatrix<f64>> {
    let d = m.dim();
    if d == 0 {
        return Ok(SquareMatrix::zeros(0));
    }
    let scale = m.max_abs();
    if !scale.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    if m.asymmetry() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, m.values()));
    let lmax = eig.eigenvalues.max();
    let floor = -1e-10 * lmax.abs();
    let mut roots = Vec::with_capacity(d);
    for &l in eig.eigenvalues.iter() {
        if l < floor {
            return Err(Error::InvalidInput(format!(
                "matrix is not positive semi-definite (eigenvalue {l:e})"
            )));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let q = &eig.eigenvectors;
    let mut out = SquareMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            let v: f64 = (0..d).map(|k| q[(i, k)] * roots[k] * q[(j, k)]).sum();
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    // SplitMix64 finalizer, a bijection on u64.
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `rep_index` under `master_seed`.
///
/// `mix64(mix64(master) + φ·(rep + 1))` with φ the 64-bit golden-ratio
/// constant. For a fixed master seed the map is a bijection in `rep_index`,
/// so distinct replications never share a stream.
pub fn derive_rep_seed(master_seed: u64, rep_index: u64) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    mix64(mix64(master_seed).wrapping_add(GOLDEN.wrapping_mul(rep_index.wrapping_add(1))))
}

/// Draws datasets for one scenario; the covariance root is factored once.
///
/// `Σ^{1/2}` is block diagonal for every [`CovarianceModel`], so only the
/// leading block is stored densely and the identity tail is a scalar.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: ScenarioSpec,
    block: usize,
    block_root: Vec<f64>,
    tail_scale: f64,
}

impl Sampler {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let (block, block_root, tail_scale) = match spec.cov {
            CovarianceModel::NullIdentity { sigma2 } => (0, Vec::new(), sigma2.sqrt()),
            CovarianceModel::BlockSpiked { s, .. } => {
                let root = sqrt_psd(&spiked_block(s, spec.cov.delta()))?;
                (s, root.values().to_vec(), 1.0)
            }
        };
        Ok(Self {
            spec,
            block,
            block_root,
            tail_scale,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    /// Dataset for replication `rep_index`.
    pub fn sample(&self, rep_index: u64) -> DataMatrix<f64> {
        let ScenarioSpec { family, n, p, .. } = self.spec;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_rep_seed(self.spec.master_seed, rep_index));
        let chi2 = ChiSquared::new(T_DOF).expect("valid dof");
        let gamma = Gamma::new(GAMMA_SHAPE, 1.0 / GAMMA_RATE).expect("valid gamma");
        let gamma_mean = GAMMA_SHAPE / GAMMA_RATE;
        let mixture_norm =
            (MIXTURE_WEIGHT + MIXTURE_VARIANCE_RATIO * (1.0 - MIXTURE_WEIGHT)).sqrt();
        let wide = MIXTURE_VARIANCE_RATIO.sqrt();

        let mut values = vec![0.0; n * p];
        let mut z = vec![0.0; p];
        for row in values.chunks_exact_mut(p) {
            let radial = match family {
                Family::Normal => {
                    fill_normal(&mut rng, &mut z);
                    1.0
                }
                Family::StudentT3 => {
                    // G / sqrt(W/3) has covariance 3 I; the extra 1/sqrt(3)
                    // brings it back to I.
                    let w: f64 = chi2.sample(&mut rng);
                    fill_normal(&mut rng, &mut z);
                    1.0 / w.sqrt()
                }
                Family::MixtureNormal => {
                    let u: f64 = rng.random();
                    fill_normal(&mut rng, &mut z);
                    let scale = if u < MIXTURE_WEIGHT { 1.0 } else { wide };
                    scale / mixture_norm
                }
                Family::IndependentComponentGamma => {
                    for zj in z.iter_mut() {
                        *zj = gamma.sample(&mut rng) - gamma_mean;
                    }
                    1.0
                }
            };
            self.apply_root(&z, row);
            if radial != 1.0 {
                for x in row.iter_mut() {
                    *x *= radial;
                }
            }
        }
        DataMatrix::new(n, p, values).expect("generated data is finite")
    }

    fn apply_root(&self, z: &[f64], out: &mut [f64]) {
        let b = self.block;
        for i in 0..b {
            let r = &self.block_root[i * b..(i + 1) * b];
            out[i] = r.iter().zip(&z[..b]).map(|(a, c)| a * c).sum();
        }
        for (o, &zi) in out[b..].iter_mut().zip(&z[b..]) {
            *o = self.tail_scale * zi;
        }
    }
}

fn fill_normal<R: Rng>(rng: &mut R, z: &mut [f64]) {
    for zj in z.iter_mut() {
        *zj = rng.sample(StandardNormal);
    }
}

/// One dataset for `(spec, rep_index)`. Prefer [`Sampler`] when drawing many
/// replications of the same scenario.
pub fn sample_scenario(spec: &ScenarioSpec, rep_index: u64) -> Result<DataMatrix<f64>> {
    Ok(Sampler::new(*spec)?.sample(rep_index))
}
