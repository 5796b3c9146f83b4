//! Sample quantities consumed by the test statistics: column moments,
//! covariance matrices, the spatial median and the spatial-sign covariance.

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, SquareMatrix};
use crate::scalar::Real;

/// Relative floor applied to `κ̂_k` before it is used as a divisor.
pub const KAPPA_FLOOR: f64 = 1e-12;

/// Column moments and covariance estimates of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary<T> {
    /// Column means `X̄_k`.
    pub col_means: Vec<T>,
    /// `σ̂_k²` with the `1/n` denominator.
    pub sigma2_hat: Vec<T>,
    /// `κ̂_k = (1/n) Σ_i (X_ik - X̄_k)^4 - σ̂_k^4`, after the floor.
    pub kappa_hat: Vec<T>,
    /// Sample covariance with the `1/(n-1)` denominator.
    pub s: SquareMatrix<T>,
    /// Sample covariance with the `1/n` denominator.
    pub s_n: SquareMatrix<T>,
    /// Average standardized fourth moment minus 3.
    pub beta_hat: T,
    /// Columns whose `κ̂_k` was raised to the floor (0-based).
    pub kappa_clamped: Vec<usize>,
}

/// Accumulates the upper triangle of `Σ_i r_i r_iᵀ` over rows of length `p`.
///
/// Rows are consumed four at a time to cut passes over the accumulator.
/// The summation order is fixed, so results do not depend on the caller's
/// threading.
pub(crate) fn upper_gram<T: Real>(rows: &[T], p: usize) -> SquareMatrix<T> {
    let mut acc = vec![T::zero(); p * p];
    let mut chunks = rows.chunks_exact(4 * p);
    for block in &mut chunks {
        let (r0, rest) = block.split_at(p);
        let (r1, rest) = rest.split_at(p);
        let (r2, r3) = rest.split_at(p);
        for a in 0..p {
            let (x0, x1, x2, x3) = (r0[a], r1[a], r2[a], r3[a]);
            let out = &mut acc[a * p + a..a * p + p];
            for (k, o) in out.iter_mut().enumerate() {
                let b = a + k;
                *o = *o + (x0 * r0[b] + x1 * r1[b]) + (x2 * r2[b] + x3 * r3[b]);
            }
        }
    }
    for r in chunks.remainder().chunks_exact(p) {
        for a in 0..p {
            let x = r[a];
            let out = &mut acc[a * p + a..a * p + p];
            for (o, &y) in out.iter_mut().zip(&r[a..]) {
                *o = *o + x * y;
            }
        }
    }
    let mut m = SquareMatrix::from_row_major(p, acc).expect("p*p entries");
    m.symmetrize_from_upper();
    m
}

/// Column moments, both covariance scalings, `κ̂` and `β̂`.
///
/// Fails with [`Error::ZeroVariance`] if any column is constant.
pub fn moment_summary<T: Real>(data: &DataMatrix<T>) -> Result<MomentSummary<T>> {
    let (n, p) = (data.n(), data.p());
    let nf = T::from_usize_lossy(n);

    let mut col_means = vec![T::zero(); p];
    for row in data.rows() {
        for (m, &x) in col_means.iter_mut().zip(row) {
            *m = *m + x;
        }
    }
    for m in col_means.iter_mut() {
        *m = *m / nf;
    }

    let mut centered = Vec::with_capacity(n * p);
    let mut col_scale = vec![T::zero(); p];
    for row in data.rows() {
        for (k, (&x, &m)) in row.iter().zip(&col_means).enumerate() {
            centered.push(x - m);
            col_scale[k] = col_scale[k].max(x.abs());
        }
    }

    let s_n = upper_gram(&centered, p).scaled(nf.recip());
    let sigma2_hat = s_n.diagonal();

    let tiny = T::lit(16.0) * T::epsilon();
    for (k, (&v, &scale)) in sigma2_hat.iter().zip(&col_scale).enumerate() {
        let floor = tiny * scale;
        if !(v > floor * floor) {
            return Err(Error::ZeroVariance { column: k });
        }
    }

    let mut m4 = vec![T::zero(); p];
    for row in centered.chunks_exact(p) {
        for (acc, &c) in m4.iter_mut().zip(row) {
            let c2 = c * c;
            *acc = *acc + c2 * c2;
        }
    }
    for v in m4.iter_mut() {
        *v = *v / nf;
    }

    let floor = T::lit(KAPPA_FLOOR);
    let mut kappa_clamped = Vec::new();
    let kappa_hat = m4
        .iter()
        .zip(&sigma2_hat)
        .enumerate()
        .map(|(k, (&m, &s2))| {
            let s4 = s2 * s2;
            let kappa = m - s4;
            if kappa < floor * s4 {
                kappa_clamped.push(k);
                floor * s4
            } else {
                kappa
            }
        })
        .collect();

    let pf = T::from_usize_lossy(p);
    let beta_hat = m4
        .iter()
        .zip(&sigma2_hat)
        .map(|(&m, &s2)| m / (s2 * s2))
        .sum::<T>()
        / pf
        - T::lit(3.0);

    let s = s_n.scaled(nf / (nf - T::one()));

    Ok(MomentSummary {
        col_means,
        sigma2_hat,
        kappa_hat,
        s,
        s_n,
        beta_hat,
        kappa_clamped,
    })
}

/// `x / ‖x‖`, or the zero vector when `x = 0`.
pub fn spatial_sign<T: Real>(x: &[T]) -> Vec<T> {
    let norm = robust_norm(x);
    if norm == T::zero() {
        return vec![T::zero(); x.len()];
    }
    x.iter().map(|&v| v / norm).collect()
}

#[inline]
fn euclid_norm<T: Real>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Euclidean norm that survives under- and overflow of the squares.
fn robust_norm<T: Real>(x: &[T]) -> T {
    let plain = euclid_norm(x);
    if plain > T::zero() && plain.is_finite() {
        return plain;
    }
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    x.iter().map(|&v| (v / scale) * (v / scale)).sum::<T>().sqrt() * scale
}

#[inline]
fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// Controls for the Weiszfeld iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeiszfeldOptions {
    /// Bound on `‖Σ_i U(X_i - θ)‖ / n`, the objective gradient per sample.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Points closer than `coincidence · scale` count as sitting on the iterate.
    pub coincidence: f64,
}

impl Default for WeiszfeldOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 500,
            coincidence: 1e-12,
        }
    }
}

/// Result of a spatial-median computation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMedian<T> {
    pub point: Vec<T>,
    pub iterations: usize,
    /// Final relative gradient norm (subgradient-adjusted at a data point).
    pub gradient_norm: f64,
    /// Row the median landed on, if any.
    pub at_row: Option<usize>,
}

fn coordinatewise_median<T: Real>(data: &DataMatrix<T>) -> Vec<T> {
    let n = data.n();
    let mut col = Vec::with_capacity(n);
    (0..data.p())
        .map(|j| {
            col.clear();
            col.extend(data.rows().map(|r| r[j]));
            col.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
            if n % 2 == 1 {
                col[n / 2]
            } else {
                (col[n / 2 - 1] + col[n / 2]) / T::lit(2.0)
            }
        })
        .collect()
}

/// `θ̂ = argmin_θ Σ ‖X_i - θ‖` with default [`WeiszfeldOptions`].
pub fn spatial_median<T: Real>(data: &DataMatrix<T>) -> Result<Vec<T>> {
    spatial_median_with(data, &WeiszfeldOptions::default()).map(|m| m.point)
}

/// Weiszfeld iteration with the Vardi–Zhang step at data points.
///
/// Starts from the coordinate-wise median. When the iterate coincides with
/// `η` data points their weights are dropped and the step is damped by
/// `min(1, η / ‖R‖)`, `R` being the sum of unit vectors towards the other
/// points; `‖R‖ ≤ η` certifies the data point as the minimiser.
pub fn spatial_median_with<T: Real>(
    data: &DataMatrix<T>,
    opts: &WeiszfeldOptions,
) -> Result<SpatialMedian<T>> {
    let (n, p) = (data.n(), data.p());
    let nf = T::from_usize_lossy(n);
    let mut y = coordinatewise_median(data);

    let scale = data.rows().map(|r| dist(r, &y)).fold(T::zero(), T::max);
    if scale == T::zero() {
        return Err(Error::Degenerate("all observations are identical".into()));
    }
    let near = T::lit(opts.coincidence) * scale;
    let tol = T::lit(opts.tolerance).max(T::lit(64.0) * T::epsilon());

    let mut num = vec![T::zero(); p];
    let mut resid = vec![T::zero(); p];
    let mut gradient_norm = f64::INFINITY;
    for iter in 0..opts.max_iterations {
        num.iter_mut().for_each(|v| *v = T::zero());
        let mut den = T::zero();
        let mut coincident = 0usize;
        let mut hit = None;
        let mut nearest = (T::infinity(), 0usize);
        for (i, row) in data.rows().enumerate() {
            let d = dist(row, &y);
            if d < nearest.0 {
                nearest = (d, i);
            }
            if d < near {
                coincident += 1;
                hit = Some(i);
                continue;
            }
            let w = d.recip();
            den = den + w;
            for (acc, &x) in num.iter_mut().zip(row) {
                *acc = *acc + w * x;
            }
        }
        if den == T::zero() {
            // every point sits on y
            return Ok(SpatialMedian {
                point: y,
                iterations: iter,
                gradient_norm: 0.0,
                at_row: hit,
            });
        }
        for ((r, &a), &yk) in resid.iter_mut().zip(&num).zip(&y) {
            *r = a - yk * den;
        }
        let r_norm = euclid_norm(&resid);
        let eta = T::from_usize_lossy(coincident);
        let grad = (r_norm - eta).max(T::zero()) / nf;
        gradient_norm = grad.as_f64();
        if grad <= tol {
            let point = match hit {
                Some(i) if coincident > 0 => data.row(i).to_vec(),
                _ => y,
            };
            return Ok(SpatialMedian {
                point,
                iterations: iter,
                gradient_norm,
                at_row: if coincident > 0 { hit } else { None },
            });
        }
        // Weiszfeld crawls towards an optimum sitting on a data point, so
        // test the nearest row directly every few steps.
        if coincident == 0 && iter % 8 == 7 {
            let k = nearest.1;
            let g = data_point_gradient(data, k) / nf;
            if g <= tol {
                return Ok(SpatialMedian {
                    point: data.row(k).to_vec(),
                    iterations: iter + 1,
                    gradient_norm: g.as_f64(),
                    at_row: Some(k),
                });
            }
        }
        let keep = if coincident > 0 {
            (eta / r_norm).min(T::one())
        } else {
            T::zero()
        };
        for (yk, &a) in y.iter_mut().zip(&num) {
            *yk = (T::one() - keep) * (a / den) + keep * *yk;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        gradient_norm,
        last_iterate: y.iter().map(|v| v.as_f64()).collect(),
    })
}

/// `(‖Σ_{i≠k} U(X_i - X_k)‖ - m_k)_+` where `m_k` counts rows equal to row `k`.
fn data_point_gradient<T: Real>(data: &DataMatrix<T>, k: usize) -> T {
    let xk = data.row(k);
    let mut r = vec![T::zero(); data.p()];
    let mut m = T::zero();
    for row in data.rows() {
        let d = dist(row, xk);
        if d == T::zero() {
            m = m + T::one();
            continue;
        }
        for ((acc, &x), &c) in r.iter_mut().zip(row).zip(xk) {
            *acc = *acc + (x - c) / d;
        }
    }
    (euclid_norm(&r) - m).max(T::zero())
}

/// Spatial signs about the spatial median and the derived summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct SignSummary<T> {
    pub theta_hat: Vec<T>,
    /// Rows `Û_i = U(X_i - θ̂)`.
    pub signs: DataMatrix<T>,
    /// `Ω̂ = (1/n) Σ Û_i Û_iᵀ`, entries `ψ̂_ij`.
    pub omega_hat: SquareMatrix<T>,
    /// `ĉ_k = (1/n) Σ ‖X_i - θ̂‖^{-k}` for `k = 1, 2, 3`.
    pub c_hat: [T; 3],
    /// Rows with a nonzero sign.
    pub nonzero_rows: usize,
}

pub fn sign_summary<T: Real>(data: &DataMatrix<T>) -> Result<SignSummary<T>> {
    let theta = spatial_median(data)?;
    sign_summary_at(data, theta)
}

/// Sign summary about a given centre.
///
/// Rows equal to the centre get a zero sign and are left out of the `ĉ_k`
/// sums, whose denominator stays `n`.
pub fn sign_summary_at<T: Real>(data: &DataMatrix<T>, theta_hat: Vec<T>) -> Result<SignSummary<T>> {
    let (n, p) = (data.n(), data.p());
    if theta_hat.len() != p {
        return Err(Error::InvalidInput(format!(
            "centre has length {}, expected {p}",
            theta_hat.len()
        )));
    }
    let mut signs = Vec::with_capacity(n * p);
    let mut c = [T::zero(); 3];
    let mut nonzero_rows = 0;
    for row in data.rows() {
        let start = signs.len();
        signs.extend(row.iter().zip(&theta_hat).map(|(&x, &t)| x - t));
        let d = robust_norm(&signs[start..]);
        if d == T::zero() {
            continue;
        }
        nonzero_rows += 1;
        let inv = d.recip();
        for v in signs[start..].iter_mut() {
            *v = *v * inv;
        }
        c[0] = c[0] + inv;
        c[1] = c[1] + inv * inv;
        c[2] = c[2] + inv * inv * inv;
    }
    if nonzero_rows == 0 {
        return Err(Error::Degenerate(
            "every observation coincides with the spatial median".into(),
        ));
    }
    let nf = T::from_usize_lossy(n);
    let omega_hat = upper_gram(&signs, p).scaled(nf.recip());
    let c_hat = [c[0] / nf, c[1] / nf, c[2] / nf];
    Ok(SignSummary {
        theta_hat,
        signs: DataMatrix::new(n, p, signs)?,
        omega_hat,
        c_hat,
        nonzero_rows,
    })
}
