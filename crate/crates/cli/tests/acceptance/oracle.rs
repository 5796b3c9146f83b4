//! Direct loop implementations of the six statistics, written without the
//! library's summaries, shortcuts or shared code paths.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy)]
pub struct Stat {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / 2f64.sqrt())
}

pub fn gumbel_sf(x: f64) -> f64 {
    -libm::expm1(-(-x / 2.0).exp() / PI.sqrt())
}

pub fn cauchy(p1: f64, p2: f64) -> f64 {
    if p1 == 0.0 || p2 == 0.0 {
        return 0.0;
    }
    // tan((1/2 - p)π) = cos(pπ) / sin(pπ)
    let term = |p: f64| if p < 0.5 { 0.5 * (p * PI).cos() / (p * PI).sin() } else { 0.0 };
    let t = term(p1) + term(p2);
    // 1/2 - atan(t)/π, without the cancellation for large t
    1f64.atan2(t) / PI
}

fn offset(p: usize) -> f64 {
    let big_p = (p * (p + 1)) as f64 / 2.0;
    -2.0 * big_p.ln() + big_p.ln().ln()
}

fn mean(x: &Rows, k: usize) -> f64 {
    x.iter().map(|r| r[k]).sum::<f64>() / x.len() as f64
}

/// `None` when a column is constant.
pub fn covariance_tests(x: &Rows) -> Option<(Stat, Stat, Stat)> {
    let n = x.len();
    let p = x[0].len();
    let nf = n as f64;
    let pf = p as f64;
    let mu: Vec<f64> = (0..p).map(|k| mean(x, k)).collect();

    let mut s = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let mut acc = 0.0;
            for r in x {
                acc += (r[i] - mu[i]) * (r[j] - mu[j]);
            }
            s[i][j] = acc / (nf - 1.0);
        }
    }
    if (0..p).any(|k| x.iter().all(|r| r[k] == x[0][k])) {
        return None;
    }

    let mut tr = 0.0;
    for k in 0..p {
        tr += s[k][k];
    }
    let mut q = 0.0;
    for i in 0..p {
        for j in 0..p {
            let e = s[i][j] / tr - if i == j { 1.0 / pf } else { 0.0 };
            q += e * e;
        }
    }
    let q_j = nf * pf * pf / 2.0 * q;

    let var_n: Vec<f64> = (0..p).map(|k| s[k][k] * (nf - 1.0) / nf).collect();
    let m4: Vec<f64> = (0..p)
        .map(|k| x.iter().map(|r| (r[k] - mu[k]).powi(4)).sum::<f64>() / nf)
        .collect();
    let mut beta = 0.0;
    for k in 0..p {
        beta += m4[k] / (var_n[k] * var_n[k]);
    }
    beta = beta / pf - 3.0;
    let t_ns = (nf - 1.0) * q_j / (nf * pf) - (pf + beta + 1.0) / 2.0;

    let avg = var_n.iter().sum::<f64>() / pf;
    let mut best = f64::NEG_INFINITY;
    for k in 0..p {
        let s4 = var_n[k] * var_n[k];
        let kappa = (m4[k] - s4).max(1e-12 * s4);
        best = best.max(nf * (var_n[k] - avg).powi(2) / kappa);
    }
    for i in 0..p {
        for j in 0..p {
            if i < j {
                let c = s[i][j] * (nf - 1.0) / nf;
                best = best.max(nf * c * c / (var_n[i] * var_n[j]));
            }
        }
    }
    let t_nm = best + offset(p);

    let ns = Stat { statistic: t_ns, p_value: normal_sf(t_ns) };
    let nm = Stat { statistic: t_nm, p_value: gumbel_sf(t_nm) };
    let c = cauchy(ns.p_value, nm.p_value);
    Some((ns, nm, Stat { statistic: c, p_value: c }))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Spatial median: a data point if it satisfies the subgradient condition,
/// otherwise plain Weiszfeld run until the iterates stop moving.
pub fn spatial_median(x: &Rows) -> Vec<f64> {
    let p = x[0].len();
    for xk in x {
        let mut r = vec![0.0; p];
        let mut ties = 0.0;
        for xi in x {
            let d = diff(xi, xk);
            let dn = norm(&d);
            if dn == 0.0 {
                ties += 1.0;
                continue;
            }
            for a in 0..p {
                r[a] += d[a] / dn;
            }
        }
        if norm(&r) <= ties {
            return xk.clone();
        }
    }
    let mut y: Vec<f64> = (0..p).map(|k| mean(x, k)).collect();
    let scale = x.iter().map(|r| norm(&diff(r, &y))).fold(0.0, f64::max);
    for _ in 0..200_000 {
        let mut num = vec![0.0; p];
        let mut den = 0.0;
        for xi in x {
            let w = 1.0 / norm(&diff(xi, &y));
            den += w;
            for a in 0..p {
                num[a] += w * xi[a];
            }
        }
        let next: Vec<f64> = num.iter().map(|v| v / den).collect();
        let step = norm(&diff(&next, &y));
        y = next;
        if step <= 1e-15 * scale {
            break;
        }
    }
    y
}

/// Sign-based statistics about a given centre.
pub fn sign_tests_at(x: &Rows, theta: &[f64]) -> (Stat, Stat, Stat) {
    let n = x.len();
    let p = x[0].len();
    let nf = n as f64;
    let pf = p as f64;

    let mut u = Vec::with_capacity(n);
    let mut c = [0.0; 3];
    for xi in x {
        let d = diff(xi, theta);
        let r = norm(&d);
        if r == 0.0 {
            u.push(vec![0.0; p]);
            continue;
        }
        u.push(d.iter().map(|v| v / r).collect::<Vec<f64>>());
        for (k, ck) in c.iter_mut().enumerate() {
            *ck += r.powi(-(k as i32 + 1));
        }
    }
    for ck in c.iter_mut() {
        *ck /= nf;
    }

    let mut pair = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let ip: f64 = (0..p).map(|a| u[i][a] * u[j][a]).sum();
                pair += ip * ip;
            }
        }
    }
    let q = pf / (nf * (nf - 1.0)) * pair - 1.0;
    let [c1, c2, c3] = c;
    let r = c2 / (c1 * c1);
    let delta = (2.0 - 2.0 * r + r * r) / (nf * nf)
        + (8.0 * r - 6.0 * r * r + 2.0 * c2 * c3 / c1.powi(5) - 2.0 * c3 / c1.powi(3)) / nf.powi(3);
    let sigma2 = 4.0 * (pf - 1.0) / (nf * (nf - 1.0) * (pf + 2.0));
    let t_ss = (q - pf * delta) / sigma2.sqrt();

    let mut best = f64::NEG_INFINITY;
    for i in 0..p {
        for j in i..p {
            let psi: f64 = u.iter().map(|ui| ui[i] * ui[j]).sum::<f64>() / nf;
            let v = if i == j {
                nf * pf * (pf + 2.0) * (psi - 1.0 / pf).powi(2) / (2.0 * (1.0 - 1.0 / pf))
            } else {
                nf * pf * (pf + 2.0) * psi * psi
            };
            best = best.max(v);
        }
    }
    let t_sm = best + offset(p);

    let ss = Stat { statistic: t_ss, p_value: normal_sf(t_ss) };
    let sm = Stat { statistic: t_sm, p_value: gumbel_sf(t_sm) };
    let cs = cauchy(ss.p_value, sm.p_value);
    (ss, sm, Stat { statistic: cs, p_value: cs })
}
