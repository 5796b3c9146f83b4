//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 6 7`.

mod oracle;

use std::process::{Command, ExitCode};
use std::time::Instant;

use sphericity::distributions::{cauchy_combine, gumbel_cdf, gumbel_quantile, gumbel_sf, normal_sf};
use sphericity::estimators::{sign_summary_at, spatial_median_with, WeiszfeldOptions};
use sphericity::procedures::{sign_sum_variance, sm_statistic, ss_statistic};
use sphericity::simulation::{
    estimate_size, independence_diagnostic, power_curve_sparsity, Campaign, SimulationReport, TestPair,
};
use sphericity::{
    evaluate, moment_summary, sample_scenario, sign_summary, spatial_median, CovarianceModel, DataMatrix,
    Family, ScenarioSpec, TestName,
};

const SEED: u64 = 2025;

type Verdict = Result<String, String>;

fn pp(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn sizes(family: Family, n: usize, p: usize, reps: usize) -> SimulationReport {
    let mut c = Campaign::new(family, n, p, SEED);
    c.reps = reps;
    estimate_size(&c).expect("size campaign runs")
}

fn rate(r: &SimulationReport, t: TestName) -> f64 {
    r.rate(t, 0).expect("test present")
}

fn criterion_1() -> Verdict {
    let r = sizes(Family::Normal, 300, 100, 1000);
    let target = [
        (TestName::SS, 0.059),
        (TestName::SM, 0.065),
        (TestName::CS, 0.065),
        (TestName::NS, 0.063),
        (TestName::NM, 0.042),
        (TestName::CN, 0.060),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (t, want) in target {
        let got = rate(&r, t);
        ok &= (got - want).abs() <= 0.020 + 1e-12;
        parts.push(format!("{t} {} (target {})", pp(got), pp(want)));
    }
    let msg = parts.join(", ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_2() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for family in [Family::StudentT3, Family::MixtureNormal] {
        let r = sizes(family, 300, 100, 200);
        for t in [TestName::NS, TestName::NM, TestName::CN] {
            let got = rate(&r, t);
            ok &= got >= 0.99;
            parts.push(format!("{} {t} {}", family.name(), pp(got)));
        }
        for t in [TestName::SS, TestName::SM, TestName::CS] {
            let got = rate(&r, t);
            ok &= (0.03..=0.08).contains(&got);
            parts.push(format!("{} {t} {}", family.name(), pp(got)));
        }
    }
    let msg = parts.join(", ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_3() -> Verdict {
    let r = sizes(Family::IndependentComponentGamma, 300, 100, 1000);
    let (sm, ns, ss) = (rate(&r, TestName::SM), rate(&r, TestName::NS), rate(&r, TestName::SS));
    let ok = (sm - 0.155).abs() <= 0.030 + 1e-12
        && (0.03..=0.08).contains(&ns)
        && (0.03..=0.08).contains(&ss);
    let msg = format!("SM {} (target 15.5%), NS {}, SS {}", pp(sm), pp(ns), pp(ss));
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_4() -> Verdict {
    let mut c = Campaign::new(Family::Normal, 100, 200, SEED);
    c.reps = 500;
    let grid = [2, 10, 30];
    let r = power_curve_sparsity(&c, &grid).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, &s) in grid.iter().enumerate() {
        let [ns, nm, cn, ss, sm, cs] =
            [TestName::NS, TestName::NM, TestName::CN, TestName::SS, TestName::SM, TestName::CS]
                .map(|t| r.rate(t, g).expect("present"));
        if s == 2 {
            ok &= nm - ns >= 0.05 && sm - ss >= 0.05;
        }
        if s == 30 {
            ok &= ns - nm >= 0.05 && ss - sm >= 0.05;
        }
        ok &= cn >= ns.max(nm) - 0.05 && cs >= ss.max(sm) - 0.05;
        parts.push(format!(
            "s={s}: NS {} NM {} CN {} SS {} SM {} CS {}",
            pp(ns),
            pp(nm),
            pp(cn),
            pp(ss),
            pp(sm),
            pp(cs)
        ));
    }
    let msg = parts.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_5() -> Verdict {
    let mut c = Campaign::new(Family::Normal, 300, 300, SEED);
    c.reps = 2000;
    c.cov_grid.push(CovarianceModel::BlockSpiked { s: 5, a: 0.5 });
    let recs = independence_diagnostic(&c, &[TestPair::Covariance, TestPair::Sign]).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &recs {
        let gap = (r.joint_rate - r.product_rate).abs();
        let label = match r.pair {
            TestPair::Covariance => "NS/NM",
            TestPair::Sign => "SS/SM",
        };
        if r.cov.is_null() {
            ok &= r.correlation.abs() < 0.1 && gap < 0.015;
        } else {
            ok &= gap < 0.02;
        }
        parts.push(format!(
            "{} {label}: corr {:.3}, joint {} vs product {}",
            if r.cov.is_null() { "null" } else { "spiked" },
            r.correlation,
            pp(r.joint_rate),
            pp(r.product_rate)
        ));
    }
    let msg = parts.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn rows_of(m: &DataMatrix<f64>) -> oracle::Rows {
    m.rows().map(<[f64]>::to_vec).collect()
}

fn fixtures() -> Vec<(String, DataMatrix<f64>)> {
    let mut out = Vec::new();
    let draws = [
        (Family::Normal, 12, 6, CovarianceModel::null()),
        (Family::Normal, 8, 3, CovarianceModel::null()),
        (Family::Normal, 5, 6, CovarianceModel::null()),
        (Family::StudentT3, 12, 4, CovarianceModel::null()),
        (Family::StudentT3, 7, 5, CovarianceModel::null()),
        (Family::MixtureNormal, 10, 6, CovarianceModel::null()),
        (Family::MixtureNormal, 6, 2, CovarianceModel::null()),
        (Family::IndependentComponentGamma, 12, 5, CovarianceModel::null()),
        (Family::IndependentComponentGamma, 9, 3, CovarianceModel::null()),
        (Family::Normal, 12, 6, CovarianceModel::BlockSpiked { s: 3, a: 1.2 }),
        (Family::StudentT3, 11, 4, CovarianceModel::BlockSpiked { s: 2, a: 0.9 }),
        (Family::Normal, 3, 6, CovarianceModel::null()),
    ];
    for (i, (family, n, p, cov)) in draws.into_iter().enumerate() {
        let spec = ScenarioSpec { family, n, p, cov, master_seed: SEED };
        out.push((format!("{} n={n} p={p} {cov}", family.name()), sample_scenario(&spec, i as u64).unwrap()));
    }
    let m = |rows: &[&[f64]]| DataMatrix::from_rows(rows).unwrap();
    out.push((
        "integers".into(),
        m(&[&[1.0, 2.0, 0.0], &[3.0, -1.0, 2.0], &[0.0, 0.0, 5.0], &[2.0, 4.0, -3.0], &[-2.0, 1.0, 1.0]]),
    ));
    out.push((
        "constant column".into(),
        m(&[&[1.0, 7.0, 0.3], &[2.0, 7.0, -1.1], &[0.5, 7.0, 2.0], &[-1.0, 7.0, 0.0], &[3.0, 7.0, 1.5], &[0.0, 7.0, -0.7]]),
    ));
    out.push((
        "near-constant column".into(),
        m(&[
            &[1.0, 5.0 + 1e-7, 0.3],
            &[2.0, 5.0 - 2e-7, -1.1],
            &[0.5, 5.0, 2.0],
            &[-1.0, 5.0 + 3e-7, 0.0],
            &[3.0, 5.0 - 1e-7, 1.5],
            &[0.0, 5.0 + 2e-7, -0.7],
        ]),
    ));
    out.push((
        "two-valued column".into(),
        m(&[
            &[1.0, 0.2, 1.0],
            &[-1.0, 1.3, 0.4],
            &[1.0, -0.8, -2.0],
            &[-1.0, 0.1, 0.9],
            &[1.0, 2.2, -0.3],
            &[-1.0, -1.0, 0.0],
            &[1.0, 0.5, 1.1],
            &[-1.0, -0.4, 0.6],
        ]),
    ));
    out.push((
        "duplicated rows".into(),
        m(&[&[1.0, 2.0], &[1.0, 2.0], &[3.0, 0.5], &[-1.0, 1.0], &[0.0, -2.0], &[3.0, 0.5], &[2.0, 2.5]]),
    ));
    out.push((
        "median on a data point".into(),
        m(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[-1.0, 0.2, 0.0], &[0.0, 1.0, 0.0], &[0.1, -1.0, 0.3], &[0.0, 0.0, 1.0], &[0.0, 0.3, -1.0]]),
    ));
    out.push((
        "optimality boundary".into(),
        m(&[&[2.0, 5.0], &[3.0, 6.0], &[4.0, 7.0], &[5.0, 1.0]]),
    ));
    out.push((
        "mixed column scales".into(),
        m(&[&[1e4, 1e-3, 1.0], &[-2e4, 3e-3, 0.5], &[5e3, -2e-3, -1.0], &[0.0, 1e-3, 2.0], &[1.5e4, 0.0, -0.5]]),
    ));
    out.push((
        "nearly collinear".into(),
        m(&[
            &[1.0, 2.0 + 1e-6, 3.0],
            &[2.0, 4.0, 6.0 - 2e-6],
            &[3.0, 6.0 - 1e-6, 9.0],
            &[4.0, 8.0 + 3e-6, 12.0],
            &[5.0, 10.0, 15.0 + 1e-6],
        ]),
    ));
    out.push((
        "shifted far from the origin".into(),
        m(&[&[1e3 + 0.5, 1e3 - 0.2], &[1e3 - 1.0, 1e3 + 0.7], &[1e3 + 0.1, 1e3 + 0.1], &[1e3 + 0.9, 1e3 - 1.3], &[1e3 - 0.4, 1e3 + 0.2]]),
    ));
    out
}

fn rel(got: f64, want: f64) -> f64 {
    if got == want {
        return 0.0;
    }
    (got - want).abs() / want.abs()
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let set = fixtures();
    let mut worst = (0.0f64, String::new());
    let mut failures = Vec::new();
    let mut compared = 0usize;
    let mut check = |label: &str, got: f64, want: f64, worst: &mut (f64, String)| {
        let e = rel(got, want);
        compared += 1;
        if e > worst.0 || e.is_nan() {
            *worst = (e, label.to_string());
        }
        e <= 1e-10
    };
    for (name, data) in &set {
        let x = rows_of(data);
        let lib = evaluate(data, &[TestName::NS, TestName::NM, TestName::CN]);
        match (oracle::covariance_tests(&x), lib.iter().all(Result::is_ok)) {
            (Some((ns, nm, cn)), true) => {
                for (o, l) in [ns, nm, cn].iter().zip(&lib) {
                    let l = l.as_ref().unwrap();
                    let tag = format!("{name} {}", l.name);
                    let a = check(&format!("{tag} statistic"), l.statistic, o.statistic, &mut worst);
                    let b = check(&format!("{tag} p-value"), l.p_value, o.p_value, &mut worst);
                    if !(a && b) {
                        failures.push(tag);
                    }
                }
            }
            (None, false) => {}
            (o, _) => failures.push(format!("{name}: degeneracy disagreement (oracle ok = {})", o.is_some())),
        }

        let theta = oracle::spatial_median(&x);
        let lib_theta = spatial_median(data).map_err(|e| format!("{name}: {e}"))?;
        let scale = x.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let gap = lib_theta.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > 1e-6 * scale.max(1.0) {
            failures.push(format!("{name}: spatial median differs by {gap:e}"));
        }
        let (ss, sm, cs) = oracle::sign_tests_at(&x, &theta);
        let summary = sign_summary_at(data, theta.clone()).map_err(|e| e.to_string())?;
        let (lss, lsm) = (ss_statistic(&summary), sm_statistic(&summary));
        let (pss, psm) = (normal_sf(lss), gumbel_sf(lsm));
        let pcs = cauchy_combine(pss, psm).unwrap();
        for (tag, got, want) in [
            ("SS statistic", lss, ss.statistic),
            ("SS p-value", pss, ss.p_value),
            ("SM statistic", lsm, sm.statistic),
            ("SM p-value", psm, sm.p_value),
            ("CS p-value", pcs, cs.p_value),
        ] {
            if !check(&format!("{name} {tag}"), got, want, &mut worst) {
                failures.push(format!("{name} {tag}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let msg = format!(
        "{} fixtures, {compared} values, worst relative error {:.2e} ({}), {elapsed:.3}s",
        set.len(),
        worst.0,
        worst.1
    );
    if set.len() >= 20 && failures.is_empty() && elapsed <= 1.0 {
        Ok(msg)
    } else {
        Err(format!("{msg}; failures: {}", failures.join(", ")))
    }
}

fn criterion_7() -> Verdict {
    let mut worst: f64 = 0.0;
    for alpha in [0.01, 0.05, 0.1] {
        let q: f64 = gumbel_quantile(alpha).unwrap();
        worst = worst.max((gumbel_cdf(q) - (1.0 - alpha)).abs());
    }
    let half: f64 = cauchy_combine(0.5, 0.5).unwrap();
    let var = sign_sum_variance::<f64>(10, 5);
    let var_err = (var - 16.0 / 630.0).abs();
    let msg = format!(
        "max |G(q_a) - (1-a)| = {worst:.1e}, cauchy(0.5, 0.5) = {half}, |sigma_S^2(10,5) - 16/630| = {var_err:.1e}"
    );
    if worst <= 1e-12 && half == 0.5 && var_err <= 1e-15 { Ok(msg) } else { Err(msg) }
}

/// Rotation built from Givens rotations in every coordinate plane.
fn rotation(p: usize, seed: f64) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| (i == j) as u8 as f64).collect()).collect();
    let mut angle = seed;
    for i in 0..p {
        for j in (i + 1)..p {
            angle = (angle * 7.31 + 0.57).rem_euclid(std::f64::consts::TAU);
            let (s, c) = angle.sin_cos();
            for row in q.iter_mut() {
                let (a, b) = (row[i], row[j]);
                row[i] = c * a - s * b;
                row[j] = s * a + c * b;
            }
        }
    }
    q
}

fn criterion_8() -> Verdict {
    let opts = WeiszfeldOptions::default();
    let mut equi: f64 = 0.0;
    let mut trace_err: f64 = 0.0;
    for (k, family) in Family::ALL.into_iter().enumerate() {
        for p in [2, 5, 12] {
            let spec = ScenarioSpec { family, n: 60, p, cov: CovarianceModel::null(), master_seed: SEED };
            let data = sample_scenario(&spec, k as u64).unwrap();
            let q = rotation(p, 0.3 + k as f64);
            let shift: Vec<f64> = (0..p).map(|j| 3.0 - 0.7 * j as f64).collect();
            let moved: Vec<Vec<f64>> = data
                .rows()
                .map(|r| (0..p).map(|a| (0..p).map(|b| q[a][b] * r[b]).sum::<f64>() + shift[a]).collect())
                .collect();
            let moved_refs: Vec<&[f64]> = moved.iter().map(Vec::as_slice).collect();
            let moved = DataMatrix::from_rows(&moved_refs).unwrap();
            let t0 = spatial_median_with(&data, &opts).map_err(|e| e.to_string())?.point;
            let t1 = spatial_median_with(&moved, &opts).map_err(|e| e.to_string())?.point;
            for a in 0..p {
                let want = (0..p).map(|b| q[a][b] * t0[b]).sum::<f64>() + shift[a];
                equi = equi.max((t1[a] - want).abs());
            }
            let s = sign_summary(&data).map_err(|e| e.to_string())?;
            let expect = s.nonzero_rows as f64 / data.n() as f64;
            trace_err = trace_err.max((s.omega_hat.trace() - expect).abs());
        }
    }

    let spec = ScenarioSpec {
        family: Family::Normal,
        n: 200_000,
        p: 4,
        cov: CovarianceModel::null(),
        master_seed: SEED,
    };
    let m = moment_summary(&sample_scenario(&spec, 0).unwrap()).map_err(|e| e.to_string())?;
    let kappa_dev = m.kappa_hat.iter().map(|k| (k - 2.0).abs()).fold(0.0, f64::max);
    let msg = format!(
        "equivariance error {equi:.1e}, trace error {trace_err:.1e}, beta_hat {:.4}, max |kappa_hat - 2| {kappa_dev:.4}",
        m.beta_hat
    );
    if equi <= 1e-6 && trace_err <= 1e-12 && m.beta_hat.abs() <= 0.05 && kappa_dev <= 0.05 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_9() -> Verdict {
    let dir = std::env::temp_dir().join(format!("sphericity-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "family = t3\nn = 40, 80\np = 30\ns_grid = 2, 10\ns = 2, 10\na_grid = 0:1:0.5\nalt_s = 5\nalt_a = 0.5\n")
        .map_err(|e| e.to_string())?;
    let mut checked = 0;
    for cmd in ["size", "power-sparsity", "power-strength", "independence"] {
        for format in ["csv", "json"] {
            let mut outs = Vec::new();
            for threads in ["1", "2", "4"] {
                let out = Command::new(env!("CARGO_BIN_EXE_sphericity"))
                    .args([cmd, "--reps", "30", "--seed", "17", "--format", format, "--config"])
                    .arg(&cfg)
                    .env("SPHERICITY_THREADS", threads)
                    .output()
                    .map_err(|e| e.to_string())?;
                if !out.status.success() {
                    return Err(format!("{cmd} failed: {}", String::from_utf8_lossy(&out.stderr)));
                }
                outs.push(out.stdout);
            }
            if outs.iter().any(|o| o != &outs[0]) {
                return Err(format!("{cmd} ({format}) output changes with the thread count"));
            }
            checked += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{checked} command/format combinations identical at 1, 2 and 4 threads"))
}

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Verdict); 9] = [
        (1, "normal sizes", criterion_1),
        (2, "heavy-tail distortion", criterion_2),
        (3, "independent-component sizes", criterion_3),
        (4, "power ordering", criterion_4),
        (5, "sum/max independence", criterion_5),
        (6, "oracle equivalence", criterion_6),
        (7, "closed-form identities", criterion_7),
        (8, "estimator properties", criterion_8),
        (9, "thread-count determinism", criterion_9),
    ];
    let mut failed = 0;
    for (id, title, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(msg) => println!("PASS criterion {id} ({title}) [{secs:.1}s]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id} ({title}) [{secs:.1}s]: {msg}");
            }
        }
    }
    if failed > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS }
}
