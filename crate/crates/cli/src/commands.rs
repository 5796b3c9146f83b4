//! Subcommand drivers.

use std::fs::File;
use std::io::{BufWriter, Write};

use sphericity::simulation::{
    self, independence_diagnostic, power_curve_sparsity, power_curve_strength, Campaign,
    SimulationReport, TestPair,
};
use sphericity::{evaluate, gumbel_quantile, CovarianceModel, Sampler, ScenarioSpec};

use crate::config::{Command, ModelKind, RunConfig};
use crate::csv_io::{read_matrix_file, write_matrix};
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Table};

const RATE_COLUMNS: [&str; 14] = [
    "test",
    "family",
    "n",
    "p",
    "model",
    "sigma2",
    "s",
    "a",
    "delta",
    "grid_value",
    "reps",
    "rejections",
    "rejection_rate",
    "mc_se",
];

const INDEPENDENCE_COLUMNS: [&str; 16] = [
    "pair",
    "family",
    "n",
    "p",
    "model",
    "sigma2",
    "s",
    "a",
    "delta",
    "reps",
    "correlation",
    "sum_rate",
    "max_rate",
    "joint_rate",
    "product_rate",
    "either_rate",
];

fn cov_cells(cov: &CovarianceModel) -> [Cell; 4] {
    match *cov {
        CovarianceModel::NullIdentity { sigma2 } => {
            ["null".into(), sigma2.into(), Cell::Empty, Cell::Empty]
        }
        CovarianceModel::BlockSpiked { s, a } => ["spiked".into(), Cell::Empty, s.into(), a.into()],
    }
}

/// Runs the requested tests on a CSV dataset.
pub fn run_test_command(cfg: &RunConfig) -> CliResult<Table> {
    let path = cfg
        .input_path
        .as_ref()
        .ok_or_else(|| CliError::Config("input: missing".into()))?;
    let data = read_matrix_file(path)?;
    let mut settings = cfg.settings();
    settings.insert("n_observed", data.n().to_string());
    settings.insert("p_observed", data.p().to_string());
    let mut table = Table::new(
        Command::Test,
        settings,
        vec!["test", "statistic", "p_value", "alpha", "reject", "critical_value", "note"],
    );
    let mut failures = Vec::new();
    for (test, outcome) in cfg.tests.iter().zip(evaluate(&data, &cfg.tests)) {
        match outcome {
            Ok(o) => {
                let critical = if test.is_max_type() {
                    Some(gumbel_quantile(cfg.alpha)?)
                } else {
                    None
                };
                let note = (!o.kappa_clamped.is_empty()).then(|| {
                    let cols: Vec<String> =
                        o.kappa_clamped.iter().map(|c| (c + 1).to_string()).collect();
                    format!("kappa floored in column(s) {}", cols.join(" "))
                });
                table.push(vec![
                    test.as_str().into(),
                    o.statistic.into(),
                    o.p_value.into(),
                    cfg.alpha.into(),
                    o.reject(cfg.alpha).into(),
                    critical.into(),
                    note.into(),
                ]);
            }
            Err(e) if e.is_degenerate() => failures.push(format!("{test}: {e}")),
            Err(e) => return Err(e.into()),
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Degenerate(failures.join("; ")));
    }
    Ok(table)
}

fn campaign_for(cfg: &RunConfig, n: usize, p: usize) -> Campaign {
    let mut c = Campaign::new(cfg.family, n, p, cfg.seed);
    c.reps = cfg.reps;
    c.alpha = cfg.alpha;
    c.tests = cfg.tests.clone();
    c
}

fn push_rates(table: &mut Table, report: &SimulationReport) {
    let c = &report.campaign;
    for row in &report.rows {
        let [model, sigma2, s, a] = cov_cells(&row.cov);
        table.push(vec![
            row.test.as_str().into(),
            c.family.name().into(),
            c.n.into(),
            c.p.into(),
            model,
            sigma2,
            s,
            a,
            row.cov.delta().into(),
            row.grid_value.into(),
            row.reps.into(),
            row.rejections.into(),
            row.rejection_rate.into(),
            row.mc_standard_error.into(),
        ]);
    }
}

fn field_error(field: &str) -> impl Fn(sphericity::Error) -> CliError + '_ {
    move |e| match e {
        sphericity::Error::InvalidConfig(m) => CliError::Config(format!("{field}: {m}")),
        other => other.into(),
    }
}

/// Runs a simulation command over every `(n, p)` cell of the configuration.
pub fn run_simulation_command(cfg: &RunConfig) -> CliResult<Table> {
    let columns = match cfg.command {
        Command::Independence => INDEPENDENCE_COLUMNS.to_vec(),
        Command::Size | Command::PowerSparsity | Command::PowerStrength => RATE_COLUMNS.to_vec(),
        other => {
            return Err(CliError::Config(format!("{other} is not a simulation command")));
        }
    };
    let mut table = Table::new(cfg.command, cfg.settings(), columns);
    for &n in &cfg.n {
        for &p in &cfg.p {
            let mut campaign = campaign_for(cfg, n, p);
            match cfg.command {
                Command::Size => {
                    campaign.cov_grid = vec![CovarianceModel::NullIdentity { sigma2: cfg.sigma2 }];
                    let report = simulation::estimate_size(&campaign).map_err(field_error("sigma2"))?;
                    push_rates(&mut table, &report);
                }
                Command::PowerSparsity => {
                    let report = power_curve_sparsity(&campaign, &cfg.s_grid)
                        .map_err(field_error("s_grid"))?;
                    push_rates(&mut table, &report);
                }
                Command::PowerStrength => {
                    for &s in &cfg.s {
                        let report = power_curve_strength(&campaign, s, &cfg.a_grid)
                            .map_err(field_error("s, a_grid"))?;
                        push_rates(&mut table, &report);
                    }
                }
                Command::Independence => {
                    if let (Some(s), Some(a)) = (cfg.alt_s, cfg.alt_a) {
                        campaign.cov_grid.push(CovarianceModel::BlockSpiked { s, a });
                    }
                    let records = independence_diagnostic(&campaign, &cfg.pairs)
                        .map_err(field_error("alt_s, alt_a"))?;
                    for r in records {
                        let [model, sigma2, s, a] = cov_cells(&r.cov);
                        table.push(vec![
                            match r.pair {
                                TestPair::Covariance => "NS-NM",
                                TestPair::Sign => "SS-SM",
                            }
                            .into(),
                            cfg.family.name().into(),
                            n.into(),
                            p.into(),
                            model,
                            sigma2,
                            s,
                            a,
                            r.cov.delta().into(),
                            r.reps.into(),
                            r.correlation.into(),
                            r.sum_rate.into(),
                            r.max_rate.into(),
                            r.joint_rate.into(),
                            r.product_rate.into(),
                            r.either_rate.into(),
                        ]);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(table)
}

/// Draws one synthetic dataset.
pub fn run_generate(cfg: &RunConfig) -> CliResult<sphericity::DataMatrix<f64>> {
    let cov = match cfg.model {
        ModelKind::Null => CovarianceModel::NullIdentity { sigma2: cfg.sigma2 },
        ModelKind::Spiked => CovarianceModel::BlockSpiked { s: cfg.s[0], a: cfg.a },
    };
    let spec = ScenarioSpec {
        family: cfg.family,
        n: cfg.n[0],
        p: cfg.p[0],
        cov,
        master_seed: cfg.seed,
    };
    Ok(Sampler::new(spec).map_err(field_error("model"))?.sample(cfg.rep))
}

fn open_output(cfg: &RunConfig) -> CliResult<Box<dyn Write>> {
    Ok(match &cfg.output_path {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Io(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Validates, runs and writes the result of one command.
pub fn execute(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    match cfg.command {
        Command::Generate => {
            let data = run_generate(cfg)?;
            write_matrix(open_output(cfg)?, &data)?;
        }
        Command::Test => {
            let table = run_test_command(cfg)?;
            table.write(open_output(cfg)?, cfg.format)?;
        }
        _ => {
            let table = run_simulation_command(cfg)?;
            table.write(open_output(cfg)?, cfg.format)?;
        }
    }
    Ok(())
}
