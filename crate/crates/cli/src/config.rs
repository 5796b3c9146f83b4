//! Run configuration: flat `key = value` files merged with command-line flags.
//!
//! Recognised keys (all optional, unknown keys are rejected):
//!
//! | key | used by | meaning |
//! |-----|---------|---------|
//! | `input` | test | CSV with one observation per row |
//! | `output` | all | result file (stdout when absent) |
//! | `format` | all | `csv` or `json` |
//! | `alpha` | all | significance level |
//! | `tests` | test, size, power-* | comma list of NS, NM, SS, SM, CN, CS or `all` |
//! | `family` | simulations | `normal`, `t3`, `mixture`, `gamma-ic` |
//! | `n`, `p` | simulations | sample sizes and dimensions; lists give a grid of cells |
//! | `seed` | simulations | master seed |
//! | `reps` | simulations | replications per configuration |
//! | `sigma2` | size, generate | null variance |
//! | `s_grid` | power-sparsity | block sizes swept at `a = 0.5` |
//! | `s` | power-strength, generate | block size(s) |
//! | `a_grid` | power-strength | signal strengths |
//! | `a` | generate | signal strength |
//! | `model` | generate | `null` or `spiked` |
//! | `rep` | generate | replication index |
//! | `pairs` | independence | `NS-NM`, `SS-SM` or both |
//! | `alt_s`, `alt_a` | independence | optional spiked alternative added to the null |
//!
//! Integer and real lists accept commas and inclusive ranges `start:stop:step`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sphericity::simulation::TestPair;
use sphericity::{Family, TestName};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Test,
    Size,
    PowerSparsity,
    PowerStrength,
    Independence,
    Generate,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Test => "test",
            Command::Size => "size",
            Command::PowerSparsity => "power-sparsity",
            Command::PowerStrength => "power-strength",
            Command::Independence => "independence",
            Command::Generate => "generate",
        }
    }

    pub fn is_simulation(&self) -> bool {
        matches!(
            self,
            Command::Size | Command::PowerSparsity | Command::PowerStrength | Command::Independence
        )
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!(
                "format: expected csv or json, got '{other}'"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Covariance model requested by `generate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Null,
    Spiked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub alpha: f64,
    pub tests: Vec<TestName>,
    pub family: Family,
    pub n: Vec<usize>,
    pub p: Vec<usize>,
    pub seed: u64,
    pub reps: usize,
    pub sigma2: f64,
    pub s_grid: Vec<usize>,
    pub s: Vec<usize>,
    pub a_grid: Vec<f64>,
    pub a: f64,
    pub model: ModelKind,
    pub rep: u64,
    pub pairs: Vec<TestPair>,
    pub alt_s: Option<usize>,
    pub alt_a: Option<f64>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let reps = match command {
            Command::PowerSparsity | Command::PowerStrength => 500,
            Command::Independence => 2000,
            _ => 1000,
        };
        Self {
            command,
            input_path: None,
            output_path: None,
            format: OutputFormat::Csv,
            alpha: 0.05,
            tests: TestName::ALL.to_vec(),
            family: Family::Normal,
            n: vec![300],
            p: vec![100],
            seed: 1,
            reps,
            sigma2: 1.0,
            s_grid: (2..=30).step_by(2).collect(),
            s: vec![2, 10, 30],
            a_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            a: 0.5,
            model: ModelKind::Null,
            rep: 0,
            pairs: vec![TestPair::Covariance, TestPair::Sign],
            alt_s: None,
            alt_a: None,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let value = value.trim();
        let bad = |what: &str| CliError::Config(format!("{key}: {what}, got '{value}'"));
        match key.as_str() {
            "input" => self.input_path = Some(PathBuf::from(value)),
            "output" => self.output_path = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "alpha" => self.alpha = value.parse().map_err(|_| bad("expected a number"))?,
            "tests" => {
                self.tests = TestName::parse_list(value).map_err(|e| CliError::Config(format!("tests: {e}")))?
            }
            "family" => {
                self.family = value.parse().map_err(|e| CliError::Config(format!("family: {e}")))?
            }
            "n" => self.n = parse_usize_list(value).map_err(|_| bad("expected integers"))?,
            "p" => self.p = parse_usize_list(value).map_err(|_| bad("expected integers"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an unsigned integer"))?,
            "reps" => self.reps = value.parse().map_err(|_| bad("expected an integer"))?,
            "sigma2" => self.sigma2 = value.parse().map_err(|_| bad("expected a number"))?,
            "s_grid" => self.s_grid = parse_usize_list(value).map_err(|_| bad("expected integers"))?,
            "s" => self.s = parse_usize_list(value).map_err(|_| bad("expected integers"))?,
            "a_grid" => self.a_grid = parse_f64_list(value).map_err(|_| bad("expected numbers"))?,
            "a" => self.a = value.parse().map_err(|_| bad("expected a number"))?,
            "model" => {
                self.model = match value.to_ascii_lowercase().as_str() {
                    "null" => ModelKind::Null,
                    "spiked" => ModelKind::Spiked,
                    _ => return Err(bad("expected null or spiked")),
                }
            }
            "rep" => self.rep = value.parse().map_err(|_| bad("expected an integer"))?,
            "pairs" => {
                let mut pairs = Vec::new();
                for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let pair = match part.to_ascii_uppercase().as_str() {
                        "NS-NM" | "COVARIANCE" => TestPair::Covariance,
                        "SS-SM" | "SIGN" => TestPair::Sign,
                        _ => return Err(bad("expected NS-NM and/or SS-SM")),
                    };
                    if !pairs.contains(&pair) {
                        pairs.push(pair);
                    }
                }
                self.pairs = pairs;
            }
            "alt_s" => self.alt_s = Some(value.parse().map_err(|_| bad("expected an integer"))?),
            "alt_a" => self.alt_a = Some(value.parse().map_err(|_| bad("expected a number"))?),
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Merges settings from a flat config text.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> CliResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| {
                    CliError::Config(format!("{origin} line {}: expected 'key = value'", i + 1))
                })?;
            self.set(k, v)
                .map_err(|e| CliError::Config(format!("{origin} line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Checks the fields the command needs.
    pub fn validate(&self) -> CliResult<()> {
        let err = |m: String| Err(CliError::Config(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return err(format!("alpha: must lie in (0, 1), got {}", self.alpha));
        }
        match self.command {
            Command::Test => {
                if self.input_path.is_none() {
                    return err("input: the test command needs --input or 'input' in the config".into());
                }
            }
            Command::Generate => {
                if self.n.len() != 1 || self.p.len() != 1 {
                    return err("n, p: generate takes a single n and p".into());
                }
                if self.model == ModelKind::Spiked && self.s.len() != 1 {
                    return err("s: generate takes a single block size".into());
                }
            }
            _ => {
                if self.reps == 0 {
                    return err("reps: must be at least 1".into());
                }
                if self.n.is_empty() || self.p.is_empty() {
                    return err("n, p: need at least one value each".into());
                }
                if let Some(&n) = self.n.iter().find(|&&n| n < 3) {
                    return err(format!("n: must be at least 3, got {n}"));
                }
                if let Some(&p) = self.p.iter().find(|&&p| p < 2) {
                    return err(format!("p: must be at least 2, got {p}"));
                }
                if self.command == Command::PowerSparsity && self.s_grid.is_empty() {
                    return err("s_grid: must not be empty".into());
                }
                if self.command == Command::PowerStrength && (self.s.is_empty() || self.a_grid.is_empty()) {
                    return err("s, a_grid: must not be empty".into());
                }
                if self.command == Command::Independence {
                    if self.pairs.is_empty() {
                        return err("pairs: must not be empty".into());
                    }
                    if self.alt_s.is_some() != self.alt_a.is_some() {
                        return err("alt_s, alt_a: set both or neither".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// Effective settings, in config-file syntax, sufficient to re-run.
    pub fn settings(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("alpha", self.alpha.to_string());
        let tests = || self.tests.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(",");
        let sim = |m: &mut BTreeMap<&'static str, String>| {
            m.insert("family", self.family.to_string());
            m.insert("n", join(&self.n));
            m.insert("p", join(&self.p));
            m.insert("seed", self.seed.to_string());
        };
        match self.command {
            Command::Test => {
                if let Some(p) = &self.input_path {
                    m.insert("input", p.display().to_string());
                }
                m.insert("tests", tests());
            }
            Command::Size => {
                sim(&mut m);
                m.insert("reps", self.reps.to_string());
                m.insert("sigma2", self.sigma2.to_string());
                m.insert("tests", tests());
            }
            Command::PowerSparsity => {
                sim(&mut m);
                m.insert("reps", self.reps.to_string());
                m.insert("s_grid", join(&self.s_grid));
                m.insert("tests", tests());
            }
            Command::PowerStrength => {
                sim(&mut m);
                m.insert("reps", self.reps.to_string());
                m.insert("s", join(&self.s));
                m.insert("a_grid", join(&self.a_grid));
                m.insert("tests", tests());
            }
            Command::Independence => {
                sim(&mut m);
                m.insert("reps", self.reps.to_string());
                let pairs: Vec<&str> = self
                    .pairs
                    .iter()
                    .map(|p| match p {
                        TestPair::Covariance => "NS-NM",
                        TestPair::Sign => "SS-SM",
                    })
                    .collect();
                m.insert("pairs", pairs.join(","));
                if let (Some(s), Some(a)) = (self.alt_s, self.alt_a) {
                    m.insert("alt_s", s.to_string());
                    m.insert("alt_a", a.to_string());
                }
            }
            Command::Generate => {
                sim(&mut m);
                m.remove("alpha");
                m.insert("rep", self.rep.to_string());
                match self.model {
                    ModelKind::Null => {
                        m.insert("model", "null".into());
                        m.insert("sigma2", self.sigma2.to_string());
                    }
                    ModelKind::Spiked => {
                        m.insert("model", "spiked".into());
                        m.insert("s", join(&self.s));
                        m.insert("a", self.a.to_string());
                    }
                }
            }
        }
        m
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, ()> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bits: Vec<&str> = part.split(':').map(str::trim).collect();
        match bits.as_slice() {
            [one] => out.push(one.parse().map_err(|_| ())?),
            [a, b] | [a, b, _] => {
                let start: usize = a.parse().map_err(|_| ())?;
                let stop: usize = b.parse().map_err(|_| ())?;
                let step: usize = match bits.get(2) {
                    Some(st) => st.parse().map_err(|_| ())?,
                    None => 1,
                };
                if step == 0 || stop < start {
                    return Err(());
                }
                out.extend((start..=stop).step_by(step));
            }
            _ => return Err(()),
        }
    }
    if out.is_empty() {
        return Err(());
    }
    Ok(out)
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, ()> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bits: Vec<f64> = part
            .split(':')
            .map(|b| b.trim().parse::<f64>().map_err(|_| ()))
            .collect::<Result<_, _>>()?;
        match bits.as_slice() {
            [one] => out.push(*one),
            [start, stop, step] if *step > 0.0 && stop >= start => {
                // integer stepping avoids accumulating rounding error
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|i| start + i as f64 * step));
            }
            _ => return Err(()),
        }
    }
    if out.is_empty() {
        return Err(());
    }
    Ok(out)
}
