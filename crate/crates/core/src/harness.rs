//! Monte Carlo experiments, CSV ingestion and persistence, and the pairwise
//! equal-predictive-ability matrix.
//!
//! Replication `r` of a design cell draws from `RngStream::new(cell_seed, r)`
//! where `cell_seed` is derived from the master seed and the cell's own
//! parameters only. Results are aggregated in replication order, so output
//! is identical across runs, worker counts, and grids that share a cell.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::dgp::{fill_ar1, DEFAULT_BURN_IN};
use crate::dist::{Law, SkewStudentParams, StableParams};
use crate::error::{Error, Result};
use crate::exec::{map_indices, Execution};
use crate::losses::{drop_zero_returns, loss_differential, ForecastSeries, Loss};
use crate::rng::{derive_seed, RngStream};
use crate::series::TimeSeries;
use crate::stats::LagRule;
use crate::subsampling::{abs_test, dm_test, epa_test, Critical, SubsampleConfig, TestReport};

/// Tail balance of the skewed Student-t design.
pub const SKEW_P_PLUS: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseFamily {
    StableSymmetric,
    /// Skewness 0.8 (`p_+ = 0.9`), located to have mean zero.
    StableAsymmetric,
    Student,
    SkewStudent,
    /// Standard normal; the tail index is ignored.
    Normal,
}

impl NoiseFamily {
    const ALL: [(NoiseFamily, &'static str); 5] = [
        (NoiseFamily::StableSymmetric, "stable-sym"),
        (NoiseFamily::StableAsymmetric, "stable-asym"),
        (NoiseFamily::Student, "student"),
        (NoiseFamily::SkewStudent, "skew-student"),
        (NoiseFamily::Normal, "normal"),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(f, _)| *f == self)
            .map(|p| p.1)
            .unwrap()
    }

    fn id(self) -> u64 {
        Self::ALL.iter().position(|(f, _)| *f == self).unwrap() as u64
    }

    pub fn law(self, kappa: f64) -> Result<Law> {
        Ok(match self {
            NoiseFamily::StableSymmetric => Law::Stable(StableParams::symmetric(kappa)?),
            NoiseFamily::StableAsymmetric => Law::Stable(StableParams::skewed_zero_mean(kappa)?),
            NoiseFamily::Student => {
                if kappa.is_nan() || kappa <= 0.0 {
                    return Err(Error::invalid(format!(
                        "degrees of freedom {kappa} must be positive"
                    )));
                }
                Law::Student { kappa }
            }
            NoiseFamily::SkewStudent => {
                Law::SkewStudent(SkewStudentParams::new(kappa, SKEW_P_PLUS)?)
            }
            NoiseFamily::Normal => Law::Normal { mean: 0.0, sd: 1.0 },
        })
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|(_, n)| *n == s)
            .map(|p| p.0)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|p| p.1).collect();
                Error::Config(format!(
                    "unknown noise '{s}', expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    /// Diebold-Mariano with normal critical values.
    Dm,
    /// Equal-tailed self-normalized subsampling test.
    Alg1,
    /// Absolute modified-statistic subsampling test.
    AlgC1,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Dm => "dm",
            TestKind::Alg1 => "alg1",
            TestKind::AlgC1 => "algc1",
        }
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dm" => Ok(TestKind::Dm),
            "alg1" => Ok(TestKind::Alg1),
            "algc1" => Ok(TestKind::AlgC1),
            _ => Err(Error::Config(format!(
                "unknown test '{s}', expected dm, alg1 or algc1"
            ))),
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by every test in an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSettings {
    pub level: f64,
    pub block: Option<usize>,
    pub dm_lag: LagRule,
}

impl Default for TestSettings {
    fn default() -> Self {
        Self {
            level: 0.05,
            block: None,
            dm_lag: LagRule::Auto,
        }
    }
}

impl TestSettings {
    pub fn run(&self, kind: TestKind, x: &[f64]) -> Result<TestReport> {
        let cfg = SubsampleConfig {
            block: self.block,
            level: self.level,
            ..SubsampleConfig::default()
        };
        match kind {
            TestKind::Dm => dm_test(x, self.dm_lag, self.level),
            TestKind::Alg1 => epa_test(x, &cfg),
            TestKind::AlgC1 => abs_test(x, &cfg),
        }
    }
}

/// One design point: `X_t = delta + phi X_{t-1} + Z_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub noise: NoiseFamily,
    pub kappa: f64,
    pub n: usize,
    pub delta: f64,
    pub phi: f64,
    pub burn_in: usize,
}

impl Cell {
    pub fn seed(&self, master: u64) -> u64 {
        derive_seed(
            master,
            &[
                self.noise.id(),
                self.kappa.to_bits(),
                self.n as u64,
                self.delta.to_bits(),
                self.phi.to_bits(),
                self.burn_in as u64,
            ],
        )
    }
}

/// Runs `f` on the streams `(seed, 0), ..., (seed, replications - 1)` and
/// returns the results in replication order.
pub fn replicate<T, F>(replications: usize, seed: u64, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngStream) -> Result<T> + Sync + Send,
{
    map_indices(replications, exec, |r| f(RngStream::new(seed, r as u64)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub kappa: f64,
    pub n: usize,
    pub delta: f64,
    pub test: TestKind,
    pub rejections: usize,
    pub replications: usize,
    pub seed: u64,
}

impl CellResult {
    pub fn reject_pct(&self) -> f64 {
        100.0 * self.rejections as f64 / self.replications as f64
    }

    /// Binomial standard error of [`reject_pct`](Self::reject_pct), in percent.
    pub fn mc_se(&self) -> f64 {
        let p = self.rejections as f64 / self.replications as f64;
        100.0 * (p * (1.0 - p) / self.replications as f64).sqrt()
    }
}

/// Rejection counts of each test in `tests` over `replications` draws of
/// `cell`.
pub fn run_cell(
    cell: &Cell,
    tests: &[TestKind],
    settings: &TestSettings,
    replications: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<CellResult>> {
    if replications == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    if !(0.0..1.0).contains(&cell.phi) {
        return Err(Error::invalid(format!(
            "AR coefficient {} outside [0, 1)",
            cell.phi
        )));
    }
    let sampler = cell.noise.law(cell.kappa)?.sampler()?;
    let seed = cell.seed(master_seed);
    let decisions = replicate(replications, seed, exec, |stream| {
        let mut x = vec![0.0; cell.n];
        let mut scratch = Vec::new();
        fill_ar1(
            cell.delta,
            cell.phi,
            &sampler,
            cell.burn_in,
            stream,
            &mut scratch,
            &mut x,
        )?;
        tests
            .iter()
            .map(|&t| settings.run(t, &x).map(|r| r.reject))
            .collect::<Result<Vec<bool>>>()
    })?;
    Ok(tests
        .iter()
        .enumerate()
        .map(|(k, &test)| CellResult {
            kappa: cell.kappa,
            n: cell.n,
            delta: cell.delta,
            test,
            rejections: decisions.iter().filter(|d| d[k]).count(),
            replications,
            seed: master_seed,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub noise: NoiseFamily,
    pub kappas: Vec<f64>,
    pub ns: Vec<usize>,
    pub deltas: Vec<f64>,
    pub phi: f64,
    pub replications: usize,
    pub tests: Vec<TestKind>,
    pub settings: TestSettings,
    pub seed: u64,
    pub burn_in: usize,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 20_240_501;

impl Default for ExperimentConfig {
    /// Desk scale: 2000 replications, `n` in {1000, 5000}.
    fn default() -> Self {
        Self {
            noise: NoiseFamily::StableSymmetric,
            kappas: vec![1.5],
            ns: vec![1000, 5000],
            deltas: vec![0.0],
            phi: 0.5,
            replications: 2000,
            tests: vec![TestKind::Dm, TestKind::Alg1],
            settings: TestSettings::default(),
            seed: DEFAULT_SEED,
            burn_in: DEFAULT_BURN_IN,
            out: None,
        }
    }
}

const CONFIG_KEYS: [&str; 13] = [
    "noise",
    "kappa",
    "n",
    "delta",
    "phi",
    "replications",
    "level",
    "tests",
    "seed",
    "burn_in",
    "block",
    "dm_lag",
    "out",
];

impl ExperimentConfig {
    /// 10^4 replications and sample sizes up to 10^5.
    pub fn full_scale() -> Self {
        Self {
            replications: 10_000,
            ns: vec![1000, 5000, 10_000, 100_000],
            ..Self::default()
        }
    }

    /// Parses `key = value` lines over `base`. Lists are comma-separated;
    /// `#` starts a comment. Unknown or repeated keys are errors.
    pub fn parse(text: &str, base: ExperimentConfig) -> Result<Self> {
        let mut cfg = base;
        let mut seen = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Config(format!("line {line_no}: {m}"));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(err(format!(
                    "unknown key '{key}'; valid keys: {}",
                    CONFIG_KEYS.join(", ")
                )));
            }
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(err(format!("key '{key}' already set on line {prev}")));
            }
            cfg.set(key, value).map_err(|e| err(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, base: ExperimentConfig) -> Result<Self> {
        let text = std::io::read_to_string(open(path)?)?;
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn one<T: FromStr>(v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("cannot parse '{v}'")))
        }
        fn list<T: FromStr>(v: &str) -> Result<Vec<T>> {
            v.split(',').map(|s| one(s.trim())).collect()
        }
        match key {
            "noise" => self.noise = value.parse()?,
            "kappa" => self.kappas = list(value)?,
            "n" => self.ns = list(value)?,
            "delta" => self.deltas = list(value)?,
            "phi" => self.phi = one(value)?,
            "replications" => self.replications = one(value)?,
            "level" => self.settings.level = one(value)?,
            "tests" => {
                self.tests = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?
            }
            "seed" => self.seed = one(value)?,
            "burn_in" => self.burn_in = one(value)?,
            "block" => {
                self.settings.block = if value == "auto" {
                    None
                } else {
                    Some(one(value)?)
                }
            }
            "dm_lag" => self.settings.dm_lag = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => unreachable!("key checked against CONFIG_KEYS"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.kappas.is_empty()
            || self.ns.is_empty()
            || self.deltas.is_empty()
            || self.tests.is_empty()
        {
            return bad("kappa, n, delta and tests must be non-empty".into());
        }
        if !(self.settings.level > 0.0 && self.settings.level < 1.0) {
            return bad(format!("level {} outside (0, 1)", self.settings.level));
        }
        if !(0.0..1.0).contains(&self.phi) {
            return bad(format!("phi {} outside [0, 1)", self.phi));
        }
        for &k in &self.kappas {
            self.noise.law(k).map_err(|e| {
                Error::Config(format!("kappa {k} invalid for {}: {e}", self.noise.name()))
            })?;
        }
        for &n in &self.ns {
            if n < 5 {
                return bad(format!("sample size {n} below 5"));
            }
            if let Some(b) = self.settings.block {
                if b < 2 || b >= n {
                    return bad(format!("block {b} must satisfy 1 < b < n = {n}"));
                }
            }
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return bad("delta values must be finite".into());
        }
        Ok(())
    }

    fn cells(&self, deltas: &[f64]) -> Vec<Cell> {
        let mut out = Vec::new();
        for &kappa in &self.kappas {
            for &n in &self.ns {
                for &delta in deltas {
                    out.push(Cell {
                        noise: self.noise,
                        kappa,
                        n,
                        delta,
                        phi: self.phi,
                        burn_in: self.burn_in,
                    });
                }
            }
        }
        out
    }
}

fn run_cells(cfg: &ExperimentConfig, deltas: &[f64], exec: Execution) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for cell in cfg.cells(deltas) {
        out.extend(run_cell(
            &cell,
            &cfg.tests,
            &cfg.settings,
            cfg.replications,
            cfg.seed,
            exec,
        )?);
    }
    Ok(out)
}

/// Rejection frequencies under the null (`delta = 0`) over the `kappa x n`
/// grid; `cfg.deltas` is ignored.
pub fn run_rejection_experiment(
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<CellResult>> {
    run_cells(cfg, &[0.0], exec)
}

/// Rejection frequencies over the full `kappa x n x delta` grid; the mean of
/// `X_t` is `delta / (1 - phi)`.
pub fn run_power_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<CellResult>> {
    run_cells(cfg, &cfg.deltas, exec)
}

pub const RESULTS_HEADER: [&str; 8] = [
    "kappa",
    "n",
    "delta",
    "test",
    "reject_pct",
    "mc_se",
    "M",
    "seed",
];

pub fn write_results<W: Write>(w: W, results: &[CellResult]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(RESULTS_HEADER).map_err(csv_io)?;
    for r in results {
        csv.write_record([
            r.kappa.to_string(),
            r.n.to_string(),
            r.delta.to_string(),
            r.test.to_string(),
            r.reject_pct().to_string(),
            r.mc_se().to_string(),
            r.replications.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_io)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_results_csv(path: &Path, results: &[CellResult]) -> Result<()> {
    write_results(std::fs::File::create(path)?, results)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.into())
}

/// Returns read from a CSV file, zero returns removed.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedReturns {
    pub series: TimeSeries,
    pub dropped_zero: usize,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_date(path: &Path, line: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| parse_err(path, line, format!("bad date '{s}': {e}")))
}

fn parse_value(path: &Path, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad number '{s}'")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value '{s}'")));
    }
    Ok(v)
}

/// Header and data rows, each row with its 1-based line number.
type Rows = (Vec<String>, Vec<(usize, csv::StringRecord)>);

fn read_rows(path: &Path, reader: impl Read, min_cols: usize) -> Result<Rows> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < min_cols {
        return Err(parse_err(
            path,
            1,
            format!("expected at least {min_cols} columns"),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        rows.push((line, rec));
    }
    Ok((header, rows))
}

/// Reads `date,return` rows. Dates must increase strictly; rows with a
/// return of exactly zero are dropped and counted.
pub fn load_returns(path: &Path) -> Result<LoadedReturns> {
    let (_, rows) = read_rows(path, open(path)?, 2)?;
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let mut dates = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let d = parse_date(path, *line, &rec[0])?;
        if let Some(prev) = dates.last() {
            if d <= *prev {
                return Err(parse_err(
                    path,
                    *line,
                    format!("date {d} does not follow {prev}"),
                ));
            }
        }
        dates.push(d);
        values.push(parse_value(path, *line, &rec[1])?);
    }
    let (series, dropped_zero) = drop_zero_returns(&TimeSeries::with_dates(values, dates)?);
    Ok(LoadedReturns {
        series,
        dropped_zero,
    })
}

/// Writes `date,return` rows using shortest round-trip float formatting.
pub fn write_returns(path: &Path, series: &TimeSeries) -> Result<()> {
    let dates = series
        .dates()
        .ok_or_else(|| Error::invalid("series has no dates"))?;
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["date", "return"]).map_err(csv_io)?;
    for (d, v) in dates.iter().zip(series.iter()) {
        w.write_record([d.format("%Y-%m-%d").to_string(), v.to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `date,method_1,...,method_k` and aligns every method with the
/// dates of `returns`. Empty cells mean "no forecast". Forecast rows for
/// dates absent from `returns` (for instance dropped zero returns) are
/// ignored; a return date missing from the file is an error.
pub fn load_forecasts(path: &Path, returns: &TimeSeries, tau: f64) -> Result<Vec<ForecastSeries>> {
    let dates = returns
        .dates()
        .ok_or_else(|| Error::invalid("returns have no dates to align against"))?;
    let (header, rows) = read_rows(path, open(path)?, 2)?;
    let methods = &header[1..];
    let mut by_date: HashMap<NaiveDate, Vec<Option<f64>>> = HashMap::with_capacity(rows.len());
    for (line, rec) in &rows {
        let d = parse_date(path, *line, &rec[0])?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| {
                if s.trim().is_empty() {
                    Ok(None)
                } else {
                    parse_value(path, *line, s).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if by_date.insert(d, vals).is_some() {
            return Err(parse_err(path, *line, format!("duplicate date {d}")));
        }
    }
    let mut columns = vec![Vec::with_capacity(dates.len()); methods.len()];
    for d in dates {
        let row = by_date.get(d).ok_or_else(|| {
            Error::Alignment(format!(
                "{}: no forecasts for return date {d}",
                path.display()
            ))
        })?;
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(*v);
        }
    }
    methods
        .iter()
        .zip(columns)
        .map(|(m, values)| ForecastSeries::new(m.clone(), tau, values))
        .collect()
}

/// Writes forecasts aligned with `dates`; missing forecasts become empty
/// cells.
pub fn write_forecasts(
    path: &Path,
    dates: &[NaiveDate],
    forecasts: &[ForecastSeries],
) -> Result<()> {
    if let Some(f) = forecasts.iter().find(|f| f.len() != dates.len()) {
        return Err(Error::LengthMismatch {
            expected: dates.len(),
            actual: f.len(),
        });
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    let mut header = vec!["date".to_string()];
    header.extend(forecasts.iter().map(|f| f.method.clone()));
    w.write_record(&header).map_err(csv_io)?;
    for (t, d) in dates.iter().enumerate() {
        let mut rec = vec![d.format("%Y-%m-%d").to_string()];
        rec.extend(
            forecasts
                .iter()
                .map(|f| f.values[t].map_or(String::new(), |v| v.to_string())),
        );
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseConfig {
    pub tau: f64,
    pub level: f64,
    pub lag: LagRule,
    pub block: Option<usize>,
    pub loss: Loss,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            level: 0.05,
            lag: LagRule::Fixed(20),
            block: None,
            loss: Loss::Tick,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairOutcome {
    /// The loss differential is identically zero.
    Degenerate,
    Tested {
        dm: TestReport,
        alg1: TestReport,
    },
}

/// Comparison of the row method against the column method, on the loss
/// differential `L(row) - L(column)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCell {
    pub n: usize,
    pub outcome: PairOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseReport {
    pub methods: Vec<String>,
    pub config: PairwiseConfig,
    /// `cells[i][j]`; `None` on the diagonal.
    pub cells: Vec<Vec<Option<PairCell>>>,
}

fn mirror(r: &TestReport) -> TestReport {
    let critical = match r.critical {
        Critical::Interval { lower, upper } => Critical::Interval {
            lower: -upper,
            upper: -lower,
        },
        c => c,
    };
    TestReport {
        statistic: -r.statistic,
        critical,
        ..r.clone()
    }
}

/// Every ordered pair of methods, tested with Diebold-Mariano and the
/// equal-tailed subsampling test. Each unordered pair is computed once and
/// mirrored, so `cells[j][i]` is exactly the negation of `cells[i][j]`.
pub fn pairwise_epa_matrix(
    y: &TimeSeries,
    forecasts: &[ForecastSeries],
    cfg: &PairwiseConfig,
) -> Result<PairwiseReport> {
    let k = forecasts.len();
    if k < 2 {
        return Err(Error::invalid("need at least two forecast methods"));
    }
    let sub = SubsampleConfig {
        block: cfg.block,
        level: cfg.level,
        ..SubsampleConfig::default()
    };
    let mut cells = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = loss_differential(y, &forecasts[i], &forecasts[j], cfg.loss)?;
            let outcome = if d.iter().all(|v| *v == 0.0) {
                PairOutcome::Degenerate
            } else {
                PairOutcome::Tested {
                    dm: dm_test(&d, cfg.lag, cfg.level)?,
                    alg1: epa_test(&d, &sub)?,
                }
            };
            let mirrored = match &outcome {
                PairOutcome::Degenerate => PairOutcome::Degenerate,
                PairOutcome::Tested { dm, alg1 } => PairOutcome::Tested {
                    dm: mirror(dm),
                    alg1: mirror(alg1),
                },
            };
            cells[i][j] = Some(PairCell {
                n: d.len(),
                outcome,
            });
            cells[j][i] = Some(PairCell {
                n: d.len(),
                outcome: mirrored,
            });
        }
    }
    Ok(PairwiseReport {
        methods: forecasts.iter().map(|f| f.method.clone()).collect(),
        config: *cfg,
        cells,
    })
}

/// Long format, one row per ordered pair.
pub fn write_pairwise<W: Write>(w: W, report: &PairwiseReport) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "row",
        "column",
        "n",
        "status",
        "dm_stat",
        "dm_critical",
        "dm_reject",
        "alg1_stat",
        "alg1_lower",
        "alg1_upper",
        "alg1_reject",
        "block",
    ])
    .map_err(csv_io)?;
    for (i, row) in report.cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let Some(cell) = cell else { continue };
            let mut rec = vec![
                report.methods[i].clone(),
                report.methods[j].clone(),
                cell.n.to_string(),
            ];
            match &cell.outcome {
                PairOutcome::Degenerate => {
                    rec.push("degenerate".into());
                    rec.extend(std::iter::repeat_n(String::new(), 8));
                }
                PairOutcome::Tested { dm, alg1 } => {
                    let z = match dm.critical {
                        Critical::Interval { upper, .. } => upper,
                        Critical::Upper(c) => c,
                    };
                    let (lo, hi) = match alg1.critical {
                        Critical::Interval { lower, upper } => (lower, upper),
                        Critical::Upper(c) => (f64::NEG_INFINITY, c),
                    };
                    rec.extend([
                        "ok".to_string(),
                        dm.statistic.to_string(),
                        z.to_string(),
                        dm.reject.to_string(),
                        alg1.statistic.to_string(),
                        lo.to_string(),
                        hi.to_string(),
                        alg1.reject.to_string(),
                        alg1.block_size.map_or(String::new(), |b| b.to_string()),
                    ]);
                }
            }
            csv.write_record(&rec).map_err(csv_io)?;
        }
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let text = "# size table\nnoise = stable-asym\nkappa = 1.1, 1.5\nn = 500\n\
                    tests = dm, alg1, algc1\nblock = 30\ndm_lag = 7\nreplications = 10\n";
        let cfg = ExperimentConfig::parse(text, ExperimentConfig::default()).unwrap();
        assert_eq!(cfg.noise, NoiseFamily::StableAsymmetric);
        assert_eq!(cfg.kappas, vec![1.1, 1.5]);
        assert_eq!(cfg.ns, vec![500]);
        assert_eq!(cfg.tests.len(), 3);
        assert_eq!(cfg.settings.block, Some(30));
        assert_eq!(cfg.settings.dm_lag, LagRule::Fixed(7));
    }

    #[test]
    fn config_rejects_typos() {
        let e = ExperimentConfig::parse("kapa = 1.5\n", ExperimentConfig::default()).unwrap_err();
        assert!(e.to_string().contains("line 1") && e.to_string().contains("kapa"));
        assert!(
            ExperimentConfig::parse("kappa = 1.5\nkappa = 1.3", ExperimentConfig::default())
                .is_err()
        );
        assert!(ExperimentConfig::parse("kappa = 2.5", ExperimentConfig::default()).is_err());
        assert!(ExperimentConfig::parse("noise = cauchy", ExperimentConfig::default()).is_err());
        assert!(ExperimentConfig::parse("tests = dm, xx", ExperimentConfig::default()).is_err());
    }

    #[test]
    fn cell_seed_ignores_grid() {
        let cfg = ExperimentConfig {
            kappas: vec![1.5],
            ns: vec![300],
            deltas: vec![0.0, 0.5],
            replications: 50,
            ..ExperimentConfig::default()
        };
        let power = run_power_experiment(&cfg, Execution::Sequential).unwrap();
        let size = run_rejection_experiment(&cfg, Execution::Sequential).unwrap();
        assert_eq!(&power[..2], &size[..]);
    }

    #[test]
    fn standard_error_formula() {
        let r = CellResult {
            kappa: 1.5,
            n: 10,
            delta: 0.0,
            test: TestKind::Dm,
            rejections: 5,
            replications: 100,
            seed: 1,
        };
        assert_eq!(r.reject_pct(), 5.0);
        assert!((r.mc_se() - 100.0 * (0.05f64 * 0.95 / 100.0).sqrt()).abs() < 1e-12);
    }
}
