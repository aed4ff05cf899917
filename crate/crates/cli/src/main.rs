use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tailcmp::dgp::{simulate_ar1, Ar1Spec, DEFAULT_BURN_IN};
use tailcmp::harness::{
    load_forecasts, load_returns, pairwise_epa_matrix, run_power_experiment,
    run_rejection_experiment, write_pairwise, write_results, write_returns, ExperimentConfig,
    NoiseFamily, PairwiseConfig, DEFAULT_SEED,
};
use tailcmp::limit::{
    default_hill_grid, hill_plot, normalizing_sequence_estimate, tail_balance_estimate,
    DEFAULT_TAIL_QUANTILE,
};
use tailcmp::losses::{
    fit_garch11, garch_var_forecast, loss_differential, rw_quantile_forecast, squared_loss,
    tick_loss, ForecastSeries, Loss,
};
use tailcmp::stats::{LagRule, LossMatrix};
use tailcmp::subsampling::{mean_confidence_interval, spa_test, Critical, SubsampleConfig};
use tailcmp::{Error, Execution, Result, RngStream, TimeSeries};

/// Forecast comparison tests that stay valid under heavy tails.
#[derive(Parser)]
#[command(name = "tailcmp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rejection frequencies under the null over a kappa x n grid.
    McSize(McArgs),
    /// Rejection frequencies over a kappa x n x delta grid.
    McPower(McArgs),
    /// Pairwise equal-predictive-ability tests (DM and subsampling).
    Epa(EpaArgs),
    /// Superior predictive ability of a benchmark against all other methods.
    Spa(SpaArgs),
    /// Subsampling confidence interval for a mean.
    Ci(CiArgs),
    /// Hill plot and tail diagnostics of a return series.
    Hill(HillArgs),
    /// Simulate an AR(1) path with heavy-tailed noise as a returns file.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ExecArgs {
    /// Worker threads; 1 runs sequentially, 0 or absent uses every core.
    #[arg(long)]
    workers: Option<usize>,
}

impl ExecArgs {
    fn execution(&self) -> Execution {
        match self.workers {
            Some(w) => Execution::with_workers(w),
            None => Execution::default(),
        }
    }
}

#[derive(Args)]
struct McArgs {
    /// Key-value experiment file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from M = 10^4 replications and n up to 10^5.
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    /// Diebold-Mariano lag: an integer or "auto".
    #[arg(long)]
    lag: Option<LagRule>,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Tick,
    Squared,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Loss {
        match l {
            LossArg::Tick => Loss::Tick,
            LossArg::Squared => Loss::Squared,
        }
    }
}

#[derive(Args)]
struct PanelArgs {
    /// CSV with columns date,return.
    #[arg(long)]
    returns: PathBuf,
    /// CSV with columns date,method_1,...,method_k.
    #[arg(long)]
    forecasts: Option<PathBuf>,
    /// Add rolling-window historical quantile forecasts with these window
    /// lengths (method names RW-<h>).
    #[arg(long, value_delimiter = ',')]
    rw: Vec<usize>,
    /// Add a Gaussian GARCH(1,1) forecast (G-N) fitted on the dates before
    /// --split.
    #[arg(long, requires = "split")]
    garch: bool,
    /// First out-of-sample date (YYYY-MM-DD); evaluation uses dates on or
    /// after it.
    #[arg(long)]
    split: Option<NaiveDate>,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Tick)]
    loss: LossArg,
}

#[derive(Args)]
struct EpaArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[arg(long, default_value = "20")]
    lag: LagRule,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpaArgs {
    #[command(flatten)]
    panel: PanelArgs,
    /// Method tested for not being outperformed.
    #[arg(long)]
    benchmark: String,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Args)]
struct CiArgs {
    /// CSV with columns date,return.
    #[arg(long)]
    returns: PathBuf,
    /// Interval for the mean loss differential L(A) - L(B) instead of the
    /// mean return; needs --forecasts.
    #[arg(long, value_name = "A,B", value_parser = parse_pair)]
    pair: Option<(String, String)>,
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    rw: Vec<usize>,
    #[arg(long)]
    split: Option<NaiveDate>,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Tick)]
    loss: LossArg,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    exec: ExecArgs,
}

#[derive(Args)]
struct HillArgs {
    /// CSV with columns date,return.
    #[arg(long)]
    returns: PathBuf,
    /// Order statistics to use; defaults to 50 log-spaced values.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Magnitude quantile above which the tail balance is measured.
    #[arg(long, default_value_t = DEFAULT_TAIL_QUANTILE)]
    tail_quantile: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "stable-sym")]
    noise: NoiseFamily,
    #[arg(long, default_value_t = 1.5)]
    kappa: f64,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Date of the first observation; later ones follow daily.
    #[arg(long, default_value = "2000-01-01")]
    start: NaiveDate,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err(format!(
            "expected two method names separated by a comma, got '{s}'"
        )),
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn monte_carlo(args: &McArgs, power: bool) -> Result<()> {
    let base = if args.full_scale {
        ExperimentConfig::full_scale()
    } else {
        ExperimentConfig::default()
    };
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(p, base)?,
        None => base,
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(l) = args.level {
        cfg.settings.level = l;
    }
    if args.block.is_some() {
        cfg.settings.block = args.block;
    }
    if let Some(l) = args.lag {
        cfg.settings.dm_lag = l;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.validate()?;
    if power && cfg.deltas.iter().all(|d| *d == 0.0) {
        eprintln!("note: the delta grid is {{0}}, so this is the size experiment; set `delta` in the config");
    }
    let exec = args.exec.execution();
    let results = if power {
        run_power_experiment(&cfg, exec)?
    } else {
        run_rejection_experiment(&cfg, exec)?
    };
    let mut w = sink(cfg.out.as_deref())?;
    write_results(&mut w, &results)?;
    w.flush()?;
    Ok(())
}

/// Realized returns and aligned forecasts, restricted to the evaluation
/// period.
struct Panel {
    y: TimeSeries,
    forecasts: Vec<ForecastSeries>,
}

fn split_index(y: &TimeSeries, split: Option<NaiveDate>) -> Result<usize> {
    let Some(d) = split else { return Ok(0) };
    let dates = y.dates().expect("loaded returns carry dates");
    let i = dates.partition_point(|t| *t < d);
    if i == dates.len() {
        return Err(Error::invalid(format!(
            "no returns on or after the split date {d}"
        )));
    }
    Ok(i)
}

fn load_panel(
    returns: &Path,
    forecasts: Option<&Path>,
    rw: &[usize],
    garch: bool,
    split: Option<NaiveDate>,
    tau: f64,
) -> Result<Panel> {
    let loaded = load_returns(returns)?;
    if loaded.dropped_zero > 0 {
        eprintln!("dropped {} zero returns", loaded.dropped_zero);
    }
    let y = loaded.series;
    let mut fc = match forecasts {
        Some(p) => load_forecasts(p, &y, tau)?,
        None => Vec::new(),
    };
    for &h in rw {
        fc.push(rw_quantile_forecast(&y, h, tau)?);
    }
    let start = split_index(&y, split)?;
    if garch {
        if start < 2 {
            return Err(Error::invalid(
                "GARCH needs in-sample returns before the split date",
            ));
        }
        let params = fit_garch11(&y[..start])?;
        eprintln!(
            "G-N fit: mu={} omega={} alpha={} beta={}",
            params.mu, params.omega, params.alpha, params.beta
        );
        fc.push(garch_var_forecast(&params, &y, tau)?);
    }
    let mut seen = HashSet::new();
    if let Some(f) = fc.iter().find(|f| !seen.insert(f.method.clone())) {
        return Err(Error::invalid(format!("method {} appears twice", f.method)));
    }
    let forecasts = fc
        .into_iter()
        .map(|f| ForecastSeries::new(f.method, f.tau, f.values[start..].to_vec()))
        .collect::<Result<_>>()?;
    Ok(Panel {
        y: y.slice(start, y.len()),
        forecasts,
    })
}

fn panel(p: &PanelArgs) -> Result<Panel> {
    load_panel(
        &p.returns,
        p.forecasts.as_deref(),
        &p.rw,
        p.garch,
        p.split,
        p.tau,
    )
}

fn epa(args: &EpaArgs) -> Result<()> {
    let p = panel(&args.panel)?;
    let cfg = PairwiseConfig {
        tau: args.panel.tau,
        level: args.level,
        lag: args.lag,
        block: args.block,
        loss: args.panel.loss.into(),
    };
    let report = pairwise_epa_matrix(&p.y, &p.forecasts, &cfg)?;
    let mut w = sink(args.out.as_deref())?;
    write_pairwise(&mut w, &report)?;
    w.flush()?;
    Ok(())
}

fn spa(args: &SpaArgs) -> Result<()> {
    let p = panel(&args.panel)?;
    let bench = p
        .forecasts
        .iter()
        .position(|f| f.method == args.benchmark)
        .ok_or_else(|| Error::invalid(format!("no method named {}", args.benchmark)))?;
    if p.forecasts.len() < 2 {
        return Err(Error::invalid(
            "need at least one competitor besides the benchmark",
        ));
    }
    let tau = args.panel.tau;
    let loss = |y: f64, f: f64| match Loss::from(args.panel.loss) {
        Loss::Tick => tick_loss(y, f, tau),
        Loss::Squared => squared_loss(y, f),
    };
    // Dates where every method has a forecast.
    let rows: Vec<usize> = (0..p.y.len())
        .filter(|&t| p.forecasts.iter().all(|f| f.values[t].is_some()))
        .collect();
    let value = |f: &ForecastSeries, t: usize| f.values[t].expect("row filtered above");
    let competitors: Vec<&ForecastSeries> = p
        .forecasts
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != bench)
        .map(|(_, f)| f)
        .collect();
    let columns: Vec<Vec<f64>> = competitors
        .iter()
        .map(|c| {
            rows.iter()
                .map(|&t| loss(p.y[t], value(&p.forecasts[bench], t)) - loss(p.y[t], value(c, t)))
                .collect()
        })
        .collect();
    let cfg = SubsampleConfig {
        block: args.block,
        level: args.level,
        exec: args.exec.execution(),
        ..SubsampleConfig::default()
    };
    let report = spa_test(&LossMatrix::from_columns(&columns)?, &cfg)?;
    let critical = match report.critical {
        Critical::Upper(c) => c,
        Critical::Interval { upper, .. } => upper,
    };
    let mut w = sink(args.out.as_deref())?;
    writeln!(
        w,
        "benchmark,competitors,n,statistic,critical,level,reject,block,degenerate_windows"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{}",
        args.benchmark,
        competitors.len(),
        rows.len(),
        report.statistic,
        critical,
        report.level,
        report.reject,
        report.block_size.map_or(String::new(), |b| b.to_string()),
        report.degenerate_windows
    )?;
    w.flush()?;
    Ok(())
}

fn ci(args: &CiArgs) -> Result<()> {
    let p = load_panel(
        &args.returns,
        args.forecasts.as_deref(),
        &args.rw,
        false,
        args.split,
        args.tau,
    )?;
    let (target, x) = match &args.pair {
        Some(pair) => {
            let find = |name: &str| {
                p.forecasts
                    .iter()
                    .find(|f| f.method == name)
                    .ok_or_else(|| Error::invalid(format!("no method named {name}")))
            };
            let (a, b) = (find(&pair.0)?, find(&pair.1)?);
            let d = loss_differential(&p.y, a, b, args.loss.into())?;
            (format!("{}-{}", pair.0, pair.1), d.into_values())
        }
        None => ("return".to_string(), p.y.into_values()),
    };
    let cfg = SubsampleConfig {
        block: args.block,
        level: args.level,
        exec: args.exec.execution(),
        ..SubsampleConfig::default()
    };
    let interval = mean_confidence_interval(&x, &cfg)?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut w = sink(args.out.as_deref())?;
    writeln!(
        w,
        "target,n,mean,lower,upper,level,block,degenerate_windows"
    )?;
    writeln!(
        w,
        "{target},{},{mean},{},{},{},{},{}",
        x.len(),
        interval.lower,
        interval.upper,
        interval.level,
        interval.block_size,
        interval.degenerate_windows
    )?;
    w.flush()?;
    Ok(())
}

fn hill(args: &HillArgs) -> Result<()> {
    let loaded = load_returns(&args.returns)?;
    let x = loaded.series.values();
    let grid = if args.k.is_empty() {
        default_hill_grid(x.len())
    } else {
        args.k.clone()
    };
    let rows = hill_plot(x, Some(&grid))?;
    let balance = tail_balance_estimate(x, args.tail_quantile)?;
    let a_n = normalizing_sequence_estimate(x)?;
    let mut w = sink(args.out.as_deref())?;
    writeln!(w, "k,kappa_hat")?;
    for (k, kappa) in &rows {
        writeln!(w, "{k},{kappa}")?;
    }
    w.flush()?;
    eprintln!(
        "n={} tail_balance_p_plus={balance} normalizing_sequence={a_n}",
        x.len()
    );
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let law = args.noise.law(args.kappa)?;
    let mut spec = Ar1Spec::new(
        args.delta,
        args.phi,
        law,
        args.n,
        RngStream::new(args.seed, 0),
    );
    spec.burn_in = args.burn_in;
    let sim = simulate_ar1(&spec)?;
    for msg in &sim.warnings {
        eprintln!("warning: {msg}");
    }
    let dates = args.start.iter_days().take(args.n).collect::<Vec<_>>();
    if dates.len() < args.n {
        return Err(Error::invalid("date range overflows the calendar"));
    }
    let series = TimeSeries::with_dates(sim.series.into_values(), dates)?;
    match &args.out {
        Some(p) => write_returns(p, &series),
        None => {
            let mut w = sink(None)?;
            writeln!(w, "date,return")?;
            for (d, v) in series.dates().unwrap_or_default().iter().zip(series.iter()) {
                writeln!(w, "{},{v}", d.format("%Y-%m-%d"))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::McSize(a) => monte_carlo(a, false),
        Command::McPower(a) => monte_carlo(a, true),
        Command::Epa(a) => epa(a),
        Command::Spa(a) => spa(a),
        Command::Ci(a) => ci(a),
        Command::Hill(a) => hill(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
