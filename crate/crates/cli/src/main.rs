use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cbb_core::cluster::{elbow_point, elbow_scan};
use cbb_core::data::{
    acf_pacf, aggregate_sites, build_features, parse_site_csv, write_demand_csv, DemandSeries, HolidaySet,
    ParseOptions, TrainTestSplit,
};
use cbb_core::eval::{
    compare_methods, generate_synthetic, parse_block_length, write_backtest, write_comparison, write_elbow,
    Method, NoiseModel, Regime, RunConfig, SynthSpec,
};
use cbb_core::{ErrorKind, RegressorSpec};
use chrono::{Datelike, NaiveDate};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cbb", version, about = "Day-ahead demand intervals by cluster-based block bootstrap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse one or more demand CSVs, aggregate their sites and write one series.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Output CSV of the aggregated series.
        #[arg(long, default_value = "series.csv")]
        out: PathBuf,
    },
    /// Write the lag/temperature/calendar feature matrix and, optionally, a correlogram.
    Features {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "features.csv")]
        out: PathBuf,
        /// Also write ACF/PACF up to this lag to `correlogram.csv` next to `--out`.
        #[arg(long)]
        max_lag: Option<usize>,
    },
    /// WSS of k-means over training-day demand for k = 1..=k-max.
    Elbow {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
    },
    /// Expanding-window backtest of one method and model.
    Backtest {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Backtest every method/model combination on the same split.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Methods to compare.
        #[arg(long, value_delimiter = ',', default_value = "cbb,blockbb,bagging")]
        methods: Vec<String>,
        /// Point models to compare.
        #[arg(long, value_delimiter = ',', default_value = "ols,gbt")]
        models: Vec<ModelArg>,
    },
    /// Generate a synthetic demand series.
    Synth {
        #[arg(long, default_value_t = 455)]
        days: usize,
        #[arg(long, default_value = "2021-01-01")]
        start: NaiveDate,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Constant noise standard deviation in kW instead of level-proportional noise.
        #[arg(long)]
        sigma: Option<f64>,
        /// Months (1-12) with raised demand and doubled noise.
        #[arg(long, value_delimiter = ',')]
        regime_months: Vec<u32>,
        #[arg(long, default_value = "synthetic.csv")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Demand CSV files; repeat for several files.
    #[arg(long = "data", required = true)]
    data: Vec<PathBuf>,
    /// Holiday list, one YYYY-MM-DD per line; US federal holidays when omitted.
    #[arg(long)]
    holidays: Option<PathBuf>,
    /// Interpolate gaps of up to four missing intervals.
    #[arg(long)]
    fill_gaps: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ols,
    Gbt,
}

impl ModelArg {
    fn spec(self) -> RegressorSpec {
        match self {
            ModelArg::Ols => RegressorSpec::least_squares(),
            ModelArg::Gbt => RegressorSpec::boosted_trees(),
        }
    }
}

/// Run settings; each flag overrides the config file.
#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "data")]
    data: Vec<PathBuf>,
    #[arg(long)]
    holidays: Option<PathBuf>,
    #[arg(long)]
    fill_gaps: bool,
    /// First test day (YYYY-MM-DD).
    #[arg(long)]
    split: Option<NaiveDate>,
    #[arg(long)]
    test_days: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    /// Block length dividing 96, or `auto`.
    #[arg(long)]
    block_length: Option<String>,
    /// cbb, blockbb or bagging.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    recluster_every: Option<usize>,
    #[arg(long)]
    refit_every: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Runtime(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Data(e) | Failure::Runtime(e) => e,
        }
    }
}

/// Classify by the first library error in the chain.
fn classify(e: anyhow::Error) -> Failure {
    let kind = e
        .chain()
        .find_map(|c| c.downcast_ref::<cbb_core::Error>())
        .map(cbb_core::Error::kind);
    match kind {
        Some(ErrorKind::Config) => Failure::Config(e),
        Some(ErrorKind::Data) => Failure::Data(e),
        Some(ErrorKind::Runtime) | None => Failure::Runtime(e),
    }
}

fn config_error(message: String) -> Failure {
    Failure::Config(anyhow::anyhow!(message))
}

impl RunArgs {
    fn resolve(&self) -> std::result::Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)
                .with_context(|| format!("reading config {}", path.display()))
                .map_err(Failure::Config)?,
            None => RunConfig::default(),
        };
        if !self.data.is_empty() {
            cfg.data = self.data.clone();
        }
        if self.holidays.is_some() {
            cfg.holidays = self.holidays.clone();
        }
        cfg.fill_gaps |= self.fill_gaps;
        if self.split.is_some() {
            cfg.split = self.split;
        }
        if self.test_days.is_some() {
            cfg.test_days = self.test_days;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.alphas {
            cfg.alphas = v.clone();
        }
        if let Some(v) = self.replicates {
            cfg.replicates = v;
        }
        if let Some(v) = self.clusters {
            cfg.clusters = v;
        }
        if let Some(v) = &self.block_length {
            cfg.block_length = parse_block_length(v).map_err(|e| config_error(e.to_string()))?;
        }
        if let Some(v) = &self.method {
            cfg.method = v.parse().map_err(|e: cbb_core::Error| config_error(e.to_string()))?;
        }
        if let Some(v) = self.model {
            cfg.model = v.spec();
        }
        if let Some(v) = self.recluster_every {
            cfg.recluster_every = v;
        }
        if let Some(v) = self.refit_every {
            cfg.refit_every = v;
        }
        if let Some(v) = &self.out {
            cfg.output = v.clone();
        }
        if cfg.data.is_empty() {
            return Err(config_error("no input data: pass --data or set `data` in the config".into()));
        }
        if cfg.split.is_none() {
            return Err(config_error("no split date: pass --split or set `split` in the config".into()));
        }
        cfg.validate().map_err(|e| Failure::Config(e.into()))?;
        Ok(cfg)
    }
}

fn load_series(paths: &[PathBuf], cfg: &RunConfig) -> Result<DemandSeries> {
    let options = ParseOptions { fill_gaps: cfg.fill_gaps };
    let mut all = Vec::new();
    for path in paths {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let sites = parse_site_csv(BufReader::new(file), &cfg.schema, options)
            .with_context(|| format!("parsing {}", path.display()))?;
        for (site, series) in sites {
            log::info!("{}: site {site}, {} days", path.display(), series.day_count());
            all.push(series);
        }
    }
    Ok(aggregate_sites(&all)?)
}

fn load_holidays(path: Option<&Path>, series: &DemandSeries) -> Result<HolidaySet> {
    match path {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Ok(HolidaySet::from_reader(BufReader::new(file))?)
        }
        None => {
            let first = series.start().year();
            let last = series.date_of(series.day_count() - 1).year();
            Ok(HolidaySet::us_federal(first..=last))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn input_config(input: &InputArgs) -> RunConfig {
    RunConfig {
        data: input.data.clone(),
        holidays: input.holidays.clone(),
        fill_gaps: input.fill_gaps,
        ..RunConfig::default()
    }
}

/// Load data and holidays, classifying failures as data errors.
fn prepare(cfg: &RunConfig) -> std::result::Result<(DemandSeries, HolidaySet), Failure> {
    let series = load_series(&cfg.data, cfg).map_err(Failure::Data)?;
    let holidays = load_holidays(cfg.holidays.as_deref(), &series).map_err(Failure::Data)?;
    Ok((series, holidays))
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Ingest { input, out } => {
            let cfg = input_config(&input);
            let series = load_series(&cfg.data, &cfg).map_err(Failure::Data)?;
            write_demand_csv(&series, create(&out).map_err(Failure::Runtime)?).map_err(|e| classify(e.into()))?;
            println!(
                "{} days from {}, sites: {} -> {}",
                series.day_count(),
                series.start(),
                series.site_count(),
                out.display()
            );
        }
        Command::Features { input, out, max_lag } => {
            let cfg = input_config(&input);
            let (series, holidays) = prepare(&cfg)?;
            let rows = build_features(&series, 1..series.day_count(), &holidays).map_err(|e| classify(e.into()))?;
            write_features(&rows, &out).map_err(classify)?;
            println!("{} rows -> {}", rows.len(), out.display());
            if let Some(max_lag) = max_lag {
                let path = out.with_file_name("correlogram.csv");
                let c = acf_pacf(series.demand(), max_lag).map_err(|e| classify(e.into()))?;
                write_correlogram(&c, &path).map_err(Failure::Runtime)?;
                println!("correlogram to lag {max_lag} -> {}", path.display());
            }
        }
        Command::Elbow { run, k_max } => {
            let cfg = run.resolve()?;
            let (series, _) = prepare(&cfg)?;
            let split = TrainTestSplit::at(&series, cfg.split.expect("resolved"), cfg.test_days)
                .map_err(|e| classify(e.into()))?;
            let days = series.day_vectors(split.train.clone()).map_err(|e| classify(e.into()))?;
            let k_max = k_max.min(days.len());
            let scan = elbow_scan(&days, 1..=k_max, cfg.seed).map_err(|e| classify(e.into()))?;
            let path = cfg.output.join("elbow.csv");
            write_elbow(&scan, create(&path).map_err(Failure::Runtime)?).map_err(|e| classify(e.into()))?;
            for (k, wss) in &scan {
                println!("k={k:<3} wss={wss:.3}");
            }
            if let Some(k) = elbow_point(&scan) {
                println!("elbow at k={k}");
            }
        }
        Command::Backtest { run } => {
            let cfg = run.resolve()?;
            let (series, holidays) = prepare(&cfg)?;
            let out = cbb_core::eval::run_expanding_window(&series, &holidays, &cfg)
                .map_err(|e| classify(e.into()))?;
            write_backtest(&out, &cfg.output).map_err(|e| classify(e.into()))?;
            println!(
                "{} / {}: {} test days, {:.2}s fitting and sampling",
                out.method,
                out.model_label,
                out.forecasts.len(),
                out.train_seconds
            );
            for s in &out.scores {
                println!("  alpha={:<5} ws={:.4} cp={:.4}", s.alpha, s.ws, s.cp);
            }
            println!("outputs in {}", cfg.output.display());
        }
        Command::Compare { run, methods, models } => {
            let base = run.resolve()?;
            let (series, holidays) = prepare(&base)?;
            let methods = methods
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| config_error(e.to_string()))?;
            let configs: Vec<RunConfig> = methods
                .iter()
                .flat_map(|&method| {
                    let base = &base;
                    models.iter().map(move |m| RunConfig {
                        method,
                        model: m.spec(),
                        ..base.clone()
                    })
                })
                .collect();
            let result = compare_methods(&series, &holidays, &configs).map_err(|e| classify(e.into()))?;
            write_comparison(&result, &base.output).map_err(|e| classify(e.into()))?;
            println!("{:<8} {:<4} {:>6} {:>10} {:>7} {:>9}", "method", "model", "alpha", "ws", "cp", "seconds");
            for r in &result.rows {
                println!(
                    "{:<8} {:<4} {:>6} {:>10.4} {:>7.4} {:>9.2}",
                    r.method, r.model, r.alpha, r.ws, r.cp, r.train_seconds
                );
            }
        }
        Command::Synth { days, start, seed, sigma, regime_months, out } => {
            let mut spec = SynthSpec { days, start, ..SynthSpec::default() };
            if let Some(sigma) = sigma {
                spec.noise = NoiseModel::Constant { sigma };
            }
            if !regime_months.is_empty() {
                spec.regime = Some(Regime {
                    months: regime_months,
                    level_multiplier: 1.6,
                    noise_multiplier: 2.0,
                });
            }
            let series = generate_synthetic(&spec, seed).map_err(|e| classify(e.into()))?;
            write_demand_csv(&series, create(&out).map_err(Failure::Runtime)?).map_err(|e| classify(e.into()))?;
            println!("{days} synthetic days -> {}", out.display());
        }
    }
    Ok(())
}

fn write_correlogram(c: &cbb_core::data::Correlogram, out: &Path) -> Result<()> {
    let mut w = create(out)?;
    writeln!(w, "lag,acf,pacf")?;
    for (lag, (acf, pacf)) in c.acf.iter().zip(&c.pacf).enumerate() {
        writeln!(w, "{lag},{acf},{pacf}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_features(rows: &cbb_core::FeatureMatrix, out: &Path) -> Result<()> {
    let mut w = create(out)?;
    writeln!(w, "day,slot,lag1,lag2,temperature,quarter,off_day,target")?;
    for (k, (row, target)) in rows.rows().zip(rows.targets()).enumerate() {
        let (day, slot) = rows.labels()[k];
        write!(w, "{day},{slot}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{target}")?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
