//! Command-line front end: argument and config parsing, command dispatch
//! and record output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mwbarrier::basis::{gram_residual, moment_residual, MAX_LEVEL, MAX_ORDER};
use mwbarrier::format::{full, g6};
use mwbarrier::oracles::{convergence_study, direct_quadrature_price, mc_price};
use mwbarrier::{BasisSpec, DownOutParams, MarketParams, Pricer, QuadratureRule};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_GUARD: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_LEVEL: u32 = 5;
pub const DEFAULT_QUAD_POINTS: usize = 20;
pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_LEVELS: (u32, u32) = (4, 8);
pub const BENCH_MONITORS: [usize; 4] = [5, 25, 125, 250];

const CONFIG_KEYS: [&str; 14] = [
    "spot",
    "strike",
    "lower",
    "upper",
    "rate",
    "vol",
    "maturity",
    "monitors",
    "order",
    "level",
    "quad_points",
    "format",
    "seed",
    "paths",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    /// `--help` or `--version`; the text goes to stdout with exit status 0.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_status(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Info(_) => EXIT_OK,
            CliError::Io(_) => EXIT_GUARD,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Price,
    PriceSingle,
    Converge,
    Bench,
    Oracle,
    SelfTest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

impl OutputFormat {
    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Some(Self::Table),
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Contract; absent for `self-test`. For `price-single` this is the
    /// double barrier proxy with the synthetic upper barrier.
    pub market: Option<MarketParams>,
    pub spec: BasisSpec,
    pub quad_points: usize,
    pub output_format: OutputFormat,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub levels: (u32, u32),
    pub strict: bool,
    pub full_precision: bool,
}

#[derive(Debug, Parser)]
#[command(
    name = "mwbarrier",
    version,
    about = "Discrete barrier option pricing with Legendre multiwavelets"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Price a knock-out double barrier call.
    Price(Common),
    /// Price a down-and-out call through a distant synthetic upper barrier.
    PriceSingle(Common),
    /// L² convergence study over a range of levels.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Level range `a:b`.
        #[arg(long)]
        levels: Option<String>,
    },
    /// Wall time against the number of monitoring dates.
    Bench(Common),
    /// Compare the engine with Monte Carlo and direct quadrature.
    Oracle(Common),
    /// Basis orthonormality and vanishing-moment residuals.
    SelfTest(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    spot: Option<f64>,
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long)]
    lower: Option<f64>,
    #[arg(long)]
    upper: Option<f64>,
    /// Risk-free rate.
    #[arg(long)]
    rate: Option<f64>,
    /// Volatility.
    #[arg(long)]
    vol: Option<f64>,
    #[arg(long)]
    maturity: Option<f64>,
    /// Number of monitoring dates.
    #[arg(long)]
    monitors: Option<usize>,
    /// Multiwavelet order r.
    #[arg(long)]
    order: Option<usize>,
    /// Resolution level J.
    #[arg(long)]
    level: Option<u32>,
    /// Gauss points per cell for kernel integrals.
    #[arg(long)]
    quad_points: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Flat TOML file with default values for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Treat numerical guard warnings as failures (exit status 1).
    #[arg(long)]
    strict: bool,
    /// Print prices with 17 significant digits.
    #[arg(long)]
    full_precision: bool,
}

/// Values from a config file, by key.
#[derive(Debug, Default)]
struct FileValues(BTreeMap<String, toml::Value>);

impl FileValues {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("config: cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| usage(format!("config: {e}")))?;
        for (key, value) in &table {
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(usage(format!("config: unknown key '{key}'")));
            }
            if value.is_table() || value.is_array() {
                return Err(usage(format!("config: '{key}' must be a scalar")));
            }
        }
        Ok(Self(table.into_iter().collect()))
    }

    fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(usage(format!("config: '{key}' must be a number"))),
        }
    }

    fn integer(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(toml::Value::Float(x)) if *x >= 0.0 && x.fract() == 0.0 && *x < 2f64.powi(53) => {
                Ok(Some(*x as u64))
            }
            Some(_) => Err(usage(format!(
                "config: '{key}' must be a non-negative integer"
            ))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&str>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(usage(format!("config: '{key}' must be a string"))),
        }
    }
}

fn parse_levels(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || usage(format!("--levels: expected 'a:b', got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(usage(format!("--levels: '{s}' must be increasing")));
    }
    Ok((a, b))
}

fn to_usize(key: &str, v: Option<u64>) -> Result<Option<usize>, CliError> {
    v.map(|x| usize::try_from(x).map_err(|_| usage(format!("'{key}' is too large"))))
        .transpose()
}

/// Parses `argv` (including the program name) into a validated config.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
            _ => {
                let text = e.to_string();
                usage(text.trim_start_matches("error: ").trim_end())
            }
        }
    })?;

    let (command, c, levels) = match cli.command {
        Sub::Price(c) => (Command::Price, c, None),
        Sub::PriceSingle(c) => (Command::PriceSingle, c, None),
        Sub::Converge { common, levels } => (Command::Converge, common, levels),
        Sub::Bench(c) => (Command::Bench, c, None),
        Sub::Oracle(c) => (Command::Oracle, c, None),
        Sub::SelfTest(c) => (Command::SelfTest, c, None),
    };
    let file = match &c.config {
        Some(path) => FileValues::load(path)?,
        None => FileValues::default(),
    };

    let float = |flag: Option<f64>, key: &str| -> Result<Option<f64>, CliError> {
        Ok(flag.or(file.float(key)?))
    };
    let spot = float(c.spot, "spot")?;
    let strike = float(c.strike, "strike")?;
    let lower = float(c.lower, "lower")?;
    let upper = float(c.upper, "upper")?;
    let rate = float(c.rate, "rate")?;
    let vol = float(c.vol, "vol")?;
    let maturity = float(c.maturity, "maturity")?;
    let monitors = c
        .monitors
        .or(to_usize("monitors", file.integer("monitors")?)?);
    let order = c
        .order
        .or(to_usize("order", file.integer("order")?)?)
        .unwrap_or(DEFAULT_ORDER);
    let level = match c.level {
        Some(l) => l,
        None => match file.integer("level")? {
            Some(l) => u32::try_from(l).map_err(|_| usage("'level' is too large"))?,
            None => DEFAULT_LEVEL,
        },
    };
    let quad_points = c
        .quad_points
        .or(to_usize("quad_points", file.integer("quad_points")?)?)
        .unwrap_or(DEFAULT_QUAD_POINTS);
    let output_format = match c.format {
        Some(f) => f,
        None => match file.string("format")? {
            Some(s) => OutputFormat::parse(s)
                .ok_or_else(|| usage(format!("config: unknown format '{s}'")))?,
            None => OutputFormat::Table,
        },
    };
    let seed = c.seed.or(file.integer("seed")?);
    let paths = c.paths.or(to_usize("paths", file.integer("paths")?)?);

    if !(1..=MAX_ORDER).contains(&order) {
        return Err(usage(format!(
            "--order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    if level > MAX_LEVEL {
        return Err(usage(format!(
            "--level must be at most {MAX_LEVEL}, got {level}"
        )));
    }
    QuadratureRule::cached(quad_points).map_err(|_| {
        usage(format!(
            "--quad-points must be in 1..=64, got {quad_points}"
        ))
    })?;
    let spec = BasisSpec::scaling(order, level).map_err(|e| usage(e.to_string()))?;

    let missing = |name: &str| {
        usage(format!(
            "missing required value '{name}' (--{name} or config key)"
        ))
    };
    let require = |v: Option<f64>, name: &str| v.ok_or_else(|| missing(name));
    let market = match command {
        Command::SelfTest => None,
        Command::PriceSingle => {
            if upper.is_some() {
                return Err(usage("--upper is not accepted by price-single"));
            }
            let d = DownOutParams {
                spot: require(spot, "spot")?,
                strike: require(strike, "strike")?,
                lower: require(lower, "lower")?,
                rate: require(rate, "rate")?,
                vol: require(vol, "vol")?,
                maturity: require(maturity, "maturity")?,
                monitors: monitors.ok_or_else(|| missing("monitors"))?,
            };
            Some(d.to_double_barrier())
        }
        _ => {
            let mut p = MarketParams {
                spot: require(spot, "spot")?,
                strike: require(strike, "strike")?,
                lower: require(lower, "lower")?,
                upper: require(upper, "upper")?,
                rate: require(rate, "rate")?,
                vol: require(vol, "vol")?,
                maturity: require(maturity, "maturity")?,
                monitors: 0,
            };
            p.monitors = match (command, monitors) {
                (_, Some(m)) => m,
                // The benchmark sweeps its own monitoring counts.
                (Command::Bench, None) => BENCH_MONITORS[0],
                (_, None) => return Err(missing("monitors")),
            };
            Some(p)
        }
    };
    if let Some(m) = &market {
        m.validate().map_err(|e| usage(e.to_string()))?;
    }
    if let Some(p) = paths {
        if p < mwbarrier::oracles::MC_MIN_PATHS {
            return Err(usage(format!("--paths must be at least 1000, got {p}")));
        }
    }
    let levels = match levels {
        Some(s) => parse_levels(&s)?,
        None => DEFAULT_LEVELS,
    };
    if command == Command::Converge
        && (levels.0 < mwbarrier::oracles::MIN_STUDY_LEVEL
            || levels.1 > mwbarrier::oracles::MAX_STUDY_LEVEL)
    {
        return Err(usage(format!(
            "--levels must lie within {}:{}",
            mwbarrier::oracles::MIN_STUDY_LEVEL,
            mwbarrier::oracles::MAX_STUDY_LEVEL
        )));
    }

    Ok(RunConfig {
        command,
        market,
        spec,
        quad_points,
        output_format,
        seed,
        paths,
        levels,
        strict: c.strict,
        full_precision: c.full_precision,
    })
}

/// A cell in an output record.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(i64),
    Real(f64),
    /// A real printed with 17 significant digits.
    Exact(f64),
    Text(String),
    Missing,
}

impl Field {
    pub fn render(&self) -> String {
        match self {
            Field::Int(i) => i.to_string(),
            Field::Real(x) => g6(*x),
            Field::Exact(x) => full(*x),
            Field::Text(s) => s.clone(),
            Field::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        let number = |text: String, x: f64| {
            text.parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .or_else(|| serde_json::Number::from_f64(x))
                .map_or(Value::Null, Value::Number)
        };
        match self {
            Field::Int(i) => Value::from(*i),
            Field::Real(x) | Field::Exact(x) => number(self.render(), *x),
            Field::Text(s) => Value::from(s.clone()),
            Field::Missing => Value::Null,
        }
    }
}

/// Records sharing one set of column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
}

impl Report {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> String {
        let mut out = String::new();
        match format {
            OutputFormat::Csv => {
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Field::render).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            OutputFormat::Json => {
                for row in &self.rows {
                    let obj: serde_json::Map<String, serde_json::Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, v)| (k.to_string(), v.json()))
                        .collect();
                    out.push_str(&serde_json::Value::Object(obj).to_string());
                    out.push('\n');
                }
            }
            OutputFormat::Table => {
                let cells: Vec<Vec<String>> = self
                    .rows
                    .iter()
                    .map(|r| r.iter().map(Field::render).collect())
                    .collect();
                let widths: Vec<usize> = self
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(i, c)| cells.iter().map(|r| r[i].len()).fold(c.len(), usize::max))
                    .collect();
                let line = |items: Vec<&str>| {
                    let padded: Vec<String> = items
                        .iter()
                        .zip(&widths)
                        .map(|(s, w)| format!("{s:>w$}"))
                        .collect();
                    padded.join("  ").trim_end().to_string() + "\n"
                };
                out.push_str(&line(self.columns.clone()));
                for r in &cells {
                    out.push_str(&line(r.iter().map(String::as_str).collect()));
                }
            }
        }
        out
    }
}

fn price_field(x: f64, full: bool) -> Field {
    if full {
        Field::Exact(x)
    } else {
        Field::Real(x)
    }
}

fn market(config: &RunConfig) -> MarketParams {
    config
        .market
        .expect("market parameters validated by parse_args")
}

fn pricer(config: &RunConfig) -> Pricer {
    let rule = QuadratureRule::cached(config.quad_points).expect("validated by parse_args");
    Pricer::new(config.spec, rule.clone())
}

fn engine_error(e: mwbarrier::Error) -> CliError {
    usage(e.to_string())
}

/// Outcome of a command: the records and whether a numerical guard tripped.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub warnings: Vec<String>,
}

/// Runs the command without printing.
pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    let mut warnings = Vec::new();
    let report = match config.command {
        Command::Price | Command::PriceSingle => {
            let p = market(config);
            let r = pricer(config).price(&p).map_err(engine_error)?;
            if r.kernel_warning {
                warnings.push(format!(
                    "kernel narrower than a basis cell at level {}; raise --level",
                    config.spec.level()
                ));
            }
            let mut report = Report::new(vec!["price", "N", "M", "t_assembly", "t_propagation"]);
            report.push(vec![
                price_field(r.price, config.full_precision),
                Field::Int(r.dimension as i64),
                Field::Int(r.monitors as i64),
                Field::Real(r.t_assembly),
                Field::Real(r.t_propagation),
            ]);
            report
        }
        Command::Converge => {
            let p = market(config);
            let (a, b) = config.levels;
            let study = convergence_study(&p, config.spec.order(), a, b).map_err(engine_error)?;
            if !study.is_monotone() {
                warnings.push("L² errors are not strictly decreasing in J".into());
            }
            let mut report = Report::new(vec!["J", "e2", "ratio", "slope"]);
            for (i, &j) in study.levels.iter().enumerate() {
                report.push(vec![
                    Field::Int(j as i64),
                    Field::Real(study.errors[i]),
                    if i == 0 {
                        Field::Missing
                    } else {
                        Field::Real(study.ratios[i - 1])
                    },
                    Field::Real(study.fitted_slope),
                ]);
            }
            report
        }
        Command::Bench => {
            let base = market(config);
            let mut report = Report::new(vec!["M", "wall_time", "price"]);
            for m in BENCH_MONITORS {
                // A fresh pricer per row so every timing includes assembly.
                let start = Instant::now();
                let r = pricer(config)
                    .price(&base.with_monitors(m))
                    .map_err(engine_error)?;
                let wall = start.elapsed().as_secs_f64();
                report.push(vec![
                    Field::Int(m as i64),
                    Field::Real(wall),
                    price_field(r.price, config.full_precision),
                ]);
            }
            report
        }
        Command::Oracle => {
            let p = market(config);
            let engine = pricer(config).price(&p).map_err(engine_error)?.price;
            let paths = config.paths.unwrap_or(DEFAULT_PATHS);
            let mc =
                mc_price(&p, paths, config.seed.unwrap_or(DEFAULT_SEED)).map_err(engine_error)?;
            let quad = direct_quadrature_price(&p, mwbarrier::oracles::REFERENCE_NODES)
                .map_err(engine_error)?;
            let max_diff = (engine - quad).abs().max((engine - mc.estimate).abs());
            if (engine - mc.estimate).abs() > 3.0 * mc.std_error {
                warnings
                    .push("engine price is more than 3 standard errors from Monte Carlo".into());
            }
            let mut report = Report::new(vec![
                "mc_estimate",
                "std_error",
                "direct_quad",
                "engine",
                "max_abs_diff",
            ]);
            let f = config.full_precision;
            report.push(vec![
                price_field(mc.estimate, f),
                Field::Real(mc.std_error),
                price_field(quad, f),
                price_field(engine, f),
                Field::Real(max_diff),
            ]);
            report
        }
        Command::SelfTest => {
            let mut report = Report::new(vec![
                "order",
                "level",
                "gram_residual",
                "moment_residual",
                "ok",
            ]);
            for r in 1..=MAX_ORDER {
                let spec = BasisSpec::wavelet(r, config.spec.level()).map_err(engine_error)?;
                let g = gram_residual(spec).map_err(engine_error)?;
                let m = moment_residual(r).map_err(engine_error)?;
                let ok = g <= 1e-10 && m <= 1e-12;
                if !ok {
                    warnings.push(format!("basis residuals too large for order {r}"));
                }
                report.push(vec![
                    Field::Int(r as i64),
                    Field::Int(config.spec.level() as i64),
                    Field::Real(g),
                    Field::Real(m),
                    Field::Text(ok.to_string()),
                ]);
            }
            report
        }
    };
    Ok(Outcome { report, warnings })
}

/// Runs the command, writing records to `out` and warnings to `err`, and
/// returns the exit status.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(config) {
        Ok(outcome) => {
            if let Err(e) = out.write_all(outcome.report.render(config.output_format).as_bytes()) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_GUARD;
            }
            for w in &outcome.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            // Self-test failures are always fatal; other guards only under --strict.
            let fatal = config.command == Command::SelfTest || config.strict;
            if fatal && !outcome.warnings.is_empty() {
                EXIT_GUARD
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_status()
        }
    }
}

/// Parses and runs; the whole program apart from process exit.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_args(argv) {
        Ok(config) => run(&config, out, err),
        Err(CliError::Info(text)) => {
            let _ = write!(out, "{text}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_status()
        }
    }
}
