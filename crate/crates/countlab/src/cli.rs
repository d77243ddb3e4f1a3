//! Command-line front end: density evaluation, sampling, fitting, and the
//! verification suite over files or stdin/stdout.
//!
//! Conventions: bulk numeric data is CSV (one vector per row, no header
//! unless `--header`), structured results are JSON, logs go to stderr and
//! data to stdout or `--out`. Floating-point values are printed in the
//! shortest form that parses back to the identical 64-bit value. Exit codes:
//! 0 success, 1 verification failure, 2 usage or validation error, 3 fit did
//! not converge.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dist::{
    dirichlet_log_pdf, dirmult_log_pmf, gamma_log_pdf, multinomial_log_pmf, negbin_log_pmf,
    poisson_log_pmf, CountVector, DirMultParam, DirichletParam, GammaParam, MultinomialParam,
    NegBinParam, PoissonParam, SimplexVector,
};
use crate::fitting::{fit_dirmult, fit_negbin, fit_poisson};
use crate::samplers::{
    sample_dirichlet, sample_dirmult, sample_dirmult_by_conditioning, sample_gamma,
    sample_multinomial, sample_multinomial_by_conditioning, sample_negbin, sample_poisson,
    RngStream,
};
use crate::verify::{manifest, run_theorem_suite, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Environment variable consulted for the seed when `--seed` is absent.
pub const SEED_ENV_VAR: &str = "COUNTLAB_SEED";
const DEFAULT_SEED: u64 = 12_648_430;

#[derive(Parser)]
#[command(name = "countlab", version, about = "Count and compositional distributions: \
evaluate, sample, fit, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate log-densities, one per input row
    Pmf(PmfArgs),
    /// Draw reproducible samples as CSV rows
    Sample(SampleArgs),
    /// Maximum-likelihood fit, written as JSON
    Fit(FitArgs),
    /// Run the equivalence and goodness-of-fit suite
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Poisson,
    Gamma,
    Negbin,
    Dirichlet,
    Multinomial,
    Dirmult,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Construction {
    /// Composition sampler (the default path for every family)
    Default,
    /// Conditioned-independents rejection sampler (multinomial, dirmult)
    Conditioned,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct PmfArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Family parameters as k=v pairs, vectors comma-separated:
    /// e.g. --params alphas=1,1,m=1
    #[arg(long)]
    params: String,
    /// Input CSV path (stdin when absent)
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    /// Output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv: one value per row; json: a single array
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Emit a CSV header line
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    params: String,
    /// Number of draws
    #[arg(long)]
    n: u64,
    /// Seed (falls back to COUNTLAB_SEED, then a fixed default)
    #[arg(long)]
    seed: Option<u64>,
    /// Stream id within the seed
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long, value_enum, default_value_t = Construction::Default)]
    construction: Construction,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv: one draw per row; json: an array of rows
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Emit a CSV header line
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON configuration narrowing grids or overriding tolerances
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Comma-separated list of check names to run
    #[arg(long)]
    only: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in the report (off by default so identical
    /// runs produce identical bytes)
    #[arg(long)]
    timings: bool,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Pmf(args) => cmd_pmf(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| Failure::usage(format!("{SEED_ENV_VAR} is not a valid seed: {text:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display()))),
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Failure::usage(format!("cannot read stdin: {e}")))?;
            Ok(buf)
        }
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let file = fs::File::create(p)
                .map_err(|e| Failure::usage(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

/// Parsed `--params` map: each key holds one or more numbers.
struct ParamMap {
    values: BTreeMap<String, Vec<f64>>,
}

impl ParamMap {
    /// Grammar: comma-separated `key=value` pairs; a comma-separated run of
    /// bare numbers after a pair extends that pair's value into a vector,
    /// so `alphas=1,2,3,m=4` reads as alphas=[1,2,3], m=4.
    fn parse(text: &str) -> Result<Self, Failure> {
        let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for piece in text.split(',') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            if let Some((key, first)) = piece.split_once('=') {
                let key = key.trim().to_string();
                if values.contains_key(&key) {
                    return Err(Failure::usage(format!("duplicate parameter {key:?}")));
                }
                let v = parse_number(first, &key)?;
                values.insert(key.clone(), vec![v]);
                current = Some(key);
            } else {
                let key = current
                    .clone()
                    .ok_or_else(|| Failure::usage(format!("stray value {piece:?} in --params")))?;
                let v = parse_number(piece, &key)?;
                values.get_mut(&key).expect("current key exists").push(v);
            }
        }
        if values.is_empty() {
            return Err(Failure::usage("--params is empty"));
        }
        Ok(Self { values })
    }

    fn scalar(&mut self, key: &str) -> Result<f64, Failure> {
        let v = self
            .values
            .remove(key)
            .ok_or_else(|| Failure::usage(format!("missing parameter {key:?}")))?;
        if v.len() != 1 {
            return Err(Failure::usage(format!("parameter {key:?} must be a single number")));
        }
        Ok(v[0])
    }

    fn scalar_opt(&mut self, key: &str) -> Result<Option<f64>, Failure> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Failure::usage(format!("parameter {key:?} must be a single number"))),
        }
    }

    fn count(&mut self, key: &str) -> Result<u64, Failure> {
        let v = self.scalar(key)?;
        if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(Failure::usage(format!(
                "parameter {key:?} must be a non-negative integer, got {v}"
            )));
        }
        Ok(v as u64)
    }

    fn vector(&mut self, key: &str) -> Result<Vec<f64>, Failure> {
        self.values
            .remove(key)
            .ok_or_else(|| Failure::usage(format!("missing parameter {key:?}")))
    }

    fn finish(self) -> Result<(), Failure> {
        if let Some(key) = self.values.keys().next() {
            return Err(Failure::usage(format!("unexpected parameter {key:?}")));
        }
        Ok(())
    }
}

fn parse_number(text: &str, key: &str) -> Result<f64, Failure> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("parameter {key:?}: invalid number {text:?}")))?;
    if !v.is_finite() {
        return Err(Failure::usage(format!("parameter {key:?} must be finite")));
    }
    Ok(v)
}

fn parse_count_row(row: &str, row_number: usize) -> Result<Vec<u64>, Failure> {
    row.split(',')
        .enumerate()
        .map(|(i, field)| {
            field.trim().parse::<u64>().map_err(|_| {
                Failure::usage(format!(
                    "row {row_number}, field {}: invalid count {:?}",
                    i + 1,
                    field.trim()
                ))
            })
        })
        .collect()
}

fn parse_real_row(row: &str, row_number: usize) -> Result<Vec<f64>, Failure> {
    row.split(',')
        .enumerate()
        .map(|(i, field)| {
            field.trim().parse::<f64>().map_err(|_| {
                Failure::usage(format!(
                    "row {row_number}, field {}: invalid number {:?}",
                    i + 1,
                    field.trim()
                ))
            })
        })
        .collect()
}

fn data_rows(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty())
}

/// Shortest representation that parses back to the same f64 ("-1.0" style).
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn expect_width(row_number: usize, got: usize, want: usize) -> Result<(), Failure> {
    if got != want {
        return Err(Failure::usage(format!(
            "row {row_number}: expected {want} field(s), got {got}"
        )));
    }
    Ok(())
}

/// Streams CSV rows or accumulates a JSON array, depending on the format.
struct RowSink {
    format: OutputFormat,
    out: Box<dyn Write>,
    json_rows: Vec<serde_json::Value>,
}

impl RowSink {
    fn new(
        format: OutputFormat,
        mut out: Box<dyn Write>,
        header: Option<Vec<String>>,
    ) -> Result<Self, Failure> {
        if format == OutputFormat::Csv {
            if let Some(names) = header {
                writeln!(out, "{}", names.join(","))
                    .map_err(|e| Failure::usage(format!("write failed: {e}")))?;
            }
        }
        Ok(Self { format, out, json_rows: Vec::new() })
    }

    fn write_line(&mut self, line: String) -> Result<(), Failure> {
        writeln!(self.out, "{line}").map_err(|e| Failure::usage(format!("write failed: {e}")))
    }

    fn real(&mut self, v: f64) -> Result<(), Failure> {
        match self.format {
            OutputFormat::Csv => self.write_line(fmt_f64(v)),
            OutputFormat::Json => {
                self.json_rows.push(serde_json::json!(v));
                Ok(())
            }
        }
    }

    fn reals(&mut self, row: &[f64]) -> Result<(), Failure> {
        match self.format {
            OutputFormat::Csv => {
                let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
                self.write_line(cells.join(","))
            }
            OutputFormat::Json => {
                self.json_rows.push(serde_json::json!(row));
                Ok(())
            }
        }
    }

    fn count(&mut self, v: u64) -> Result<(), Failure> {
        match self.format {
            OutputFormat::Csv => self.write_line(v.to_string()),
            OutputFormat::Json => {
                self.json_rows.push(serde_json::json!(v));
                Ok(())
            }
        }
    }

    fn counts(&mut self, row: &[u64]) -> Result<(), Failure> {
        match self.format {
            OutputFormat::Csv => {
                let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                self.write_line(cells.join(","))
            }
            OutputFormat::Json => {
                self.json_rows.push(serde_json::json!(row));
                Ok(())
            }
        }
    }

    fn finish(mut self) -> Result<(), Failure> {
        if self.format == OutputFormat::Json {
            let text = serde_json::to_string_pretty(&self.json_rows)
                .expect("rows of numbers serialize");
            self.write_line(text)?;
        }
        self.out.flush().map_err(|e| Failure::usage(format!("write failed: {e}")))
    }
}

fn column_names(width: usize) -> Vec<String> {
    if width == 1 {
        vec!["x".to_string()]
    } else {
        (1..=width).map(|i| format!("x{i}")).collect()
    }
}

fn cmd_pmf(args: PmfArgs) -> Result<i32, Failure> {
    let mut params = ParamMap::parse(&args.params)?;
    let input = read_input(&args.input)?;
    let header = args.header.then(|| vec!["log_density".to_string()]);
    let mut sink = RowSink::new(args.format, open_output(&args.out)?, header)?;
    match args.family {
        Family::Poisson => {
            let p = PoissonParam::new(params.scalar("lambda")?)?;
            params.finish()?;
            for (row_number, row) in data_rows(&input) {
                let fields = parse_count_row(row, row_number)?;
                expect_width(row_number, fields.len(), 1)?;
                sink.real(poisson_log_pmf(&p, fields[0]))?;
            }
        }
        Family::Negbin => {
            let p = negbin_param(&mut params)?;
            params.finish()?;
            for (row_number, row) in data_rows(&input) {
                let fields = parse_count_row(row, row_number)?;
                expect_width(row_number, fields.len(), 1)?;
                sink.real(negbin_log_pmf(&p, fields[0]))?;
            }
        }
        Family::Gamma => {
            let p = gamma_param(&mut params)?;
            params.finish()?;
            for (row_number, row) in data_rows(&input) {
                let fields = parse_real_row(row, row_number)?;
                expect_width(row_number, fields.len(), 1)?;
                let v = gamma_log_pdf(&p, fields[0])
                    .map_err(|e| Failure::usage(format!("row {row_number}, field 1: {e}")))?;
                sink.real(v)?;
            }
        }
        Family::Dirichlet => {
            let p = DirichletParam::new(params.vector("alphas")?)?;
            params.finish()?;
            for (row_number, row) in data_rows(&input) {
                let fields = parse_real_row(row, row_number)?;
                expect_width(row_number, fields.len(), p.dim())?;
                let z = SimplexVector::new(fields)
                    .map_err(|e| Failure::usage(format!("row {row_number}: {e}")))?;
                let v = dirichlet_log_pdf(&p, &z)
                    .map_err(|e| Failure::usage(format!("row {row_number}: {e}")))?;
                sink.real(v)?;
            }
        }
        Family::Multinomial => {
            let m = params.count("m")?;
            let probs = SimplexVector::new(params.vector("probs")?)?;
            params.finish()?;
            let p = MultinomialParam::new(m, probs);
            for (row_number, row) in data_rows(&input) {
                let fields = parse_count_row(row, row_number)?;
                expect_width(row_number, fields.len(), p.dim())?;
                let v = multinomial_log_pmf(&p, &CountVector::new(fields))
                    .map_err(|e| Failure::usage(format!("row {row_number}: {e}")))?;
                sink.real(v)?;
            }
        }
        Family::Dirmult => {
            let m = params.count("m")?;
            let p = DirMultParam::new(m, params.vector("alphas")?)?;
            params.finish()?;
            for (row_number, row) in data_rows(&input) {
                let fields = parse_count_row(row, row_number)?;
                expect_width(row_number, fields.len(), p.dim())?;
                let v = dirmult_log_pmf(&p, &CountVector::new(fields))
                    .map_err(|e| Failure::usage(format!("row {row_number}: {e}")))?;
                sink.real(v)?;
            }
        }
    }
    sink.finish()?;
    Ok(EXIT_OK)
}

fn gamma_param(params: &mut ParamMap) -> Result<GammaParam, Failure> {
    let alpha = params.scalar("alpha")?;
    match (params.scalar_opt("beta")?, params.scalar_opt("mu")?) {
        (Some(beta), None) => Ok(GammaParam::new(alpha, beta)?),
        (None, Some(mu)) => Ok(GammaParam::from_mean(alpha, mu)?),
        _ => Err(Failure::usage("gamma needs alpha plus exactly one of beta or mu")),
    }
}

fn negbin_param(params: &mut ParamMap) -> Result<NegBinParam, Failure> {
    let alpha = params.scalar("alpha")?;
    match (params.scalar_opt("theta")?, params.scalar_opt("mu")?) {
        (Some(theta), None) => Ok(NegBinParam::new(alpha, theta)?),
        (None, Some(mu)) => Ok(NegBinParam::from_mean(alpha, mu)?),
        _ => Err(Failure::usage("negbin needs alpha plus exactly one of theta or mu")),
    }
}

fn cmd_sample(args: SampleArgs) -> Result<i32, Failure> {
    if args.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let seed = resolve_seed(args.seed)?;
    let mut rng = RngStream::new(seed, args.stream);
    let mut params = ParamMap::parse(&args.params)?;
    let out = open_output(&args.out)?;
    let sink_for = |width: usize, out: Box<dyn Write>, header: bool| {
        RowSink::new(args.format, out, header.then(|| column_names(width)))
    };

    if args.construction == Construction::Conditioned {
        match args.family {
            Family::Multinomial => {
                let lambdas = params.vector("lambdas")?;
                let m = params.count("m")?;
                params.finish()?;
                let mut sink = sink_for(lambdas.len(), out, args.header)?;
                for _ in 0..args.n {
                    let x = sample_multinomial_by_conditioning(&mut rng, &lambdas, m)?;
                    sink.counts(x.counts())?;
                }
                sink.finish()?;
            }
            Family::Dirmult => {
                let alphas = params.vector("alphas")?;
                let theta = params.scalar("theta")?;
                let m = params.count("m")?;
                params.finish()?;
                let mut sink = sink_for(alphas.len(), out, args.header)?;
                for _ in 0..args.n {
                    let x = sample_dirmult_by_conditioning(&mut rng, &alphas, theta, m)?;
                    sink.counts(x.counts())?;
                }
                sink.finish()?;
            }
            _ => {
                return Err(Failure::usage(
                    "--construction conditioned applies to multinomial and dirmult only",
                ))
            }
        }
        return Ok(EXIT_OK);
    }

    match args.family {
        Family::Poisson => {
            let p = PoissonParam::new(params.scalar("lambda")?)?;
            params.finish()?;
            let mut sink = sink_for(1, out, args.header)?;
            for _ in 0..args.n {
                sink.count(sample_poisson(&mut rng, &p))?;
            }
            sink.finish()?;
        }
        Family::Negbin => {
            let p = negbin_param(&mut params)?;
            params.finish()?;
            let mut sink = sink_for(1, out, args.header)?;
            for _ in 0..args.n {
                sink.count(sample_negbin(&mut rng, &p))?;
            }
            sink.finish()?;
        }
        Family::Gamma => {
            let p = gamma_param(&mut params)?;
            params.finish()?;
            let mut sink = sink_for(1, out, args.header)?;
            for _ in 0..args.n {
                sink.real(sample_gamma(&mut rng, &p))?;
            }
            sink.finish()?;
        }
        Family::Dirichlet => {
            let p = DirichletParam::new(params.vector("alphas")?)?;
            params.finish()?;
            let mut sink = sink_for(p.dim(), out, args.header)?;
            for _ in 0..args.n {
                sink.reals(sample_dirichlet(&mut rng, &p).coords())?;
            }
            sink.finish()?;
        }
        Family::Multinomial => {
            let m = params.count("m")?;
            let probs = SimplexVector::new(params.vector("probs")?)?;
            params.finish()?;
            let p = MultinomialParam::new(m, probs);
            let mut sink = sink_for(p.dim(), out, args.header)?;
            for _ in 0..args.n {
                sink.counts(sample_multinomial(&mut rng, &p).counts())?;
            }
            sink.finish()?;
        }
        Family::Dirmult => {
            let m = params.count("m")?;
            let p = DirMultParam::new(m, params.vector("alphas")?)?;
            params.finish()?;
            let mut sink = sink_for(p.dim(), out, args.header)?;
            for _ in 0..args.n {
                sink.counts(sample_dirmult(&mut rng, &p).counts())?;
            }
            sink.finish()?;
        }
    }
    Ok(EXIT_OK)
}


fn cmd_fit(args: FitArgs) -> Result<i32, Failure> {
    let input = read_input(&args.input)?;
    let (json, converged) = match args.family {
        Family::Poisson => {
            let data = flat_counts(&input)?;
            let fit = fit_poisson(&data)?;
            (fit_json("poisson", serde_json::json!({ "lambda": fit.params.lambda() }), &fit), fit.converged)
        }
        Family::Negbin => {
            let data = flat_counts(&input)?;
            let fit = fit_negbin(&data)?;
            (
                fit_json(
                    "negbin",
                    serde_json::json!({
                        "alpha": fit.params.alpha(),
                        "theta": fit.params.theta(),
                        "mu": fit.params.mu(),
                    }),
                    &fit,
                ),
                fit.converged,
            )
        }
        Family::Dirmult => {
            let mut rows = Vec::new();
            let mut width = None;
            for (row_number, row) in data_rows(&input) {
                let fields = parse_count_row(row, row_number)?;
                if let Some(w) = width {
                    expect_width(row_number, fields.len(), w)?;
                } else {
                    width = Some(fields.len());
                }
                rows.push(CountVector::new(fields));
            }
            if rows.is_empty() {
                return Err(Failure::usage("no input rows"));
            }
            let fit = fit_dirmult(&rows)?;
            (
                fit_json(
                    "dirmult",
                    serde_json::json!({
                        "alphas": fit.params.alphas(),
                        "alpha0": fit.params.alpha0(),
                    }),
                    &fit,
                ),
                fit.converged,
            )
        }
        _ => return Err(Failure::usage("fit supports poisson, negbin, and dirmult")),
    };
    let mut out = open_output(&args.out)?;
    writeln!(out, "{json}").map_err(|e| Failure::usage(format!("write failed: {e}")))?;
    out.flush().map_err(|e| Failure::usage(format!("write failed: {e}")))?;
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn flat_counts(input: &str) -> Result<Vec<u64>, Failure> {
    let mut data = Vec::new();
    for (row_number, row) in data_rows(input) {
        data.extend(parse_count_row(row, row_number)?);
    }
    if data.is_empty() {
        return Err(Failure::usage("no input rows"));
    }
    Ok(data)
}

fn fit_json<P>(family: &str, params: serde_json::Value, fit: &crate::fitting::FitResult<P>) -> String {
    let value = serde_json::json!({
        "family": family,
        "params": params,
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "gradient_norm": fit.gradient_norm,
        "status": serde_json::to_value(fit.status).expect("status serializes"),
    });
    serde_json::to_string_pretty(&value).expect("fit result serializes")
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<VerifyConfig>(&text)
                .map_err(|e| Failure::usage(format!("bad configuration: {e}")))?
        }
        None => VerifyConfig::default(),
    };
    if let Some(only) = &args.only {
        let names: Vec<String> =
            only.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        for name in &names {
            if !manifest().contains(&name.as_str()) {
                return Err(Failure::usage(format!(
                    "unknown check {name:?}; known checks: {}",
                    manifest().join(", ")
                )));
            }
        }
        config.only = Some(names);
    }
    config.validate().map_err(|e| Failure::usage(format!("bad configuration: {e}")))?;
    let seed = resolve_seed(args.seed)?;
    let report = run_theorem_suite(seed, &config);
    for check in &report.checks {
        eprintln!(
            "[{}] {} [{}]",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.grid_point
        );
    }
    eprintln!(
        "{} of {} checks passed (seed {seed})",
        report.checks.len() - report.failed_checks().len(),
        report.checks.len()
    );
    let mut out = open_output(&args.out)?;
    writeln!(out, "{}", report.to_json(args.timings))
        .map_err(|e| Failure::usage(format!("write failed: {e}")))?;
    out.flush().map_err(|e| Failure::usage(format!("write failed: {e}")))?;
    Ok(if report.overall_passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_map_vector_grammar() {
        let mut p = ParamMap::parse("alphas=1,2,3,m=4").unwrap();
        assert_eq!(p.vector("alphas").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(p.count("m").unwrap(), 4);
        p.finish().unwrap();
    }

    #[test]
    fn param_map_rejects_malformed_input() {
        assert!(ParamMap::parse("1,2,3").is_err()); // no key
        assert!(ParamMap::parse("a=1,a=2").is_err()); // duplicate
        assert!(ParamMap::parse("a=x").is_err()); // not a number
        assert!(ParamMap::parse("").is_err());

        let mut p = ParamMap::parse("m=2.5").unwrap();
        assert!(p.count("m").is_err()); // not an integer

        let p = ParamMap::parse("a=1,b=2").unwrap();
        assert!(p.finish().is_err()); // both keys unexpected
    }

    #[test]
    fn count_row_errors_name_row_and_field() {
        let err = parse_count_row("1,x", 3).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE);
        assert!(err.message.contains("row 3"), "{}", err.message);
        assert!(err.message.contains("field 2"), "{}", err.message);
    }

    #[test]
    fn fmt_f64_is_shortest_round_trip() {
        assert_eq!(fmt_f64(-1.0), "-1.0");
        assert_eq!(fmt_f64(0.1), "0.1");
        let v = -std::f64::consts::LN_2;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}
