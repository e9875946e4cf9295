//! freqfit: fit, test, and compare heavy-tailed frequency distributions.
//!
//! The binary is a thin orchestration layer over `freqfit-core`. Input is
//! tab-separated frequency data (or wordlists for `ingest`); output goes to
//! stdout unless `--output` names a file. Exit status is nonzero only for
//! input, parse, or protocol problems — per-language fit failures are data,
//! reported inside the output rows.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use freqfit_core::batch::{
    emit_plot_data, run_batch, summarize, write_rows_csv, write_rows_json, write_summary_csv,
    write_summary_json, RunConfig,
};
use freqfit_core::compare::pairwise_with_shared_xmin;
use freqfit_core::corpus::{
    count_segments, filter_min_words, parse_frequency_table, parse_wordlist,
    write_frequency_table, FrequencyTable,
};
use freqfit_core::fit::{fit_fixed_xmin, fit_with_xmin_scan, FitConfig, FittedModel};
use freqfit_core::generate::{
    simulate_birth_death, simulate_preferential_attachment, simulate_stick_breaking,
    BirthDeathConfig, UrnConfig,
};
use freqfit_core::gof::bootstrap_p;
use freqfit_core::{ModelKind, ModelParams};

#[derive(Parser)]
#[command(
    name = "freqfit",
    version,
    about = "Maximum-likelihood fitting and bootstrap evaluation of heavy-tailed frequency data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a wordlist TSV (language, word) into a frequency TSV
    Ingest(IngestArgs),
    /// Maximum-likelihood fits, one row per language and kind
    Fit(FitArgs),
    /// Bootstrap goodness-of-fit p-values for one kind
    Gof(GofArgs),
    /// Vuong likelihood-ratio comparison of two kinds at shared cutoffs
    Compare(CompareArgs),
    /// Fit and bootstrap every kind and cutoff variant for every language
    Batch(BatchArgs),
    /// Generate synthetic frequency data from stochastic processes
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Emit rank-frequency plot data with expected-frequency columns
    Plot(PlotArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Args)]
struct IngestArgs {
    /// Wordlist TSV; `-` reads stdin
    input: PathBuf,
    /// Drop languages with fewer words than this
    #[arg(long, default_value_t = 250)]
    min_words: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Frequency TSV; `-` reads stdin
    input: PathBuf,
    /// Restrict to one kind (default: all four)
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ModelKind>,
    /// Scan for the KS-minimizing xmin instead of using the smallest value
    #[arg(long, conflicts_with = "xmin")]
    scan: bool,
    /// Pin xmin to a fixed value
    #[arg(long)]
    xmin: Option<u64>,
    #[arg(long, default_value_t = 5)]
    min_tail: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GofArgs {
    /// Frequency TSV; `-` reads stdin
    input: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    kind: ModelKind,
    #[arg(long)]
    scan: bool,
    #[arg(long, default_value_t = 10_000)]
    iterations: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    #[arg(long, default_value_t = 5)]
    min_tail: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Frequency TSV; `-` reads stdin
    input: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    kind_a: ModelKind,
    #[arg(long, value_parser = parse_kind)]
    kind_b: ModelKind,
    #[arg(long, default_value_t = 5)]
    min_tail: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    /// Frequency TSV; `-` reads stdin
    input: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    iterations: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    #[arg(long, default_value_t = 5)]
    min_tail: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Destination for the per-language rows (default stdout)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write a per-kind summary table here
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Preferential-attachment urns
    Urn {
        #[arg(long)]
        urns: usize,
        #[arg(long)]
        balls: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Birth-death token dynamics over a fixed type inventory
    BirthDeath {
        #[arg(long)]
        birth_rate: f64,
        #[arg(long)]
        death_rate: f64,
        #[arg(long)]
        types: usize,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Uniform stick-breaking rank spectra
    StickBreaking {
        /// Parts per broken stick
        #[arg(long)]
        parts: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PlotArgs {
    /// Frequency TSV; `-` reads stdin
    input: PathBuf,
    /// Language to plot (required when the input holds several)
    #[arg(long)]
    language: Option<String>,
    /// Kinds to overlay (default: all four)
    #[arg(long, value_parser = parse_kind)]
    kind: Vec<ModelKind>,
    /// Use scanned cutoffs for the overlays
    #[arg(long)]
    scan: bool,
    #[arg(long, default_value_t = 5)]
    min_tail: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        if is_broken_pipe(&e) {
            // Downstream closed early (`freqfit ... | head`); not an error.
            return;
        }
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    if e.chain().any(|cause| {
        cause
            .downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    }) {
        return true;
    }
    // Writers in the core crate flatten I/O failures into message strings.
    format!("{e:#}").contains("Broken pipe")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Fit(args) => fit(args),
        Command::Gof(args) => gof(args),
        Command::Compare(args) => compare(args),
        Command::Batch(args) => batch(args),
        Command::Simulate(args) => simulate(args),
        Command::Plot(args) => plot(args),
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let file =
            File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => {
            let file =
                File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

fn read_tables(path: &Path) -> Result<Vec<FrequencyTable>> {
    let tables = parse_frequency_table(open_input(path)?)?;
    if tables.is_empty() {
        bail!("{}: no frequency data", path.display());
    }
    Ok(tables)
}

fn fit_config(min_tail: usize) -> FitConfig {
    FitConfig { min_tail, ..FitConfig::default() }
}

fn ingest(args: IngestArgs) -> Result<()> {
    let lists = parse_wordlist(open_input(&args.input)?)?;
    let kept = filter_min_words(lists, args.min_words);
    let tables: Vec<FrequencyTable> = kept
        .iter()
        .map(count_segments)
        .collect::<freqfit_core::Result<_>>()?;
    let mut out = open_output(args.output.as_deref())?;
    write_frequency_table(&tables, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Exploded parameter columns shared by the fit/gof CSV layouts.
fn param_columns(params: Option<&ModelParams>) -> [Option<f64>; 5] {
    match params {
        None => [None; 5],
        Some(ModelParams::PowerLaw { alpha }) => [Some(*alpha), None, None, None, None],
        Some(ModelParams::Lognormal { mu_log, sigma_log }) => {
            [None, Some(*mu_log), Some(*sigma_log), None, None]
        }
        Some(ModelParams::Exponential { lambda }) => [None, None, None, Some(*lambda), None],
        Some(ModelParams::Poisson { rate }) => [None, None, None, None, Some(*rate)],
    }
}

fn opt_str<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct FitRow {
    language_id: String,
    kind: ModelKind,
    used_xmin_scan: bool,
    params: Option<ModelParams>,
    xmin: Option<u64>,
    n_tail: Option<usize>,
    log_likelihood: Option<f64>,
    ks: Option<f64>,
    error: Option<String>,
}

impl FitRow {
    fn new(language_id: &str, kind: ModelKind, scan: bool) -> Self {
        FitRow {
            language_id: language_id.to_string(),
            kind,
            used_xmin_scan: scan,
            params: None,
            xmin: None,
            n_tail: None,
            log_likelihood: None,
            ks: None,
            error: None,
        }
    }

    fn fill(&mut self, fitted: &FittedModel) {
        self.params = Some(fitted.params);
        self.xmin = Some(fitted.xmin);
        self.n_tail = Some(fitted.n_tail);
        self.log_likelihood = Some(fitted.log_likelihood);
        self.ks = Some(fitted.ks);
    }
}

fn fit(args: FitArgs) -> Result<()> {
    let tables = read_tables(&args.input)?;
    let config = fit_config(args.min_tail);
    let kinds: Vec<ModelKind> = match args.kind {
        Some(k) => vec![k],
        None => ModelKind::ALL.to_vec(),
    };

    let mut rows = Vec::new();
    for table in &tables {
        let data = table.counts();
        for &kind in &kinds {
            let mut row = FitRow::new(table.language_id(), kind, args.scan);
            let outcome = if args.scan {
                fit_with_xmin_scan(kind, &data, &config)
            } else {
                let xmin = args
                    .xmin
                    .unwrap_or_else(|| *data.iter().min().expect("nonempty table"));
                fit_fixed_xmin(kind, &data, xmin, &config)
            };
            match outcome {
                Ok(fitted) => row.fill(&fitted),
                Err(e) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
    }

    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Json => serde_json::to_writer_pretty(&mut out, &rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "language_id",
                "kind",
                "used_xmin_scan",
                "alpha",
                "mu_log",
                "sigma_log",
                "lambda",
                "rate",
                "xmin",
                "n_tail",
                "log_likelihood",
                "ks",
                "error",
            ])?;
            for row in &rows {
                let [alpha, mu, sigma, lambda, rate] = param_columns(row.params.as_ref());
                w.write_record([
                    row.language_id.clone(),
                    row.kind.label().to_string(),
                    row.used_xmin_scan.to_string(),
                    opt_str(&alpha),
                    opt_str(&mu),
                    opt_str(&sigma),
                    opt_str(&lambda),
                    opt_str(&rate),
                    opt_str(&row.xmin),
                    opt_str(&row.n_tail),
                    opt_str(&row.log_likelihood),
                    opt_str(&row.ks),
                    opt_str(&row.error),
                ])?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GofRow {
    language_id: String,
    kind: ModelKind,
    used_xmin_scan: bool,
    params: Option<ModelParams>,
    xmin: Option<u64>,
    n_tail: Option<usize>,
    ks: Option<f64>,
    p_value: Option<f64>,
    plausible: Option<bool>,
    iterations: u64,
    seed: u64,
    failed_replicates: Option<u64>,
    error: Option<String>,
}

fn gof(args: GofArgs) -> Result<()> {
    if !(args.threshold.is_finite() && (0.0..1.0).contains(&args.threshold)) {
        bail!("threshold {} must lie in [0, 1)", args.threshold);
    }
    let tables = read_tables(&args.input)?;
    let config = fit_config(args.min_tail);

    let mut rows = Vec::new();
    for table in &tables {
        let data = table.counts();
        let mut row = GofRow {
            language_id: table.language_id().to_string(),
            kind: args.kind,
            used_xmin_scan: args.scan,
            params: None,
            xmin: None,
            n_tail: None,
            ks: None,
            p_value: None,
            plausible: None,
            iterations: args.iterations,
            seed: freqfit_core::seed::derive_label(args.seed, table.language_id()),
            failed_replicates: None,
            error: None,
        };
        let outcome = if args.scan {
            fit_with_xmin_scan(args.kind, &data, &config)
        } else {
            let xmin = *data.iter().min().expect("nonempty table");
            fit_fixed_xmin(args.kind, &data, xmin, &config)
        };
        match outcome.and_then(|fitted| {
            bootstrap_p(&data, &fitted, args.iterations, row.seed, &config)
                .map(|boot| (fitted, boot))
        }) {
            Ok((fitted, boot)) => {
                row.params = Some(fitted.params);
                row.xmin = Some(fitted.xmin);
                row.n_tail = Some(fitted.n_tail);
                row.ks = Some(fitted.ks);
                row.p_value = Some(boot.p_value);
                row.plausible = Some(boot.p_value > args.threshold);
                row.failed_replicates = Some(boot.failed_replicates);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }

    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Json => serde_json::to_writer_pretty(&mut out, &rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "language_id",
                "kind",
                "used_xmin_scan",
                "alpha",
                "mu_log",
                "sigma_log",
                "lambda",
                "rate",
                "xmin",
                "n_tail",
                "ks",
                "p_value",
                "plausible",
                "iterations",
                "seed",
                "failed_replicates",
                "error",
            ])?;
            for row in &rows {
                let [alpha, mu, sigma, lambda, rate] = param_columns(row.params.as_ref());
                w.write_record([
                    row.language_id.clone(),
                    row.kind.label().to_string(),
                    row.used_xmin_scan.to_string(),
                    opt_str(&alpha),
                    opt_str(&mu),
                    opt_str(&sigma),
                    opt_str(&lambda),
                    opt_str(&rate),
                    opt_str(&row.xmin),
                    opt_str(&row.n_tail),
                    opt_str(&row.ks),
                    opt_str(&row.p_value),
                    opt_str(&row.plausible),
                    row.iterations.to_string(),
                    row.seed.to_string(),
                    opt_str(&row.failed_replicates),
                    opt_str(&row.error),
                ])?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    language_id: String,
    kind_a: ModelKind,
    kind_b: ModelKind,
    xmin_from: Option<ModelKind>,
    xmin: Option<u64>,
    statistic: Option<f64>,
    p_two_sided: Option<f64>,
    /// Label of the favored kind, or "none".
    favored: Option<String>,
    error: Option<String>,
}

fn compare(args: CompareArgs) -> Result<()> {
    let tables = read_tables(&args.input)?;
    let config = fit_config(args.min_tail);

    let blank_row = |language_id: &str| CompareRow {
        language_id: language_id.to_string(),
        kind_a: args.kind_a,
        kind_b: args.kind_b,
        xmin_from: None,
        xmin: None,
        statistic: None,
        p_two_sided: None,
        favored: None,
        error: None,
    };

    let mut rows = Vec::new();
    for table in &tables {
        let data = table.counts();
        match pairwise_with_shared_xmin(&data, args.kind_a, args.kind_b, &config) {
            Ok((first, second)) => {
                for side in [first, second] {
                    let favored = match side.vuong.favored {
                        freqfit_core::compare::Favored::A => args.kind_a.label(),
                        freqfit_core::compare::Favored::B => args.kind_b.label(),
                        freqfit_core::compare::Favored::None => "none",
                    };
                    rows.push(CompareRow {
                        xmin_from: Some(side.xmin_from),
                        xmin: Some(side.xmin),
                        statistic: Some(side.vuong.statistic),
                        p_two_sided: Some(side.vuong.p_two_sided),
                        favored: Some(favored.to_string()),
                        ..blank_row(table.language_id())
                    });
                }
            }
            Err(e) => rows.push(CompareRow {
                error: Some(e.to_string()),
                ..blank_row(table.language_id())
            }),
        }
    }

    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Json => serde_json::to_writer_pretty(&mut out, &rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "language_id",
                "kind_a",
                "kind_b",
                "xmin_from",
                "xmin",
                "statistic",
                "p_two_sided",
                "favored",
                "error",
            ])?;
            for row in &rows {
                w.write_record([
                    row.language_id.clone(),
                    row.kind_a.label().to_string(),
                    row.kind_b.label().to_string(),
                    row.xmin_from.map(|k| k.label().to_string()).unwrap_or_default(),
                    opt_str(&row.xmin),
                    opt_str(&row.statistic),
                    opt_str(&row.p_two_sided),
                    opt_str(&row.favored),
                    opt_str(&row.error),
                ])?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

fn batch(args: BatchArgs) -> Result<()> {
    let tables = read_tables(&args.input)?;
    let config = RunConfig {
        iterations: args.iterations,
        seed: args.seed,
        threshold: args.threshold,
        fit: fit_config(args.min_tail),
    };
    let rows = run_batch(&tables, &config)?;
    let summary = summarize(&rows, args.threshold)?;

    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Csv => write_rows_csv(&rows, &mut out)?,
        Format::Json => write_rows_json(&rows, &mut out)?,
    }
    out.flush()?;

    if let Some(path) = &args.summary {
        let mut sum_out = open_output(Some(path))?;
        match args.format {
            Format::Csv => write_summary_csv(&summary, &mut sum_out)?,
            Format::Json => write_summary_json(&summary, &mut sum_out)?,
        }
        sum_out.flush()?;
    }
    Ok(())
}

fn simulate(command: SimulateCommand) -> Result<()> {
    match command {
        SimulateCommand::Urn { urns, balls, seed, output } => {
            let table = simulate_preferential_attachment(&UrnConfig {
                n_urns: urns,
                n_balls: balls,
                seed,
            })?;
            let mut out = open_output(output.as_deref())?;
            write_frequency_table(std::slice::from_ref(&table), &mut out)?;
            out.flush()?;
        }
        SimulateCommand::BirthDeath {
            birth_rate,
            death_rate,
            types,
            steps,
            seed,
            output,
        } => {
            let table = simulate_birth_death(&BirthDeathConfig {
                birth_rate,
                death_rate,
                n_types: types,
                steps,
                seed,
            })?;
            let mut out = open_output(output.as_deref())?;
            write_frequency_table(std::slice::from_ref(&table), &mut out)?;
            out.flush()?;
        }
        SimulateCommand::StickBreaking { parts, runs, seed, output } => {
            let spectra = simulate_stick_breaking(parts, runs, seed)?;
            let mut out = open_output(output.as_deref())?;
            writeln!(out, "run\trank\trel_freq")?;
            for (run, spectrum) in spectra.iter().enumerate() {
                for (i, p) in spectrum.rel_freqs().iter().enumerate() {
                    writeln!(out, "{}\t{}\t{p}", run + 1, i + 1)?;
                }
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let tables = read_tables(&args.input)?;
    let table = match &args.language {
        Some(id) => tables
            .iter()
            .find(|t| t.language_id() == id)
            .with_context(|| format!("language {id:?} not in input"))?,
        None if tables.len() == 1 => &tables[0],
        None => bail!(
            "input holds {} languages; pick one with --language",
            tables.len()
        ),
    };
    let config = fit_config(args.min_tail);
    let kinds: Vec<ModelKind> = if args.kind.is_empty() {
        ModelKind::ALL.to_vec()
    } else {
        args.kind.clone()
    };

    let data = table.counts();
    let mut fits = Vec::new();
    for &kind in &kinds {
        let outcome = if args.scan {
            fit_with_xmin_scan(kind, &data, &config)
        } else {
            let xmin = *data.iter().min().expect("nonempty table");
            fit_fixed_xmin(kind, &data, xmin, &config)
        };
        match outcome {
            Ok(fitted) => fits.push(fitted),
            Err(e) => eprintln!("skipping {kind}: {e}"),
        }
    }

    let dataset = emit_plot_data(table, &fits)?;
    let mut out = open_output(args.output.as_deref())?;
    dataset.to_tsv(&mut out)?;
    out.flush()?;
    Ok(())
}
