use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eia_core::harness::{
    apply_override, compare_strategies, emit_outputs, parse_document, read_report, Experiment, ExperimentConfig,
    StrategyKind, StreamSource,
};
use eia_core::streams::{
    generate_synthetic, ingest_trips, top_zones_filter, write_demand_file, ColumnMap, IngestOptions, SyntheticConfig,
};
use log::info;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "eia", version, about = "Error-intersection model switching on hourly demand streams")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic drifted demand stream as CSV.
    Generate(GenerateArgs),
    /// Aggregate a trip CSV into hourly per-zone demand.
    Ingest(IngestArgs),
    /// Run one prequential experiment.
    Run(RunArgs),
    /// Rank several report.json files by RMSE.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator settings (TOML or JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    hours: Option<usize>,
    #[arg(long)]
    zones: Option<usize>,
    #[arg(long)]
    noise_std: Option<f64>,
    /// `key=value` override of any generator field.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output demand CSV.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write the injected drift events as JSON.
    #[arg(long)]
    events_out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Trip CSV.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Use the yellow-taxi trip record column names.
    #[arg(long)]
    tlc_yellow: bool,
    #[arg(long)]
    pickup_col: Option<String>,
    #[arg(long)]
    zone_col: Option<String>,
    #[arg(long)]
    distance_col: Option<String>,
    /// Column holding the trip duration (exclusive with --dropoff-col).
    #[arg(long, conflicts_with = "dropoff_col")]
    duration_col: Option<String>,
    /// Column holding the dropoff time; duration is derived from it.
    #[arg(long)]
    dropoff_col: Option<String>,
    /// Fail on the first malformed row.
    #[arg(long)]
    strict: bool,
    /// Keep only the k busiest zones.
    #[arg(long)]
    top_zones: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML or JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Required when the stream is synthetic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Last training hour, e.g. 2012-09-30T23:00:00.
    #[arg(long)]
    train_end: Option<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    top_zones: Option<usize>,
    /// Enable yearly retraining.
    #[arg(long)]
    retrain: bool,
    /// `key.path=value` override of any config field.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also run the causality audit over the first N forecast hours per zone.
    #[arg(long, value_name = "N")]
    audit: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// report.json files.
    #[arg(required = true, num_args = 1..)]
    reports: Vec<PathBuf>,
    /// Print the table as JSON.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Ingest(a) => ingest(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
    }
}

fn load_doc(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_document(&text, path)?)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut doc = match &a.config {
        Some(p) => load_doc(p)?,
        None => serde_json::to_value(SyntheticConfig::default())?,
    };
    let mut sets = a.overrides.clone();
    sets.push(format!("seed={}", a.seed));
    if let Some(h) = a.hours {
        sets.push(format!("num_hours={h}"));
    }
    if let Some(z) = a.zones {
        sets.push(format!("num_zones={z}"));
    }
    if let Some(n) = a.noise_std {
        sets.push(format!("noise_std={n}"));
    }
    for s in &sets {
        apply_override(&mut doc, s)?;
    }
    let cfg: SyntheticConfig = serde_json::from_value(doc).context("invalid generator config")?;
    let (streams, events) = generate_synthetic(&cfg)?;
    write_demand_file(&a.out, &streams)?;
    if let Some(p) = &a.events_out {
        fs::write(p, serde_json::to_string_pretty(&events)?).with_context(|| format!("writing {}", p.display()))?;
    }
    println!(
        "wrote {} zones x {} hours to {}",
        streams.len(),
        cfg.num_hours,
        a.out.display()
    );
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let mut columns = if a.tlc_yellow {
        ColumnMap::tlc_yellow()
    } else {
        ColumnMap::default()
    };
    if let Some(c) = a.pickup_col {
        columns.pickup_datetime = c;
    }
    if let Some(c) = a.zone_col {
        columns.zone_id = c;
    }
    if let Some(c) = a.distance_col {
        columns.distance = c;
    }
    if let Some(c) = a.duration_col {
        columns.duration = Some(c);
        columns.dropoff_datetime = None;
    }
    if let Some(c) = a.dropoff_col {
        columns.dropoff_datetime = Some(c);
        columns.duration = None;
    }
    let summary = ingest_trips(
        &a.input,
        &IngestOptions {
            columns,
            strict: a.strict,
        },
    )?;
    let streams = match a.top_zones {
        Some(k) => top_zones_filter(summary.streams, k)?,
        None => summary.streams,
    };
    write_demand_file(&a.out, &streams)?;
    println!(
        "{} rows read, {} valid trips, {} zero-distance/duration dropped, {} skipped; {} zones written to {}",
        summary.rows_read,
        summary.valid_trips,
        summary.zero_filtered,
        summary.skipped,
        streams.len(),
        a.out.display()
    );
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut doc = load_doc(&a.config)?;
    let mut sets = a.overrides.clone();
    if let Some(s) = a.seed {
        sets.push(format!("seed={s}"));
    }
    if let Some(s) = a.strategy {
        sets.push(format!("strategy={s}"));
    }
    if let Some(t) = &a.train_end {
        sets.push(format!("train_end={t}"));
    }
    if let Some(d) = &a.output_dir {
        sets.push(format!("output_dir={}", serde_json::to_string(d)?));
    }
    if let Some(k) = a.top_zones {
        sets.push(format!("top_zones={k}"));
    }
    if a.retrain {
        sets.push("retrain.enabled=true".into());
    }
    for s in &sets {
        apply_override(&mut doc, s)?;
    }
    let cfg = ExperimentConfig::from_value(doc)?;
    if matches!(cfg.stream, StreamSource::Synthetic(_)) && a.seed.is_none() {
        bail!("--seed is required for synthetic streams");
    }
    let out_dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| anyhow!("no output directory: set output_dir or pass --output-dir"))?;

    let exp = Experiment::prepare(&cfg)?;
    let outcome = exp.run(exp.config.strategy)?;
    if let Some(n) = a.audit {
        let audit = exp.audit(exp.config.strategy, Some(n))?;
        if !audit.passed() {
            let first = audit.mismatches.first().map(|m| m.what.clone()).unwrap_or_default();
            bail!(
                "causality audit failed at {} of {} hours: {first}",
                audit.mismatches.len(),
                audit.checked
            );
        }
        info!("causality audit passed on {} hours", audit.checked);
    }
    let files = emit_outputs(&outcome, &out_dir)?;
    let r = &outcome.report;
    println!(
        "{}: rmse {:.4} smape {:.4} switches {} simple {}/{} -> {}",
        r.strategy,
        r.rmse,
        r.smape,
        r.switch_count,
        r.simple_usage.count,
        r.test_segment.forecasts,
        files.report.display()
    );
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| read_report(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let table = compare_strategies(&reports)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&table)?);
    } else {
        print!("{}", table.render());
    }
    Ok(())
}
