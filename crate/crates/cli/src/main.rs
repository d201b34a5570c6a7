//! `culprit`: scan APKs, cluster developers, watch servers, classify
//! payments and aggregate labelled corpora.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};

use crate::config::Config;

/// Bad input from the user: missing files, malformed records, bad flags.
/// Maps to exit code 1; anything else is internal and exits 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

#[derive(Parser)]
#[command(
    name = "culprit",
    version,
    about = "Static and infrastructure triage of Android fraud apps"
)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse APK files or directories into JSON-lines sample records.
    Scan(ScanArgs),
    /// Build the developer association graph and group table.
    Assoc(AssocArgs),
    /// Run or resume server monitoring and emit infrastructure reports.
    Watch(WatchArgs),
    /// Classify payment sessions and break down channels.
    Payclass(PayclassArgs),
    /// Aggregate scan records and labels into corpus tables.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct ScanArgs {
    /// APK files or directories searched recursively for `*.apk`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Extra `generator_id=hexkey` decryption keys.
    #[arg(long = "key", value_name = "ID=HEX")]
    pub keys: Vec<String>,
    #[arg(long)]
    pub web_asset_threshold: Option<f64>,
}

#[derive(Args)]
pub struct AssocArgs {
    /// Scan records (JSON lines) or, with --features, feature records.
    pub records: PathBuf,
    #[arg(long)]
    pub features: bool,
    /// Label file, one `{sample_id, top, sub, tactics, behavior}` per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Corpus size used for group percentages; defaults to the sample count.
    #[arg(long)]
    pub corpus_size: Option<usize>,
    #[arg(long)]
    pub i_max: Option<usize>,
    #[arg(long)]
    pub url_threshold: Option<f64>,
    #[arg(long)]
    pub snapshot_threshold: Option<f64>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct WatchArgs {
    /// Scan records (JSON lines) or a plain list of domains.
    pub targets: PathBuf,
    /// Directory of per-domain timelines.
    #[arg(long)]
    pub store: PathBuf,
    /// WHOIS cache directory; defaults to `<store>/whois`.
    #[arg(long)]
    pub whois_cache: Option<PathBuf>,
    /// Skip probing and only analyze stored timelines.
    #[arg(long)]
    pub no_probe: bool,
    /// Run ticks due at this time instead of the current time.
    #[arg(long)]
    pub now: Option<DateTime<Utc>>,
    #[arg(long)]
    pub cadence_days: Option<i64>,
    #[arg(long)]
    pub geo_db: Option<PathBuf>,
    /// Emit lifespan, binding, geolocation and registrant reports here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args)]
pub struct PayclassArgs {
    /// Payment observations, JSON lines.
    pub observations: PathBuf,
    #[arg(long)]
    pub licensed_db: Option<PathBuf>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Scan records, JSON lines.
    pub records: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(short, long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Scan(a) => commands::scan(cfg, a),
        Command::Assoc(a) => commands::assoc(cfg, a),
        Command::Watch(a) => commands::watch(cfg, a),
        Command::Payclass(a) => commands::payclass(cfg, a),
        Command::Report(a) => commands::report(cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<InputError>()) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
