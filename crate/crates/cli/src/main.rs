//! `narrator`: sensor tables in, daily narratives, summaries and weekly
//! mood estimates out.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;
use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "narrator", version, about = "Turn smartphone sensor tables into daily narratives")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Config file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding the sensor CSV files.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output root; files go under <output>/<device>/.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Device id to process when the input holds several
    #[arg(long, global = true)]
    device: Option<String>,
    /// IANA time zone for day boundaries and timestamps.
    #[arg(long, global = true)]
    tz: Option<String>,
    /// First day, inclusive (YYYY-MM-DD).
    #[arg(long, global = true)]
    from: Option<NaiveDate>,
    /// Last day, inclusive (YYYY-MM-DD).
    #[arg(long, global = true)]
    to: Option<NaiveDate>,
    /// CSV of `lat,lon,label` place names.
    #[arg(long, global = true)]
    place_map: Option<PathBuf>,
    /// openai, gemini, anthropic or mock.
    #[arg(long, global = true)]
    provider: Option<String>,
    /// Mock reply table of `prompt_sha256<TAB>reply_path` lines.
    #[arg(long, global = true)]
    mock_fixtures: Option<PathBuf>,
    /// Mask typed keyboard text
    #[arg(long, global = true)]
    no_keyboard_text: bool,
    /// Mask notification text
    #[arg(long, global = true)]
    no_notification_text: bool,
    /// Name places by cluster id instead of place-map label
    #[arg(long, global = true)]
    no_place_labels: bool,
    /// Mask WiFi SSIDs and Bluetooth device names
    #[arg(long, global = true)]
    no_network_names: bool,
    /// Run every stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Dass,
    Panas,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Dass => "dass",
            Scale::Panas => "panas",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one narrative file per day.
    Narrate,
    /// Ask the model for a narrative summary of each day.
    Summarize,
    /// Summarize a week and estimate DASS-21 or I-PANAS-SF from it.
    Predict { scale: Scale },
    /// Ask a question, or every question of a bank category, about one day.
    Ask { date: NaiveDate, query: String },
    /// Show location clusters and the detected home.
    Home,
    /// List the built-in questions as `category<TAB>question`.
    Questions { category: Option<String> },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format(|buf, record| writeln!(buf, "{} {}", record.level(), record.args()))
        .init();
}

fn build_config(g: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::from_file(path).map_err(Failure::usage)?,
        None => RunConfig::default(),
    };
    let flags = Overrides {
        input_dir: g.input.clone(),
        output_dir: g.output.clone(),
        device: g.device.clone(),
        tz: g.tz.clone(),
        place_map: g.place_map.clone(),
        provider: g.provider.clone(),
        mock_fixtures: g.mock_fixtures.clone(),
        no_keyboard_text: g.no_keyboard_text,
        no_notification_text: g.no_notification_text,
        no_place_labels: g.no_place_labels,
        no_network_names: g.no_network_names,
        sequential: g.sequential,
    };
    cfg.apply_flags(&flags).map_err(Failure::usage)?;
    cfg.apply_env(|k| std::env::var(k).ok());
    if let (Some(from), Some(to)) = (g.from, g.to) {
        if from > to {
            return Err(Failure::usage(format!("--from {from} is after --to {to}")));
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let cfg = build_config(&cli.global)?;
    let range = commands::DateRange { from: cli.global.from, to: cli.global.to };
    match cli.command {
        Command::Narrate => commands::narrate(&cfg, range),
        Command::Summarize => commands::summarize(&cfg, range),
        Command::Predict { scale } => commands::predict(&cfg, range, scale),
        Command::Ask { date, query } => commands::ask(&cfg, date, &query),
        Command::Home => commands::home(&cfg),
        Command::Questions { category } => commands::questions(category.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging(cli.global.verbose);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
