use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};

use narrator_core::geo::{self, GeoError, GeoPoint, PlaceEntry};
use narrator_core::ingest::{CodeTables, IngestError, Payload, SensorEvent, SensorKind};
use narrator_core::llm::{
    self, parse_dass_response, parse_panas_response, sha256_hex, CompletionProvider, LlmError,
};
use narrator_core::narrate::{dates_covered, narrate_days, parse_document, NarrativeDocument};
use narrator_core::pipeline::{load_tables, merge_tables, prepare, LoadError, TableSource};
use narrator_core::prompts::{
    build_daily_question_prompt, build_daily_summary_prompt, build_dass_prompt, build_panas_prompt,
    PromptBundle, PromptError, QuestionBank, QuestionCategory,
};

use crate::config::RunConfig;
use crate::output::{remove_if_present, write_atomic};
use crate::Scale;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_PROVIDER: u8 = 3;
pub const EXIT_PARSE: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn provider(e: LlmError) -> Self {
        match e {
            LlmError::Usage(_) | LlmError::Fixture(_) => Failure::usage(e.to_string()),
            other => Failure { code: EXIT_PROVIDER, message: other.to_string() },
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DateRange {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

impl DateRange {
    fn contains(&self, d: NaiveDate) -> bool {
        self.from.is_none_or(|f| d >= f) && self.to.is_none_or(|t| d <= t)
    }

    fn days(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
        from.iter_days().take_while(|d| *d <= to).collect()
    }
}

struct Input {
    events: Vec<SensorEvent>,
    row_errors: usize,
}

fn load_input(cfg: &RunConfig, only: Option<SensorKind>) -> Result<Input, Failure> {
    if !cfg.input_dir.is_dir() {
        return Err(Failure::usage(format!("input directory {} does not exist", cfg.input_dir.display())));
    }
    let sources: Vec<TableSource> = cfg
        .schemas
        .iter()
        .filter(|(kind, _)| only.is_none_or(|k| k == **kind))
        .map(|(_, (file, schema))| TableSource { path: cfg.input_dir.join(file), schema: schema.clone() })
        .filter(|s| s.path.is_file())
        .collect();
    if sources.is_empty() {
        let expected = match only {
            Some(k) => cfg.schemas[&k].0.clone(),
            None => "applications_foreground.csv, locations.csv, ...".to_owned(),
        };
        return Err(Failure::usage(format!(
            "no sensor tables in {} (expected files such as {expected})",
            cfg.input_dir.display()
        )));
    }
    let tables = load_tables(&sources, &CodeTables::default(), cfg.exec).map_err(|e| match e {
        LoadError::Io { path, source } => io_failure(&path, source),
        LoadError::Table { path, source } => io_failure(&path, source),
    })?;
    let mut row_errors = 0;
    for t in &tables {
        log::info!("{}: {} rows", t.path.display(), t.load.events.len());
        for err in &t.load.row_errors {
            eprintln!("WARN row {} in {}: {}", err.row, t.path.display(), err.reason);
            row_errors += 1;
        }
    }
    let events = merge_tables(tables, cfg.device.as_deref()).map_err(|e| match e {
        IngestError::MixedDevices { devices } => {
            Failure::usage(format!("input mixes devices ({devices}); choose one with --device"))
        }
        other => Failure::usage(other.to_string()),
    })?;
    Ok(Input { events, row_errors })
}

fn load_places(cfg: &RunConfig) -> Result<Vec<PlaceEntry>, Failure> {
    match &cfg.place_map {
        None => Ok(Vec::new()),
        Some(path) => {
            let file = File::open(path).map_err(|e| io_failure(path, e))?;
            geo::load_place_map(BufReader::new(file)).map_err(|e| io_failure(path, e))
        }
    }
}

fn device_dir_name(device: &str) -> String {
    let cleaned: String = device
        .chars()
        .map(|c| if c.is_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.chars().all(|c| c == '.') {
        "device".to_owned()
    } else {
        cleaned
    }
}

pub fn narrate(cfg: &RunConfig, range: DateRange) -> Result<u8, Failure> {
    let input = load_input(cfg, None)?;
    if input.events.is_empty() {
        return Err(Failure::usage("the input tables hold no rows for this device"));
    }
    let device = match &cfg.device {
        Some(d) => d.clone(),
        None => input.events[0].device_id.clone(),
    };
    let places = load_places(cfg)?;
    let prepared = prepare(input.events, &places, &cfg.pipeline());
    let style = cfg.line_style();
    let dates = match (range.from, range.to) {
        (Some(from), Some(to)) => DateRange::days(from, to),
        _ => dates_covered(&prepared.events, &style).into_iter().filter(|d| range.contains(*d)).collect(),
    };
    if dates.is_empty() {
        return Err(Failure::usage("no days with data in the requested range"));
    }
    let docs = narrate_days(&prepared.events, &dates, &cfg.privacy, &style, cfg.exec);
    let dir = cfg.output_dir.join(device_dir_name(&device));
    for doc in &docs {
        let path = dir.join(format!("{}.txt", doc.date));
        write_atomic(&path, doc.to_text().as_bytes()).map_err(|e| io_failure(&path, e))?;
        println!("{}  {} lines", doc.date, doc.lines.len());
    }
    if input.row_errors > 0 {
        eprintln!("WARN {} malformed rows skipped", input.row_errors);
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

/// The device whose narratives later stages read: `--device`, or the only
/// device directory under the output root.
fn resolve_device_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    if let Some(d) = &cfg.device {
        return Ok(cfg.output_dir.join(device_dir_name(d)));
    }
    let entries = fs::read_dir(&cfg.output_dir).map_err(|e| {
        Failure::usage(format!("{}: {e}; run `narrator narrate` first", cfg.output_dir.display()))
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    match dirs.len() {
        1 => Ok(dirs.remove(0)),
        0 => Err(Failure::usage(format!(
            "no narratives under {}; run `narrator narrate` first",
            cfg.output_dir.display()
        ))),
        _ => Err(Failure::usage(format!(
            "several devices under {}; choose one with --device",
            cfg.output_dir.display()
        ))),
    }
}

/// Narrative files present in a device directory, by date.
fn narrative_files(dir: &Path) -> BTreeMap<NaiveDate, PathBuf> {
    let Ok(entries) = fs::read_dir(dir) else {
        return BTreeMap::new();
    };
    entries
        .filter_map(Result::ok)
        .filter_map(|e| {
            let path = e.path();
            let stem = path.file_stem()?.to_str()?;
            let date = NaiveDate::parse_from_str(stem, "%Y-%m-%d").ok()?;
            (path.extension()? == "txt").then_some((date, path))
        })
        .collect()
}

fn read_narrative(cfg: &RunConfig, date: NaiveDate, path: &Path) -> Result<NarrativeDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    parse_document(&text, date, cfg.zone).map_err(|e| io_failure(path, e))
}

fn provider(cfg: &RunConfig) -> Result<Box<dyn CompletionProvider>, Failure> {
    llm::provider_from_config(&cfg.provider, cfg.mock_fixtures.as_deref()).map_err(Failure::provider)
}

fn send(provider: &dyn CompletionProvider, mut prompt: PromptBundle, cfg: &RunConfig) -> Result<String, Failure> {
    prompt.check_token_budget(cfg.max_tokens_warn);
    for w in &prompt.warnings {
        log::warn!("{w}");
    }
    llm::complete(provider, &prompt).map_err(Failure::provider)
}

/// Summaries for the given days, written to `summaries/<date>.md`. Days
/// without a narrative or with an empty one are skipped with a warning.
fn summarize_days(
    cfg: &RunConfig,
    dir: &Path,
    days: &[(NaiveDate, Option<PathBuf>)],
    provider: &dyn CompletionProvider,
) -> Result<Vec<(NaiveDate, String)>, Failure> {
    let mut out = Vec::new();
    for (date, path) in days {
        let Some(path) = path else {
            log::warn!("no narrative for {date}; skipping the day");
            continue;
        };
        let doc = read_narrative(cfg, *date, path)?;
        let prompt = match build_daily_summary_prompt(&doc) {
            Ok(p) => p,
            Err(PromptError::EmptyNarrative) => {
                log::warn!("the narrative for {date} is empty; skipping the day");
                continue;
            }
            Err(e) => return Err(Failure::usage(e.to_string())),
        };
        let summary = send(provider, prompt, cfg)?;
        let target = dir.join("summaries").join(format!("{date}.md"));
        write_atomic(&target, summary.as_bytes()).map_err(|e| io_failure(&target, e))?;
        out.push((*date, summary));
    }
    Ok(out)
}

/// Days the range asks for, each with its narrative file when present.
fn select_days(dir: &Path, range: DateRange) -> Vec<(NaiveDate, Option<PathBuf>)> {
    let mut files = narrative_files(dir);
    match (range.from, range.to) {
        (Some(from), Some(to)) => DateRange::days(from, to).into_iter().map(|d| (d, files.remove(&d))).collect(),
        _ => files.into_iter().filter(|(d, _)| range.contains(*d)).map(|(d, p)| (d, Some(p))).collect(),
    }
}

pub fn summarize(cfg: &RunConfig, range: DateRange) -> Result<u8, Failure> {
    let dir = resolve_device_dir(cfg)?;
    let days = select_days(&dir, range);
    if days.iter().all(|(_, p)| p.is_none()) {
        return Err(Failure::usage(format!("no narratives in {} for the requested days", dir.display())));
    }
    let provider = provider(cfg)?;
    for (date, _) in summarize_days(cfg, &dir, &days, provider.as_ref())? {
        println!("{}", dir.join("summaries").join(format!("{date}.md")).display());
    }
    Ok(EXIT_OK)
}

pub fn predict(cfg: &RunConfig, range: DateRange, scale: Scale) -> Result<u8, Failure> {
    let dir = resolve_device_dir(cfg)?;
    let range = match range {
        DateRange { from: Some(from), to: None } => DateRange { from: Some(from), to: Some(from + Duration::days(6)) },
        r => r,
    };
    let days = select_days(&dir, range);
    if days.len() > 7 {
        return Err(Failure::usage(format!(
            "{} days selected; a weekly estimate takes at most seven (use --from/--to)",
            days.len()
        )));
    }
    if days.iter().all(|(_, p)| p.is_none()) {
        return Err(Failure::usage(format!("no narratives in {} for the requested week", dir.display())));
    }
    let provider = provider(cfg)?;
    let week: Vec<String> = if cfg.raw_week {
        let mut texts = Vec::new();
        for (date, path) in &days {
            match path {
                Some(p) => texts.push(read_narrative(cfg, *date, p)?.to_text()),
                None => log::warn!("no narrative for {date}; skipping the day"),
            }
        }
        texts
    } else {
        summarize_days(cfg, &dir, &days, provider.as_ref())?.into_iter().map(|(_, s)| s).collect()
    };
    let prompt = match scale {
        Scale::Dass => build_dass_prompt(&week),
        Scale::Panas => build_panas_prompt(&week),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    let reply = send(provider.as_ref(), prompt, cfg)?;

    let out = dir.join("predictions");
    let raw_path = out.join(format!("{}.raw", scale.name()));
    let result_path = out.join(format!("{}.txt", scale.name()));
    let error_path = out.join(format!("{}.error", scale.name()));
    write_atomic(&raw_path, reply.as_bytes()).map_err(|e| io_failure(&raw_path, e))?;
    let parsed = match scale {
        Scale::Dass => parse_dass_response(&reply).map(|p| {
            p.subscales().iter().map(|(name, sev)| format!("{name} = {sev}\n")).collect::<String>()
        }),
        Scale::Panas => parse_panas_response(&reply).map(|p| {
            p.iter().map(|(a, s)| format!("panas.{} = {s}\n", a.key())).collect::<String>()
        }),
    };
    match parsed {
        Ok(result) => {
            write_atomic(&result_path, result.as_bytes()).map_err(|e| io_failure(&result_path, e))?;
            remove_if_present(&error_path).map_err(|e| io_failure(&error_path, e))?;
            print!("{result}");
            Ok(EXIT_OK)
        }
        Err(e) => {
            let marker = format!("error = {e}\nraw = {}\n", raw_path.display());
            write_atomic(&error_path, marker.as_bytes()).map_err(|e| io_failure(&error_path, e))?;
            remove_if_present(&result_path).map_err(|e| io_failure(&result_path, e))?;
            Err(Failure {
                code: EXIT_PARSE,
                message: format!("could not parse the {} reply: {e}; raw reply kept in {}", scale.name(), raw_path.display()),
            })
        }
    }
}

fn looks_like_category(query: &str) -> bool {
    !query.is_empty() && query.chars().all(|c| c.is_ascii_lowercase() || c == '-' || c == '_')
}

fn category_list() -> String {
    QuestionCategory::ALL.iter().map(|c| c.slug()).collect::<Vec<_>>().join(", ")
}

pub fn ask(cfg: &RunConfig, date: NaiveDate, query: &str) -> Result<u8, Failure> {
    let bank = QuestionBank;
    let (tag, questions): (String, Vec<&str>) = match QuestionCategory::from_slug(query) {
        Some(c) => (c.slug().to_owned(), bank.questions(c).to_vec()),
        None if looks_like_category(query) => {
            return Err(Failure::usage(format!("unknown category `{query}`; valid categories: {}", category_list())))
        }
        None => (format!("q-{}", &sha256_hex(query)[..8]), vec![query]),
    };
    let dir = resolve_device_dir(cfg)?;
    let path = dir.join(format!("{date}.txt"));
    if !path.is_file() {
        return Err(Failure::usage(format!("no narrative for {date} at {}", path.display())));
    }
    let doc = read_narrative(cfg, date, &path)?;
    let provider = provider(cfg)?;
    for (i, question) in questions.iter().enumerate() {
        let prompt = build_daily_question_prompt(question, &doc).map_err(|e| Failure::usage(e.to_string()))?;
        let reply = send(provider.as_ref(), prompt, cfg)?;
        let name = if questions.len() == 1 { format!("{date}-{tag}.md") } else { format!("{date}-{tag}-{}.md", i + 1) };
        let target = dir.join("answers").join(name);
        let body = format!("Q: {question}\n\n{reply}");
        write_atomic(&target, body.as_bytes()).map_err(|e| io_failure(&target, e))?;
        println!("Q: {question}\n{}\n", reply.trim_end());
    }
    Ok(EXIT_OK)
}

pub fn home(cfg: &RunConfig) -> Result<u8, Failure> {
    let input = load_input(cfg, Some(SensorKind::Locations))?;
    let mut points: Vec<GeoPoint> = input
        .events
        .iter()
        .filter_map(|e| match e.payload {
            Payload::Location { lat, lon, speed_mps } => Some(GeoPoint { lat, lon, ts: e.ts, speed_mps }),
            _ => None,
        })
        .collect();
    if points.is_empty() {
        return Err(Failure::usage("the location table holds no fixes"));
    }
    geo::fill_missing_speeds(&mut points, cfg.geo.max_speed_gap_s);
    let places = load_places(cfg)?;
    let mut clusters = geo::cluster_locations_with(&points, cfg.geo.diameter_m, cfg.exec);
    geo::label_clusters(&mut clusters, &places, cfg.geo.max_snap_m);
    let home = match geo::detect_home(&mut clusters, &points, cfg.geo.night, cfg.zone) {
        Ok(h) => h,
        Err(GeoError::NoNighttimeData) => {
            return Err(Failure::usage(format!(
                "no location fixes between {} and {} ({}); cannot tell where home is",
                cfg.geo.night.start.format("%H:%M"),
                cfg.geo.night.end.format("%H:%M"),
                cfg.zone
            )))
        }
        Err(e) => return Err(Failure::usage(e.to_string())),
    };
    let home_cluster = clusters.iter().find(|c| c.id == home.home_cluster_id).expect("home is one of the clusters");
    println!(
        "home: cluster {} at {:.6}, {:.6} ({} nighttime fixes of {})",
        home.home_cluster_id, home.centroid.lat, home.centroid.lon, home_cluster.nighttime_count, home_cluster.member_count
    );
    println!("{:>5}  {:>11}  {:>11}  {:>7}  {:>5}  label", "id", "lat", "lon", "members", "night");
    for c in &clusters {
        let marker = if c.id == home.home_cluster_id { "*" } else { " " };
        println!(
            "{marker}{:>4}  {:>11.6}  {:>11.6}  {:>7}  {:>5}  {}",
            c.id,
            c.centroid.lat,
            c.centroid.lon,
            c.member_count,
            c.nighttime_count,
            c.label.as_deref().filter(|_| cfg.privacy.include_place_labels).unwrap_or("-")
        );
    }
    Ok(if input.row_errors > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

pub fn questions(category: Option<&str>) -> Result<u8, Failure> {
    let bank = QuestionBank;
    match category {
        None => print!("{}", bank.export()),
        Some(slug) => {
            let c = QuestionCategory::from_slug(slug).ok_or_else(|| {
                Failure::usage(format!("unknown category `{slug}`; valid categories: {}", category_list()))
            })?;
            for q in bank.questions(c) {
                println!("{}\t{q}", c.slug());
            }
        }
    }
    Ok(EXIT_OK)
}
