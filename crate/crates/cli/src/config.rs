//! Run configuration: defaults, then the `section.key = value` file, then
//! command-line flags, then `NARRATOR_*` environment variables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveTime;
use chrono_tz::Tz;

use narrator_core::geo::{GeoParams, NightWindow};
use narrator_core::ingest::{SensorKind, TableSchema};
use narrator_core::llm::{ProviderConfig, ProviderKind, SecretString};
use narrator_core::narrate::{LineStyle, DEFAULT_DATETIME_FORMAT};
use narrator_core::pipeline::PipelineConfig;
use narrator_core::{Execution, PrivacyConfig};

pub const ENV_API_KEY: &str = "NARRATOR_API_KEY";
pub const ENV_ENDPOINT: &str = "NARRATOR_ENDPOINT";
pub const ENV_MODEL: &str = "NARRATOR_MODEL";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub device: Option<String>,
    pub zone: Tz,
    pub place_map: Option<PathBuf>,
    pub privacy: PrivacyConfig,
    pub geo: GeoParams,
    pub keyboard_gap_s: f64,
    pub datetime_format: String,
    pub raw_week: bool,
    pub max_tokens_warn: usize,
    pub provider: ProviderConfig,
    pub mock_fixtures: Option<PathBuf>,
    pub exec: Execution,
    /// Per-kind column and file name overrides.
    pub schemas: BTreeMap<SensorKind, (String, TableSchema)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_dir: PathBuf::from("."),
            output_dir: PathBuf::from("out"),
            device: None,
            zone: Tz::UTC,
            place_map: None,
            privacy: PrivacyConfig::default(),
            geo: GeoParams::default(),
            keyboard_gap_s: 30.0,
            datetime_format: DEFAULT_DATETIME_FORMAT.to_owned(),
            raw_week: false,
            max_tokens_warn: 100_000,
            provider: ProviderConfig::new(ProviderKind::Mock),
            mock_fixtures: None,
            exec: Execution::default(),
            schemas: SensorKind::ALL
                .into_iter()
                .map(|k| (k, (k.default_file().to_owned(), TableSchema::aware(k))))
                .collect(),
        }
    }
}

/// Values given on the command line; `None` leaves the config value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub device: Option<String>,
    pub tz: Option<String>,
    pub place_map: Option<PathBuf>,
    pub provider: Option<String>,
    pub mock_fixtures: Option<PathBuf>,
    pub no_keyboard_text: bool,
    pub no_notification_text: bool,
    pub no_place_labels: bool,
    pub no_network_names: bool,
    pub sequential: bool,
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got `{v}`")),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: expected a number, got `{v}`"))
}

fn positive(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = parse_num(key, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{key}: must be positive, got `{v}`"))
    }
}

fn parse_time(key: &str, v: &str) -> Result<NaiveTime, String> {
    NaiveTime::parse_from_str(v, "%H:%M")
        .or_else(|_| NaiveTime::parse_from_str(v, "%H:%M:%S"))
        .map_err(|_| format!("{key}: expected HH:MM, got `{v}`"))
}

pub fn parse_zone(v: &str) -> Result<Tz, String> {
    v.parse::<Tz>().map_err(|_| format!("unknown time zone `{v}` (use an IANA name such as Australia/Melbourne)"))
}

fn kind_from_name(key: &str, name: &str) -> Result<SensorKind, String> {
    SensorKind::from_name(name).ok_or_else(|| format!("{key}: unknown sensor `{name}`"))
}

impl RunConfig {
    /// Reads a config file. Unknown keys are errors so typos surface early.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = RunConfig::default();
        let base = path.parent().unwrap_or(Path::new("."));
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("{} line {}: expected `key = value`", path.display(), n + 1))?;
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            cfg.set(key.trim(), value, base)
                .map_err(|e| format!("{} line {}: {e}", path.display(), n + 1))?;
        }
        Ok(cfg)
    }

    /// Applies one `section.key = value` setting. Relative paths resolve
    /// against `base`.
    pub fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<(), String> {
        let path = || base.join(v);
        match key {
            "run.input" => self.input_dir = path(),
            "run.output" => self.output_dir = path(),
            "run.device" => self.device = Some(v.to_owned()),
            "run.parallel" => {
                self.exec = if parse_bool(key, v)? { Execution::Parallel } else { Execution::Sequential }
            }
            "geo.timezone" => self.zone = parse_zone(v)?,
            "geo.place_map" => self.place_map = Some(path()),
            "geo.diameter_m" => self.geo.diameter_m = positive(key, v)?,
            "geo.stop_epsilon" => {
                let x: f64 = parse_num(key, v)?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(format!("{key}: must lie in [0, 1], got `{v}`"));
                }
                self.geo.stop_epsilon = x;
            }
            "geo.night_start" => self.geo.night = NightWindow { start: parse_time(key, v)?, ..self.geo.night },
            "geo.night_end" => self.geo.night = NightWindow { end: parse_time(key, v)?, ..self.geo.night },
            "geo.max_snap_m" => self.geo.max_snap_m = positive(key, v)?,
            "geo.max_speed_gap_s" => self.geo.max_speed_gap_s = positive(key, v)?,
            "sessions.keyboard_gap_s" => self.keyboard_gap_s = positive(key, v)?,
            "narrate.datetime_format" => self.datetime_format = v.to_owned(),
            "privacy.notification_text" => self.privacy.include_notification_text = parse_bool(key, v)?,
            "privacy.keyboard_text" => self.privacy.include_keyboard_text = parse_bool(key, v)?,
            "privacy.place_labels" => self.privacy.include_place_labels = parse_bool(key, v)?,
            "privacy.network_names" => self.privacy.include_network_names = parse_bool(key, v)?,
            "prompts.raw_week" => self.raw_week = parse_bool(key, v)?,
            "prompts.max_tokens_warn" => self.max_tokens_warn = parse_num(key, v)?,
            "llm.provider" => self.set_provider(v)?,
            "llm.endpoint" => self.provider.endpoint = v.to_owned(),
            "llm.model" => self.provider.model = v.to_owned(),
            "llm.api_key" => self.provider.api_key = SecretString::new(v),
            "llm.timeout_s" => self.provider.timeout_s = positive(key, v)?,
            "llm.max_retries" => self.provider.max_retries = parse_num(key, v)?,
            "llm.backoff_ms" => self.provider.backoff_base_ms = parse_num(key, v)?,
            "llm.requests_per_minute" => self.provider.requests_per_minute = Some(parse_num(key, v)?),
            "llm.temperature" => self.provider.temperature = Some(parse_num(key, v)?),
            "llm.max_output_tokens" => self.provider.max_output_tokens = parse_num(key, v)?,
            "llm.mock_fixtures" => self.mock_fixtures = Some(path()),
            other => {
                let parts: Vec<&str> = other.split('.').collect();
                match parts.as_slice() {
                    ["files", sensor] => {
                        let kind = kind_from_name(key, sensor)?;
                        self.schemas.get_mut(&kind).expect("every kind has a schema").0 = v.to_owned();
                    }
                    ["columns", sensor, field] => {
                        let kind = kind_from_name(key, sensor)?;
                        let schema = &mut self.schemas.get_mut(&kind).expect("every kind has a schema").1;
                        if !schema.set_column(field, v) {
                            return Err(format!(
                                "{key}: unknown field `{field}` (row_id, timestamp, device_id, {})",
                                schema.field_names().join(", ")
                            ));
                        }
                    }
                    _ => return Err(format!("unknown setting `{other}`")),
                }
            }
        }
        Ok(())
    }

    fn set_provider(&mut self, v: &str) -> Result<(), String> {
        let kind: ProviderKind = v.parse()?;
        if kind != self.provider.provider {
            let default_endpoint = self.provider.provider.default_endpoint();
            self.provider.provider = kind;
            if self.provider.endpoint.is_empty() || self.provider.endpoint == default_endpoint {
                self.provider.endpoint = kind.default_endpoint().to_owned();
            }
        }
        Ok(())
    }

    pub fn apply_flags(&mut self, o: &Overrides) -> Result<(), String> {
        let cwd = Path::new(".");
        if let Some(p) = &o.input_dir {
            self.input_dir = p.clone();
        }
        if let Some(p) = &o.output_dir {
            self.output_dir = p.clone();
        }
        if let Some(d) = &o.device {
            self.device = Some(d.clone());
        }
        if let Some(tz) = &o.tz {
            self.zone = parse_zone(tz)?;
        }
        if let Some(p) = &o.place_map {
            self.place_map = Some(p.clone());
        }
        if let Some(p) = &o.provider {
            self.set("llm.provider", p, cwd)?;
        }
        if let Some(p) = &o.mock_fixtures {
            self.mock_fixtures = Some(p.clone());
        }
        self.privacy.include_keyboard_text &= !o.no_keyboard_text;
        self.privacy.include_notification_text &= !o.no_notification_text;
        self.privacy.include_place_labels &= !o.no_place_labels;
        self.privacy.include_network_names &= !o.no_network_names;
        if o.sequential {
            self.exec = Execution::Sequential;
        }
        Ok(())
    }

    /// Environment variables win over both file and flags.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(k) = get(ENV_API_KEY).filter(|v| !v.is_empty()) {
            self.provider.api_key = SecretString::new(k);
        }
        if let Some(e) = get(ENV_ENDPOINT).filter(|v| !v.is_empty()) {
            self.provider.endpoint = e;
        }
        if let Some(m) = get(ENV_MODEL).filter(|v| !v.is_empty()) {
            self.provider.model = m;
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig { geo: self.geo.clone(), keyboard_gap_s: self.keyboard_gap_s, zone: self.zone, exec: self.exec }
    }

    pub fn line_style(&self) -> LineStyle {
        LineStyle { zone: self.zone, datetime_format: self.datetime_format.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags_then_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("narrator.conf");
        fs::write(
            &path,
            "# sample\nrun.input = data\ngeo.timezone = Australia/Melbourne\nllm.provider = openai\n\
             llm.model = \"gpt-4o\"\nllm.endpoint = http://file\nprivacy.keyboard_text = false\n\
             geo.night_start = 21:00\ncolumns.calls.trace = hashed_number\nfiles.wifi = sensor_wifi.csv\n",
        )
        .unwrap();
        let mut cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.input_dir, dir.path().join("data"));
        assert_eq!(cfg.zone, chrono_tz::Australia::Melbourne);
        assert_eq!(cfg.provider.provider, ProviderKind::OpenAi);
        assert_eq!(cfg.geo.night.start, NaiveTime::from_hms_opt(21, 0, 0).unwrap());
        assert!(!cfg.privacy.include_keyboard_text);
        assert_eq!(cfg.schemas[&SensorKind::Calls].1.fields["trace"].name, "hashed_number");
        assert_eq!(cfg.schemas[&SensorKind::Wifi].0, "sensor_wifi.csv");

        let flags = Overrides { tz: Some("UTC".into()), no_place_labels: true, ..Overrides::default() };
        cfg.apply_flags(&flags).unwrap();
        assert_eq!(cfg.zone, Tz::UTC);
        assert!(!cfg.privacy.include_place_labels);

        cfg.apply_env(|k| match k {
            ENV_ENDPOINT => Some("http://env".into()),
            ENV_API_KEY => Some("sk-env".into()),
            _ => None,
        });
        assert_eq!(cfg.provider.endpoint, "http://env");
        assert_eq!(cfg.provider.model, "gpt-4o");
        assert_eq!(cfg.provider.api_key.expose(), "sk-env");
    }

    #[test]
    fn rejects_bad_settings() {
        let mut cfg = RunConfig::default();
        let here = Path::new(".");
        assert!(cfg.set("geo.diameter", "50", here).is_err());
        assert!(cfg.set("geo.diameter_m", "-5", here).is_err());
        assert!(cfg.set("geo.timezone", "Mars/Olympus", here).is_err());
        assert!(cfg.set("columns.calls.colour", "x", here).is_err());
        assert!(cfg.set("privacy.keyboard_text", "maybe", here).is_err());
    }

    #[test]
    fn switching_provider_updates_default_endpoint() {
        let mut cfg = RunConfig::default();
        cfg.set("llm.provider", "anthropic", Path::new(".")).unwrap();
        assert_eq!(cfg.provider.endpoint, ProviderKind::Anthropic.default_endpoint());
    }
}
