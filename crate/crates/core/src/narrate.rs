//! Renders processed events as `<datetime> | <sensor> | <description>` lines
//! and groups them into per-day documents.

use std::collections::BTreeSet;
use std::io::{self, Write};

use chrono::NaiveDate;
use chrono_tz::Tz;
use thiserror::Error;

use crate::geo::LocationNarration;
use crate::ingest::{
    BatteryStatus, CallDirection, InstallAction, MessageDirection, Payload, RadioMode,
    ScreenStatus, SensorKind, Timestamp, TouchAction,
};
use crate::par::{self, Execution};
use crate::sessions::{BatteryEmission, EmissionKind, KeyboardSession};

#[derive(Debug, Error, PartialEq)]
pub enum NarrateError {
    #[error("no template for {0}")]
    UnsupportedEvent(String),
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
}

pub const DEFAULT_DATETIME_FORMAT: &str = "%a %b %-d %H:%M:%S";

/// Applications that are never narrated.
const EXCLUDED_APPS: &[&str] = &["System UI"];
const EXCLUDED_PACKAGES: &[&str] = &["com.android.systemui"];

/// Which sensitive content may appear in narratives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrivacyConfig {
    pub include_notification_text: bool,
    pub include_keyboard_text: bool,
    pub include_place_labels: bool,
    pub include_network_names: bool,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            include_notification_text: true,
            include_keyboard_text: true,
            include_place_labels: true,
            include_network_names: true,
        }
    }
}

impl PrivacyConfig {
    pub fn redact_all() -> Self {
        PrivacyConfig {
            include_notification_text: false,
            include_keyboard_text: false,
            include_place_labels: false,
            include_network_names: false,
        }
    }
}

/// Run-wide rendering settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LineStyle {
    pub zone: Tz,
    pub datetime_format: String,
}

impl Default for LineStyle {
    fn default() -> Self {
        LineStyle { zone: Tz::UTC, datetime_format: DEFAULT_DATETIME_FORMAT.to_owned() }
    }
}

impl LineStyle {
    pub fn new(zone: Tz) -> Self {
        LineStyle { zone, ..Default::default() }
    }

    pub fn stamp(&self, ts: Timestamp) -> String {
        ts.to_zone(self.zone).format(&self.datetime_format).to_string()
    }

    pub fn local_date(&self, ts: Timestamp) -> NaiveDate {
        ts.to_zone(self.zone).date_naive()
    }
}

/// Sensor column of a narrative line.
pub fn sensor_label(kind: SensorKind) -> &'static str {
    match kind {
        SensorKind::Screen => "screen status",
        other => other.name(),
    }
}

fn kind_from_label(label: &str) -> Option<SensorKind> {
    SensorKind::ALL.into_iter().find(|k| sensor_label(*k) == label)
}

/// What a processed event carries: either a raw record or the output of
/// one of the geo/session reductions.
#[derive(Debug, Clone, PartialEq)]
pub enum EventBody {
    Raw(Payload),
    Battery(BatteryEmission),
    Keyboard(KeyboardSession),
    Location(LocationNarration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedEvent {
    pub ts: Timestamp,
    pub row_id: i64,
    pub sensor: SensorKind,
    pub body: EventBody,
}

impl ProcessedEvent {
    pub fn order_key(&self) -> (Timestamp, u8, i64) {
        (self.ts, self.sensor.priority(), self.row_id)
    }

    fn is_excluded(&self) -> bool {
        match &self.body {
            EventBody::Raw(Payload::ApplicationForeground { app_name, package, .. }) => {
                EXCLUDED_APPS.contains(&app_name.as_str())
                    || EXCLUDED_PACKAGES.contains(&package.as_str())
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NarrativeLine {
    pub ts: Timestamp,
    /// The rendered datetime column.
    pub stamp: String,
    pub sensor: SensorKind,
    pub description: String,
}

impl NarrativeLine {
    pub fn sensor_label(&self) -> &'static str {
        sensor_label(self.sensor)
    }
}

impl std::fmt::Display for NarrativeLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} | {} | {}", self.stamp, self.sensor_label(), self.description)
    }
}

fn battery_sentence(status: BatteryStatus) -> &'static str {
    match status {
        BatteryStatus::Rebooted => "The phone rebooted",
        BatteryStatus::Shutdown => "The phone shutdown",
        BatteryStatus::StartedCharging => "The phone started charging",
        BatteryStatus::StartedDischarging => "The phone started discharging",
        BatteryStatus::NotCharging => "The phone was not charging",
        BatteryStatus::FullyCharged => "The phone battery became fully charged",
        BatteryStatus::LevelSample => "The phone battery level changed",
    }
}

fn single_line(s: &str) -> String {
    s.replace("\r\n", " ").replace(['\n', '\r'], " ")
}

fn describe(body: &EventBody, privacy: &PrivacyConfig) -> Result<String, NarrateError> {
    let unsupported = |what: &str| Err(NarrateError::UnsupportedEvent(what.to_owned()));
    let text = match body {
        EventBody::Raw(Payload::ApplicationForeground { app_name, .. }) => {
            format!("Opened the app {app_name}")
        }
        EventBody::Raw(Payload::Notification { app_name, text }) => match text {
            Some(t) if privacy.include_notification_text => format!(
                "Received a notification from the {app_name}. The content of the notification was {t}"
            ),
            _ => format!("Received a notification from the {app_name}"),
        },
        EventBody::Battery(BatteryEmission { status, level, kind, .. }) => {
            let status = match kind {
                EmissionKind::LocalExtremum => BatteryStatus::LevelSample,
                EmissionKind::StatusChange => *status,
            };
            format!("{}, the battery level was {level}", battery_sentence(status))
        }
        EventBody::Raw(Payload::Bluetooth { name, mode }) => {
            let name = name.as_ref().filter(|_| privacy.include_network_names);
            match (mode, name) {
                (RadioMode::Detected, Some(n)) => format!("Detected the nearby bluetooth device {n}"),
                (RadioMode::Detected, None) => "Detected a nearby bluetooth device".to_owned(),
                (RadioMode::Connected, Some(n)) => format!("Connected to the bluetooth device {n}"),
                (RadioMode::Connected, None) => "Connected to a bluetooth device".to_owned(),
            }
        }
        EventBody::Raw(Payload::Call { direction, duration_s, person, .. }) => {
            let Some(n) = person else {
                return unsupported("call without an assigned person id");
            };
            let head = match direction {
                CallDirection::Incoming => format!("Received a phone call from person {n}."),
                CallDirection::Outgoing => format!("Made a phone call to person {n}."),
                CallDirection::Missed => format!("Missed a call from person {n}."),
            };
            format!("{head} The call lasted {duration_s} seconds")
        }
        EventBody::Raw(Payload::Installation { app_name, action }) => {
            let verb = match action {
                InstallAction::Removed => "removed",
                InstallAction::Added => "added",
                InstallAction::Updated => "updated",
            };
            format!("{app_name} was {verb}")
        }
        EventBody::Keyboard(session) => {
            if privacy.include_keyboard_text {
                format!("Entered the following text into the phone keyboard: {}", session.final_text)
            } else {
                "Entered text into the phone keyboard".to_owned()
            }
        }
        EventBody::Location(loc) => {
            let place = loc.place.describe(privacy.include_place_labels);
            match loc.distance_from_home_m {
                Some(d) if !loc.is_home => {
                    format!("{place}, {d:.1}m from home, {}", loc.status.word())
                }
                _ => format!("{place}, {}", loc.status.word()),
            }
        }
        EventBody::Raw(Payload::Message { direction, person, .. }) => {
            let Some(n) = person else {
                return unsupported("message without an assigned person id");
            };
            match direction {
                MessageDirection::Received => format!("Received a message from person {n}"),
                MessageDirection::Sent => format!("Sent a message to person {n}"),
            }
        }
        EventBody::Raw(Payload::Screen { status }) => {
            let what = match status {
                ScreenStatus::Off => "turned off",
                ScreenStatus::On => "turned on",
                ScreenStatus::Locked => "locked",
                ScreenStatus::Unlocked => "unlocked",
            };
            format!("Phone screen {what}")
        }
        EventBody::Raw(Payload::Touch { action, content, app_name }) => {
            let verb = match action {
                TouchAction::Clicked => "Clicked",
                TouchAction::ClickedLonger => "Clicked longer",
                TouchAction::ScrolledDown => "Scrolled down within a view",
                TouchAction::ScrolledUp => "Scrolled up within a view",
            };
            match content {
                Some(c) => format!("{verb} {c} in the app {app_name}"),
                None => format!("{verb} in the app {app_name}"),
            }
        }
        EventBody::Raw(Payload::Wifi { ssid, mode }) => {
            let ssid = ssid.as_ref().filter(|_| privacy.include_network_names);
            match (mode, ssid) {
                (RadioMode::Detected, Some(s)) => format!("Detected the nearby wifi network \"{s}\""),
                (RadioMode::Detected, None) => "Detected a nearby wifi network".to_owned(),
                (RadioMode::Connected, Some(s)) => format!("Connected to the wifi network {s}"),
                (RadioMode::Connected, None) => "Connected to a wifi network".to_owned(),
            }
        }
        EventBody::Raw(Payload::Battery { .. }) => {
            return unsupported("raw battery sample (run battery_extrema first)")
        }
        EventBody::Raw(Payload::Keyboard { .. }) => {
            return unsupported("raw keyboard snapshot (run keyboard_sessions first)")
        }
        EventBody::Raw(Payload::Location { .. }) => {
            return unsupported("raw location fix (run locate first)")
        }
    };
    Ok(single_line(&text))
}

/// Renders one processed event through its sentence template.
pub fn render_line(
    event: &ProcessedEvent,
    privacy: &PrivacyConfig,
    style: &LineStyle,
) -> Result<NarrativeLine, NarrateError> {
    Ok(NarrativeLine {
        ts: event.ts,
        stamp: style.stamp(event.ts),
        sensor: event.sensor,
        description: describe(&event.body, privacy)?,
    })
}

/// One local calendar day of narrative lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NarrativeDocument {
    pub date: NaiveDate,
    pub lines: Vec<NarrativeLine>,
}

impl NarrativeDocument {
    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// The document as it is written to disk: one line per entry, each
    /// terminated by `\n`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Renders the events of `date` (in `events` order) into a document.
/// `events` should be sorted by [`ProcessedEvent::order_key`]. Foreground
/// events of excluded system apps are dropped.
pub fn narrate_day(
    events: &[ProcessedEvent],
    date: NaiveDate,
    privacy: &PrivacyConfig,
    style: &LineStyle,
) -> NarrativeDocument {
    let lines = events
        .iter()
        .filter(|e| style.local_date(e.ts) == date && !e.is_excluded())
        .filter_map(|e| match render_line(e, privacy, style) {
            Ok(line) => Some(line),
            Err(err) => {
                log::warn!("skipping event at {}: {err}", e.ts);
                None
            }
        })
        .collect();
    NarrativeDocument { date, lines }
}

/// Narrates each date independently; documents come back in `dates` order.
pub fn narrate_days(
    events: &[ProcessedEvent],
    dates: &[NaiveDate],
    privacy: &PrivacyConfig,
    style: &LineStyle,
    exec: Execution,
) -> Vec<NarrativeDocument> {
    par::map_slice(exec, dates, |&d| narrate_day(events, d, privacy, style))
}

/// Local dates that have at least one event, ascending.
pub fn dates_covered(events: &[ProcessedEvent], style: &LineStyle) -> Vec<NaiveDate> {
    let dates: BTreeSet<NaiveDate> = events.iter().map(|e| style.local_date(e.ts)).collect();
    dates.into_iter().collect()
}

/// Writes the document as UTF-8 lines. Returns the byte count.
pub fn write_document<W: Write>(doc: &NarrativeDocument, mut sink: W) -> io::Result<usize> {
    let text = doc.to_text();
    sink.write_all(text.as_bytes())?;
    Ok(text.len())
}

/// Parses a written document back. The timestamp of each line is rebuilt
/// from `date` plus the `HH:MM:SS` found in the datetime column, so it has
/// whole-second precision.
pub fn parse_document(text: &str, date: NaiveDate, zone: Tz) -> Result<NarrativeDocument, NarrateError> {
    use chrono::{NaiveTime, TimeZone};
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| NarrateError::BadLine { line: i + 1, reason: reason.to_owned() };
        let mut parts = raw.splitn(3, " | ");
        let (Some(stamp), Some(label), Some(description)) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(bad("expected `<datetime> | <sensor> | <description>`"));
        };
        let sensor = kind_from_label(label).ok_or_else(|| bad("unknown sensor label"))?;
        let time = stamp
            .split_whitespace()
            .find_map(|tok| NaiveTime::parse_from_str(tok, "%H:%M:%S").ok())
            .ok_or_else(|| bad("no HH:MM:SS in datetime column"))?;
        let ms = zone
            .from_local_datetime(&date.and_time(time))
            .earliest()
            .map(|dt| dt.timestamp_millis())
            .ok_or_else(|| bad("time does not exist in zone"))?;
        lines.push(NarrativeLine {
            ts: Timestamp::from_millis(ms).map_err(|_| bad("timestamp before epoch"))?,
            stamp: stamp.to_owned(),
            sensor,
            description: description.to_owned(),
        });
    }
    Ok(NarrativeDocument { date, lines })
}
