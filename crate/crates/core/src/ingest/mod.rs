//! Unified event model for all supported sensor tables, plus the loaders
//! and the chronological merge that feed the rest of the pipeline.

mod persons;
mod table;

use std::fmt;

use chrono::{DateTime, TimeZone};
use chrono_tz::Tz;
use thiserror::Error;

pub use persons::{assign_person_ids, PersonId, PersonRegistry};
pub use table::{
    load_table, mark_battery_transitions, select_device, write_table, CodeTables, ColumnRef, RowError,
    TableLoad, TableSchema,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("column `{column}` required by the {kind} schema is not in the header")]
    MissingColumn { kind: SensorKind, column: String },
    #[error("could not read table: {0}")]
    Csv(#[from] csv::Error),
    #[error("input stream {stream} is not sorted by (timestamp, row id) at position {position}")]
    UnsortedInput { stream: usize, position: usize },
    #[error("events from several devices found ({devices}); pick one with a device filter")]
    MixedDevices { devices: String },
    #[error("invalid timestamp {0}: must be a non-negative epoch in milliseconds")]
    InvalidTimestamp(i64),
}

/// Milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub fn from_millis(ms: i64) -> Result<Self, IngestError> {
        if ms < 0 {
            return Err(IngestError::InvalidTimestamp(ms));
        }
        Ok(Timestamp(ms))
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn seconds_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / 1000.0
    }

    pub fn to_zone(self, zone: Tz) -> DateTime<Tz> {
        zone.timestamp_millis_opt(self.0)
            .single()
            .expect("non-negative epoch millis are always representable")
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The supported sensor tables. Declaration order is the tie-break priority
/// used when events from different sensors share a timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SensorKind {
    Applications,
    Notifications,
    Battery,
    Bluetooth,
    Calls,
    Installations,
    Keyboard,
    Locations,
    Messages,
    Screen,
    Touch,
    Wifi,
}

impl SensorKind {
    pub const ALL: [SensorKind; 12] = [
        SensorKind::Applications,
        SensorKind::Notifications,
        SensorKind::Battery,
        SensorKind::Bluetooth,
        SensorKind::Calls,
        SensorKind::Installations,
        SensorKind::Keyboard,
        SensorKind::Locations,
        SensorKind::Messages,
        SensorKind::Screen,
        SensorKind::Touch,
        SensorKind::Wifi,
    ];

    pub fn priority(self) -> u8 {
        self as u8
    }

    /// Short name used in config keys (`tables.<name>.*`).
    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Applications => "applications",
            SensorKind::Notifications => "notifications",
            SensorKind::Battery => "battery",
            SensorKind::Bluetooth => "bluetooth",
            SensorKind::Calls => "calls",
            SensorKind::Installations => "installations",
            SensorKind::Keyboard => "keyboard",
            SensorKind::Locations => "locations",
            SensorKind::Messages => "messages",
            SensorKind::Screen => "screen",
            SensorKind::Touch => "touch",
            SensorKind::Wifi => "wifi",
        }
    }

    /// Default export file name for the table.
    pub fn default_file(self) -> &'static str {
        match self {
            SensorKind::Applications => "applications_foreground.csv",
            SensorKind::Notifications => "applications_notifications.csv",
            SensorKind::Battery => "battery.csv",
            SensorKind::Bluetooth => "bluetooth.csv",
            SensorKind::Calls => "calls.csv",
            SensorKind::Installations => "installations.csv",
            SensorKind::Keyboard => "keyboard.csv",
            SensorKind::Locations => "locations.csv",
            SensorKind::Messages => "messages.csv",
            SensorKind::Screen => "screen.csv",
            SensorKind::Touch => "touch.csv",
            SensorKind::Wifi => "wifi.csv",
        }
    }

    pub fn from_name(name: &str) -> Option<SensorKind> {
        SensorKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BatteryStatus {
    Rebooted,
    Shutdown,
    StartedCharging,
    StartedDischarging,
    NotCharging,
    FullyCharged,
    LevelSample,
}

impl BatteryStatus {
    pub fn from_name(s: &str) -> Option<Self> {
        let s = normalize_token(s);
        Some(match s.as_str() {
            "rebooted" | "reboot" => BatteryStatus::Rebooted,
            "shutdown" => BatteryStatus::Shutdown,
            "startedcharging" | "charging" => BatteryStatus::StartedCharging,
            "starteddischarging" | "discharging" => BatteryStatus::StartedDischarging,
            "notcharging" => BatteryStatus::NotCharging,
            "fullycharged" | "full" => BatteryStatus::FullyCharged,
            "levelsample" | "unknown" => BatteryStatus::LevelSample,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScreenStatus {
    Off,
    On,
    Locked,
    Unlocked,
}

impl ScreenStatus {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match normalize_token(s).as_str() {
            "off" => ScreenStatus::Off,
            "on" => ScreenStatus::On,
            "locked" => ScreenStatus::Locked,
            "unlocked" => ScreenStatus::Unlocked,
            _ => return None,
        })
    }
}

/// Whether a radio record is a scan result or an active connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadioMode {
    Detected,
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CallDirection {
    Incoming,
    Outgoing,
    Missed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstallAction {
    Added,
    Removed,
    Updated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageDirection {
    Received,
    Sent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TouchAction {
    Clicked,
    ClickedLonger,
    ScrolledDown,
    ScrolledUp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    ApplicationForeground {
        app_name: String,
        package: String,
        is_system: bool,
    },
    Notification {
        app_name: String,
        text: Option<String>,
    },
    Battery {
        level: u8,
        status: BatteryStatus,
    },
    Bluetooth {
        name: Option<String>,
        mode: RadioMode,
    },
    Call {
        direction: CallDirection,
        trace: String,
        duration_s: u64,
        person: Option<PersonId>,
    },
    Installation {
        app_name: String,
        action: InstallAction,
    },
    Keyboard {
        package: String,
        current_text: String,
    },
    Location {
        lat: f64,
        lon: f64,
        speed_mps: Option<f64>,
    },
    Message {
        direction: MessageDirection,
        trace: String,
        person: Option<PersonId>,
    },
    Screen {
        status: ScreenStatus,
    },
    Touch {
        action: TouchAction,
        content: Option<String>,
        app_name: String,
    },
    Wifi {
        ssid: Option<String>,
        mode: RadioMode,
    },
}

impl Payload {
    pub fn kind(&self) -> SensorKind {
        match self {
            Payload::ApplicationForeground { .. } => SensorKind::Applications,
            Payload::Notification { .. } => SensorKind::Notifications,
            Payload::Battery { .. } => SensorKind::Battery,
            Payload::Bluetooth { .. } => SensorKind::Bluetooth,
            Payload::Call { .. } => SensorKind::Calls,
            Payload::Installation { .. } => SensorKind::Installations,
            Payload::Keyboard { .. } => SensorKind::Keyboard,
            Payload::Location { .. } => SensorKind::Locations,
            Payload::Message { .. } => SensorKind::Messages,
            Payload::Screen { .. } => SensorKind::Screen,
            Payload::Touch { .. } => SensorKind::Touch,
            Payload::Wifi { .. } => SensorKind::Wifi,
        }
    }
}

/// One record from any sensor table.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorEvent {
    pub ts: Timestamp,
    pub device_id: String,
    pub row_id: i64,
    pub payload: Payload,
}

impl SensorEvent {
    pub fn kind(&self) -> SensorKind {
        self.payload.kind()
    }

    fn merge_key(&self) -> (Timestamp, u8, i64) {
        (self.ts, self.kind().priority(), self.row_id)
    }
}

/// Sorts one table's events by `(ts, row_id)`, the order `merge_chronological`
/// expects of each input stream.
pub fn sort_stream(events: &mut [SensorEvent]) {
    events.sort_by_key(|e| (e.ts, e.row_id));
}

/// Merges per-sensor streams into one chronological stream.
///
/// Equal timestamps are ordered by sensor priority, then row id. Events that
/// tie on all three keep the order of their input streams.
pub fn merge_chronological(
    streams: Vec<Vec<SensorEvent>>,
) -> Result<Vec<SensorEvent>, IngestError> {
    for (stream, events) in streams.iter().enumerate() {
        if let Some(position) = events
            .windows(2)
            .position(|w| (w[0].ts, w[0].row_id) > (w[1].ts, w[1].row_id))
        {
            return Err(IngestError::UnsortedInput {
                stream,
                position: position + 1,
            });
        }
    }
    let mut merged: Vec<SensorEvent> = streams.into_iter().flatten().collect();
    merged.sort_by_key(SensorEvent::merge_key);
    Ok(merged)
}

fn normalize_token(s: &str) -> String {
    s.trim()
        .chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .flat_map(char::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(ts: i64, row_id: i64, payload: Payload) -> SensorEvent {
        SensorEvent {
            ts: Timestamp::from_millis(ts).unwrap(),
            device_id: "d".into(),
            row_id,
            payload,
        }
    }

    fn app(ts: i64, row_id: i64) -> SensorEvent {
        ev(
            ts,
            row_id,
            Payload::ApplicationForeground {
                app_name: "A".into(),
                package: "a".into(),
                is_system: false,
            },
        )
    }

    fn wifi(ts: i64, row_id: i64) -> SensorEvent {
        ev(ts, row_id, Payload::Wifi { ssid: None, mode: RadioMode::Detected })
    }

    fn screen(ts: i64, row_id: i64) -> SensorEvent {
        ev(ts, row_id, Payload::Screen { status: ScreenStatus::On })
    }

    #[test]
    fn merge_orders_by_time() {
        let out = merge_chronological(vec![vec![app(1, 1)], vec![wifi(2, 1)]]).unwrap();
        assert_eq!(out.iter().map(|e| e.ts.millis()).collect::<Vec<_>>(), [1, 2]);
        assert!(merge_chronological(vec![vec![], vec![]]).unwrap().is_empty());
    }

    #[test]
    fn same_timestamp_uses_sensor_priority() {
        let out = merge_chronological(vec![vec![wifi(5, 1)], vec![app(5, 9)]]).unwrap();
        assert_eq!(out[0].kind(), SensorKind::Applications);
        assert_eq!(out[1].kind(), SensorKind::Wifi);
    }

    // Hand-worked 6-event fixture: sort by (ts, priority, row_id).
    //   wifi@10#1 screen@10#2 app@10#7 app@10#3 wifi@20#4 screen@5#6
    // -> screen@5#6, app@10#3, app@10#7, screen@10#2, wifi@10#1, wifi@20#4
    #[test]
    fn six_event_tie_break_fixture() {
        let wifi_stream = vec![wifi(10, 1), wifi(20, 4)];
        let screen_stream = vec![screen(5, 6), screen(10, 2)];
        let app_stream = vec![app(10, 3), app(10, 7)];
        let out = merge_chronological(vec![wifi_stream, screen_stream, app_stream]).unwrap();
        let got: Vec<(i64, SensorKind, i64)> =
            out.iter().map(|e| (e.ts.millis(), e.kind(), e.row_id)).collect();
        assert_eq!(
            got,
            vec![
                (5, SensorKind::Screen, 6),
                (10, SensorKind::Applications, 3),
                (10, SensorKind::Applications, 7),
                (10, SensorKind::Screen, 2),
                (10, SensorKind::Wifi, 1),
                (20, SensorKind::Wifi, 4),
            ]
        );
    }

    #[test]
    fn unsorted_stream_is_rejected() {
        let err = merge_chronological(vec![vec![app(1, 1)], vec![wifi(9, 1), wifi(3, 2)]])
            .unwrap_err();
        assert!(matches!(err, IngestError::UnsortedInput { stream: 1, position: 1 }));
    }

    #[test]
    fn negative_timestamp_rejected() {
        assert!(Timestamp::from_millis(-1).is_err());
    }

    fn arb_stream(kind: u8) -> impl Strategy<Value = Vec<SensorEvent>> {
        prop::collection::vec(0i64..10_000, 0..40).prop_map(move |mut ts| {
            ts.sort();
            ts.into_iter()
                .enumerate()
                .map(|(i, t)| match kind {
                    0 => app(t, i as i64),
                    1 => wifi(t, i as i64),
                    _ => screen(t, i as i64),
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn merged_timestamps_are_nondecreasing(a in arb_stream(0), b in arb_stream(1), c in arb_stream(2)) {
            let total = a.len() + b.len() + c.len();
            let out = merge_chronological(vec![a, b, c]).unwrap();
            prop_assert_eq!(out.len(), total);
            prop_assert!(out.windows(2).all(|w| w[0].ts <= w[1].ts));
        }

        #[test]
        fn stream_order_irrelevant_without_ties(mut ts in prop::collection::btree_set(0i64..100_000, 0..60)) {
            let ts: Vec<i64> = std::mem::take(&mut ts).into_iter().collect();
            let (mut s1, mut s2) = (Vec::new(), Vec::new());
            for (i, t) in ts.iter().enumerate() {
                if i % 3 == 0 { s1.push(app(*t, i as i64)) } else { s2.push(wifi(*t, i as i64)) }
            }
            let forward = merge_chronological(vec![s1.clone(), s2.clone()]).unwrap();
            let backward = merge_chronological(vec![s2, s1]).unwrap();
            prop_assert_eq!(forward, backward);
        }
    }
}
