use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use super::{
    BatteryStatus, CallDirection, IngestError, InstallAction, MessageDirection, Payload,
    RadioMode, ScreenStatus, SensorEvent, SensorKind, Timestamp, TouchAction,
};

/// A column reference inside a [`TableSchema`]. Optional columns that are
/// missing from the header are skipped; required ones are an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRef {
    pub name: String,
    pub required: bool,
}

impl ColumnRef {
    pub fn required(name: &str) -> Self {
        ColumnRef { name: name.to_owned(), required: true }
    }

    pub fn optional(name: &str) -> Self {
        ColumnRef { name: name.to_owned(), required: false }
    }
}

/// Column layout of one sensor table: the three standard columns plus the
/// payload fields for that sensor kind, keyed by logical field name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub kind: SensorKind,
    pub row_id: ColumnRef,
    pub timestamp: ColumnRef,
    pub device_id: ColumnRef,
    pub fields: BTreeMap<&'static str, ColumnRef>,
}

impl TableSchema {
    /// Column names as exported by the AWARE platform.
    pub fn aware(kind: SensorKind) -> Self {
        use ColumnRef as C;
        let fields: Vec<(&'static str, ColumnRef)> = match kind {
            SensorKind::Applications => vec![
                ("app_name", C::required("application_name")),
                ("package", C::optional("package_name")),
                ("is_system", C::optional("is_system_app")),
            ],
            SensorKind::Notifications => vec![
                ("app_name", C::required("application_name")),
                ("text", C::optional("text")),
            ],
            SensorKind::Battery => vec![
                ("level", C::required("battery_level")),
                ("status", C::required("battery_status")),
            ],
            SensorKind::Bluetooth => {
                vec![("name", C::optional("bt_name")), ("mode", C::optional("mode"))]
            }
            SensorKind::Calls => vec![
                ("direction", C::required("call_type")),
                ("trace", C::required("trace")),
                ("duration", C::optional("call_duration")),
            ],
            SensorKind::Installations => vec![
                ("app_name", C::required("application_name")),
                ("action", C::required("installation_status")),
            ],
            SensorKind::Keyboard => vec![
                ("package", C::required("package_name")),
                ("text", C::required("current_text")),
            ],
            SensorKind::Locations => vec![
                ("lat", C::required("double_latitude")),
                ("lon", C::required("double_longitude")),
                ("speed", C::optional("double_speed")),
            ],
            SensorKind::Messages => vec![
                ("direction", C::required("message_type")),
                ("trace", C::required("trace")),
            ],
            SensorKind::Screen => vec![("status", C::required("screen_status"))],
            SensorKind::Touch => vec![
                ("action", C::required("touch_action")),
                ("content", C::optional("touch_action_text")),
                ("app_name", C::required("touch_app")),
            ],
            SensorKind::Wifi => vec![("ssid", C::optional("ssid")), ("mode", C::optional("mode"))],
        };
        TableSchema {
            kind,
            row_id: ColumnRef::optional("_id"),
            timestamp: ColumnRef::required("timestamp"),
            device_id: ColumnRef::optional("device_id"),
            fields: fields.into_iter().collect(),
        }
    }

    /// Logical field names accepted by `set_column` for this kind, besides
    /// `row_id`, `timestamp` and `device_id`.
    pub fn field_names(&self) -> Vec<&'static str> {
        self.fields.keys().copied().collect()
    }

    /// Points a logical field at a different column. Explicitly configured
    /// columns become required. Returns false for an unknown field.
    pub fn set_column(&mut self, field: &str, column: &str) -> bool {
        let slot = match field {
            "row_id" => &mut self.row_id,
            "timestamp" => &mut self.timestamp,
            "device_id" => &mut self.device_id,
            other => match self.fields.iter_mut().find(|(k, _)| **k == other) {
                Some((_, c)) => c,
                None => return false,
            },
        };
        *slot = ColumnRef::required(column);
        true
    }

    fn columns(&self) -> impl Iterator<Item = &ColumnRef> {
        [&self.row_id, &self.timestamp, &self.device_id]
            .into_iter()
            .chain(self.fields.values())
    }
}

/// Integer status codes for battery and screen tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTables {
    pub battery: BTreeMap<i64, BatteryStatus>,
    pub screen: BTreeMap<i64, ScreenStatus>,
}

impl Default for CodeTables {
    /// The AWARE Android client's codes.
    fn default() -> Self {
        let battery = [
            (-2, BatteryStatus::Rebooted),
            (-1, BatteryStatus::Shutdown),
            (1, BatteryStatus::LevelSample),
            (2, BatteryStatus::StartedCharging),
            (3, BatteryStatus::StartedDischarging),
            (4, BatteryStatus::NotCharging),
            (5, BatteryStatus::FullyCharged),
        ];
        let screen = [
            (0, ScreenStatus::Off),
            (1, ScreenStatus::On),
            (2, ScreenStatus::Locked),
            (3, ScreenStatus::Unlocked),
        ];
        CodeTables {
            battery: battery.into_iter().collect(),
            screen: screen.into_iter().collect(),
        }
    }
}

impl CodeTables {
    fn battery_code(&self, status: BatteryStatus) -> Option<i64> {
        self.battery.iter().find(|(_, s)| **s == status).map(|(c, _)| *c)
    }

    fn screen_code(&self, status: ScreenStatus) -> Option<i64> {
        self.screen.iter().find(|(_, s)| **s == status).map(|(c, _)| *c)
    }
}

/// A row that could not be converted. `row` counts data rows from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub row: u64,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct TableLoad {
    pub events: Vec<SensorEvent>,
    pub row_errors: Vec<RowError>,
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn position(&self, col: &ColumnRef) -> Option<usize> {
        self.index.get(&col.name).copied()
    }
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    positions: &'a HashMap<&'static str, usize>,
}

impl Row<'_> {
    fn opt(&self, field: &str) -> Option<&str> {
        self.positions.get(field).and_then(|&i| self.record.get(i))
    }

    fn text(&self, field: &str) -> Option<String> {
        self.opt(field).filter(|s| !s.trim().is_empty()).map(str::to_owned)
    }

    fn req(&self, field: &str) -> Result<&str, String> {
        self.opt(field).ok_or_else(|| format!("missing value for `{field}`"))
    }
}

/// Reads one delimited sensor table. Rows that fail to convert are reported
/// in [`TableLoad::row_errors`] and the remaining rows are still returned,
/// in file order.
pub fn load_table<R: Read>(
    source: R,
    schema: &TableSchema,
    codes: &CodeTables,
) -> Result<TableLoad, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) if is_empty_source(&e) => return Ok(TableLoad::default()),
        Err(e) => return Err(e.into()),
    };
    if headers.is_empty() {
        return Ok(TableLoad::default());
    }
    let columns = Columns {
        index: headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_owned(), i))
            .collect(),
    };
    for col in schema.columns() {
        if col.required && columns.position(col).is_none() {
            return Err(IngestError::MissingColumn {
                kind: schema.kind,
                column: col.name.clone(),
            });
        }
    }
    let mut positions: HashMap<&'static str, usize> = HashMap::new();
    for (field, col) in &schema.fields {
        if let Some(p) = columns.position(col) {
            positions.insert(field, p);
        }
    }
    let ts_pos = columns.position(&schema.timestamp);
    let id_pos = columns.position(&schema.row_id);
    let dev_pos = columns.position(&schema.device_id);

    let mut out = TableLoad::default();
    for (i, record) in reader.records().enumerate() {
        let row_no = i as u64 + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.row_errors.push(RowError { row: row_no, reason: e.to_string() });
                continue;
            }
        };
        let row = Row { record: &record, positions: &positions };
        let parsed = (|| {
            let ts_raw = ts_pos.and_then(|p| record.get(p)).ok_or("missing timestamp")?;
            let ts = parse_epoch(ts_raw)?;
            let row_id = match id_pos.and_then(|p| record.get(p)) {
                Some(s) => s
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| format!("bad row id `{s}`"))?,
                None => row_no as i64,
            };
            let device_id = dev_pos
                .and_then(|p| record.get(p))
                .unwrap_or_default()
                .to_owned();
            let payload = parse_payload(schema.kind, &row, codes)?;
            Ok::<_, String>(SensorEvent { ts, device_id, row_id, payload })
        })();
        match parsed {
            Ok(event) => out.events.push(event),
            Err(reason) => out.row_errors.push(RowError { row: row_no, reason }),
        }
    }
    Ok(out)
}

fn is_empty_source(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::UnequalLengths { .. })
}

fn parse_epoch(s: &str) -> Result<Timestamp, String> {
    let s = s.trim();
    let ms = match s.parse::<i64>() {
        Ok(v) => v,
        Err(_) => match s.parse::<f64>() {
            Ok(v) if v.is_finite() => v as i64,
            _ => return Err(format!("bad timestamp `{s}`")),
        },
    };
    Timestamp::from_millis(ms).map_err(|e| e.to_string())
}

fn parse_int(field: &str, s: &str) -> Result<i64, String> {
    let t = s.trim();
    t.parse::<i64>()
        .or_else(|_| match t.parse::<f64>() {
            Ok(v) if v.is_finite() && v.fract() == 0.0 => Ok(v as i64),
            _ => Err(()),
        })
        .map_err(|_| format!("bad {field} `{s}`"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "f" => Ok(false),
        "1" | "true" | "t" => Ok(true),
        other => Err(format!("bad boolean `{other}`")),
    }
}

fn parse_mode(s: Option<&str>) -> Result<RadioMode, String> {
    match s.map(|s| s.trim().to_ascii_lowercase()).as_deref() {
        None | Some("") | Some("0") | Some("detected") | Some("scan") => Ok(RadioMode::Detected),
        Some("1") | Some("connected") => Ok(RadioMode::Connected),
        Some(other) => Err(format!("bad mode `{other}`")),
    }
}

fn parse_coord(field: &str, s: &str, limit: f64) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v.abs() <= limit => Ok(v),
        _ => Err(format!("bad {field} `{s}`")),
    }
}

fn parse_payload(kind: SensorKind, row: &Row<'_>, codes: &CodeTables) -> Result<Payload, String> {
    Ok(match kind {
        SensorKind::Applications => Payload::ApplicationForeground {
            app_name: row.req("app_name")?.to_owned(),
            package: row.opt("package").unwrap_or_default().to_owned(),
            is_system: row.opt("is_system").map(parse_bool).transpose()?.unwrap_or(false),
        },
        SensorKind::Notifications => Payload::Notification {
            app_name: row.req("app_name")?.to_owned(),
            text: row.text("text"),
        },
        SensorKind::Battery => {
            let level = parse_int("battery level", row.req("level")?)?;
            if !(0..=100).contains(&level) {
                return Err(format!("battery level {level} outside 0-100"));
            }
            let raw = row.req("status")?;
            let status = match parse_int("battery status", raw) {
                Ok(code) => *codes
                    .battery
                    .get(&code)
                    .ok_or_else(|| format!("unknown battery status code {code}"))?,
                Err(_) => BatteryStatus::from_name(raw)
                    .ok_or_else(|| format!("unknown battery status `{raw}`"))?,
            };
            Payload::Battery { level: level as u8, status }
        }
        SensorKind::Bluetooth => Payload::Bluetooth {
            name: row.text("name"),
            mode: parse_mode(row.opt("mode"))?,
        },
        SensorKind::Calls => {
            let raw = row.req("direction")?;
            let direction = match raw.trim().to_ascii_lowercase().as_str() {
                "1" | "incoming" | "received" => CallDirection::Incoming,
                "2" | "outgoing" | "made" => CallDirection::Outgoing,
                "3" | "missed" => CallDirection::Missed,
                _ => return Err(format!("unknown call type `{raw}`")),
            };
            let duration = match row.opt("duration") {
                Some(s) if !s.trim().is_empty() => parse_int("call duration", s)?,
                _ => 0,
            };
            if duration < 0 {
                return Err(format!("negative call duration {duration}"));
            }
            Payload::Call {
                direction,
                trace: row.req("trace")?.to_owned(),
                duration_s: if direction == CallDirection::Missed { 0 } else { duration as u64 },
                person: None,
            }
        }
        SensorKind::Installations => {
            let raw = row.req("action")?;
            let action = match raw.trim().to_ascii_lowercase().as_str() {
                "0" | "removed" => InstallAction::Removed,
                "1" | "added" => InstallAction::Added,
                "2" | "updated" => InstallAction::Updated,
                _ => return Err(format!("unknown installation status `{raw}`")),
            };
            Payload::Installation { app_name: row.req("app_name")?.to_owned(), action }
        }
        SensorKind::Keyboard => Payload::Keyboard {
            package: row.req("package")?.to_owned(),
            current_text: row.req("text")?.to_owned(),
        },
        SensorKind::Locations => {
            let speed = match row.opt("speed").map(str::trim) {
                None | Some("") => None,
                Some(s) => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
                    Ok(_) => None,
                    Err(_) => return Err(format!("bad speed `{s}`")),
                },
            };
            Payload::Location {
                lat: parse_coord("latitude", row.req("lat")?, 90.0)?,
                lon: parse_coord("longitude", row.req("lon")?, 180.0)?,
                speed_mps: speed,
            }
        }
        SensorKind::Messages => {
            let raw = row.req("direction")?;
            let direction = match raw.trim().to_ascii_lowercase().as_str() {
                "1" | "received" | "incoming" => MessageDirection::Received,
                "2" | "sent" | "outgoing" => MessageDirection::Sent,
                _ => return Err(format!("unknown message type `{raw}`")),
            };
            Payload::Message { direction, trace: row.req("trace")?.to_owned(), person: None }
        }
        SensorKind::Screen => {
            let raw = row.req("status")?;
            let status = match parse_int("screen status", raw) {
                Ok(code) => *codes
                    .screen
                    .get(&code)
                    .ok_or_else(|| format!("unknown screen status code {code}"))?,
                Err(_) => ScreenStatus::from_name(raw)
                    .ok_or_else(|| format!("unknown screen status `{raw}`"))?,
            };
            Payload::Screen { status }
        }
        SensorKind::Touch => {
            let raw = row.req("action")?;
            let key: String = raw
                .trim()
                .to_ascii_lowercase()
                .trim_start_matches("action_aware_touch_")
                .chars()
                .filter(|c| *c != '_' && *c != ' ')
                .collect();
            let action = match key.as_str() {
                "clicked" | "click" => TouchAction::Clicked,
                "clickedlonger" | "longclicked" | "longclick" => TouchAction::ClickedLonger,
                "scrolleddown" | "scrolldown" => TouchAction::ScrolledDown,
                "scrolledup" | "scrollup" => TouchAction::ScrolledUp,
                _ => return Err(format!("unknown touch action `{raw}`")),
            };
            Payload::Touch {
                action,
                content: row.text("content"),
                app_name: row.req("app_name")?.to_owned(),
            }
        }
        SensorKind::Wifi => Payload::Wifi {
            ssid: row.text("ssid"),
            mode: parse_mode(row.opt("mode"))?,
        },
    })
}

/// Field values of `event` in row form, keyed by logical field name.
fn payload_fields(payload: &Payload, codes: &CodeTables) -> Vec<(&'static str, String)> {
    let mode = |m: &RadioMode| match m {
        RadioMode::Detected => "detected".to_owned(),
        RadioMode::Connected => "connected".to_owned(),
    };
    let opt = |s: &Option<String>| s.clone().unwrap_or_default();
    match payload {
        Payload::ApplicationForeground { app_name, package, is_system } => vec![
            ("app_name", app_name.clone()),
            ("package", package.clone()),
            ("is_system", (*is_system as u8).to_string()),
        ],
        Payload::Notification { app_name, text } => {
            vec![("app_name", app_name.clone()), ("text", opt(text))]
        }
        Payload::Battery { level, status } => vec![
            ("level", level.to_string()),
            (
                "status",
                codes
                    .battery_code(*status)
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| format!("{status:?}")),
            ),
        ],
        Payload::Bluetooth { name, mode: m } => vec![("name", opt(name)), ("mode", mode(m))],
        Payload::Call { direction, trace, duration_s, .. } => vec![
            (
                "direction",
                match direction {
                    CallDirection::Incoming => "1",
                    CallDirection::Outgoing => "2",
                    CallDirection::Missed => "3",
                }
                .to_owned(),
            ),
            ("trace", trace.clone()),
            ("duration", duration_s.to_string()),
        ],
        Payload::Installation { app_name, action } => vec![
            ("app_name", app_name.clone()),
            (
                "action",
                match action {
                    InstallAction::Removed => "0",
                    InstallAction::Added => "1",
                    InstallAction::Updated => "2",
                }
                .to_owned(),
            ),
        ],
        Payload::Keyboard { package, current_text } => {
            vec![("package", package.clone()), ("text", current_text.clone())]
        }
        Payload::Location { lat, lon, speed_mps } => vec![
            ("lat", lat.to_string()),
            ("lon", lon.to_string()),
            ("speed", speed_mps.map(|s| s.to_string()).unwrap_or_default()),
        ],
        Payload::Message { direction, trace, .. } => vec![
            (
                "direction",
                match direction {
                    MessageDirection::Received => "1",
                    MessageDirection::Sent => "2",
                }
                .to_owned(),
            ),
            ("trace", trace.clone()),
        ],
        Payload::Screen { status } => vec![(
            "status",
            codes
                .screen_code(*status)
                .map(|c| c.to_string())
                .unwrap_or_else(|| format!("{status:?}")),
        )],
        Payload::Touch { action, content, app_name } => vec![
            (
                "action",
                match action {
                    TouchAction::Clicked => "ACTION_AWARE_TOUCH_CLICKED",
                    TouchAction::ClickedLonger => "ACTION_AWARE_TOUCH_LONG_CLICKED",
                    TouchAction::ScrolledDown => "ACTION_AWARE_TOUCH_SCROLLED_DOWN",
                    TouchAction::ScrolledUp => "ACTION_AWARE_TOUCH_SCROLLED_UP",
                }
                .to_owned(),
            ),
            ("content", opt(content)),
            ("app_name", app_name.clone()),
        ],
        Payload::Wifi { ssid, mode: m } => vec![("ssid", opt(ssid)), ("mode", mode(m))],
    }
}

/// Writes events of one kind as a table that [`load_table`] reads back with
/// the same schema. Events of other kinds are skipped.
pub fn write_table<W: Write>(
    sink: W,
    events: &[SensorEvent],
    schema: &TableSchema,
    codes: &CodeTables,
) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec![
        schema.row_id.name.clone(),
        schema.timestamp.name.clone(),
        schema.device_id.name.clone(),
    ];
    let field_order: Vec<&'static str> = schema.fields.keys().copied().collect();
    header.extend(field_order.iter().map(|f| schema.fields[f].name.clone()));
    writer.write_record(&header)?;
    for event in events.iter().filter(|e| e.kind() == schema.kind) {
        let fields: HashMap<_, _> = payload_fields(&event.payload, codes).into_iter().collect();
        let mut record = vec![
            event.row_id.to_string(),
            event.ts.millis().to_string(),
            event.device_id.clone(),
        ];
        record.extend(field_order.iter().map(|f| fields.get(f).cloned().unwrap_or_default()));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Keeps only the events of one device. Without a filter, input that mixes
/// devices is rejected.
pub fn select_device(
    events: Vec<SensorEvent>,
    device: Option<&str>,
) -> Result<Vec<SensorEvent>, IngestError> {
    match device {
        Some(d) => Ok(events.into_iter().filter(|e| e.device_id == d).collect()),
        None => {
            let devices: BTreeSet<&str> = events.iter().map(|e| e.device_id.as_str()).collect();
            if devices.len() > 1 {
                return Err(IngestError::MixedDevices {
                    devices: devices.into_iter().collect::<Vec<_>>().join(", "),
                });
            }
            Ok(events)
        }
    }
}

/// Battery tables repeat the prevailing status on every broadcast. Keeps the
/// first row of each status run as a status change and turns the repeats
/// into [`BatteryStatus::LevelSample`]s. Input must be chronological.
pub fn mark_battery_transitions(events: &mut [SensorEvent]) {
    let mut prevailing: Option<BatteryStatus> = None;
    for event in events.iter_mut() {
        if let Payload::Battery { status, .. } = &mut event.payload {
            if *status == BatteryStatus::LevelSample {
                continue;
            }
            if prevailing == Some(*status) {
                *status = BatteryStatus::LevelSample;
            } else {
                prevailing = Some(*status);
            }
        }
    }
}
