//! Seeded synthetic AWARE datasets: a commuter's week with a known home,
//! workplace and café, used by tests, benches and demos.

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, TimeZone};
use chrono_tz::Tz;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::{Coord, PlaceEntry};
use crate::ingest::{
    write_table, BatteryStatus, CallDirection, CodeTables, IngestError, InstallAction,
    MessageDirection, Payload, RadioMode, ScreenStatus, SensorEvent, SensorKind, TableSchema,
    Timestamp, TouchAction,
};

const METRES_PER_DEGREE: f64 = 111_194.926_644;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub start: NaiveDate,
    pub days: u32,
    pub zone: Tz,
    pub device_id: String,
    pub home: Coord,
    /// Probability that a night fix (20:00–04:00) is recorded away from
    /// home, at a friend's flat.
    pub night_away_share: f64,
    /// Minutes between stationary location fixes.
    pub fix_interval_min: u32,
    /// Phone-use bursts per day.
    pub sessions_per_day: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            start: NaiveDate::from_ymd_opt(2023, 9, 11).expect("valid date"),
            days: 7,
            zone: chrono_tz::Australia::Melbourne,
            device_id: "synthetic-device".into(),
            home: Coord::new(-37.78, 144.96),
            night_away_share: 0.1,
            fix_interval_min: 15,
            sessions_per_day: 14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub events: Vec<SensorEvent>,
    pub home: Coord,
    pub work: Coord,
    pub cafe: Coord,
    pub friend: Coord,
    /// Labels for work and café, the entries a place map would hold.
    pub places: Vec<PlaceEntry>,
    /// Every free-text string the generator planted: notification text,
    /// keyboard text, network names and place labels.
    pub sensitive: Vec<String>,
}

const APPS: [(&str, &str); 6] = [
    ("Messages", "com.google.android.apps.messaging"),
    ("Chrome", "com.android.chrome"),
    ("Spotify", "com.spotify.music"),
    ("Gmail", "com.google.android.gm"),
    ("Maps", "com.google.android.apps.maps"),
    ("Camera", "com.android.camera"),
];

const NOTIFICATIONS: [(&str, &str); 4] = [
    ("Gmail", "Quarterly budget draft attached"),
    ("Messages", "Dinner at Lygon St tonight?"),
    ("Calendar", "Dentist appointment tomorrow 10am"),
    ("Spotify", "New release from Courtney Barnett"),
];

const TYPED: [&str; 4] = ["running late sorry", "see you at the tram stop", "pick up milk", "call mum back"];

const CONTACTS: [&str; 6] = [
    "5f1c9a0b7e", "a3d4e2c1f0", "0b9e8d7c6a", "c4b3a29180", "7e6d5c4b3a", "91a2b3c4d5",
];

const HOME_SSID: &str = "Hartley-Home-5G";
const WORK_SSID: &str = "Collins-Office-Staff";
const NEIGHBOUR_SSID: &str = "Telstra-7F2A";
const HEADPHONES: &str = "Pixel Buds Pro";
const WORK_LABEL: &str = "Level 3, 100 Collins St, Melbourne VIC 3000";
const CAFE_LABEL: &str = "Pellegrini's Espresso Bar, Bourke St";

fn offset(c: Coord, north_m: f64, east_m: f64) -> Coord {
    Coord::new(
        c.lat + north_m / METRES_PER_DEGREE,
        c.lon + east_m / (METRES_PER_DEGREE * c.lat.to_radians().cos()),
    )
}

struct Builder<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
    events: Vec<SensorEvent>,
}

impl Builder<'_> {
    fn ts(&self, local: NaiveDateTime) -> Timestamp {
        let utc = self
            .cfg
            .zone
            .from_local_datetime(&local)
            .earliest()
            // inside a DST gap: shift past it
            .unwrap_or_else(|| self.cfg.zone.from_utc_datetime(&local));
        Timestamp::from_millis(utc.timestamp_millis()).expect("synthetic dates are after 1970")
    }

    fn push(&mut self, local: NaiveDateTime, payload: Payload) {
        let ts = self.ts(local);
        self.events.push(SensorEvent { ts, device_id: self.cfg.device_id.clone(), row_id: 0, payload });
    }

    fn fix(&mut self, local: NaiveDateTime, at: Coord, jitter_m: f64, speed: f64) {
        let n = self.rng.gen_range(-jitter_m..=jitter_m);
        let e = self.rng.gen_range(-jitter_m..=jitter_m);
        let c = offset(at, n, e);
        self.push(local, Payload::Location { lat: c.lat, lon: c.lon, speed_mps: Some(speed) });
    }

    fn travel(&mut self, start: NaiveDateTime, from: Coord, to: Coord, minutes: u32, speed: f64) {
        for m in 0..=minutes {
            let f = m as f64 / minutes as f64;
            let c = Coord::new(from.lat + (to.lat - from.lat) * f, from.lon + (to.lon - from.lon) * f);
            let moving = if m == 0 || m == minutes { 0.0 } else { speed };
            self.fix(start + Duration::minutes(m as i64), c, 2.0, moving);
        }
    }

    fn session(&mut self, start: NaiveDateTime) {
        let mut t = start;
        self.push(t, Payload::Screen { status: ScreenStatus::On });
        t += Duration::seconds(2);
        self.push(t, Payload::Screen { status: ScreenStatus::Unlocked });
        let (app, package) = *APPS.choose(&mut self.rng).expect("non-empty");
        t += Duration::seconds(3);
        self.push(t, Payload::ApplicationForeground { app_name: app.into(), package: package.into(), is_system: false });
        for _ in 0..self.rng.gen_range(1..4) {
            t += Duration::seconds(self.rng.gen_range(2..20));
            let action = *[TouchAction::Clicked, TouchAction::ScrolledDown, TouchAction::ScrolledUp]
                .choose(&mut self.rng)
                .expect("non-empty");
            self.push(t, Payload::Touch { action, content: None, app_name: app.into() });
        }
        if self.rng.gen_bool(0.4) {
            let (napp, text) = *NOTIFICATIONS.choose(&mut self.rng).expect("non-empty");
            t += Duration::seconds(self.rng.gen_range(5..30));
            self.push(t, Payload::Notification { app_name: napp.into(), text: Some(text.into()) });
        }
        if self.rng.gen_bool(0.5) {
            let (mapp, mpackage) = APPS[0];
            let typed = *TYPED.choose(&mut self.rng).expect("non-empty");
            t += Duration::seconds(4);
            self.push(t, Payload::ApplicationForeground { app_name: mapp.into(), package: mpackage.into(), is_system: false });
            for (i, _) in typed.char_indices().skip(1).step_by(3).chain([(typed.len(), ' ')]) {
                t += Duration::seconds(1);
                self.push(t, Payload::Keyboard { package: mpackage.into(), current_text: typed[..i].into() });
            }
            let trace = *CONTACTS.choose(&mut self.rng).expect("non-empty");
            t += Duration::seconds(2);
            self.push(t, Payload::Message { direction: MessageDirection::Sent, trace: trace.into(), person: None });
        }
        if self.rng.gen_bool(0.3) {
            let trace = *CONTACTS.choose(&mut self.rng).expect("non-empty");
            t += Duration::seconds(self.rng.gen_range(10..120));
            self.push(t, Payload::Message { direction: MessageDirection::Received, trace: trace.into(), person: None });
        }
        if self.rng.gen_bool(0.15) {
            let trace = *CONTACTS.choose(&mut self.rng).expect("non-empty");
            let direction = *[CallDirection::Incoming, CallDirection::Outgoing, CallDirection::Missed]
                .choose(&mut self.rng)
                .expect("non-empty");
            let duration_s = if direction == CallDirection::Missed { 0 } else { self.rng.gen_range(20..900) };
            t += Duration::seconds(30);
            self.push(t, Payload::Call { direction, trace: trace.into(), duration_s, person: None });
            t += Duration::seconds(duration_s as i64);
        }
        t += Duration::seconds(self.rng.gen_range(20..240));
        self.push(t, Payload::Screen { status: ScreenStatus::Off });
        self.push(t, Payload::Screen { status: ScreenStatus::Locked });
    }
}

fn at(date: NaiveDate, h: u32, m: u32) -> NaiveDateTime {
    date.and_time(NaiveTime::from_hms_opt(h, m, 0).expect("valid time"))
}

/// Builds `cfg.days` days of data. The same config always yields the same
/// events, sorted chronologically with per-table row ids.
pub fn generate(cfg: &SynthConfig) -> SynthDataset {
    let home = cfg.home;
    let work = offset(home, -2600.0, 1200.0);
    let cafe = offset(work, 150.0, -420.0);
    let friend = offset(home, 900.0, -1500.0);
    let mut b = Builder { cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed), events: Vec::new() };
    let step = cfg.fix_interval_min.max(1) as i64;

    for d in 0..cfg.days {
        let date = cfg.start + Duration::days(d as i64);
        let weekend = d % 7 >= 5;

        // Night at home (or sometimes away), midnight to 07:30.
        let mut t = at(date, 0, 0);
        while t < at(date, 7, 30) {
            let away = b.rng.gen_bool(cfg.night_away_share.clamp(0.0, 1.0));
            let place = if away && t < at(date, 4, 0) { friend } else { home };
            b.fix(t, place, 8.0, 0.0);
            t += Duration::minutes(step);
        }
        b.push(at(date, 7, 0), Payload::Battery { level: 100, status: BatteryStatus::FullyCharged });
        b.push(at(date, 7, 15), Payload::Battery { level: 100, status: BatteryStatus::StartedDischarging });
        b.push(at(date, 7, 31), Payload::Wifi { ssid: Some(HOME_SSID.into()), mode: RadioMode::Connected });
        b.push(at(date, 7, 31) + Duration::seconds(1), Payload::Wifi { ssid: Some(NEIGHBOUR_SSID.into()), mode: RadioMode::Detected });

        let evening_start = if weekend {
            // A walk to the café and back.
            b.travel(at(date, 10, 0), home, cafe, 40, 1.3);
            let mut t = at(date, 10, 41);
            while t < at(date, 13, 0) {
                b.fix(t, cafe, 6.0, 0.0);
                t += Duration::minutes(step);
            }
            b.travel(at(date, 13, 0), cafe, home, 40, 1.3);
            at(date, 13, 41)
        } else {
            b.push(at(date, 8, 0), Payload::Bluetooth { name: Some(HEADPHONES.into()), mode: RadioMode::Connected });
            b.travel(at(date, 8, 0), home, work, 30, 9.0);
            b.push(at(date, 8, 31), Payload::Wifi { ssid: Some(WORK_SSID.into()), mode: RadioMode::Connected });
            let mut t = at(date, 8, 31);
            while t < at(date, 12, 30) {
                b.fix(t, work, 8.0, 0.0);
                t += Duration::minutes(step);
            }
            b.travel(at(date, 12, 30), work, cafe, 6, 1.2);
            b.fix(at(date, 12, 50), cafe, 5.0, 0.0);
            b.travel(at(date, 13, 10), cafe, work, 6, 1.2);
            let mut t = at(date, 13, 17);
            while t < at(date, 17, 0) {
                b.fix(t, work, 8.0, 0.0);
                t += Duration::minutes(step);
            }
            b.travel(at(date, 17, 0), work, home, 30, 9.0);
            b.push(at(date, 17, 31), Payload::Wifi { ssid: Some(HOME_SSID.into()), mode: RadioMode::Connected });
            at(date, 17, 31)
        };
        let mut t = evening_start;
        while t < at(date, 23, 59) {
            let away = t >= at(date, 20, 0) && b.rng.gen_bool(cfg.night_away_share.clamp(0.0, 1.0));
            b.fix(t, if away { friend } else { home }, 8.0, 0.0);
            t += Duration::minutes(step);
        }

        // Battery drains through the day and charges overnight.
        let mut level = 100i32;
        let mut t = at(date, 7, 30);
        while t < at(date, 22, 30) {
            level = (level - b.rng.gen_range(0..3)).max(5);
            b.push(t, Payload::Battery { level: level as u8, status: BatteryStatus::LevelSample });
            t += Duration::minutes(20);
        }
        b.push(at(date, 22, 30), Payload::Battery { level: level as u8, status: BatteryStatus::StartedCharging });
        let mut t = at(date, 22, 40);
        while level < 100 && t < at(date, 23, 59) {
            level = (level + b.rng.gen_range(4..9)).min(100);
            b.push(t, Payload::Battery { level: level as u8, status: BatteryStatus::LevelSample });
            t += Duration::minutes(10);
        }

        if d == 2 {
            b.push(at(date, 21, 5), Payload::Installation { app_name: "Strava".into(), action: InstallAction::Added });
        }

        let mut starts: Vec<u32> = (0..cfg.sessions_per_day).map(|_| b.rng.gen_range(7 * 60 + 35..23 * 60)).collect();
        starts.sort_unstable();
        for minute in starts {
            let second = b.rng.gen_range(0..60);
            b.session(at(date, minute / 60, minute % 60) + Duration::seconds(second));
        }
    }

    let mut events = b.events;
    events.sort_by_key(|e| (e.ts, e.kind().priority()));
    let mut next_row = [0i64; SensorKind::ALL.len()];
    for e in &mut events {
        let slot = &mut next_row[e.kind() as usize];
        *slot += 1;
        e.row_id = *slot;
    }

    let places = vec![
        PlaceEntry { coord: work, label: WORK_LABEL.into() },
        PlaceEntry { coord: cafe, label: CAFE_LABEL.into() },
    ];
    let mut sensitive: Vec<String> = NOTIFICATIONS.iter().map(|(_, t)| t.to_string()).collect();
    sensitive.extend(TYPED.iter().map(|s| s.to_string()));
    sensitive.extend([HOME_SSID, WORK_SSID, NEIGHBOUR_SSID, HEADPHONES, WORK_LABEL, CAFE_LABEL].map(String::from));
    SynthDataset { events, home, work, cafe, friend, places, sensitive }
}

/// Writes one AWARE-named CSV per sensor into `dir`, plus `places.csv`.
pub fn write_dataset(data: &SynthDataset, dir: &Path) -> Result<(), IngestError> {
    fs::create_dir_all(dir).map_err(csv::Error::from)?;
    let codes = CodeTables::default();
    for kind in SensorKind::ALL {
        let file = File::create(dir.join(kind.default_file())).map_err(csv::Error::from)?;
        write_table(BufWriter::new(file), &data.events, &TableSchema::aware(kind), &codes)?;
    }
    let file = File::create(dir.join("places.csv")).map_err(csv::Error::from)?;
    write_place_map(&data.places, BufWriter::new(file)).map_err(csv::Error::from)?;
    Ok(())
}

/// Writes entries in the format [`crate::geo::load_place_map`] reads.
pub fn write_place_map<W: io::Write>(places: &[PlaceEntry], sink: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["lat", "lon", "label"])?;
    for p in places {
        w.write_record([p.coord.lat.to_string(), p.coord.lon.to_string(), p.label.clone()])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::haversine_m;

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = SynthConfig { days: 2, ..SynthConfig::default() };
        assert_eq!(generate(&cfg).events, generate(&cfg).events);
        let other = SynthConfig { seed: 8, ..cfg.clone() };
        assert_ne!(generate(&cfg).events, generate(&other).events);
    }

    #[test]
    fn streams_are_sorted_with_unique_row_ids() {
        let data = generate(&SynthConfig::default());
        for kind in SensorKind::ALL {
            let rows: Vec<_> = data.events.iter().filter(|e| e.kind() == kind).collect();
            assert!(!rows.is_empty(), "{kind:?}");
            assert!(rows.windows(2).all(|w| (w[0].ts, w[0].row_id) < (w[1].ts, w[1].row_id)));
        }
    }

    #[test]
    fn places_are_far_apart() {
        let data = generate(&SynthConfig::default());
        let d = haversine_m(data.home, data.work);
        assert!((2700.0..2950.0).contains(&d), "{d}");
        assert!(haversine_m(data.work, data.cafe) > 300.0);
    }

    #[test]
    fn writes_loadable_tables() {
        let tmp = tempfile::tempdir().unwrap();
        let data = generate(&SynthConfig { days: 1, ..SynthConfig::default() });
        write_dataset(&data, tmp.path()).unwrap();
        let sources = crate::pipeline::discover_tables(tmp.path());
        assert_eq!(sources.len(), SensorKind::ALL.len());
        let tables = crate::pipeline::load_tables(&sources, &CodeTables::default(), Default::default()).unwrap();
        let merged = crate::pipeline::merge_tables(tables, None).unwrap();
        assert_eq!(merged.len(), data.events.len());
    }
}
