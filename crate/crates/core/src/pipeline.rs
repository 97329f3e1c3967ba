//! Runs the stages between raw tables and renderable events: table loading,
//! merge, person ids, battery/keyboard reduction and location narration.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono_tz::Tz;

use crate::geo::{
    self, GeoError, GeoParams, GeoPoint, HomeModel, PlaceCluster, PlaceEntry,
};
use crate::ingest::{
    self, assign_person_ids, load_table, mark_battery_transitions, select_device, CodeTables,
    IngestError, Payload, PersonRegistry, SensorEvent, SensorKind, TableLoad, TableSchema,
};
use crate::narrate::{EventBody, ProcessedEvent};
use crate::par::{self, Execution};
use crate::sessions::{self, BatterySample, KeyboardSnapshot};

#[derive(Debug, Clone)]
pub struct TableSource {
    pub path: PathBuf,
    pub schema: TableSchema,
}

#[derive(Debug)]
pub struct LoadedTable {
    pub kind: SensorKind,
    pub path: PathBuf,
    pub load: TableLoad,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Table { path: PathBuf, source: IngestError },
}

/// Table sources for every default file name present in `dir`.
pub fn discover_tables(dir: &Path) -> Vec<TableSource> {
    SensorKind::ALL
        .into_iter()
        .map(|kind| TableSource { path: dir.join(kind.default_file()), schema: TableSchema::aware(kind) })
        .filter(|s| s.path.is_file())
        .collect()
}

/// Loads the tables, one per work item.
pub fn load_tables(
    sources: &[TableSource],
    codes: &CodeTables,
    exec: Execution,
) -> Result<Vec<LoadedTable>, LoadError> {
    par::map_slice(exec, sources, |src| {
        let file = File::open(&src.path).map_err(|source| LoadError::Io { path: src.path.clone(), source })?;
        let load = load_table(BufReader::new(file), &src.schema, codes)
            .map_err(|source| LoadError::Table { path: src.path.clone(), source })?;
        Ok(LoadedTable { kind: src.schema.kind, path: src.path.clone(), load })
    })
    .into_iter()
    .collect()
}

/// Sorts each table, merges them chronologically and applies the device
/// filter.
pub fn merge_tables(tables: Vec<LoadedTable>, device: Option<&str>) -> Result<Vec<SensorEvent>, IngestError> {
    let streams = tables
        .into_iter()
        .map(|t| {
            let mut events = t.load.events;
            ingest::sort_stream(&mut events);
            events
        })
        .collect();
    let merged = ingest::merge_chronological(streams)?;
    select_device(merged, device)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub geo: GeoParams,
    pub keyboard_gap_s: f64,
    pub zone: Tz,
    pub exec: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { geo: GeoParams::default(), keyboard_gap_s: 30.0, zone: Tz::UTC, exec: Execution::default() }
    }
}

/// Everything downstream stages need.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Renderable events sorted by [`ProcessedEvent::order_key`].
    pub events: Vec<ProcessedEvent>,
    pub points: Vec<GeoPoint>,
    pub clusters: Vec<PlaceCluster>,
    pub home: Option<HomeModel>,
    pub registry: PersonRegistry,
}

/// Location analysis over the whole run: speeds, clusters, labels and home.
pub fn analyse_locations(
    points: &mut [GeoPoint],
    place_map: &[PlaceEntry],
    params: &GeoParams,
    zone: Tz,
    exec: Execution,
) -> (Vec<PlaceCluster>, Option<HomeModel>) {
    geo::fill_missing_speeds(points, params.max_speed_gap_s);
    let mut clusters = geo::cluster_locations_with(points, params.diameter_m, exec);
    geo::label_clusters(&mut clusters, place_map, params.max_snap_m);
    let home = match geo::detect_home(&mut clusters, points, params.night, zone) {
        Ok(h) => Some(h),
        Err(GeoError::NoNighttimeData) => {
            log::warn!("no location fixes in the night window; narrating without home distances");
            None
        }
        Err(e) => unreachable!("detect_home only fails with NoNighttimeData: {e}"),
    };
    (clusters, home)
}

/// Turns a merged chronological event stream into renderable events.
pub fn prepare(merged: Vec<SensorEvent>, place_map: &[PlaceEntry], cfg: &PipelineConfig) -> Prepared {
    let (mut events, registry) = assign_person_ids(merged, PersonRegistry::new());
    mark_battery_transitions(&mut events);

    let mut battery = Vec::new();
    let mut keys = Vec::new();
    let mut points = Vec::new();
    let mut point_rows = Vec::new();
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        match e.payload {
            Payload::Battery { level, status } => {
                battery.push(BatterySample { ts: e.ts, row_id: e.row_id, status, level })
            }
            Payload::Keyboard { package, current_text } => keys.push(KeyboardSnapshot {
                ts: e.ts,
                row_id: e.row_id,
                package,
                text: current_text,
            }),
            Payload::Location { lat, lon, speed_mps } => {
                points.push(GeoPoint { lat, lon, ts: e.ts, speed_mps });
                point_rows.push(e.row_id);
            }
            payload => out.push(ProcessedEvent {
                ts: e.ts,
                row_id: e.row_id,
                sensor: payload.kind(),
                body: EventBody::Raw(payload),
            }),
        }
    }

    out.extend(sessions::battery_extrema(&battery).into_iter().map(|b| ProcessedEvent {
        ts: b.ts,
        row_id: b.row_id,
        sensor: SensorKind::Battery,
        body: EventBody::Battery(b),
    }));
    out.extend(
        sessions::keyboard_sessions(&keys, cfg.keyboard_gap_s)
            .into_iter()
            .map(|k| ProcessedEvent {
                ts: k.end_ts,
                row_id: k.row_id,
                sensor: SensorKind::Keyboard,
                body: EventBody::Keyboard(k),
            }),
    );

    let (clusters, home) = analyse_locations(&mut points, place_map, &cfg.geo, cfg.zone, cfg.exec);
    let located = par::map_slice(cfg.exec, &points, |p| {
        geo::locate(p, &clusters, home.as_ref(), cfg.geo.stop_epsilon)
    });
    out.extend(points.iter().zip(point_rows).zip(located).map(|((p, row_id), loc)| ProcessedEvent {
        ts: p.ts,
        row_id,
        sensor: SensorKind::Locations,
        body: EventBody::Location(loc),
    }));

    out.sort_by_key(ProcessedEvent::order_key);
    Prepared { events: out, points, clusters, home, registry }
}
