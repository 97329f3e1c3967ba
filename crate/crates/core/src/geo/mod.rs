//! Location processing: great-circle distance, place clustering, home
//! detection, movement classification and place labelling.

mod cluster;

use std::io::Read;

use chrono::{NaiveTime, Timelike};
use chrono_tz::Tz;
use thiserror::Error;

use crate::ingest::Timestamp;
use crate::par::Execution;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("no location fix falls inside the night window; supply a home manually or narrate without home distances")]
    NoNighttimeData,
    #[error("speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
    #[error("place map: {0}")]
    PlaceMap(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coord {
    pub lat: f64,
    pub lon: f64,
}

impl Coord {
    pub fn new(lat: f64, lon: f64) -> Self {
        Coord { lat, lon }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
    pub ts: Timestamp,
    pub speed_mps: Option<f64>,
}

impl GeoPoint {
    pub fn coord(&self) -> Coord {
        Coord::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaceCluster {
    /// 1-based, assigned in descending member count.
    pub id: usize,
    /// Arithmetic mean of the member coordinates.
    pub centroid: Coord,
    pub member_count: usize,
    pub nighttime_count: usize,
    pub label: Option<String>,
    /// Indices into the point list the clusters were built from, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MovementStatus {
    Stopping,
    Walking,
    Running,
    RidingVehicle,
}

impl MovementStatus {
    pub fn word(self) -> &'static str {
        match self {
            MovementStatus::Stopping => "stopping",
            MovementStatus::Walking => "walking",
            MovementStatus::Running => "running",
            MovementStatus::RidingVehicle => "riding vehicle",
        }
    }
}

/// Half-open local wall-clock interval `[start, end)`; wraps midnight when
/// `start > end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NightWindow {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl Default for NightWindow {
    fn default() -> Self {
        NightWindow {
            start: NaiveTime::from_hms_opt(20, 0, 0).unwrap(),
            end: NaiveTime::from_hms_opt(4, 0, 0).unwrap(),
        }
    }
}

impl NightWindow {
    pub fn contains(&self, t: NaiveTime) -> bool {
        if self.start <= self.end {
            self.start <= t && t < self.end
        } else {
            t >= self.start || t < self.end
        }
    }

    pub fn contains_ts(&self, ts: Timestamp, zone: Tz) -> bool {
        let local = ts.to_zone(zone);
        let t = NaiveTime::from_hms_nano_opt(
            local.hour(),
            local.minute(),
            local.second(),
            local.nanosecond() % 1_000_000_000,
        )
        .expect("valid wall-clock time");
        self.contains(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomeModel {
    pub home_cluster_id: usize,
    pub centroid: Coord,
    pub night_window: NightWindow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoParams {
    pub diameter_m: f64,
    pub stop_epsilon: f64,
    pub night: NightWindow,
    pub max_snap_m: f64,
    /// Fixes further apart than this do not yield a derived speed.
    pub max_speed_gap_s: f64,
}

impl Default for GeoParams {
    fn default() -> Self {
        GeoParams {
            diameter_m: 50.0,
            stop_epsilon: 0.1,
            night: NightWindow::default(),
            max_snap_m: 100.0,
            max_speed_gap_s: 300.0,
        }
    }
}

/// Great-circle distance in metres on a sphere of radius 6,371 km.
pub fn haversine_m(a: Coord, b: Coord) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Groups fixes so that every pair inside a cluster is within `diameter_m`.
pub fn cluster_locations(points: &[GeoPoint], diameter_m: f64) -> Vec<PlaceCluster> {
    cluster_locations_with(points, diameter_m, Execution::default())
}

pub fn cluster_locations_with(
    points: &[GeoPoint],
    diameter_m: f64,
    exec: Execution,
) -> Vec<PlaceCluster> {
    assert!(diameter_m > 0.0, "cluster diameter must be positive");
    cluster::cluster(points, diameter_m, exec)
}

/// Counts night-window fixes per cluster (filling `nighttime_count`) and
/// picks the cluster with the most as home. Ties go to the larger cluster,
/// then the lower id.
pub fn detect_home(
    clusters: &mut [PlaceCluster],
    points: &[GeoPoint],
    window: NightWindow,
    zone: Tz,
) -> Result<HomeModel, GeoError> {
    for c in clusters.iter_mut() {
        c.nighttime_count = c
            .members
            .iter()
            .filter(|&&i| window.contains_ts(points[i].ts, zone))
            .count();
    }
    let best = clusters
        .iter()
        .filter(|c| c.nighttime_count > 0)
        .max_by(|x, y| {
            x.nighttime_count
                .cmp(&y.nighttime_count)
                .then(x.member_count.cmp(&y.member_count))
                .then(y.id.cmp(&x.id))
        })
        .ok_or(GeoError::NoNighttimeData)?;
    Ok(HomeModel {
        home_cluster_id: best.id,
        centroid: best.centroid,
        night_window: window,
    })
}

/// Speed bins: `[0, ε]` stopping, `(ε, 1]` walking, `(1, 3]` running,
/// above 3 m/s riding a vehicle.
pub fn classify_movement(speed_mps: f64, stop_epsilon: f64) -> Result<MovementStatus, GeoError> {
    if speed_mps.is_nan() || speed_mps < 0.0 {
        return Err(GeoError::NegativeSpeed(speed_mps));
    }
    Ok(if speed_mps <= stop_epsilon {
        MovementStatus::Stopping
    } else if speed_mps <= 1.0 {
        MovementStatus::Walking
    } else if speed_mps <= 3.0 {
        MovementStatus::Running
    } else {
        MovementStatus::RidingVehicle
    })
}

/// Fills absent speeds from the previous fix (distance over elapsed time)
/// when the two are at most `max_gap_s` apart; otherwise the speed is 0.
pub fn fill_missing_speeds(points: &mut [GeoPoint], max_gap_s: f64) {
    for i in 0..points.len() {
        if points[i].speed_mps.is_some() {
            continue;
        }
        let derived = if i == 0 {
            0.0
        } else {
            let dt = points[i].ts.seconds_since(points[i - 1].ts);
            if dt > 0.0 && dt <= max_gap_s {
                haversine_m(points[i - 1].coord(), points[i].coord()) / dt
            } else {
                0.0
            }
        };
        points[i].speed_mps = Some(derived);
    }
}

/// One labelled coordinate from a place map file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceEntry {
    pub coord: Coord,
    pub label: String,
}

/// Reads a place map: CSV with header `lat,lon,label`.
pub fn load_place_map<R: Read>(source: R) -> Result<Vec<PlaceEntry>, GeoError> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| GeoError::PlaceMap(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| GeoError::PlaceMap(format!("missing column `{name}`")))
    };
    let (lat_i, lon_i, label_i) = (col("lat")?, col("lon")?, col("label")?);
    let mut entries = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| GeoError::PlaceMap(e.to_string()))?;
        let num = |i: usize, limit: f64| {
            record
                .get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.abs() <= limit)
                .ok_or_else(|| GeoError::PlaceMap(format!("row {}: bad coordinate", n + 1)))
        };
        entries.push(PlaceEntry {
            coord: Coord::new(num(lat_i, 90.0)?, num(lon_i, 180.0)?),
            label: record.get(label_i).unwrap_or_default().to_owned(),
        });
    }
    Ok(entries)
}

/// Label of the nearest place-map entry within `max_snap_m`. Equidistant
/// entries resolve to the one listed first.
pub fn resolve_place(centroid: Coord, place_map: &[PlaceEntry], max_snap_m: f64) -> Option<&str> {
    let mut best: Option<(f64, &PlaceEntry)> = None;
    for entry in place_map {
        let d = haversine_m(centroid, entry.coord);
        if d <= max_snap_m && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, entry));
        }
    }
    best.map(|(_, e)| e.label.as_str())
}

/// Attaches place-map labels to clusters by centroid.
pub fn label_clusters(clusters: &mut [PlaceCluster], place_map: &[PlaceEntry], max_snap_m: f64) {
    for c in clusters {
        c.label = resolve_place(c.centroid, place_map, max_snap_m).map(str::to_owned);
    }
}

/// Where a fix is, in narratable terms.
#[derive(Debug, Clone, PartialEq)]
pub enum Place {
    Home,
    Labelled { cluster_id: usize, label: String },
    Unlabelled { cluster_id: Option<usize>, coord: Coord },
}

impl Place {
    /// The place as it appears in a narrative line. With labels hidden, a
    /// labelled place is referred to by cluster number instead.
    pub fn describe(&self, include_labels: bool) -> String {
        match self {
            Place::Home => "home".to_owned(),
            Place::Labelled { cluster_id, label } => {
                if include_labels {
                    label.clone()
                } else {
                    format!("place {cluster_id}")
                }
            }
            Place::Unlabelled { cluster_id: Some(id), .. } if !include_labels => format!("place {id}"),
            Place::Unlabelled { coord, .. } => format!("{:.5},{:.5}", coord.lat, coord.lon),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationNarration {
    pub place: Place,
    /// Rounded to 0.1 m; `None` when no home is known or the fix is at home.
    pub distance_from_home_m: Option<f64>,
    pub status: MovementStatus,
    pub is_home: bool,
}

/// Rounds to one decimal, halves away from zero.
pub fn round_tenth(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Describes a fix relative to the clusters and the home cluster. The fix is
/// attributed to the cluster with the nearest centroid.
pub fn locate(
    point: &GeoPoint,
    clusters: &[PlaceCluster],
    home: Option<&HomeModel>,
    stop_epsilon: f64,
) -> LocationNarration {
    let here = point.coord();
    let nearest = clusters.iter().min_by(|a, b| {
        haversine_m(here, a.centroid)
            .total_cmp(&haversine_m(here, b.centroid))
            .then(a.id.cmp(&b.id))
    });
    let status = classify_movement(point.speed_mps.unwrap_or(0.0), stop_epsilon)
        .unwrap_or(MovementStatus::Stopping);
    let is_home = matches!((nearest, home), (Some(c), Some(h)) if c.id == h.home_cluster_id);
    let place = if is_home {
        Place::Home
    } else {
        match nearest {
            Some(PlaceCluster { id, label: Some(label), .. }) => {
                Place::Labelled { cluster_id: *id, label: label.clone() }
            }
            Some(c) => Place::Unlabelled { cluster_id: Some(c.id), coord: c.centroid },
            None => Place::Unlabelled { cluster_id: None, coord: here },
        }
    };
    let distance_from_home_m = match home {
        Some(h) if !is_home => Some(round_tenth(haversine_m(here, h.centroid))),
        _ => None,
    };
    LocationNarration { place, distance_from_home_m, status, is_home }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MELBOURNE: Tz = chrono_tz::Australia::Melbourne;
    // metres per degree of latitude on the 6371 km sphere: 2π·6371000/360
    const M_PER_DEG: f64 = 111_194.926_644_558_73;

    fn pt(lat: f64, lon: f64, ts: i64) -> GeoPoint {
        GeoPoint { lat, lon, ts: Timestamp::from_millis(ts).unwrap(), speed_mps: None }
    }

    fn north(m: f64) -> f64 {
        m / M_PER_DEG
    }

    #[test]
    fn haversine_reference_values() {
        let o = Coord::new(0.0, 0.0);
        assert_eq!(haversine_m(o, o), 0.0);
        let d = haversine_m(o, Coord::new(1.0, 0.0));
        assert!((d - 111_194.9).abs() <= 0.5, "{d}");
        let a = Coord::new(-37.8, 144.96);
        let b = Coord::new(51.5, -0.12);
        assert!((haversine_m(a, b) - haversine_m(b, a)).abs() < 1e-9);
    }

    #[test]
    fn clustering_small_cases() {
        assert!(cluster_locations(&[], 50.0).is_empty());
        let two_close = [pt(0.0, 0.0, 0), pt(north(10.0), 0.0, 1)];
        let c = cluster_locations(&two_close, 50.0);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].member_count, 2);
        let two_far = [pt(0.0, 0.0, 0), pt(north(100.0), 0.0, 1)];
        assert_eq!(cluster_locations(&two_far, 50.0).len(), 2);
    }

    #[test]
    fn complete_linkage_on_three_collinear_points() {
        let pts = [pt(0.0, 0.0, 0), pt(north(40.0), 0.0, 1), pt(north(80.0), 0.0, 2)];
        let c = cluster_locations(&pts, 50.0);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].members, vec![0, 1]);
        assert_eq!(c[1].members, vec![2]);
        assert_eq!((c[0].id, c[1].id), (1, 2));
    }

    #[test]
    fn centroid_is_member_mean() {
        let pts = [pt(1.0, 2.0, 0), pt(1.0001, 2.0001, 0), pt(1.0002, 2.0, 0)];
        let c = cluster_locations(&pts, 50.0);
        assert_eq!(c.len(), 1);
        assert!((c[0].centroid.lat - 1.0001).abs() < 1e-12);
        assert!((c[0].centroid.lon - (6.0001 / 3.0)).abs() < 1e-12);
    }

    fn local_ms(h: u32, m: u32, day: u32) -> i64 {
        use chrono::TimeZone;
        MELBOURNE
            .with_ymd_and_hms(2023, 9, day, h, m, 0)
            .single()
            .unwrap()
            .timestamp_millis()
    }

    #[test]
    fn home_is_most_nighttime_cluster() {
        let mut pts = Vec::new();
        for i in 0..30 {
            pts.push(pt(-37.78, 144.96, local_ms(22, i, 10)));
        }
        for i in 0..5 {
            pts.push(pt(-37.70, 144.96, local_ms(23, i, 10)));
        }
        for i in 0..40 {
            pts.push(pt(-37.70, 144.96, local_ms(12, i, 11)));
        }
        let mut clusters = cluster_locations(&pts, 50.0);
        let home = detect_home(&mut clusters, &pts, NightWindow::default(), MELBOURNE).unwrap();
        let c = clusters.iter().find(|c| c.id == home.home_cluster_id).unwrap();
        assert_eq!(c.nighttime_count, 30);
        assert!((c.centroid.lat + 37.78).abs() < 1e-12);
    }

    #[test]
    fn daytime_only_has_no_home() {
        let pts: Vec<_> = (0..20).map(|i| pt(-37.78, 144.96, local_ms(9 + i % 8, 0, 12))).collect();
        let mut clusters = cluster_locations(&pts, 50.0);
        assert_eq!(
            detect_home(&mut clusters, &pts, NightWindow::default(), MELBOURNE),
            Err(GeoError::NoNighttimeData)
        );
    }

    #[test]
    fn home_tie_breaks() {
        // Same night counts: the larger cluster wins.
        let mut pts = vec![
            pt(-37.0, 144.0, local_ms(21, 0, 10)),
            pt(-37.0, 144.0, local_ms(12, 0, 10)),
            pt(-37.0, 144.0, local_ms(13, 0, 10)),
            pt(-38.0, 144.0, local_ms(21, 0, 10)),
        ];
        let mut clusters = cluster_locations(&pts, 50.0);
        let home = detect_home(&mut clusters, &pts, NightWindow::default(), MELBOURNE).unwrap();
        assert_eq!(home.home_cluster_id, 1);
        assert_eq!(home.centroid.lat, -37.0);
        // Same night counts and sizes: the lower id wins.
        pts.truncate(1);
        pts.push(pt(-38.0, 144.0, local_ms(21, 0, 10)));
        let mut clusters = cluster_locations(&pts, 50.0);
        let home = detect_home(&mut clusters, &pts, NightWindow::default(), MELBOURNE).unwrap();
        assert_eq!(home.home_cluster_id, 1);
    }

    #[test]
    fn night_window_is_half_open_and_wraps() {
        let w = NightWindow::default();
        let t = |h, m, s| NaiveTime::from_hms_opt(h, m, s).unwrap();
        assert!(w.contains(t(20, 0, 0)));
        assert!(w.contains(t(23, 59, 59)));
        assert!(w.contains(t(0, 0, 0)));
        assert!(w.contains(t(3, 59, 59)));
        assert!(!w.contains(t(4, 0, 0)));
        assert!(!w.contains(t(19, 59, 59)));
        let ms = local_ms(4, 0, 12);
        assert!(!w.contains_ts(Timestamp::from_millis(ms).unwrap(), MELBOURNE));
        assert!(w.contains_ts(Timestamp::from_millis(ms - 1).unwrap(), MELBOURNE));
    }

    #[test]
    fn movement_bins() {
        let c = |s| classify_movement(s, 0.1).unwrap();
        assert_eq!(c(0.0), MovementStatus::Stopping);
        assert_eq!(c(0.5), MovementStatus::Walking);
        assert_eq!(c(1.0), MovementStatus::Walking);
        assert_eq!(c(2.0), MovementStatus::Running);
        assert_eq!(c(5.0), MovementStatus::RidingVehicle);
        assert_eq!(classify_movement(-0.1, 0.1), Err(GeoError::NegativeSpeed(-0.1)));
    }

    #[test]
    fn derived_speeds() {
        let mut pts = vec![
            pt(0.0, 0.0, 0),
            pt(north(100.0), 0.0, 50_000),
            pt(north(200.0), 0.0, 50_000 + 600_000),
        ];
        pts[0].speed_mps = Some(0.3);
        fill_missing_speeds(&mut pts, 300.0);
        assert_eq!(pts[0].speed_mps, Some(0.3));
        assert!((pts[1].speed_mps.unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(pts[2].speed_mps, Some(0.0));
    }

    #[test]
    fn place_resolution() {
        let origin = Coord::new(-37.75, 144.96);
        assert_eq!(resolve_place(origin, &[], 100.0), None);
        let map = vec![
            PlaceEntry { coord: Coord::new(-37.75 + north(40.0), 144.96), label: "far".into() },
            PlaceEntry { coord: Coord::new(-37.75 + north(30.0), 144.96), label: "near".into() },
            PlaceEntry { coord: Coord::new(-37.75 + north(500.0), 144.96), label: "out".into() },
        ];
        assert_eq!(resolve_place(origin, &map, 100.0), Some("near"));
        assert_eq!(resolve_place(origin, &map[2..], 100.0), None);
        let street = [PlaceEntry {
            coord: Coord::new(-37.75 + north(20.0), 144.96),
            label: "X Sydney Rd, Coburg VIC 3058".into(),
        }];
        assert_eq!(resolve_place(origin, &street, 100.0), Some("X Sydney Rd, Coburg VIC 3058"));
    }

    #[test]
    fn place_map_file() {
        let text = "lat,lon,label\n-37.7522,144.9601,\"X Sydney Rd, Coburg VIC 3058\"\n";
        let map = load_place_map(text.as_bytes()).unwrap();
        assert_eq!(map[0].label, "X Sydney Rd, Coburg VIC 3058");
        assert!(load_place_map("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn locate_home_and_away() {
        let mut pts = vec![pt(-37.78, 144.96, local_ms(22, 0, 13)); 3];
        pts.push(pt(-37.752122, 144.96, local_ms(9, 31, 14)));
        let mut clusters = cluster_locations(&pts, 50.0);
        label_clusters(
            &mut clusters,
            &[PlaceEntry { coord: Coord::new(-37.7522, 144.9601), label: "X Sydney Rd, Coburg VIC 3058".into() }],
            100.0,
        );
        let home = detect_home(&mut clusters, &pts, NightWindow::default(), MELBOURNE).unwrap();
        let mut at_home = pts[0].clone();
        at_home.speed_mps = Some(0.0);
        let n = locate(&at_home, &clusters, Some(&home), 0.1);
        assert!(n.is_home);
        assert_eq!(n.place, Place::Home);
        assert_eq!(n.status, MovementStatus::Stopping);
        let away = locate(&pts[3], &clusters, Some(&home), 0.1);
        assert_eq!(away.place.describe(true), "X Sydney Rd, Coburg VIC 3058");
        assert_eq!(away.distance_from_home_m, Some(3099.9));
        let no_home = locate(&pts[3], &clusters, None, 0.1);
        assert_eq!(no_home.distance_from_home_m, None);
        assert!(!no_home.is_home);
        let raw = locate(&pts[3], &[], None, 0.1);
        assert_eq!(raw.place.describe(true), "-37.75212,144.96000");
    }

    fn arb_points() -> impl Strategy<Value = Vec<GeoPoint>> {
        prop::collection::vec((0.0f64..600.0, 0.0f64..600.0, 0i64..1_000_000), 0..80).prop_map(|v| {
            v.into_iter()
                .map(|(dy, dx, ts)| {
                    let lat = -37.8 + north(dy);
                    let lon = 144.9 + north(dx) / lat.to_radians().cos();
                    pt(lat, lon, ts)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn clusters_respect_diameter(points in arb_points()) {
            let clusters = cluster_locations(&points, 50.0);
            let total: usize = clusters.iter().map(|c| c.member_count).sum();
            prop_assert_eq!(total, points.len());
            for c in &clusters {
                prop_assert!(c.nighttime_count <= c.member_count);
                for &i in &c.members {
                    for &j in &c.members {
                        prop_assert!(haversine_m(points[i].coord(), points[j].coord()) <= 50.0);
                    }
                }
            }
        }

        #[test]
        fn sequential_and_parallel_agree(points in arb_points()) {
            let a = cluster_locations_with(&points, 50.0, Execution::Sequential);
            let b = cluster_locations_with(&points, 50.0, Execution::Parallel);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn movement_is_monotone(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify_movement(lo, 0.1).unwrap() <= classify_movement(hi, 0.1).unwrap());
        }

        #[test]
        fn triangle_inequality(
            a in (-89.0f64..89.0, -179.0f64..179.0),
            b in (-89.0f64..89.0, -179.0f64..179.0),
            c in (-89.0f64..89.0, -179.0f64..179.0),
        ) {
            let (a, b, c) = (Coord::new(a.0, a.1), Coord::new(b.0, b.1), Coord::new(c.0, c.1));
            prop_assert!(haversine_m(a, c) <= haversine_m(a, b) + haversine_m(b, c) + 1e-6);
            prop_assert!((haversine_m(a, b) - haversine_m(b, a)).abs() < 1e-9);
        }

        #[test]
        fn home_ignores_point_order(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pts = Vec::new();
            for i in 0..12 {
                pts.push(pt(-37.78 + north((i % 4) as f64), 144.96, local_ms(21 + (i % 3) as u32, 0, 10)));
            }
            for i in 0..20 {
                pts.push(pt(-37.70 + north((i % 5) as f64 * 2.0), 144.96, local_ms(10 + (i % 9) as u32, 0, 11)));
                pts.push(pt(-37.70, 144.96, local_ms(23, i as u32, 11)));
            }
            pts.truncate(12 + 20 + (seed as usize % 8));
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut rng);
            let mut c1 = cluster_locations(&pts, 50.0);
            let mut c2 = cluster_locations(&shuffled, 50.0);
            let h1 = detect_home(&mut c1, &pts, NightWindow::default(), MELBOURNE).unwrap();
            let h2 = detect_home(&mut c2, &shuffled, NightWindow::default(), MELBOURNE).unwrap();
            prop_assert!(haversine_m(h1.centroid, h2.centroid) < 1e-6);
        }
    }
}
