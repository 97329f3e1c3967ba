//! Reduces the high-frequency battery and keyboard streams to the sparse
//! events worth narrating.

use std::collections::BTreeMap;

use crate::ingest::{BatteryStatus, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatterySample {
    pub ts: Timestamp,
    pub row_id: i64,
    pub status: BatteryStatus,
    pub level: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionKind {
    StatusChange,
    LocalExtremum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryEmission {
    pub ts: Timestamp,
    pub row_id: i64,
    pub kind: EmissionKind,
    pub status: BatteryStatus,
    pub level: u8,
}

/// Keeps every status change plus the level samples at which the level
/// trend turns around. The first and last level samples are always kept.
///
/// Extrema are taken on the level sequence with repeated values collapsed;
/// a plateau at a turning point is reported at its first sample.
pub fn battery_extrema(samples: &[BatterySample]) -> Vec<BatteryEmission> {
    // indices into `samples` of the level readings
    let levels: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.status == BatteryStatus::LevelSample)
        .map(|(i, _)| i)
        .collect();

    // (first sample index, level) per run of equal levels
    let mut runs: Vec<(usize, u8)> = Vec::new();
    for &i in &levels {
        if runs.last().is_none_or(|&(_, lvl)| lvl != samples[i].level) {
            runs.push((i, samples[i].level));
        }
    }
    let mut keep = vec![false; samples.len()];
    if let (Some(&first), Some(&last)) = (levels.first(), levels.last()) {
        keep[first] = true;
        keep[last] = true;
    }
    for w in runs.windows(3) {
        let (prev, here, next) = (w[0].1, w[1].1, w[2].1);
        if (here > prev) == (here > next) {
            keep[w[1].0] = true;
        }
    }

    samples
        .iter()
        .zip(keep)
        .filter_map(|(s, kept)| {
            let kind = if s.status != BatteryStatus::LevelSample {
                EmissionKind::StatusChange
            } else if kept {
                EmissionKind::LocalExtremum
            } else {
                return None;
            };
            Some(BatteryEmission { ts: s.ts, row_id: s.row_id, kind, status: s.status, level: s.level })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyboardSnapshot {
    pub ts: Timestamp,
    pub row_id: i64,
    pub package: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyboardSession {
    pub start_ts: Timestamp,
    pub end_ts: Timestamp,
    /// Row id of the snapshot whose text is reported.
    pub row_id: i64,
    pub package: String,
    pub final_text: String,
}

/// Groups each package's keystroke snapshots into sessions separated by more
/// than `gap_s` seconds, and reports the last non-blank buffer of each.
/// Sessions that end with nothing typed are dropped. Output is ordered by
/// session end time.
pub fn keyboard_sessions(snapshots: &[KeyboardSnapshot], gap_s: f64) -> Vec<KeyboardSession> {
    let mut by_package: BTreeMap<&str, Vec<&KeyboardSnapshot>> = BTreeMap::new();
    for s in snapshots {
        by_package.entry(s.package.as_str()).or_default().push(s);
    }
    let mut sessions = Vec::new();
    for (package, snaps) in by_package {
        let mut start = 0;
        for i in 1..=snaps.len() {
            let boundary = i == snaps.len() || snaps[i].ts.seconds_since(snaps[i - 1].ts) > gap_s;
            if !boundary {
                continue;
            }
            let group = &snaps[start..i];
            if let Some(last_text) = group.iter().rev().find(|s| !s.text.trim().is_empty()) {
                sessions.push(KeyboardSession {
                    start_ts: group[0].ts,
                    end_ts: group[group.len() - 1].ts,
                    row_id: last_text.row_id,
                    package: package.to_owned(),
                    final_text: last_text.text.clone(),
                });
            }
            start = i;
        }
    }
    sessions.sort_by_key(|s| (s.end_ts, s.row_id));
    sessions
}
