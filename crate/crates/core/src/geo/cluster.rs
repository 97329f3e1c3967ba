//! Complete-linkage agglomerative clustering with a diameter cap.
//!
//! Only pairs closer than the cap can ever merge, and under complete linkage
//! a merged cluster's distance to a third cluster is the max of the two
//! parts' distances. So the neighbour set of a merged cluster is the
//! intersection of its parts' neighbour sets, and the work stays
//! proportional to the number of close pairs rather than n².

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use super::{haversine_m, Coord, GeoPoint, PlaceCluster, EARTH_RADIUS_M};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist: f64,
    a: usize,
    b: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Distinct coordinates in first-appearance order, with the input indices
/// sitting on each. Exact duplicates are at distance 0, so merging them up
/// front gives the same result as letting the agglomeration do it.
fn unique_sites(points: &[GeoPoint]) -> (Vec<Coord>, Vec<Vec<usize>>) {
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut sites = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let key = (p.lat.to_bits(), p.lon.to_bits());
        let slot = *index.entry(key).or_insert_with(|| {
            sites.push(Coord::new(p.lat, p.lon));
            members.push(Vec::new());
            sites.len() - 1
        });
        members[slot].push(i);
    }
    (sites, members)
}

/// All site pairs within `diameter_m`, as (i, j, d) with i < j.
///
/// Sites are swept in latitude order; the meridian distance R·|Δφ| is a lower
/// bound on the great-circle distance, so the inner scan stops early.
pub(crate) fn close_pairs(sites: &[Coord], diameter_m: f64, exec: Execution) -> Vec<(usize, usize, f64)> {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| sites[a].lat.total_cmp(&sites[b].lat).then(a.cmp(&b)));
    let lat_reach = (diameter_m / EARTH_RADIUS_M).to_degrees() * (1.0 + 1e-9) + 1e-12;
    let per_site = par::map_range(exec, order.len(), |k| {
        let i = order[k];
        let mut found = Vec::new();
        for &j in &order[k + 1..] {
            if sites[j].lat - sites[i].lat > lat_reach {
                break;
            }
            let d = haversine_m(sites[i], sites[j]);
            if d <= diameter_m {
                found.push((i.min(j), i.max(j), d));
            }
        }
        found
    });
    per_site.into_iter().flatten().collect()
}

pub(crate) fn cluster(points: &[GeoPoint], diameter_m: f64, exec: Execution) -> Vec<PlaceCluster> {
    if points.is_empty() {
        return Vec::new();
    }
    let (sites, site_members) = unique_sites(points);
    let n = sites.len();

    // Cluster slots: 0..n are singleton sites, merges append new slots.
    let mut neighbours: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut alive = vec![true; n];
    let mut heap = BinaryHeap::new();

    for (a, b, dist) in close_pairs(&sites, diameter_m, exec) {
        neighbours[a].insert(b, dist);
        neighbours[b].insert(a, dist);
        heap.push(Reverse(Candidate { dist, a, b }));
    }

    while let Some(Reverse(Candidate { a, b, .. })) = heap.pop() {
        if !alive[a] || !alive[b] {
            continue;
        }
        let merged = members.len();
        alive[a] = false;
        alive[b] = false;
        let na = std::mem::take(&mut neighbours[a]);
        let nb = std::mem::take(&mut neighbours[b]);
        let (small, large) = if na.len() <= nb.len() { (&na, &nb) } else { (&nb, &na) };
        let mut joined = HashMap::new();
        for (&k, &d1) in small {
            if k == a || k == b {
                continue;
            }
            if let Some(&d2) = large.get(&k) {
                joined.insert(k, d1.max(d2));
            }
        }
        for &k in na.keys().chain(nb.keys()) {
            if k != a && k != b {
                neighbours[k].remove(&a);
                neighbours[k].remove(&b);
            }
        }
        for (&k, &dist) in &joined {
            neighbours[k].insert(merged, dist);
            heap.push(Reverse(Candidate { dist, a: k.min(merged), b: k.max(merged) }));
        }
        let mut m = std::mem::take(&mut members[a]);
        m.append(&mut members[b]);
        members.push(m);
        neighbours.push(joined);
        alive.push(true);
    }

    let mut clusters: Vec<PlaceCluster> = members
        .into_iter()
        .zip(alive)
        .filter(|(_, live)| *live)
        .map(|(sites_in, _)| {
            let mut idx: Vec<usize> = sites_in
                .iter()
                .flat_map(|&s| site_members[s].iter().copied())
                .collect();
            idx.sort_unstable();
            let count = idx.len() as f64;
            let (lat_sum, lon_sum) = idx
                .iter()
                .fold((0.0, 0.0), |(la, lo), &i| (la + points[i].lat, lo + points[i].lon));
            PlaceCluster {
                id: 0,
                centroid: Coord::new(lat_sum / count, lon_sum / count),
                member_count: idx.len(),
                nighttime_count: 0,
                label: None,
                members: idx,
            }
        })
        .collect();
    clusters.sort_by(|x, y| {
        y.member_count
            .cmp(&x.member_count)
            .then(x.members[0].cmp(&y.members[0]))
    });
    for (i, c) in clusters.iter_mut().enumerate() {
        c.id = i + 1;
    }
    clusters
}
