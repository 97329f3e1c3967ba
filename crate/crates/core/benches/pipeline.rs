use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use narrator_core::geo::{self, Coord, GeoPoint};
use narrator_core::ingest::{CodeTables, Timestamp};
use narrator_core::narrate::{dates_covered, narrate_days, LineStyle, PrivacyConfig};
use narrator_core::pipeline::{self, PipelineConfig};
use narrator_core::synth::{self, SynthConfig};
use narrator_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn random_points(n: usize, seed: u64) -> Vec<GeoPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // a handful of dense stay points inside a 2 km box
    let centres: Vec<Coord> = (0..12)
        .map(|_| Coord::new(-37.8 + rng.gen_range(0.0..0.018), 144.9 + rng.gen_range(0.0..0.022)))
        .collect();
    (0..n)
        .map(|i| {
            let c = centres[rng.gen_range(0..centres.len())];
            GeoPoint {
                lat: c.lat + rng.gen_range(-0.0003..0.0003),
                lon: c.lon + rng.gen_range(-0.0003..0.0003),
                ts: Timestamp::from_millis(i as i64 * 60_000).unwrap(),
                speed_mps: Some(0.0),
            }
        })
        .collect()
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("cluster_locations");
    group.sample_size(10);
    for n in [1_000, 4_000] {
        let points = random_points(n, 1);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &points, |b, pts| {
                b.iter(|| geo::cluster_locations_with(pts, 50.0, exec))
            });
        }
    }
    group.finish();
}

fn week() -> synth::SynthDataset {
    synth::generate(&SynthConfig { days: 14, ..SynthConfig::default() })
}

fn loading(c: &mut Criterion) {
    let tmp = tempfile::tempdir().unwrap();
    synth::write_dataset(&week(), tmp.path()).unwrap();
    let sources = pipeline::discover_tables(tmp.path());
    let codes = CodeTables::default();
    let mut group = c.benchmark_group("load_tables");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| pipeline::load_tables(&sources, &codes, exec).unwrap()));
    }
    group.finish();
}

fn prepare_and_narrate(c: &mut Criterion) {
    let data = week();
    let mut group = c.benchmark_group("prepare_and_narrate");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = PipelineConfig { zone: chrono_tz::Australia::Melbourne, exec, ..PipelineConfig::default() };
        let style = LineStyle::new(cfg.zone);
        group.bench_function(name, |b| {
            b.iter(|| {
                let prepared = pipeline::prepare(data.events.clone(), &data.places, &cfg);
                let dates = dates_covered(&prepared.events, &style);
                narrate_days(&prepared.events, &dates, &PrivacyConfig::default(), &style, exec)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, clustering, loading, prepare_and_narrate);
criterion_main!(benches);
