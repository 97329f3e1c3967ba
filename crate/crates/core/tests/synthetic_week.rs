use narrator_core::geo::haversine_m;
use narrator_core::narrate::{dates_covered, narrate_days, LineStyle, PrivacyConfig};
use narrator_core::pipeline::{prepare, PipelineConfig};
use narrator_core::synth::{generate, SynthConfig};
use narrator_core::Execution;

fn cfg(exec: Execution) -> PipelineConfig {
    PipelineConfig { zone: SynthConfig::default().zone, exec, ..PipelineConfig::default() }
}

#[test]
fn home_is_the_planted_location() {
    let data = generate(&SynthConfig::default());
    let prepared = prepare(data.events.clone(), &data.places, &cfg(Execution::default()));
    let home = prepared.home.expect("night fixes exist");
    assert!(haversine_m(home.centroid, data.home) < 25.0);
    let labelled: Vec<_> = prepared.clusters.iter().filter_map(|c| c.label.as_deref()).collect();
    assert!(labelled.iter().any(|l| l.contains("Collins St")));
}

#[test]
fn one_document_per_day_in_both_modes() {
    let data = generate(&SynthConfig::default());
    let style = LineStyle::new(SynthConfig::default().zone);
    let mut outputs = Vec::new();
    for exec in [Execution::Sequential, Execution::Parallel] {
        let prepared = prepare(data.events.clone(), &data.places, &cfg(exec));
        let dates = dates_covered(&prepared.events, &style);
        assert_eq!(dates.len(), 7);
        let docs = narrate_days(&prepared.events, &dates, &PrivacyConfig::default(), &style, exec);
        assert!(docs.iter().all(|d| d.lines.len() > 50));
        outputs.push(docs.iter().map(|d| d.to_text()).collect::<String>());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].contains("| locations | home, stopping"));
    assert!(outputs[0].contains("| keyboard | Entered the following text into the phone keyboard: "));
}
