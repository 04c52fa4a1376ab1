use aka_core::runner::{read_transcript, run_scenario, write_transcript, ScenarioConfig, ScenarioId};
use aka_core::transcript::last_outcome;
use aka_core::variants::VariantMode;

#[test]
fn jsonl_round_trip_every_variant() {
    let dir = tempfile::tempdir().unwrap();
    for variant in VariantMode::ALL {
        let cfg = ScenarioConfig {
            variant,
            scenario: ScenarioId::ReplayAuthSame,
            seed: 11,
            ..ScenarioConfig::default()
        };
        let (events, row) = run_scenario(&cfg).unwrap();
        let path = dir.path().join(format!("{variant}.jsonl"));
        write_transcript(&events, &path).unwrap();
        let back = read_transcript(&path).unwrap();
        assert_eq!(back, events);
        assert_eq!(last_outcome(&back), Some(row.outcome));
        let lines = std::fs::read_to_string(&path).unwrap().lines().count();
        assert_eq!(lines, events.len());
    }
}

#[test]
fn toml_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        variant: VariantMode::EncFailure,
        scenario: ScenarioId::ReplaySuciSame,
        suci_gap: 40,
        seed: 9,
        ..ScenarioConfig::default()
    };
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, cfg.to_toml_string()).unwrap();
    assert_eq!(ScenarioConfig::load(&path).unwrap(), cfg);
}
