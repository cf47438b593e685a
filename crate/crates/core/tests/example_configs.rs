use nls_relax::experiments::{RunConfig, Simulation};
use std::path::PathBuf;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples/configs")
}

#[test]
fn every_shipped_config_parses_and_validates() {
    let mut count = 0;
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = RunConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 40, "only {count} configs found");
}

#[test]
fn configs_round_trip_through_toml() {
    let path = config_dir().join("fully_discrete_conservation_hyperbolization_two_soliton.toml");
    let cfg = RunConfig::from_file(&path).unwrap();
    let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(cfg, again);
}

#[test]
fn small_shipped_config_builds_a_simulation() {
    let cfg = RunConfig::from_file(&config_dir().join("kinetic_energy_comparison_n64.toml")).unwrap();
    let sim = Simulation::new(&cfg).unwrap();
    assert_eq!(sim.n(), 64);
    assert_eq!(sim.initial_state().unwrap().len(), 128);
}
