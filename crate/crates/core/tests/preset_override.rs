//! Lives in its own binary because it mutates the process environment.

use es_accel::scenarios::presets::{self, PRESET_DIR_ENV};
use es_accel::scenarios::{run_scenario, ModelParams};
use es_accel::Error;

#[test]
fn preset_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let fig2 = presets::bundled().find(|(n, _)| *n == "fig2").unwrap().1;
    std::fs::write(
        dir.path().join("custom.toml"),
        fig2.replace("x_init = 1.3", "x_init = 0.7"),
    )
    .unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

    std::env::set_var(PRESET_DIR_ENV, dir.path());
    assert_eq!(presets::names().unwrap(), vec!["custom".to_string()]);
    let config = presets::load("custom").unwrap();
    assert_eq!(config.name, "custom");
    match config.loop_params {
        ModelParams::Basic(p) => assert_eq!(p.x_init, 0.7),
        other => panic!("unexpected model {other:?}"),
    }
    assert!(run_scenario(&config).unwrap().summary.dominant());
    assert!(matches!(presets::load("fig2"), Err(Error::Io { .. })));

    std::env::set_var(PRESET_DIR_ENV, "");
    assert!(presets::names().unwrap().iter().any(|n| n == "fig2"));
    std::env::remove_var(PRESET_DIR_ENV);
    assert_eq!(presets::names().unwrap().len(), presets::bundled().count());
}
