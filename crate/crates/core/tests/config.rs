use std::path::Path;

use socnav::config::FileConfig;

#[test]
fn shipped_desk_config_matches_the_builtin_preset() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    assert_eq!(FileConfig::load(&path).unwrap(), FileConfig::desk());
}

#[test]
fn toml_round_trip_is_lossless() {
    for cfg in [FileConfig::default(), FileConfig::desk()] {
        let text = cfg.to_toml_string();
        assert_eq!(FileConfig::from_toml_str(&text, "dump").unwrap(), cfg);
    }
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(FileConfig::from_toml_str("[train]\nbudgte = 5\n", "typo").is_err());
}
