use crflow_lab::config::ScenarioConfig;
use crflow_lab::{presets, LabError};

fn flat_uniform() -> String {
    presets::text("flat-uniform").unwrap().to_string()
}

fn config_field(err: LabError) -> (String, String) {
    match err {
        LabError::Config { field, message } => (field, message),
        other => panic!("expected a configuration error, got {other}"),
    }
}

#[test]
fn every_bundled_preset_validates() {
    for name in presets::names() {
        let cfg = presets::load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(cfg.name, name);
    }
}

#[test]
fn window_order_names_the_field() {
    let text = flat_uniform().replace("t0 = 0.01", "t0 = 0.045");
    let err = ScenarioConfig::from_toml(&text).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let (field, message) = config_field(err);
    assert_eq!(field, "conjugate.t1");
    assert!(message.contains("t0 < t1"), "{message}");
}

#[test]
fn window_must_start_after_zero() {
    let text = flat_uniform().replace("t0 = 0.01", "t0 = 0.0");
    let (field, _) = config_field(ScenarioConfig::from_toml(&text).unwrap_err());
    assert_eq!(field, "conjugate.t0");
}

#[test]
fn window_must_end_before_final_time() {
    let text = flat_uniform().replace("t1 = 0.04", "t1 = 0.06");
    let (field, message) = config_field(ScenarioConfig::from_toml(&text).unwrap_err());
    assert_eq!(field, "conjugate.t1");
    assert!(message.contains("T = 0.05"), "{message}");
}

#[test]
fn grid_checks() {
    let small = flat_uniform().replace("n = 24", "n = 6");
    assert_eq!(config_field(ScenarioConfig::from_toml(&small).unwrap_err()).0, "grid.n");
    let order = flat_uniform().replace("fd_order = 4", "fd_order = 3");
    assert_eq!(config_field(ScenarioConfig::from_toml(&order).unwrap_err()).0, "grid.fd_order");
}

#[test]
fn parse_errors_carry_line_and_column() {
    let text = flat_uniform().replace("n = 24", "n = \"many\"");
    let (field, message) = config_field(ScenarioConfig::from_toml(&text).unwrap_err());
    assert!(field.is_empty());
    let line = text.lines().position(|l| l.contains("\"many\"")).unwrap() + 1;
    assert!(message.contains(&format!("line {line}")), "{message}");
    assert!(message.contains("column"), "{message}");
}

#[test]
fn unknown_keys_are_rejected() {
    let text = flat_uniform().replace("[grid]", "bogus_top = 1\n[grid]");
    let (_, message) = config_field(ScenarioConfig::from_toml(&text).unwrap_err());
    assert!(message.contains("bogus_top"), "{message}");
    let text = flat_uniform().replace("audits = true", "audits = true\nbogus_check = true");
    let (_, message) = config_field(ScenarioConfig::from_toml(&text).unwrap_err());
    assert!(message.contains("bogus_check"), "{message}");
}

#[test]
fn unknown_presets_are_rejected() {
    let text = flat_uniform().replace("v0 = \"fourier-mode\"", "v0 = \"square\"");
    assert_eq!(config_field(ScenarioConfig::from_toml(&text).unwrap_err()).0, "heat.v0");
    let text = flat_uniform().replace("preset = \"flat\"", "preset = \"hyperbolic\"");
    assert_eq!(config_field(ScenarioConfig::from_toml(&text).unwrap_err()).0, "metric");
}

#[test]
fn growth_needs_forcing() {
    let text = flat_uniform().replace("audits = true", "audits = true\ngrowth = true");
    assert_eq!(config_field(ScenarioConfig::from_toml(&text).unwrap_err()).0, "checks.growth");
}

#[test]
fn toml_round_trip() {
    for name in presets::names() {
        let cfg = presets::load(name).unwrap();
        let again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again.to_toml(), cfg.to_toml(), "{name}");
    }
}

#[test]
fn defaults_fill_omitted_sections() {
    let cfg = ScenarioConfig::from_toml("name = \"tiny\"\n[grid]\nn = 8\n[flow]\nt_final = 0.1\n[conjugate]\nt0 = 0.01\nt1 = 0.05\n")
        .unwrap();
    assert_eq!(cfg.grid.fd_order, 4);
    assert_eq!(cfg.tolerances.monotone, 1e-4);
    assert_eq!(cfg.heat.v0, "fourier-mode");
}
