use magnus_delay::config::{
    DelayMode, ModelConfig, ModelHandle, RunConfig, ScalarHistoryConfig,
};
use magnus_delay::HarnessError;
use magnus_delay_core::magnus::{GuardAction, InvariantPredicate};
use magnus_delay_core::{DelayFamily, ExpmMethod};

const SCALAR: &str = r#"{
  "model": {"scalar": {"rate": "1", "history": {"compatibilized": {}}}},
  "delay": {"mode": "point", "delta": "1"},
  "N": 16,
  "T": "2"
}"#;

fn epidemic(params: &str) -> String {
    format!(
        r#"{{
  "model": {{"epidemic": {{
    "grid": {{"nx": 4, "ny": 4, "Lx": "4", "Ly": "4"}},
    "params": {params},
    "kernel": {{"type": "bump", "radius": "1", "amplitude": "1"}},
    "history": {{"preset": "default", "infected_fraction": "0.1"}}
  }}}},
  "delay": {{"mode": "trapezoid-half", "delta": "1"}},
  "N": 4,
  "T": "1"
}}"#
    )
}

#[test]
fn scalar_config_parses_with_defaults() {
    let cfg = RunConfig::from_json(SCALAR).unwrap();
    assert_eq!(cfg.n, Some(16));
    assert_eq!(cfg.horizon.get(), 2.0);
    assert_eq!(cfg.delay.mode, DelayMode::Point);
    assert!(matches!(
        cfg.model,
        ModelConfig::Scalar(ref s) if matches!(s.history, ScalarHistoryConfig::Compatibilized { value } if value.get() == 1.0)
    ));
    assert_eq!(cfg.expm_config().method, ExpmMethod::KrylovArnoldi);
    assert_eq!(cfg.expm_config().tol, 1e-10);
    let plan = cfg.plan().unwrap();
    assert_eq!(plan.spec.window.epsilon(), 1.0);
    assert_eq!(plan.options.guard.predicate, InvariantPredicate::Nonnegative);
    assert!(matches!(plan.model, ModelHandle::Scalar { rate } if rate == 1.0));
}

#[test]
fn decimal_strings_and_numbers_agree() {
    let a = RunConfig::from_json(SCALAR).unwrap();
    let b = RunConfig::from_json(&SCALAR.replace("\"T\": \"2\"", "\"T\": 2.0")).unwrap();
    assert_eq!(a, b);
    let c = RunConfig::from_json(&SCALAR.replace("\"delta\": \"1\"", "\"delta\": \"0.1\"")).unwrap();
    assert_eq!(c.delay.delta.get(), 0.1);
}

#[test]
fn epidemic_config_resolves() {
    let cfg = RunConfig::from_json(&epidemic(r#"{"beta": "4", "gamma": "1", "nu": "0.1", "mass": "1"}"#)).unwrap();
    let plan = cfg.plan().unwrap();
    assert_eq!(plan.spec.window.epsilon(), 0.5);
    assert_eq!(plan.spec.family, DelayFamily::TrapezoidHalf);
    assert_eq!(plan.spec.generator.dim(), 48);
    assert!(matches!(plan.options.guard.predicate, InvariantPredicate::NonnegativeMass { .. }));
    assert_eq!(plan.options.guard.action, GuardAction::Record);
    assert_eq!(plan.spec.norm_weight, 1.0);
}

#[test]
fn negative_beta_names_the_field() {
    let err = RunConfig::from_json(&epidemic(r#"{"beta": "-1"}"#)).unwrap_err();
    assert_eq!(err.path, "model.epidemic.params.beta");
    assert!(err.to_string().contains("beta"));
}

#[test]
fn unknown_keys_are_rejected_with_path_and_position() {
    let text = SCALAR.replace("\"rate\": \"1\"", "\"rate\": \"1\", \"speed\": 3");
    let err = RunConfig::from_json(&text).unwrap_err();
    assert!(err.message.contains("speed"), "{err}");
    assert!(err.path.starts_with("model.scalar"), "{err}");
    assert_eq!(err.line, Some(2));

    let text = SCALAR.replace("\"N\": 16", "\"N\": 16, \"n\": 3");
    assert!(RunConfig::from_json(&text).unwrap_err().message.contains("unknown field"));
}

#[test]
fn malformed_numbers_are_rejected() {
    for bad in ["\"1/2\"", "\"NaN\"", "\"inf\"", "\"\"", "true"] {
        let text = SCALAR.replace("\"T\": \"2\"", &format!("\"T\": {bad}"));
        let err = RunConfig::from_json(&text).unwrap_err();
        assert_eq!(err.path, "T", "{bad}: {err}");
    }
}

#[test]
fn schema_rules() {
    let cases = [
        (SCALAR.replace("\"N\": 16,", "\"N_list\": [],"), "N_list"),
        (SCALAR.replace("\"N\": 16,", "\"N_list\": [8, 4],"), "N_list"),
        (SCALAR.replace("\"delta\": \"1\"", "\"delta\": \"0\""), "delay.delta"),
        (SCALAR.replace("\"delta\": \"1\"", "\"delta\": \"1\", \"epsilon\": \"2\""), "delay.epsilon"),
        (SCALAR.replace("\"mode\": \"point\"", "\"mode\": \"custom\""), "delay.weights"),
        (SCALAR.replace("\"mode\": \"point\"", "\"mode\": \"uniform-latent\""), "delay.epsilon"),
        (SCALAR.replace("\"T\": \"2\"", "\"T\": \"-1\""), "T"),
        (SCALAR.replace("\"N\": 16", "\"N\": 16, \"output\": {\"stride\": 0}"), "output.stride"),
        (SCALAR.replace("\"N\": 16", "\"N\": 16, \"expm\": {\"tol\": \"0\"}"), "expm.tol"),
    ];
    for (text, path) in cases {
        let err = RunConfig::from_json(&text).unwrap_err();
        assert_eq!(err.path, path, "{err}");
    }
}

#[test]
fn model_level_errors_become_config_errors() {
    // epsilon != delta is not a point delay
    let text = SCALAR.replace("\"delta\": \"1\"", "\"delta\": \"1\", \"epsilon\": \"0.5\"");
    let cfg = RunConfig::from_json(&text).unwrap();
    assert!(matches!(cfg.plan(), Err(HarnessError::Config(_))));

    let heavy = epidemic(r#"{"beta": "4"}"#).replace("\"infected_fraction\": \"0.1\"", "\"infected_fraction\": \"0.6\", \"recovered_fraction\": \"0.6\"");
    let err = RunConfig::from_json(&heavy).unwrap_err();
    assert_eq!(err.path, "model.epidemic.history");
}

#[test]
fn expected_latent_is_an_alias() {
    let text = SCALAR.replace("\"mode\": \"point\", \"delta\": \"1\"", "\"mode\": \"expected-latent\", \"delta\": \"1\", \"epsilon\": \"0.25\"");
    let cfg = RunConfig::from_json(&text).unwrap();
    assert_eq!(cfg.family(), DelayFamily::UniformLatent);
    assert_eq!(cfg.window().unwrap().epsilon(), 0.25);
}

#[test]
fn config_round_trips_through_json() {
    let cfg = RunConfig::from_json(&epidemic(r#"{"beta": "2"}"#)).unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
}
