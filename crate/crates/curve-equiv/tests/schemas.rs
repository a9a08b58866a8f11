//! Keeps the JSON schemas in `schemas/` in sync with what the code actually
//! serializes. This is a structural check (field names, required sets, enum
//! values), not a full JSON Schema validation.

use std::collections::BTreeSet;
use std::path::PathBuf;

use curve_equiv::mcsim::{preset_scenarios, ScenarioConfig};
use curve_equiv::metrics::QuadratureRule;
use curve_equiv::models::{BuiltinFamily, ModelSpec};
use curve_equiv::testing::{test_l2_asymptotic, Method};
use curve_equiv::{fit_pair, GroupSample};

fn load_schema(name: &str) -> serde_json::Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

fn property_names(schema: &serde_json::Value) -> BTreeSet<String> {
    schema["properties"]
        .as_object()
        .expect("schema has properties")
        .keys()
        .cloned()
        .collect()
}

fn required_names(schema: &serde_json::Value) -> BTreeSet<String> {
    schema["required"]
        .as_array()
        .expect("schema has required")
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect()
}

fn enum_values(schema: &serde_json::Value, pointer: &str) -> BTreeSet<String> {
    schema
        .pointer(pointer)
        .unwrap_or_else(|| panic!("no enum at {pointer}"))
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect()
}

/// Asserts that `value` is an object whose keys are a subset of the schema's
/// properties and a superset of its required set.
fn check_object(value: &serde_json::Value, schema: &serde_json::Value, what: &str) {
    let keys: BTreeSet<String> = value
        .as_object()
        .unwrap_or_else(|| panic!("{what} is not an object"))
        .keys()
        .cloned()
        .collect();
    let props = property_names(schema);
    let required = required_names(schema);
    for k in &keys {
        assert!(props.contains(k), "{what}: field `{k}` missing from schema");
    }
    for k in &required {
        assert!(keys.contains(k), "{what}: required field `{k}` not serialized");
    }
    assert!(
        required.is_subset(&props),
        "{what}: schema requires fields it does not declare"
    );
}

fn two_group_sample() -> (GroupSample, GroupSample) {
    let doses = vec![0.0, 1.0, 2.0, 3.0, 4.0];
    let mk = |shift: f64, wiggle: f64| {
        let responses: Vec<Vec<f64>> = doses
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                (0..4)
                    .map(|j| {
                        let noise = wiggle * (((i * 4 + j) as f64 * 2.399).sin());
                        shift + 0.3 * x + noise
                    })
                    .collect()
            })
            .collect();
        GroupSample::new(doses.clone(), responses, (0.0, 4.0)).unwrap()
    };
    (mk(0.0, 0.05), mk(0.1, 0.05))
}

#[test]
fn test_outcome_matches_schema() {
    let schema = load_schema("test_outcome.schema.json");
    let (s1, s2) = two_group_sample();
    let lin = ModelSpec::builtin(BuiltinFamily::Linear);
    let pf = fit_pair(&lin, &lin, &s1, &s2).unwrap();
    let quad = QuadratureRule::default_on(pf.region).unwrap();
    let outcome = test_l2_asymptotic(&pf, 1.0, 0.05, &quad).unwrap();
    let value = serde_json::to_value(&outcome).unwrap();
    check_object(&value, &schema, "TestOutcome");

    let methods = enum_values(&schema, "/properties/method/enum");
    for m in [
        Method::L2Asymptotic,
        Method::BootL2,
        Method::BootSup,
        Method::SupAsymptotic,
        Method::BandIu,
    ] {
        let tag = serde_json::to_value(m).unwrap();
        assert!(
            methods.contains(tag.as_str().unwrap()),
            "method tag {tag} not in schema enum"
        );
    }
    assert_eq!(methods.len(), 5);
}

#[test]
fn scenario_config_matches_schema() {
    let schema = load_schema("scenario_config.schema.json");
    for (id, cfg) in preset_scenarios() {
        let value = serde_json::to_value(&cfg).unwrap();
        check_object(&value, &schema, &format!("ScenarioConfig {id}"));
    }

    // round trip through the schema-documented field names
    let any = preset_scenarios().into_iter().next().unwrap().1;
    let text = serde_json::to_string(&any).unwrap();
    let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back.id, any.id);
    assert!(text.contains("\"B\":"), "bootstrap count must serialize as B");

    let models = enum_values(&schema, "/definitions/model_id/enum");
    for f in BuiltinFamily::ALL {
        let spec = ModelSpec::builtin(f);
        assert!(models.contains(&spec.id), "model `{}` not in schema", spec.id);
    }
    assert_eq!(models.len(), 5);
}

#[test]
fn fit_report_schema_is_wellformed() {
    let schema = load_schema("fit_report.schema.json");
    // the report is assembled in the CLI; here we pin the documented shape
    let required = required_names(&schema);
    for field in ["group1", "group2", "region", "d_l2sq", "d_sup", "extremal_points", "plateau"] {
        assert!(required.contains(field), "missing required field {field}");
    }
    let group = &schema["definitions"]["group_fit"];
    let group_req = group["required"].as_array().unwrap();
    for field in ["model", "beta_hat", "sigma2_hat", "cond", "n", "ssr", "converged"] {
        assert!(
            group_req.iter().any(|v| v == field),
            "group_fit missing {field}"
        );
    }
}
