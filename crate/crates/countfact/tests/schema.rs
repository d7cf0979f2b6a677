//! Validates the JSON documents the toolkit reads and writes against the
//! schemas shipped in `schemas/`, using a small validator covering the
//! subset of JSON Schema those files use.

use countfact::harness::{
    run_sweep, DispersionRegime, ExperimentConfig, InitSpec, ModelSpec,
};
use serde_json::Value;
use std::path::Path;
use std::process::Command;

// ---------------------------------------------------------------------------
// Mini JSON-schema validator: type, enum, minimum, exclusiveMinimum,
// required, properties, additionalProperties(false), items, oneOf,
// $ref (#/definitions/...).
// ---------------------------------------------------------------------------

fn resolve_ref<'a>(root: &'a Value, reference: &str) -> &'a Value {
    let path = reference
        .strip_prefix("#/")
        .unwrap_or_else(|| panic!("unsupported $ref {reference}"));
    let mut node = root;
    for part in path.split('/') {
        node = node
            .get(part)
            .unwrap_or_else(|| panic!("$ref {reference} missing segment {part}"));
    }
    node
}

fn type_matches(name: &str, doc: &Value) -> bool {
    match name {
        "object" => doc.is_object(),
        "array" => doc.is_array(),
        "string" => doc.is_string(),
        "boolean" => doc.is_boolean(),
        "number" => doc.is_number(),
        "integer" => doc.as_i64().is_some() || doc.as_u64().is_some(),
        other => panic!("unsupported schema type {other}"),
    }
}

fn validate(schema: &Value, doc: &Value, root: &Value, path: &str) -> Result<(), String> {
    let node = schema
        .as_object()
        .unwrap_or_else(|| panic!("schema node at {path} is not an object"));

    if let Some(reference) = node.get("$ref") {
        return validate(resolve_ref(root, reference.as_str().unwrap()), doc, root, path);
    }
    if let Some(alternatives) = node.get("oneOf") {
        let mut errors = Vec::new();
        for alt in alternatives.as_array().unwrap() {
            match validate(alt, doc, root, path) {
                Ok(()) => return Ok(()),
                Err(e) => errors.push(e),
            }
        }
        return Err(format!("{path}: no oneOf branch matched [{}]", errors.join(" | ")));
    }
    if let Some(t) = node.get("type") {
        let t = t.as_str().unwrap();
        if !type_matches(t, doc) {
            return Err(format!("{path}: expected {t}, got {doc}"));
        }
    }
    if let Some(allowed) = node.get("enum") {
        if !allowed.as_array().unwrap().iter().any(|v| v == doc) {
            return Err(format!("{path}: {doc} not in {allowed}"));
        }
    }
    if let Some(min) = node.get("minimum") {
        let bound = min.as_f64().unwrap();
        let v = doc.as_f64().ok_or_else(|| format!("{path}: minimum on non-number"))?;
        if v < bound {
            return Err(format!("{path}: {v} below minimum {bound}"));
        }
    }
    if let Some(min) = node.get("exclusiveMinimum") {
        let bound = min.as_f64().unwrap();
        let v = doc
            .as_f64()
            .ok_or_else(|| format!("{path}: exclusiveMinimum on non-number"))?;
        if v <= bound {
            return Err(format!("{path}: {v} not above {bound}"));
        }
    }
    if let Some(obj) = doc.as_object() {
        if let Some(required) = node.get("required") {
            for key in required.as_array().unwrap() {
                let key = key.as_str().unwrap();
                if !obj.contains_key(key) {
                    return Err(format!("{path}: missing required field {key}"));
                }
            }
        }
        let empty = serde_json::Map::new();
        let properties = node
            .get("properties")
            .map(|p| p.as_object().unwrap())
            .unwrap_or(&empty);
        if node.get("additionalProperties") == Some(&Value::Bool(false)) {
            for key in obj.keys() {
                if !properties.contains_key(key) {
                    return Err(format!("{path}: unexpected field {key}"));
                }
            }
        }
        for (key, sub) in properties {
            if let Some(value) = obj.get(key) {
                validate(sub, value, root, &format!("{path}/{key}"))?;
            }
        }
    }
    if let (Some(items), Some(array)) = (node.get("items"), doc.as_array()) {
        for (idx, element) in array.iter().enumerate() {
            validate(items, element, root, &format!("{path}[{idx}]"))?;
        }
    }
    Ok(())
}

fn load_schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| {
        panic!("cannot read {}: {e}", path.display());
    }))
    .expect("schema parses")
}

fn assert_valid(schema: &Value, doc: &Value) {
    if let Err(e) = validate(schema, doc, schema, "$") {
        panic!("document failed validation: {e}\n{doc:#}");
    }
}

fn assert_invalid(schema: &Value, doc: &Value) {
    assert!(
        validate(schema, doc, schema, "$").is_err(),
        "expected validation failure:\n{doc:#}"
    );
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_countfact"))
}

// ---------------------------------------------------------------------------
// Validator self-checks on hand-written documents.
// ---------------------------------------------------------------------------

#[test]
fn validator_rejects_malformed_documents() {
    let schema = load_schema("fit_report.schema.json");
    let good: Value = serde_json::json!({
        "model": "pmf", "k": 1, "converged": true, "iterations": 2,
        "final_nll": 1.0, "nll_trace": [2.0, 1.0],
        "w": [[0.5]], "h": [[0.5]]
    });
    assert_valid(&schema, &good);

    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("final_nll");
    assert_invalid(&schema, &missing);

    let mut bad_enum = good.clone();
    bad_enum["model"] = "poisson".into();
    assert_invalid(&schema, &bad_enum);

    let mut extra = good.clone();
    extra["surprise"] = 1.into();
    assert_invalid(&schema, &extra);

    let mut bad_type = good.clone();
    bad_type["iterations"] = 2.5.into();
    assert_invalid(&schema, &bad_type);

    let mut negative = good;
    negative["w"] = serde_json::json!([[-0.5]]);
    assert_invalid(&schema, &negative);
}

// ---------------------------------------------------------------------------
// Real documents produced by the toolkit.
// ---------------------------------------------------------------------------

#[test]
fn fit_reports_from_all_models_validate() {
    let dir = tempfile::tempdir().unwrap();
    let sim_prefix = dir.path().join("sim_");
    let status = bin()
        .args(["simulate", "--I", "8", "--J", "10", "--K", "2"])
        .args(["--regime", "constant:1", "--seed", "5"])
        .arg("--out")
        .arg(&sim_prefix)
        .status()
        .unwrap();
    assert!(status.success());
    let y_csv = dir.path().join("sim_Y.csv");

    let schema = load_schema("fit_report.schema.json");
    let invocations: [&[&str]; 4] = [
        &["--model", "pmf"],
        &["--model", "nbmf", "--alpha", "5"],
        &["--model", "gpmf"],
        &["--model", "gpmf", "--theta-mode", "shared"],
    ];
    for (idx, model_args) in invocations.iter().enumerate() {
        let out = dir.path().join(format!("fit{idx}.json"));
        let status = bin()
            .arg("fit")
            .arg("--input")
            .arg(&y_csv)
            .args(["--K", "2", "--max-iters", "60"])
            .args(*model_args)
            .arg("--output")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "fit {model_args:?} failed");
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_valid(&schema, &doc);
        // Model-conditional fields.
        let model = doc["model"].as_str().unwrap();
        assert_eq!(doc.get("theta").is_some(), model == "gpmf");
        assert_eq!(doc.get("alpha").is_some(), model == "nbmf");
    }
}

#[test]
fn benchmark_report_validates() {
    let cfg = ExperimentConfig {
        i: 10,
        j: 12,
        k: 2,
        replications: 2,
        models: vec![ModelSpec::Pmf, ModelSpec::Nbmf { alpha: 5.0 }, ModelSpec::Gpmf],
        initializers: vec![InitSpec::Nndsvd, InitSpec::Random { n_starts: 2 }],
        master_seed: 11,
        ..ExperimentConfig::default()
    };
    let report = run_sweep(
        &cfg,
        &[DispersionRegime::Constant(0.5), DispersionRegime::Heterogeneous],
    )
    .unwrap();
    let doc = serde_json::to_value(&report).unwrap();
    assert_valid(&load_schema("report.schema.json"), &doc);
}

#[test]
fn experiment_configs_validate() {
    let schema = load_schema("experiment_config.schema.json");
    assert_valid(&schema, &serde_json::to_value(ExperimentConfig::default()).unwrap());
    assert_valid(&schema, &serde_json::json!({}));
    assert_valid(
        &schema,
        &serde_json::json!({
            "i": 20, "dispersion_regime": {"constant": 1.5},
            "models": ["pmf", {"nbmf": {"alpha": 2.0}}],
            "initializers": [{"random": {"n_starts": 3}}],
            "convergence": {"tolerance": 1e-5, "max_iterations": 500}
        }),
    );
    // Rejections mirror serde's deny_unknown_fields and enum shapes.
    assert_invalid(&schema, &serde_json::json!({"unknown_field": 1}));
    assert_invalid(&schema, &serde_json::json!({"models": ["poisson"]}));
    assert_invalid(&schema, &serde_json::json!({"dispersion_regime": "constant"}));
    assert_invalid(&schema, &serde_json::json!({"convergence": {"tolerance": 1e-5}}));
    assert!(serde_json::from_value::<ExperimentConfig>(serde_json::json!({"unknown_field": 1}))
        .is_err());
}
