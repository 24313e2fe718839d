//! JSON schemas for the three decision payloads.

use jsonschema::JSONSchema;
use serde_json::Value;

use super::DecisionKind;
use crate::error::{Error, Result};

pub const PREPROCESS: &str = include_str!("../../schemas/preprocess.json");
pub const MODEL_SELECTION: &str = include_str!("../../schemas/model_selection.json");
pub const ENSEMBLE: &str = include_str!("../../schemas/ensemble.json");

pub fn schema_text(kind: DecisionKind) -> &'static str {
    match kind {
        DecisionKind::Preprocess => PREPROCESS,
        DecisionKind::ModelSelection => MODEL_SELECTION,
        DecisionKind::Ensemble => ENSEMBLE,
    }
}

/// Validate `payload` against the schema of `kind`, listing every violation.
pub fn validate(kind: DecisionKind, payload: &Value) -> Result<()> {
    let schema: Value = serde_json::from_str(schema_text(kind))?;
    let compiled = JSONSchema::compile(&schema).map_err(|e| Error::Advisor(format!("bad schema: {e}")))?;
    let outcome = compiled.validate(payload);
    if let Err(errors) = outcome {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        return Err(Error::Advisor(format!("{kind} payload violates schema: {}", msgs.join("; "))));
    }
    Ok(())
}
