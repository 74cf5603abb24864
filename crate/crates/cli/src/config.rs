//! Layered run configuration: defaults, then the JSON config file, then
//! command-line flags.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

use crate::CliError;

/// Reads a config document. A manifest written by an earlier run is
/// accepted too: its `config` member is the resolved configuration.
pub fn load_document(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut doc: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Some(inner) = doc.get_mut("config") {
        doc = inner.take();
    }
    if !doc.is_object() {
        return Err(CliError::Input(format!("{}: config must be a JSON object", path.display())));
    }
    Ok(doc)
}

fn overlay(base: &mut Map<String, Value>, top: &Value) {
    if let Value::Object(top) = top {
        for (k, v) in top {
            base.insert(k.clone(), v.clone());
        }
    }
}

/// Merges `defaults < file < flags`. Flags serialize with unset options
/// skipped, so only what was typed overrides the lower layers.
pub fn resolve<C, F>(file: Option<&Value>, flags: &F) -> Result<C, CliError>
where
    C: Default + Serialize + DeserializeOwned,
    F: Serialize,
{
    let Value::Object(mut merged) = serde_json::to_value(C::default()).expect("config serializes") else {
        unreachable!("configs are structs")
    };
    if let Some(doc) = file {
        overlay(&mut merged, doc);
    }
    overlay(&mut merged, &serde_json::to_value(flags).expect("flags serialize"));
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Input(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct C {
        a: f64,
        b: u64,
        c: String,
    }

    impl Default for C {
        fn default() -> Self {
            Self { a: 1.0, b: 2, c: "x".into() }
        }
    }

    #[derive(Serialize)]
    struct Flags {
        #[serde(skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        b: Option<u64>,
    }

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file = serde_json::json!({"b": 7, "c": "file"});
        let c: C = resolve(Some(&file), &Flags { a: None, b: Some(9) }).unwrap();
        assert_eq!(c, C { a: 1.0, b: 9, c: "file".into() });
        let c: C = resolve(None, &Flags { a: Some(3.0), b: None }).unwrap();
        assert_eq!(c, C { a: 3.0, b: 2, c: "x".into() });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file = serde_json::json!({"typo": 1});
        assert!(resolve::<C, _>(Some(&file), &Flags { a: None, b: None }).is_err());
    }
}
