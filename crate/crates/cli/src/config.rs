//! Flag/config-file merging. Each command declares its flags with optional
//! values and a resolved config with defaults; the JSON file fills the gaps
//! the flags leave.

use std::path::{Path, PathBuf};

use pifa_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub fn resolve<F: Serialize, R: DeserializeOwned>(flags: &F, config: Option<&Path>) -> Result<R> {
    let mut merged = match config {
        Some(path) => match serde_json::from_slice::<Value>(&pifa_core::fsio::read(path)?)? {
            Value::Object(map) => map,
            _ => {
                return Err(Error::Invalid(format!(
                    "{}: config must be a JSON object",
                    path.display()
                )))
            }
        },
        None => Map::new(),
    };
    if let Value::Object(overrides) = serde_json::to_value(flags)? {
        for (key, value) in overrides {
            if !value.is_null() {
                merged.insert(key, value);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Invalid(format!("config: {e}")))
}

pub fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Invalid(format!("--{name} is required (flag or config file)")))
}

pub fn required_path(value: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    required(value.clone(), name)
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;
    use serde::Deserialize;

    #[derive(Serialize)]
    struct Flags {
        #[serde(skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        b: Option<String>,
    }

    #[derive(Debug, Deserialize, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Resolved {
        a: f64,
        b: String,
        c: u32,
    }

    impl Default for Resolved {
        fn default() -> Self {
            Self {
                a: 1.0,
                b: "x".into(),
                c: 7,
            }
        }
    }

    #[test]
    fn flags_override_file_and_defaults_fill_in() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"a": 2.0, "c": 9}"#).unwrap();
        let flags = Flags { a: Some(3.0), b: None };
        let r: Resolved = resolve(&flags, Some(&path)).unwrap();
        assert_eq!(
            r,
            Resolved {
                a: 3.0,
                b: "x".into(),
                c: 9
            }
        );
    }

    #[test]
    fn unknown_keys_are_validation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"nope": 1}"#).unwrap();
        let flags = Flags { a: None, b: None };
        let err = resolve::<_, Resolved>(&flags, Some(&path)).unwrap_err();
        assert_eq!(err.class(), pifa_core::ErrorClass::Validation);
    }
}
