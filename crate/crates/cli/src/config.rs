use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub fn read_config(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)?;
    match serde_json::from_str(&text)? {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Config {
            field: "<root>".into(),
            message: "config must be a JSON object".into(),
        }),
    }
}

/// Values from `config` replace the parsed flags. Unknown keys and values of
/// the wrong type are reported by field name.
pub fn apply<T: Serialize + DeserializeOwned>(args: T, config: &Map<String, Value>) -> CliResult<T> {
    if config.is_empty() {
        return Ok(args);
    }
    let Value::Object(base) = serde_json::to_value(&args)? else {
        unreachable!("argument structs serialize to objects");
    };
    for (k, v) in config {
        if !base.contains_key(k) {
            return Err(CliError::Config {
                field: k.clone(),
                message: "unknown field for this command".into(),
            });
        }
        let mut single = base.clone();
        single.insert(k.clone(), v.clone());
        if let Err(e) = serde_json::from_value::<T>(Value::Object(single)) {
            return Err(CliError::Config {
                field: k.clone(),
                message: e.to_string(),
            });
        }
    }
    let mut merged = base;
    merged.extend(config.clone());
    Ok(serde_json::from_value(Value::Object(merged))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Args {
        alpha: f64,
        seed: Option<u64>,
    }

    fn cfg(s: &str) -> Map<String, Value> {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn config_overrides_flags() {
        let a = apply(Args { alpha: 0.1, seed: None }, &cfg(r#"{"seed": 7}"#)).unwrap();
        assert_eq!(a, Args { alpha: 0.1, seed: Some(7) });
    }

    #[test]
    fn errors_name_the_field() {
        let e = apply(Args { alpha: 0.1, seed: None }, &cfg(r#"{"alpha": "x"}"#)).unwrap_err();
        assert!(e.to_string().contains("`alpha`"), "{e}");
        let e = apply(Args { alpha: 0.1, seed: None }, &cfg(r#"{"beta": 1}"#)).unwrap_err();
        assert!(e.to_string().contains("`beta`"), "{e}");
    }
}
