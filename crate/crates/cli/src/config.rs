use std::path::{Path, PathBuf};

use nevlab::profiles::{make_profile, parse_plateau_table, Profile, ProfileSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;

/// Resolved configuration of one run, written verbatim into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub params: Value,
}

/// Contents of a `--config` file: either an `ExperimentConfig`-shaped object
/// or a whole manifest, whose `config` entry is used.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub params: Option<Value>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("config: {e}")))?;
        if let Some(inner) = v.get("config") {
            v = inner.clone();
        }
        let Value::Object(mut obj) = v else {
            return Err(CliError::Parse("config: expected a JSON object".into()));
        };
        let command = match obj.remove("command") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(CliError::Parse("config: command must be a string".into())),
        };
        let seed = match obj.remove("seed") {
            None | Some(Value::Null) => None,
            Some(s) => Some(s.as_u64().ok_or_else(|| CliError::Parse("config: seed must be a non-negative integer".into()))?),
        };
        let out = match obj.remove("out") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::Parse("config: out must be a string".into())),
        };
        let params = obj.remove("params");
        if let Some(k) = obj.keys().next() {
            return Err(CliError::Parse(format!("config: unknown key `{k}`")));
        }
        Ok(Self { command, seed, out, params })
    }
}

/// Recursive object merge; anything else in `over` replaces `base`.
pub fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Serialized flags with `None` fields dropped.
pub fn flag_overrides<F: Serialize>(flags: &F) -> Value {
    fn strip(v: Value) -> Value {
        match v {
            Value::Object(o) => Value::Object(
                o.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k, strip(v))).collect::<Map<_, _>>(),
            ),
            v => v,
        }
    }
    strip(serde_json::to_value(flags).expect("flags serialize"))
}

/// defaults ← file ← flags.
pub fn resolve<P: Serialize + DeserializeOwned + Default>(file: Option<&Value>, flags: &Value) -> CliResult<P> {
    let mut v = serde_json::to_value(P::default()).expect("defaults serialize");
    if let Some(f) = file {
        merge(&mut v, f);
    }
    merge(&mut v, flags);
    serde_json::from_value(v).map_err(|e| CliError::Parse(format!("parameters: {e}")))
}

/// Profile given either as an expression or as a plateau-table file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSource {
    pub expr: String,
    pub table: Option<PathBuf>,
}

impl ProfileSource {
    pub fn new(expr: &str) -> Self {
        Self { expr: expr.to_string(), table: None }
    }

    pub fn spec(&self) -> CliResult<ProfileSpec> {
        Ok(match &self.table {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                ProfileSpec::Table { rows: parse_plateau_table(&text)? }
            }
            None => ProfileSpec::expr(&self.expr),
        })
    }

    pub fn load(&self) -> CliResult<Profile> {
        Ok(make_profile(&self.spec()?)?)
    }

    /// Flag override for a `profile` entry; an expression flag clears a table
    /// inherited from a config file.
    pub fn overrides(expr: &Option<String>, table: &Option<PathBuf>) -> Option<Value> {
        match (expr, table) {
            (_, Some(t)) => Some(serde_json::json!({ "table": t })),
            (Some(e), None) => Some(serde_json::json!({ "expr": e, "table": null })),
            (None, None) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct P {
        a: f64,
        b: Vec<u32>,
        inner: Inner,
    }

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Inner {
        x: f64,
        y: f64,
    }

    impl Default for Inner {
        fn default() -> Self {
            Self { x: 1.0, y: 2.0 }
        }
    }

    #[test]
    fn flags_win_over_file() {
        let file = json!({"a": 3.0, "inner": {"x": 5.0}});
        let flags = json!({"a": 4.0});
        let p: P = resolve(Some(&file), &flags).unwrap();
        assert_eq!(p, P { a: 4.0, b: vec![], inner: Inner { x: 5.0, y: 2.0 } });
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let file = json!({"c": 1});
        let e = resolve::<P>(Some(&file), &json!({})).unwrap_err();
        assert_eq!(e.code(), 2);
    }

    #[test]
    fn manifest_is_accepted_as_config() {
        let c = ConfigFile::parse(r#"{"config": {"command": "lambda", "seed": 7, "out": null, "params": {}}, "files": {}}"#).unwrap();
        assert_eq!(c.command.as_deref(), Some("lambda"));
        assert_eq!(c.seed, Some(7));
        assert!(ConfigFile::parse(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn null_flags_are_dropped() {
        #[derive(Serialize)]
        struct F {
            a: Option<f64>,
            b: Option<f64>,
        }
        assert_eq!(flag_overrides(&F { a: None, b: Some(1.0) }), json!({"b": 1.0}));
    }
}
