//! Flat key/value experiment configuration.
//!
//! A config file is a TOML document with top-level scalar or array keys only:
//!
//! ```toml
//! seed = 7
//! paths = 20000
//! dt = 1e-3
//! "holder.zero_drift:scales" = [0.01, 0.02, 0.04, 0.08, 0.16]
//! ```
//!
//! `seed` applies to every selected experiment. A plain key applies to every
//! selected experiment that declares it; `"<id>:<key>"` targets one
//! experiment, including `"<id>:seed"`. Every key must be consumed by some
//! selected experiment.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::registry::Experiment;

/// One parameter value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Float(_) => "float",
            Value::Int(_) => "integer",
            Value::Bool(_) => "bool",
            Value::Text(_) => "string",
            Value::List(_) => "list of numbers",
        }
    }

    fn from_toml(v: &toml::Value) -> Option<Value> {
        Some(match v {
            toml::Value::Float(f) => Value::Float(*f),
            toml::Value::Integer(i) => Value::Int(*i),
            toml::Value::Boolean(b) => Value::Bool(*b),
            toml::Value::String(s) => Value::Text(s.clone()),
            toml::Value::Array(items) => Value::List(
                items
                    .iter()
                    .map(|i| match i {
                        toml::Value::Float(f) => Some(*f),
                        toml::Value::Integer(n) => Some(*n as f64),
                        _ => None,
                    })
                    .collect::<Option<Vec<f64>>>()?,
            ),
            _ => return None,
        })
    }

    /// Coerce `self` to the kind of `default`; integers widen to floats.
    fn coerce(self, default: &Value) -> Option<Value> {
        match (default, self) {
            (Value::Float(_), Value::Int(i)) => Some(Value::Float(i as f64)),
            (Value::Float(_), v @ Value::Float(_)) => Some(v),
            (Value::Int(_), v @ Value::Int(_)) => Some(v),
            (Value::Bool(_), v @ Value::Bool(_)) => Some(v),
            (Value::Text(_), v @ Value::Text(_)) => Some(v),
            (Value::List(_), v @ Value::List(_)) => Some(v),
            _ => None,
        }
    }

    fn to_toml(&self) -> String {
        match self {
            Value::Float(f) => format!("{f:?}"),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => format!("{s:?}"),
            Value::List(v) => format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")),
        }
    }
}

/// Declared parameter of an experiment with its default.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: Value,
    pub doc: &'static str,
}

pub(crate) fn float(key: &'static str, v: f64, doc: &'static str) -> ParamSpec {
    ParamSpec { key, default: Value::Float(v), doc }
}

pub(crate) fn int(key: &'static str, v: i64, doc: &'static str) -> ParamSpec {
    ParamSpec { key, default: Value::Int(v), doc }
}

pub(crate) fn list(key: &'static str, v: &[f64], doc: &'static str) -> ParamSpec {
    ParamSpec { key, default: Value::List(v.to_vec()), doc }
}

pub(crate) fn text(key: &'static str, v: &str, doc: &'static str) -> ParamSpec {
    ParamSpec { key, default: Value::Text(v.to_string()), doc }
}

/// Resolved parameters of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params(BTreeMap<String, Value>);

impl Params {
    fn value(&self, key: &str) -> &Value {
        self.0
            .get(key)
            .unwrap_or_else(|| panic!("parameter `{key}` is not declared by this experiment"))
    }

    pub fn f64(&self, key: &str) -> f64 {
        match self.value(key) {
            Value::Float(f) => *f,
            Value::Int(i) => *i as f64,
            v => panic!("parameter `{key}` is a {}", v.kind()),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        match self.value(key) {
            Value::Int(i) => *i as usize,
            v => panic!("parameter `{key}` is a {}", v.kind()),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.value(key) {
            Value::List(v) => v,
            v => panic!("parameter `{key}` is a {}", v.kind()),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.value(key) {
            Value::Text(s) => s,
            v => panic!("parameter `{key}` is a {}", v.kind()),
        }
    }

    /// Integer levels from a numeric list.
    pub fn levels(&self, key: &str) -> Vec<u32> {
        self.list(key).iter().map(|&v| v as u32).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }
}

/// Configuration of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub seed: u64,
    pub params: Params,
}

impl ExperimentConfig {
    /// Registry defaults for `exp`.
    pub fn defaults(exp: &Experiment) -> Self {
        Self {
            id: exp.id.to_string(),
            seed: exp.default_seed,
            params: Params(exp.params.iter().map(|p| (p.key.to_string(), p.default.clone())).collect()),
        }
    }

    /// Replace one parameter, checking it is declared and of the declared kind.
    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let slot = self
            .params
            .0
            .get_mut(key)
            .ok_or_else(|| CliError::Config(format!("{}: unknown parameter `{key}`", self.id)))?;
        let kind = slot.kind();
        *slot = value
            .coerce(slot)
            .ok_or_else(|| CliError::Config(format!("{}: `{key}` must be a {kind}", self.id)))?;
        Ok(())
    }

    pub fn with(mut self, key: &str, value: Value) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    /// Flat TOML echo with every key targeted at this experiment; loading it
    /// with `--config` reproduces the run.
    pub fn to_toml(&self) -> String {
        let mut s = format!("\"{}:seed\" = {}\n", self.id, self.seed);
        for (k, v) in self.params.iter() {
            s.push_str(&format!("\"{}:{k}\" = {}\n", self.id, v.to_toml()));
        }
        s
    }
}

/// Parsed config file: global seed plus plain and targeted keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    seeds: Vec<(String, u64)>,
    entries: Vec<(Option<String>, String, Value)>,
}

impl Overrides {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        let mut out = Overrides::default();
        for (key, v) in &table {
            if key == "seed" {
                let s = v
                    .as_integer()
                    .filter(|s| *s >= 0)
                    .ok_or_else(|| CliError::Config("`seed` must be a non-negative integer".into()))?;
                out.seed = Some(s as u64);
                continue;
            }
            if let Some(id) = key.strip_suffix(":seed") {
                let s = v
                    .as_integer()
                    .filter(|s| *s >= 0)
                    .ok_or_else(|| CliError::Config(format!("`{key}` must be a non-negative integer")))?;
                out.seeds.push((id.to_string(), s as u64));
                continue;
            }
            let value = Value::from_toml(v).ok_or_else(|| {
                CliError::Config(format!("`{key}` must be a number, bool, string or list of numbers (flat keys only)"))
            })?;
            let (target, name) = match key.split_once(':') {
                Some((id, k)) => (Some(id.to_string()), k.to_string()),
                None => (None, key.clone()),
            };
            out.entries.push((target, name, value));
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Apply to the selected configs; every entry must land somewhere.
    pub fn apply(&self, cfgs: &mut [ExperimentConfig]) -> Result<()> {
        for (target, key, value) in &self.entries {
            let mut used = false;
            for cfg in cfgs.iter_mut() {
                let hit = match target {
                    Some(id) => id == &cfg.id,
                    None => cfg.params.0.contains_key(key),
                };
                if hit {
                    cfg.set(key, value.clone())?;
                    used = true;
                }
            }
            if !used {
                let name = match target {
                    Some(id) => format!("{id}:{key}"),
                    None => key.clone(),
                };
                return Err(CliError::Config(format!("`{name}` matches no selected experiment")));
            }
        }
        for (id, seed) in &self.seeds {
            let cfg = cfgs
                .iter_mut()
                .find(|c| &c.id == id)
                .ok_or_else(|| CliError::Config(format!("`{id}:seed` matches no selected experiment")))?;
            cfg.seed = *seed;
        }
        if let Some(seed) = self.seed {
            for cfg in cfgs.iter_mut() {
                cfg.seed = seed;
            }
        }
        Ok(())
    }
}
