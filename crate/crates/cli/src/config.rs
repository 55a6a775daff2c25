//! Experiment configuration: JSON file, dotted `--set` overrides, typed params.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Evolve,
    EnergyTrack,
    AclScan,
    FtdCheck,
    BilinearProbe,
    StrichartzProbe,
    IllposeScan,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Evolve => "evolve",
            ExperimentName::EnergyTrack => "energy-track",
            ExperimentName::AclScan => "acl-scan",
            ExperimentName::FtdCheck => "ftd-check",
            ExperimentName::BilinearProbe => "bilinear-probe",
            ExperimentName::StrichartzProbe => "strichartz-probe",
            ExperimentName::IllposeScan => "illpose-scan",
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

/// `key=value` with a dotted key; the value is JSON when it parses as JSON
/// and a plain string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), Failure> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Failure::Config(format!("--set `{assignment}`: expected key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Failure::Config(format!("--set `{assignment}`: empty path segment")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Failure::Config(format!("--set `{path}`: `{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj.entry((*key).to_string()).or_insert_with(empty_object);
    }
    unreachable!("non-empty path")
}

/// Typed view of a JSON value; errors carry the offending field path.
pub fn typed<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T, Failure> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let at = match (prefix.is_empty(), path == ".") {
            (true, _) => path,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{path}"),
        };
        Failure::Config(format!("{at}: {}", e.into_inner()))
    })
}

pub fn load(
    experiment: ExperimentName,
    path: &Path,
    sets: &[String],
    out: Option<&Path>,
) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut root: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let obj = root
        .as_object_mut()
        .ok_or_else(|| Failure::Config("config must be a JSON object".into()))?;
    obj.entry("name")
        .or_insert_with(|| Value::String(experiment.as_str().into()));
    for s in sets {
        apply_override(&mut root, s)?;
    }
    let mut cfg: ExperimentConfig = typed(&root, "")?;
    if cfg.name != experiment {
        return Err(Failure::Config(format!(
            "name: config is for `{}` but `{}` was requested",
            cfg.name.as_str(),
            experiment.as_str()
        )));
    }
    if let Some(dir) = out {
        cfg.out_dir = dir.to_path_buf();
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_reach_nested_leaves() {
        let mut v = json!({"params": {"K": 16}});
        apply_override(&mut v, "params.K=64").unwrap();
        apply_override(&mut v, "params.initial.kind=zero").unwrap();
        apply_override(&mut v, "params.N_list=[4,8]").unwrap();
        apply_override(&mut v, "seed=9").unwrap();
        assert_eq!(
            v,
            json!({"params": {"K": 64, "initial": {"kind": "zero"}, "N_list": [4, 8]}, "seed": 9})
        );
    }

    #[test]
    fn malformed_overrides_are_config_errors() {
        let mut v = json!({"params": 3});
        assert!(matches!(apply_override(&mut v, "params"), Err(Failure::Config(_))));
        assert!(matches!(apply_override(&mut v, "params..x=1"), Err(Failure::Config(_))));
        assert!(matches!(apply_override(&mut v, "params.x=1"), Err(Failure::Config(_))));
    }

    #[test]
    fn typed_errors_name_the_field() {
        #[derive(Debug, Deserialize)]
        #[allow(dead_code)]
        struct P {
            inner: Inner,
        }
        #[derive(Debug, Deserialize)]
        #[allow(dead_code)]
        struct Inner {
            dt: f64,
        }
        let err = typed::<P>(&json!({"inner": {"dt": "fast"}}), "params").unwrap_err();
        match err {
            Failure::Config(msg) => assert!(msg.starts_with("params.inner.dt:"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
