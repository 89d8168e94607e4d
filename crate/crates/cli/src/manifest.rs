//! `manifest.json`: what a run was asked to do and what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use ccl_core::experiment::EpisodeConfig;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Where a config value came from: `env`, `file:<path>`, `set`, `flag` or
/// `manifest`.
#[derive(Clone, Debug)]
pub struct Override {
    pub key: String,
    pub value: String,
    pub source: String,
}

#[derive(Clone, Debug)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Wall-clock seconds per phase, in execution order.
#[derive(Clone, Debug, Default)]
pub struct Phases(pub Vec<(String, f64)>);

impl Phases {
    pub fn push(&mut self, name: &str, started: Instant) {
        self.0.push((name.to_string(), started.elapsed().as_secs_f64()));
    }
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub command: String,
    /// Every config key after resolution.
    pub config: BTreeMap<String, String>,
    pub episodes: usize,
    pub jobs: usize,
    pub param: Option<String>,
    pub values: Vec<String>,
    pub overrides: Vec<Override>,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<Artifact>,
    pub phases: Phases,
}

fn config_map(cfg: &EpisodeConfig) -> BTreeMap<String, String> {
    cfg.to_text()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

impl Manifest {
    pub fn new(command: &str, cfg: &EpisodeConfig, episodes: usize, jobs: usize, overrides: Vec<Override>) -> Self {
        Manifest {
            command: command.to_string(),
            config: config_map(cfg),
            episodes,
            jobs,
            param: None,
            values: Vec::new(),
            overrides,
            seeds: Vec::new(),
            artifacts: Vec::new(),
            phases: Phases::default(),
        }
    }

    /// Writes `contents` to `dir/name` and records its hash.
    pub fn write_artifact(&mut self, dir: &Path, name: &str, contents: &str) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
            bytes: contents.len(),
        });
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "episodes": self.episodes,
            "jobs": self.jobs,
            "param": self.param,
            "values": self.values,
            "overrides": self.overrides.iter().map(|o| json!({
                "key": o.key, "value": o.value, "source": o.source,
            })).collect::<Vec<_>>(),
            "seeds": self.seeds,
            "artifacts": self.artifacts.iter().map(|a| json!({
                "path": a.path, "sha256": a.sha256, "bytes": a.bytes,
            })).collect::<Vec<_>>(),
            "phases": self.phases.0.iter().map(|(name, secs)| json!({
                "phase": name, "seconds": secs,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.to_json())?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(text: &str) -> Result<Manifest> {
        let v: Value = serde_json::from_str(text)?;
        let str_field = |v: &Value, k: &str| -> Result<String> {
            v.get(k).and_then(Value::as_str).map(str::to_string).ok_or_else(|| anyhow!("missing string `{k}`"))
        };
        let usize_field = |k: &str| -> Result<usize> {
            v.get(k).and_then(Value::as_u64).map(|x| x as usize).ok_or_else(|| anyhow!("missing integer `{k}`"))
        };
        let config = v
            .get("config")
            .and_then(Value::as_object)
            .ok_or_else(|| anyhow!("missing object `config`"))?
            .iter()
            .map(|(k, x)| Ok((k.clone(), x.as_str().ok_or_else(|| anyhow!("config `{k}` is not a string"))?.to_string())))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let array = |k: &str| v.get(k).and_then(Value::as_array).cloned().unwrap_or_default();
        let artifacts = array("artifacts")
            .iter()
            .map(|a| {
                Ok(Artifact {
                    path: str_field(a, "path")?,
                    sha256: str_field(a, "sha256")?,
                    bytes: a.get("bytes").and_then(Value::as_u64).unwrap_or(0) as usize,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Manifest {
            command: str_field(&v, "command")?,
            config,
            episodes: usize_field("episodes")?,
            jobs: usize_field("jobs")?,
            param: v.get("param").and_then(Value::as_str).map(str::to_string),
            values: array("values").iter().filter_map(|x| x.as_str().map(str::to_string)).collect(),
            overrides: Vec::new(),
            seeds: array("seeds").iter().filter_map(Value::as_u64).collect(),
            artifacts,
            phases: Phases::default(),
        })
    }
}
