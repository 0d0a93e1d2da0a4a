//! Option resolution (flag > config file > default) and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parsed TOML config. Keys are looked up in the subcommand's table first,
/// then at top level.
#[derive(Default)]
pub struct Config {
    table: toml::Table,
}

impl Config {
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| anyhow!("config {}: {e}", path.display()))?;
        Ok((Config { table }, text))
    }

    pub fn table(&self, name: &str) -> Option<&toml::Table> {
        self.table.get(name).and_then(toml::Value::as_table)
    }

    pub fn lookup(&self, section: &str, key: &str) -> Option<&toml::Value> {
        self.table(section)
            .and_then(|t| t.get(key))
            .or_else(|| self.table.get(key).filter(|v| !v.is_table()))
    }
}

/// Everything a run needs to describe itself: resolved options, hashed
/// inputs and hashed outputs.
pub struct Run {
    pub config: Config,
    pub section: &'static str,
    pub out_dir: PathBuf,
    options: BTreeMap<String, Value>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Run {
    pub fn new(config: Config, section: &'static str, out_dir: PathBuf) -> Self {
        Run {
            config,
            section,
            out_dir,
            options: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Flag, else config entry, else `None`. The resolved value is recorded.
    pub fn opt<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.config.lookup(self.section, key) {
                Some(raw) => Some(
                    raw.clone()
                        .try_into()
                        .map_err(|e| anyhow!("config key `{key}`: {e}"))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.options.insert(key.to_string(), serde_json::to_value(v)?);
        }
        Ok(value)
    }

    pub fn val<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.options.insert(key.to_string(), serde_json::to_value(&default)?);
                Ok(default)
            }
        }
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.options.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn read_input(&mut self, role: &str, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {role} file {}", path.display()))?;
        self.inputs.insert(role.to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).with_context(|| format!("{role} file {} is not UTF-8", path.display()))
    }

    pub fn hash_input(&mut self, role: &str, bytes: &[u8]) {
        self.inputs.insert(role.to_string(), sha256_hex(bytes));
    }

    pub fn write_output(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating output directory {}", self.out_dir.display()))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    /// Writes `<command>.manifest.json` beside the outputs. Thread counts are
    /// not recorded: they never change the output bytes.
    pub fn finish(mut self, command: &str) -> Result<()> {
        let manifest = serde_json::json!({
            "toolkit": "mudae",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "options": self.options,
            "inputs": self.inputs,
            "outputs": std::mem::take(&mut self.outputs),
        });
        let text = mudae::io::to_json_string(&manifest)?;
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(format!("{}.manifest.json", command.replace(' ', "_")));
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
