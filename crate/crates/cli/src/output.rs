//! Output directory, number formatting and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const OUT_DIR_ENV: &str = "ROUTEDQKD_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "routedqkd-out";

/// `--out-dir`, then the environment, then `./routedqkd-out`.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// Twelve significant digits, positional for moderate exponents and
/// scientific otherwise, trailing zeros removed.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let rounded: f64 = sci.parse().expect("round trip");
        trim(&format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mant))
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Round every float in a JSON tree to twelve significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = format!("{x:.11e}").parse().unwrap();
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// SHA-256 of the compact JSON form with keys sorted.
pub fn config_digest<T: Serialize>(config: &T) -> Result<String> {
    // serde_json's default map is ordered by key
    let canonical = serde_json::to_string(&serde_json::to_value(config)?)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_digest: String,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
}

/// Collects artifacts of one subcommand and writes them with a manifest.
pub struct Run {
    dir: PathBuf,
    subcommand: &'static str,
    outputs: Vec<String>,
}

impl Run {
    pub fn new(dir: PathBuf, subcommand: &'static str) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, subcommand, outputs: Vec::new() })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let v = round_json(serde_json::to_value(value)?);
        self.write_text(name, &(serde_json::to_string_pretty(&v)? + "\n"))
    }

    pub fn finish<T: Serialize>(self, config: &T, seed: Option<u64>) -> Result<()> {
        let manifest = RunManifest {
            subcommand: self.subcommand.to_string(),
            config_digest: config_digest(config)?,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.subcommand));
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(num(1.11), "1.11");
        assert_eq!(num(0.95), "0.95");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.25), "-0.25");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(123456.0), "123456");
        assert_eq!(num(2e-12), "2e-12");
        assert_eq!(num(std::f64::consts::PI * 1e15), "3.14159265359e15");
    }

    #[test]
    fn digest_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"b": 1, "a": {"y": 2, "x": 3}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": {"x": 3, "y": 2}, "b": 1}"#).unwrap();
        assert_eq!(config_digest(&a).unwrap(), config_digest(&b).unwrap());
    }
}
