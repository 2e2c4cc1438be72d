//! Experiment configuration, run records and pinned recipes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use circle_core::poly::{parse_system, PolynomialSystem};
use circle_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Count,
    Compare,
    Local,
    Series,
    Jint,
    ArcsScan,
    Regularize,
    Rank,
    Split,
}

/// Either a path to a system file or the system inlined in the config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSource {
    Path(String),
    Inline { n: usize, forms: Vec<String> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSource>,
    #[serde(default)]
    pub parameters: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Human-readable system file: variable count plus one form per line.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    n: usize,
    forms: Vec<String>,
}

pub fn load_system(source: &SystemSource) -> Result<PolynomialSystem> {
    let (n, forms): (usize, Vec<String>) = match source {
        SystemSource::Inline { n, forms } => (*n, forms.clone()),
        SystemSource::Path(path) => {
            let text = std::fs::read_to_string(Path::new(path))?;
            match serde_json::from_str::<SystemFile>(&text) {
                Ok(f) => (f.n, f.forms),
                // fall back to the exact term-level serialization
                Err(_) => return Ok(serde_json::from_str::<PolynomialSystem>(&text)?),
            }
        }
    };
    parse_system(&forms.join("\n"), n)
}

#[derive(Serialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub timestamp_unix: u64,
    pub results: serde_json::Value,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn make_record(config: &ExperimentConfig, results: serde_json::Value) -> RunRecord {
    let mut versions = BTreeMap::new();
    versions.insert(
        "circle-cli".to_string(),
        env!("CARGO_PKG_VERSION").to_string(),
    );
    versions.insert(
        "circle-core".to_string(),
        circle_core::VERSION.to_string(),
    );
    RunRecord {
        config: config.clone(),
        config_hash: config_hash(config),
        seed: config.seed,
        versions,
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        results,
    }
}

fn params(pairs: &[(&str, serde_json::Value)]) -> serde_json::Map<String, serde_json::Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Pinned desk-scale configurations used by the acceptance suite.
pub fn recipe(name: &str) -> Result<ExperimentConfig> {
    use serde_json::json;
    match name {
        "goldbach3" => Ok(ExperimentConfig {
            pipeline: Pipeline::Compare,
            system: Some(SystemSource::Inline {
                n: 3,
                forms: vec!["x1 + x2 + x3".to_string()],
            }),
            parameters: params(&[
                ("n", json!(20_000)),
                ("s", json!([30_001])),
                ("q", json!(500)),
                ("phi", json!(64.0)),
            ]),
            seed: 0,
            output: None,
        }),
        "squares7" => Ok(ExperimentConfig {
            pipeline: Pipeline::Compare,
            system: Some(SystemSource::Inline {
                n: 7,
                forms: vec![
                    "x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2 + x7^2".to_string(),
                ],
            }),
            parameters: params(&[
                ("n", json!(150)),
                ("s", json!([78_751])),
                ("q", json!(96)),
                ("phi", json!(32.0)),
            ]),
            seed: 0,
            output: None,
        }),
        "corollary2-demo" => Ok(ExperimentConfig {
            pipeline: Pipeline::Rank,
            system: Some(SystemSource::Inline {
                n: 5,
                forms: vec!["x1^2 + x2^2 + x3^2 - x4^2 - 2*x5^2".to_string()],
            }),
            parameters: params(&[
                ("solubility_primes", json!([2, 3, 5, 7])),
                ("s", json!([0])),
                ("t_cap", json!(4)),
            ]),
            seed: 0,
            output: None,
        }),
        other => Err(Error::BadArgument(format!("unknown recipe '{other}'"))),
    }
}
