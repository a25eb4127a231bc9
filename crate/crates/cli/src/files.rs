//! On-disk documents written and read by the commands. Every document
//! carries the run configuration and content hashes of its inputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ccplan_core::archmodel::{parse_architecture, ArchitectureSpec};
use ccplan_core::complexity::DatasetProfile;
use ccplan_core::degradation::DegradationModel;
use ccplan_core::planner::CompressionPlan;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Square side images are resized to; `None` keeps native size.
    pub working_resolution: Option<usize>,
    pub num_scales: usize,
    pub omega_grid_step: f64,
    pub bytes_per_weight: u64,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    /// Path as given, or relative to the dataset directory for images.
    pub path: String,
    pub sha256: String,
}

impl InputHash {
    pub fn of_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            path: path.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub inputs: Vec<InputHash>,
}

impl Provenance {
    pub fn new(config: Option<RunConfig>, inputs: Vec<InputHash>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub profile: DatasetProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDocument {
    pub model: DegradationModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanDocument {
    pub plan: CompressionPlan,
    pub provenance: Provenance,
}

/// Bytes of a file plus its hash record.
pub fn read_hashed(path: &Path) -> Result<(Vec<u8>, InputHash)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read `{}`", path.display()))?;
    let hash = InputHash::of_bytes(path.display().to_string(), &bytes);
    Ok((bytes, hash))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, InputHash)> {
    let (bytes, hash) = read_hashed(path)?;
    let value =
        serde_json::from_slice(&bytes).with_context(|| format!("`{}` is not a valid document", path.display()))?;
    Ok((value, hash))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write `{}`", path.display()))
}

/// Architecture from a file, or the built-in preset when `source` is `unet`.
pub fn load_architecture(source: &str) -> Result<(ArchitectureSpec, InputHash)> {
    if source == "unet" {
        let spec = ArchitectureSpec::unet();
        let hash = InputHash::of_bytes("preset:unet", spec.to_text().as_bytes());
        return Ok((spec, hash));
    }
    let path = Path::new(source);
    let (bytes, hash) = read_hashed(path)?;
    let text = String::from_utf8(bytes).with_context(|| format!("`{source}` is not UTF-8"))?;
    let spec = parse_architecture(&text).with_context(|| format!("in `{source}`"))?;
    Ok((spec, hash))
}

/// Format with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.1518), "0.151800");
        assert_eq!(sig6(7.4917), "7.49170");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
    }
}
