//! Fully resolved run configurations, serialized next to every output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use isam_mbir::evaluation::{BaselineKind, GoldenOptions, PhantomSpec, StudyConfig};
use isam_mbir::mask::MaskScheme;
use isam_mbir::regularize::RegKind;
use serde::{Deserialize, Serialize};

/// Reconstruction method: the iterative solver or one of the direct baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mbir,
    Baseline(BaselineKind),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mbir => f.write_str("mbir"),
            Method::Baseline(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for Method {
    type Err = isam_mbir::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("mbir") {
            Ok(Method::Mbir)
        } else {
            s.parse().map(Method::Baseline)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub output: PathBuf,
    pub truth: PathBuf,
    pub raster: PathBuf,
    pub phantom: PhantomSpec,
    pub dynamic_range_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub raster: PathBuf,
    pub bscan: usize,
    pub method: Method,
    pub reg: RegKind,
    pub lambda: f64,
    pub iters: usize,
    /// Sampling applied on top of the stored mask; `None` keeps the stored mask.
    pub mask: Option<MaskScheme>,
    pub mask_seed: u64,
    /// Overrides the dispersion coefficients stored with the input.
    pub dispersion: Option<(f64, f64)>,
    pub background_subtract: bool,
    pub tv_inner_iters: usize,
    pub dtcwt_levels: usize,
    pub dynamic_range_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub input: PathBuf,
    pub reference: PathBuf,
    pub output: PathBuf,
    pub bscan: usize,
    pub reg: RegKind,
    pub iters: usize,
    pub mask: Option<MaskScheme>,
    pub mask_seed: u64,
    pub tv_inner_iters: usize,
    pub dtcwt_levels: usize,
    pub search: GoldenOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub output: PathBuf,
    pub study: StudyConfig,
}

/// A run that writes artifacts, as recorded in its sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Simulate(SimulateConfig),
    Reconstruct(ReconstructConfig),
    SweepLambda(SweepConfig),
    Compare(CompareConfig),
}

impl RunConfig {
    /// The main artifact the sidecar sits next to.
    pub fn primary_output(&self) -> &Path {
        match self {
            RunConfig::Simulate(c) => &c.output,
            RunConfig::Reconstruct(c) => &c.output,
            RunConfig::SweepLambda(c) => &c.output,
            RunConfig::Compare(c) => &c.output,
        }
    }

    pub fn sidecar_path(&self) -> PathBuf {
        sidecar_for(self.primary_output())
    }

    pub fn write_sidecar(&self) -> Result<PathBuf> {
        let path = self.sidecar_path();
        let mut text = serde_json::to_string_pretty(self).context("serializing run config")?;
        text.push('\n');
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        let back = Self::load(&path)?;
        anyhow::ensure!(
            &back == self,
            "config sidecar {} does not reload to the same run",
            path.display()
        );
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing run config {}", path.display()))
    }
}

/// `dir/name.ext` becomes `dir/name.config.json`.
pub fn sidecar_for(output: &Path) -> PathBuf {
    output.with_extension("config.json")
}

/// `dir/name.ext` becomes `dir/name<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_paths() {
        let p = Path::new("out/recon.octi");
        assert_eq!(sidecar_for(p), PathBuf::from("out/recon.config.json"));
        assert_eq!(sibling(p, ".pgm"), PathBuf::from("out/recon.pgm"));
        assert_eq!(sibling(Path::new("a.octs"), "_truth.octi"), PathBuf::from("a_truth.octi"));
    }

    #[test]
    fn method_names() {
        assert_eq!("mbir".parse::<Method>().unwrap(), Method::Mbir);
        assert_eq!(
            "interp_isam".parse::<Method>().unwrap(),
            Method::Baseline(BaselineKind::InterpIsam)
        );
        assert!("magic".parse::<Method>().is_err());
        assert_eq!(Method::Baseline(BaselineKind::Ifft).to_string(), "ifft");
    }

    #[test]
    fn run_config_json_roundtrip() {
        let cfg = RunConfig::Compare(CompareConfig {
            output: "table.tsv".into(),
            study: StudyConfig::standard(PhantomSpec::with_size(32)),
        });
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"command\":\"compare\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
