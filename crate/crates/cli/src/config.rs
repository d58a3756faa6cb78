//! Run configuration, read from TOML.
//!
//! ```toml
//! format = 1
//!
//! [data]
//! manifests = ["train.txt"]        # paths relative to this file
//! elements = ["Fe", "H"]           # optional; fixes column order
//!
//! [descriptors]
//! grid = "default"                 # or "explicit" with [[descriptors.radial]] / [[descriptors.angular]]
//! cutoff = 6.0
//! inner_cutoff = 5.4               # optional, default 0.9 * cutoff
//!
//! [fingerprint]
//! bins = 50
//! comparison = "occupancy"         # or "count-equality"
//! reference = "auto"               # or "id:<structure id>" or "path:<file.xyz>"
//!
//! [screening]
//! mode = "exact"                   # or "hamming" (uses radius) or "novelty"
//! radius = 0
//! threshold = 0.1
//! aggregate = "mean"               # or "min"
//!
//! [embedding]
//! method = "tsne"                  # or "pca"
//! perplexity = 30.0
//! iterations = 1000
//! learning_rate = 200.0
//! compare_baseline = false
//!
//! [ood]
//! top_n = 20
//!
//! [plot]
//! width = 800
//! height = 600
//!
//! [output]
//! dir = "out"
//! seed = 0
//! ```
//!
//! Every section and key is optional except `format`; unknown keys are errors.

use std::path::{Path, PathBuf};

use dvlae_core::descriptors::{
    AngularKind, AngularParams, CutoffParams, Descriptor, Lambda, RadialParams, SymmetryFunctionSet,
    DEFAULT_CUTOFF, DEFAULT_INNER_FRACTION,
};
use dvlae_core::fingerprint::{Comparison, DEFAULT_BINS};
use dvlae_core::screening::Aggregate;
use serde::Deserialize;

use crate::error::{CliError, CliResult, PathContext};

pub const CONFIG_FORMAT: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format: u32,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub descriptors: DescriptorConfig,
    #[serde(default)]
    pub fingerprint: FingerprintConfig,
    #[serde(default)]
    pub screening: ScreeningConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub ood: OodConfig,
    #[serde(default)]
    pub plot: PlotConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory holding the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub manifests: Vec<PathBuf>,
    pub elements: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    #[default]
    Default,
    Explicit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorConfig {
    #[serde(default)]
    pub grid: GridKind,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    pub inner_cutoff: Option<f64>,
    #[serde(default)]
    pub radial: Vec<RadialEntry>,
    #[serde(default)]
    pub angular: Vec<AngularEntry>,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            grid: GridKind::Default,
            cutoff: DEFAULT_CUTOFF,
            inner_cutoff: None,
            radial: Vec::new(),
            angular: Vec::new(),
        }
    }
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

/// One radial function of an explicit grid. Cutoffs default to the section's.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialEntry {
    pub center: String,
    pub neighbor: String,
    pub eta: f64,
    #[serde(default)]
    pub r_s: f64,
    pub cutoff: Option<f64>,
    pub inner_cutoff: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum KindName {
    G4,
    G5,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularEntry {
    pub center: String,
    pub kind: KindName,
    pub pair: [String; 2],
    pub eta: f64,
    pub zeta: f64,
    pub lambda: f64,
    pub cutoff: Option<f64>,
    pub inner_cutoff: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprintConfig {
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_comparison")]
    pub comparison: String,
    #[serde(default = "default_reference")]
    pub reference: String,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            comparison: default_comparison(),
            reference: default_reference(),
        }
    }
}

fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_comparison() -> String {
    Comparison::Occupancy.to_string()
}
fn default_reference() -> String {
    "auto".into()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScreeningMode {
    #[default]
    Exact,
    Hamming,
    Novelty,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreeningConfig {
    #[serde(default)]
    pub mode: ScreeningMode,
    #[serde(default)]
    pub radius: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_aggregate")]
    pub aggregate: String,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self {
            mode: ScreeningMode::Exact,
            radius: 0,
            threshold: default_threshold(),
            aggregate: default_aggregate(),
        }
    }
}

fn default_threshold() -> f64 {
    0.1
}
fn default_aggregate() -> String {
    Aggregate::default().to_string()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Tsne,
    Pca,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_perplexity")]
    pub perplexity: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub compare_baseline: bool,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            method: Method::Tsne,
            perplexity: default_perplexity(),
            iterations: default_iterations(),
            learning_rate: default_learning_rate(),
            compare_baseline: false,
        }
    }
}

fn default_perplexity() -> f64 {
    30.0
}
fn default_iterations() -> usize {
    1000
}
fn default_learning_rate() -> f64 {
    200.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OodConfig {
    #[serde(default = "default_top_n")]
    pub top_n: usize,
}

impl Default for OodConfig {
    fn default() -> Self {
        Self { top_n: default_top_n() }
    }
}

fn default_top_n() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotConfig {
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            width: default_width(),
            height: default_height(),
        }
    }
}

fn default_width() -> u32 {
    800
}
fn default_height() -> u32 {
    600
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            seed: 0,
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// How the reference structure is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReferenceSelector {
    Auto,
    Id(String),
    Path(PathBuf),
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::user(format!("invalid config: {}", e.message())))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).with_path(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| e.context(path.display()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn manifests(&self) -> Vec<PathBuf> {
        self.data.manifests.iter().map(|m| self.resolve(m)).collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    fn validate(&self) -> CliResult<()> {
        if self.format != CONFIG_FORMAT {
            return Err(CliError::user(format!(
                "unsupported config format {} (this version reads format {CONFIG_FORMAT})",
                self.format
            )));
        }
        for m in self.manifests() {
            if !m.is_file() {
                return Err(CliError::user(format!("manifest {} does not exist", m.display())));
            }
        }
        if self.fingerprint.bins == 0 {
            return Err(CliError::user("fingerprint.bins must be at least 1"));
        }
        self.comparison()?;
        self.aggregate()?;
        if let ReferenceSelector::Path(p) = self.reference()? {
            if !p.is_file() {
                return Err(CliError::user(format!("reference file {} does not exist", p.display())));
            }
        }
        if !(self.screening.threshold.is_finite() && self.screening.threshold >= 0.0) {
            return Err(CliError::user("screening.threshold must be a finite number >= 0"));
        }
        if self.descriptors.grid == GridKind::Default && !(self.descriptors.radial.is_empty() && self.descriptors.angular.is_empty()) {
            return Err(CliError::user("descriptor entries given but descriptors.grid is \"default\"; set grid = \"explicit\""));
        }
        if self.plot.width < 100 || self.plot.height < 100 {
            return Err(CliError::user("plot width and height must be at least 100 pixels"));
        }
        Ok(())
    }

    pub fn comparison(&self) -> CliResult<Comparison> {
        Ok(self.fingerprint.comparison.parse()?)
    }

    pub fn aggregate(&self) -> CliResult<Aggregate> {
        Ok(self.screening.aggregate.parse()?)
    }

    pub fn reference(&self) -> CliResult<ReferenceSelector> {
        let r = self.fingerprint.reference.as_str();
        if r == "auto" {
            Ok(ReferenceSelector::Auto)
        } else if let Some(id) = r.strip_prefix("id:") {
            Ok(ReferenceSelector::Id(id.to_owned()))
        } else if let Some(p) = r.strip_prefix("path:") {
            Ok(ReferenceSelector::Path(self.resolve(Path::new(p))))
        } else {
            Err(CliError::user(format!(
                "fingerprint.reference must be \"auto\", \"id:<id>\" or \"path:<file>\", got {r:?}"
            )))
        }
    }

    fn inner_cutoff(&self, outer: f64, inner: Option<f64>) -> f64 {
        inner.unwrap_or(outer * DEFAULT_INNER_FRACTION)
    }

    /// The descriptor set for `elements` (used when the grid is the default one;
    /// an explicit grid lists its own center elements).
    pub fn symmetry_functions(&self, elements: &[String]) -> CliResult<SymmetryFunctionSet> {
        let d = &self.descriptors;
        match d.grid {
            GridKind::Default => {
                let inner = self.inner_cutoff(d.cutoff, d.inner_cutoff);
                Ok(SymmetryFunctionSet::default_grid_with_cutoff(elements, d.cutoff, inner)?)
            }
            GridKind::Explicit => {
                let mut blocks: Vec<(String, Vec<Descriptor>)> = elements.iter().map(|e| (e.clone(), Vec::new())).collect();
                let block_of = |center: &str| -> CliResult<usize> {
                    blocks
                        .iter()
                        .position(|(e, _)| e == center)
                        .ok_or_else(|| CliError::user(format!("descriptor center {center} is not a dataset element")))
                };
                let mut placed = Vec::new();
                for r in &d.radial {
                    let outer = r.cutoff.unwrap_or(d.cutoff);
                    let cutoff = CutoffParams::new(self.inner_cutoff(outer, r.inner_cutoff.or(d.inner_cutoff.filter(|_| r.cutoff.is_none()))), outer)?;
                    let params = RadialParams::new(r.eta, r.r_s, r.neighbor.clone())?;
                    placed.push((block_of(&r.center)?, Descriptor::Radial { params, cutoff }));
                }
                for a in &d.angular {
                    let outer = a.cutoff.unwrap_or(d.cutoff);
                    let cutoff = CutoffParams::new(self.inner_cutoff(outer, a.inner_cutoff.or(d.inner_cutoff.filter(|_| a.cutoff.is_none()))), outer)?;
                    let kind = match a.kind {
                        KindName::G4 => AngularKind::G4,
                        KindName::G5 => AngularKind::G5,
                    };
                    let params = AngularParams::new(kind, a.eta, a.zeta, Lambda::from_value(a.lambda)?, (a.pair[0].clone(), a.pair[1].clone()))?;
                    placed.push((block_of(&a.center)?, Descriptor::Angular { params, cutoff }));
                }
                for (b, desc) in placed {
                    blocks[b].1.push(desc);
                }
                if let Some((e, _)) = blocks.iter().find(|(_, list)| list.is_empty()) {
                    return Err(CliError::user(format!("explicit descriptor grid has no functions for element {e}")));
                }
                Ok(SymmetryFunctionSet::new(blocks)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse("format = 1\n", Path::new("/tmp")).unwrap();
        assert_eq!(cfg.fingerprint.bins, 50);
        assert_eq!(cfg.reference().unwrap(), ReferenceSelector::Auto);
        assert_eq!(cfg.embedding.perplexity, 30.0);
        assert_eq!(cfg.out_dir(), Path::new("/tmp/out"));
        let set = cfg.symmetry_functions(&["Fe".into(), "H".into()]).unwrap();
        assert_eq!(set.width(), 116);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "format = 2",
            "format = 1\n[fingerprint]\nbins = 0",
            "format = 1\n[fingerprint]\ncomparison = \"xor\"",
            "format = 1\n[fingerprint]\nreference = \"first\"",
            "format = 1\n[screening]\nthreshold = -1.0",
            "format = 1\n[data]\nmanifests = [\"nope.txt\"]",
            "format = 1\n[typo]\nx = 1",
        ] {
            assert!(RunConfig::parse(text, Path::new("/nonexistent")).is_err(), "{text}");
        }
    }

    #[test]
    fn explicit_grid() {
        let text = r#"
format = 1
[descriptors]
grid = "explicit"
cutoff = 5.0
[[descriptors.radial]]
center = "H"
neighbor = "Fe"
eta = 0.5
[[descriptors.angular]]
center = "H"
kind = "G5"
pair = ["H", "Fe"]
eta = 0.0
zeta = 1.0
lambda = -1
cutoff = 4.0
"#;
        let cfg = RunConfig::parse(text, Path::new("/tmp")).unwrap();
        let set = cfg.symmetry_functions(&["H".into()]).unwrap();
        let labels: Vec<String> = set.columns().map(|(_, _, l)| l).collect();
        assert_eq!(labels, ["G2 n=Fe eta=0.5 rs=0 rci=4.5 rc=5", "G5 pair=Fe-H eta=0 zeta=1 lambda=-1 rci=3.6 rc=4"]);
        // an element without functions is an error
        assert!(cfg.symmetry_functions(&["H".into(), "Fe".into()]).is_err());
    }
}
