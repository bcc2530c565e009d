//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::shape::Shape;
use crate::solver::SolverParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ComposeDemo,
    Segment,
    Ct,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ComposeDemo => "compose-demo",
            Self::Segment => "segment",
            Self::Ct => "ct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "unit_span")]
    pub x: [f64; 2],
    #[serde(default = "unit_span")]
    pub y: [f64; 2],
}

fn unit_span() -> [f64; 2] {
    [-1.0, 1.0]
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid<f64>> {
        Grid::new(self.nx, self.ny, self.x[0], self.x[1], self.y[0], self.y[1])
    }
}

/// Named shape record, e.g. `{ label = "A", record = "polygon 3 ..." }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledShape {
    pub label: String,
    pub record: String,
}

impl LabeledShape {
    pub fn shape(&self) -> Result<Shape<f64>> {
        parse_record(&self.record)
    }
}

/// Regular placement lattice: `nx * ny` points spanning the given extents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Lattice {
    /// Row-major points, `y` outermost.
    pub fn points(&self) -> Result<Vec<[f64; 2]>> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config("placement lattice must have at least one point per axis".into()));
        }
        let axis = |n: usize, [lo, hi]: [f64; 2]| -> Vec<f64> {
            if n == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
        };
        let xs = axis(self.nx, self.x);
        let ys = axis(self.ny, self.y);
        Ok(ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionarySpec {
    #[serde(default = "default_lift")]
    pub lift: f64,
    #[serde(default = "default_cap")]
    pub cap: usize,
    /// Prebuilt dictionary file; excludes every other source.
    pub file: Option<PathBuf>,
    /// Shapes used verbatim, before the generated product.
    #[serde(default)]
    pub explicit: Vec<LabeledShape>,
    /// Built-in unit prototypes: circle, square, triangle, ellipse.
    #[serde(default)]
    pub shapes: Vec<String>,
    /// Additional unit prototypes given as records.
    #[serde(default)]
    pub prototypes: Vec<LabeledShape>,
    pub lattice: Option<Lattice>,
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    #[serde(default = "unit_sizes")]
    pub sizes: Vec<f64>,
    /// Degrees.
    #[serde(default = "zero_rotation")]
    pub rotations: Vec<f64>,
}

fn default_lift() -> f64 {
    crate::knoll::DEFAULT_LIFT
}
fn default_cap() -> usize {
    5000
}
fn unit_sizes() -> Vec<f64> {
    vec![1.0]
}
fn zero_rotation() -> Vec<f64> {
    vec![0.0]
}

/// Solver overrides; anything absent keeps the library default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub sigma: Option<f64>,
    /// Sigma as a multiple of the data noise level, where the experiment knows it.
    pub discrepancy: Option<f64>,
    pub w: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub tau_mx: Option<f64>,
    pub tau0: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_spg: Option<usize>,
    pub spg_tol: Option<f64>,
    pub truncate_inner: Option<bool>,
    pub probe_adjoint: Option<bool>,
}

impl SolverSpec {
    pub fn params(&self, n: usize, lift: f64) -> SolverParams<f64> {
        let mut p = SolverParams::new(n, lift);
        if let Some(v) = self.tau_mx {
            p.tau_mx = v;
            p.eps1 = SolverParams::default_eps1(v);
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = v; } )* };
        }
        set!(sigma, w, gamma, beta, eps1, eps2, tau0, max_outer, max_spg, spg_tol, truncate_inner, probe_adjoint);
        p
    }
}

/// Seeded `+-1` initialization of a random subset of coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default = "default_init_fraction")]
    pub fraction: f64,
    /// Explicit `(index, value)` pairs; replaces the random draw when present.
    #[serde(default)]
    pub values: Vec<(usize, f64)>,
    /// Value given to every coefficient not set otherwise.
    #[serde(default)]
    pub fill: f64,
}

fn default_init_fraction() -> f64 {
    0.1
}

impl Default for InitSpec {
    fn default() -> Self {
        Self { fraction: default_init_fraction(), values: Vec::new(), fill: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeSpec {
    /// Target = union of `include` minus union of `exclude`.
    pub include: Vec<String>,
    #[serde(default)]
    pub exclude: Vec<String>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub init: InitSpec,
}

fn default_eps() -> f64 {
    crate::knoll::DEFAULT_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    /// PGM input; otherwise the image is synthesized from `truth`.
    pub image: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    #[serde(default)]
    pub truth: Vec<String>,
    #[serde(default = "one")]
    pub foreground: f64,
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub missing: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "one_usize")]
    pub stats_update_period: usize,
    #[serde(default)]
    pub init: InitSpec,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CtModel {
    Single,
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomLayer {
    pub mu: f64,
    pub record: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtSpec {
    pub angles: usize,
    pub rays: usize,
    /// Detector half width; defaults to the grid's half diagonal.
    pub half_width: Option<f64>,
    #[serde(default = "blank_scan")]
    pub lambda_t: f64,
    #[serde(default = "yes")]
    pub poisson: bool,
    #[serde(default)]
    pub gauss_pct: f64,
    pub phantom_file: Option<PathBuf>,
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub phantom: Vec<PhantomLayer>,
    /// Counts CSV used by `ct-recon` instead of simulating.
    pub counts: Option<PathBuf>,
    #[serde(default = "single")]
    pub model: CtModel,
    #[serde(default = "mu_bone")]
    pub u_in: f64,
    #[serde(default = "mu_soft")]
    pub u_ex: f64,
    #[serde(default = "mu_air")]
    pub mu_a: f64,
    #[serde(default = "mu_soft")]
    pub mu_s: f64,
    #[serde(default = "mu_bone")]
    pub mu_b: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub alternating: bool,
    #[serde(default)]
    pub init: InitSpec,
}

fn blank_scan() -> f64 {
    crate::ct::BLANK_SCAN
}
fn yes() -> bool {
    true
}
fn single() -> CtModel {
    CtModel::Single
}
fn mu_air() -> f64 {
    crate::ct::MU_AIR
}
fn mu_soft() -> f64 {
    crate::ct::MU_SOFT
}
fn mu_bone() -> f64 {
    crate::ct::MU_BONE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub grid: GridSpec,
    pub dictionary: DictionarySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub compose: Option<ComposeSpec>,
    pub segment: Option<SegmentSpec>,
    pub ct: Option<CtSpec>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

pub(crate) fn parse_record(record: &str) -> Result<Shape<f64>> {
    record.parse().map_err(|e: Error| Error::Config(format!("shape {record:?}: {e}")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn check(&self) -> Result<()> {
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("missing [{section}] section")))
            }
        };
        match self.kind {
            ExperimentKind::ComposeDemo => need(self.compose.is_some(), "compose")?,
            ExperimentKind::Segment => need(self.segment.is_some(), "segment")?,
            ExperimentKind::Ct => need(self.ct.is_some(), "ct")?,
        }
        self.grid.build()?;
        if let Some(seg) = &self.segment {
            if !(0.0..=1.0).contains(&seg.missing) {
                return Err(Error::Config(format!("missing fraction must lie in [0, 1], got {}", seg.missing)));
            }
            if seg.image.is_none() && seg.truth.is_empty() {
                return Err(Error::Config("segment needs an image file or truth shapes".into()));
            }
        }
        if let Some(ct) = &self.ct {
            if ct.angles == 0 {
                return Err(Error::Config("ct needs at least one projection angle".into()));
            }
            if ct.rays == 0 {
                return Err(Error::Config("ct needs at least one ray per angle".into()));
            }
        }
        Ok(())
    }

    fn check_files(&self) -> Result<()> {
        let mut files: Vec<&PathBuf> = self.dictionary.file.iter().collect();
        if let Some(seg) = &self.segment {
            files.extend(seg.image.iter().chain(seg.mask.iter()));
        }
        if let Some(ct) = &self.ct {
            files.extend(ct.phantom_file.iter().chain(ct.counts.iter()));
        }
        for f in files {
            let p = self.resolve(f);
            if !p.exists() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}
