//! TOML run configuration shared by the command-line subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cv::{make_folds_contiguous, make_folds_future, make_folds_iid, make_folds_loo, Method};
use crate::data::{FoldPlan, Scheme, StructuredDataset, Target};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::models::spatial::grid_edges;
use crate::models::AnyModel;
use crate::optimize::FitOptions;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: AnyModel,
    pub data: DataSpec,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default)]
    pub cv: CvSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub bench: BenchSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Either a file or a generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub path: Option<PathBuf>,
    pub generate: Option<GenerateSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    /// True parameters in unconstrained coordinates.
    pub theta: Vec<f64>,
    /// Structure lengths for sequence families; one entry for the event model.
    #[serde(default)]
    pub lengths: Vec<usize>,
    /// `[rows, cols]` of the spatial model's grid.
    pub grid: Option<[usize; 2]>,
    /// One-based day of week of the first position (event model).
    #[serde(default = "one")]
    pub start_day: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSpec {
    pub tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    /// Starting point; the model's default when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for FitSpec {
    fn default() -> Self {
        let o = FitOptions::default();
        FitSpec {
            tol: o.tol,
            max_iters: o.max_iters,
            memory: o.memory,
            start: None,
        }
    }
}

impl FitSpec {
    pub fn options(&self) -> FitOptions {
        FitOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            memory: self.memory,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Within,
    Structures,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FoldSpec {
    Iid { percent: f64, count: usize },
    Contiguous { percent: f64, count: usize },
    /// Leave out positions `start..=T` (one-based).
    Future { start: usize },
    /// One fold per index.
    Loo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSpec {
    pub target: TargetKind,
    /// One-based structure for within-structure folds.
    pub structure: usize,
    pub scheme: String,
    pub folds: FoldSpec,
    pub methods: Vec<Method>,
    pub seed: u64,
}

impl Default for CvSpec {
    fn default() -> Self {
        CvSpec {
            target: TargetKind::Within,
            structure: 1,
            scheme: "A".into(),
            folds: FoldSpec::Loo,
            methods: vec![Method::Exact, Method::Ij],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub stride: usize,
    /// Exact CV report written by the `cv` command.
    pub exact_report: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            stride: 1,
            exact_report: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSpec {
    /// Values substituted for the generator's length: the sequence length
    /// for within-structure runs, the number of structures otherwise.
    pub sizes: Vec<usize>,
    /// Folds timed for the approximations.
    pub folds: usize,
    /// Folds actually refit; the exact time is scaled up to `folds`.
    pub exact_folds: usize,
    pub methods: Vec<Method>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            sizes: vec![500, 1000],
            folds: 100,
            exact_folds: 10,
            methods: vec![Method::Exact, Method::Ij, Method::Ns],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::arg(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config; relative data and report paths resolve against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::arg(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(p) = &mut cfg.data.path {
            *p = base.join(&*p);
            if !p.exists() {
                return Err(Error::arg(format!("data file {} does not exist", p.display())));
            }
        }
        if let Some(p) = &mut cfg.sweep.exact_report {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        match (&self.data.path, &self.data.generate) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(Error::arg("give exactly one of data.path and data.generate")),
        }
        self.scheme()?;
        if self.cv.structure == 0 {
            return Err(Error::arg("cv.structure is one-based"));
        }
        if let Some(g) = &self.data.generate {
            if g.theta.len() != self.model.num_params() {
                return Err(Error::arg(format!("generator theta has {} entries, the model needs {}", g.theta.len(), self.model.num_params())));
            }
        }
        Ok(())
    }

    pub fn scheme(&self) -> Result<Scheme> {
        self.cv.scheme.parse()
    }

    pub fn target(&self) -> Target {
        match self.cv.target {
            TargetKind::Within => Target::Within {
                structure: self.cv.structure - 1,
            },
            TargetKind::Structures => Target::Structures,
        }
    }

    /// Apply a `--seed` override to the generator and the fold draws.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(g) = &mut self.data.generate {
            g.seed = seed;
        }
        self.cv.seed = seed;
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn dataset(&self) -> Result<StructuredDataset> {
        match (&self.data.path, &self.data.generate) {
            (Some(p), _) => crate::io::load_dataset(p),
            (None, Some(g)) => generate(&self.model, g, None),
            _ => unreachable!("validated"),
        }
    }

    /// Generated data with the length replaced by `size`.
    pub fn dataset_of_size(&self, size: usize) -> Result<StructuredDataset> {
        let g = self.data.generate.as_ref().ok_or_else(|| Error::arg("benchmarks need a data generator"))?;
        let resized = match self.cv.target {
            TargetKind::Within => Some(vec![size]),
            TargetKind::Structures => Some(vec![g.lengths.first().copied().unwrap_or(size); size]),
        };
        generate(&self.model, g, resized)
    }

    pub fn plan(&self, data: &StructuredDataset) -> Result<FoldPlan> {
        let target = self.target();
        let len = FoldPlan::new(vec![], self.scheme()?, target)?.weight_len(data)?;
        let folds = match &self.cv.folds {
            FoldSpec::Iid { percent, count } => make_folds_iid(len, *percent, *count, self.cv.seed)?,
            FoldSpec::Contiguous { percent, count } => make_folds_contiguous(len, *percent, *count, self.cv.seed)?,
            FoldSpec::Future { start } => make_folds_future(len, start.checked_sub(1).ok_or_else(|| Error::arg("future start is one-based"))?)?,
            FoldSpec::Loo => make_folds_loo(len),
        };
        FoldPlan::new(folds, self.scheme()?, target)
    }
}

fn generate(model: &AnyModel, g: &GenerateSpec, lengths: Option<Vec<usize>>) -> Result<StructuredDataset> {
    let lengths = lengths.unwrap_or_else(|| g.lengths.clone());
    match model {
        AnyModel::Hmm(m) => m.simulate(&g.theta, &lengths, g.seed),
        AnyModel::Crf(m) => m.simulate(&g.theta, &lengths, g.seed),
        AnyModel::Event(m) => {
            let [len] = lengths[..] else {
                return Err(Error::arg("the event model generates exactly one sequence"));
            };
            let day = g.start_day.checked_sub(1).filter(|&d| d < 7).ok_or_else(|| Error::arg("start_day must be in 1..=7"))?;
            m.simulate(&g.theta, len, day, g.seed)
        }
        AnyModel::Spatial(m) => {
            let [rows, cols] = g.grid.ok_or_else(|| Error::arg("the spatial generator needs grid = [rows, cols]"))?;
            m.simulate(&g.theta, rows * cols, &grid_edges(rows, cols), g.seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HMM: &str = r#"
[model]
family = "hmm"
states = 2
dim = 1
emission = { kind = "gaussian" }
dirichlet = 2.0

[data.generate]
theta = [0.0, 1.5, -1.5, -1.0, 1.0, 0.0, 0.0]
lengths = [60]
seed = 3

[cv]
scheme = "B"
folds = { kind = "iid", percent = 10, count = 4 }
methods = ["exact", "ij", "ns"]
"#;

    #[test]
    fn parses_and_builds_plan() {
        let cfg = RunConfig::parse(HMM).unwrap();
        assert_eq!(cfg.scheme().unwrap(), Scheme::B);
        let data = cfg.dataset().unwrap();
        let plan = cfg.plan(&data).unwrap();
        assert_eq!(plan.len(), 4);
        assert!(plan.folds.iter().all(|f| f.len() == 6));
        assert_eq!(cfg.hash(), RunConfig::parse(HMM).unwrap().hash());
        let mut other = cfg.clone();
        other.override_seed(9);
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::parse(&HMM.replace("\"B\"", "\"C\"")).is_err());
        assert!(RunConfig::parse(&HMM.replace("seed = 3", "seed = 3\nbogus = 1")).is_err());
        assert!(RunConfig::parse(&HMM.replace("[0.0, 1.5,", "[1.5,")).is_err());
        assert!(RunConfig::parse(&HMM.replace("[data.generate]", "[data]\npath = \"x.csv\"\n[data.generate]")).is_err());
    }

    #[test]
    fn every_family_generates() {
        let cases = [
            r#"[model]
family = "event"
[model.prior]
[data.generate]
theta = [3.0, 0, 0, 0, 0, 0, 0, 0.0, 0.0, 2.0, -1.0]
lengths = [600]
seed = 1"#,
            r#"[model]
family = "spatial"
beta = 0.5
[data.generate]
theta = [0.5, 2.0]
grid = [3, 4]
seed = 1"#,
            r#"[model]
family = "crf"
states = 2
features = 2
[data.generate]
theta = [1, -1, 0, 0.5, 0, 0, 0, 0, 0, 0]
lengths = [5, 6]
seed = 1
[cv]
target = "structures""#,
        ];
        for text in cases {
            let cfg = RunConfig::parse(text).unwrap();
            let data = cfg.dataset().unwrap();
            cfg.model.validate_data(&data).unwrap();
            cfg.plan(&data).unwrap();
        }
    }
}
