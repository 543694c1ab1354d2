use std::path::{Path, PathBuf};

use graph_mbo::grid::{AuditGrid, Lattice};
use graph_mbo::kernel_graph::KernelProfile;
use graph_mbo::lab::{DensityModel, PartitionRule, TestFunction, DEFAULT_J_RANGE};
use graph_mbo::mbo::validate_sigma;
use graph_mbo::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Monotonicity,
    Degrees,
    Dirichlet,
    HeatConsistency,
    OneStepConsistency,
    GridMonotonicity,
    SslDemo,
    MboRun,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Monotonicity,
        Experiment::Degrees,
        Experiment::Dirichlet,
        Experiment::HeatConsistency,
        Experiment::OneStepConsistency,
        Experiment::GridMonotonicity,
        Experiment::SslDemo,
        Experiment::MboRun,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Monotonicity => "monotonicity",
            Experiment::Degrees => "degrees",
            Experiment::Dirichlet => "dirichlet",
            Experiment::HeatConsistency => "heat-consistency",
            Experiment::OneStepConsistency => "one-step-consistency",
            Experiment::GridMonotonicity => "grid-monotonicity",
            Experiment::SslDemo => "ssl-demo",
            Experiment::MboRun => "mbo-run",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name).ok_or_else(|| Error::UnknownExperiment(name.into()))
    }

    /// Default n grid.
    fn default_n(self) -> Vec<usize> {
        match self {
            Experiment::Monotonicity | Experiment::MboRun => vec![1000],
            Experiment::Degrees => vec![500, 2000, 8000],
            Experiment::Dirichlet => vec![1000, 2000, 4000, 8000],
            Experiment::HeatConsistency => vec![500, 1000, 2000],
            Experiment::OneStepConsistency => vec![1000, 4000],
            Experiment::SslDemo => vec![2000],
            Experiment::GridMonotonicity => vec![],
        }
    }

    /// Optional fields the experiment reads.
    fn accepts(self, field: &str) -> bool {
        let common = ["density", "kernel", "n"];
        let own: &[&str] = match self {
            Experiment::Monotonicity => &["j_range"],
            Experiment::Degrees => &[],
            Experiment::Dirichlet => &["test_function"],
            Experiment::HeatConsistency => &["test_function", "t"],
            Experiment::OneStepConsistency => &["partition", "h_factor"],
            Experiment::GridMonotonicity => return field == "grid",
            Experiment::SslDemo => &["partition", "h", "gamma", "label_fraction", "steps", "tolerance"],
            Experiment::MboRun => &["h", "sigma", "classes", "steps"],
        };
        common.contains(&field) || own.contains(&field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridFieldKind {
    HalfPlane,
    /// Seeded random smooth interface.
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_grid_k")]
    pub k: usize,
    #[serde(default = "default_grid_m")]
    pub m: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_field")]
    pub field: GridFieldKind,
    #[serde(default)]
    pub h: Option<Vec<f64>>,
    #[serde(default)]
    pub h0: Option<Vec<f64>>,
    #[serde(default)]
    pub n_audit: Option<Vec<usize>>,
}

fn default_grid_k() -> usize {
    2
}
fn default_grid_m() -> usize {
    256
}
fn default_half_width() -> f64 {
    2.0
}
fn default_field() -> GridFieldKind {
    GridFieldKind::HalfPlane
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            k: default_grid_k(),
            m: default_grid_m(),
            half_width: default_half_width(),
            field: default_field(),
            h: None,
            h0: None,
            n_audit: None,
        }
    }
}

impl GridConfig {
    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.k, self.m, self.half_width).map_err(as_config)
    }

    pub fn audit_grid(&self) -> AuditGrid {
        let d = AuditGrid::default();
        AuditGrid {
            h: self.h.clone().unwrap_or(d.h),
            h0: self.h0.clone().unwrap_or(d.h0),
            n: self.n_audit.clone().unwrap_or(d.n),
        }
    }
}

/// A single JSON experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Explicit seeds; there is no entropy default.
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub density: Option<DensityModel>,
    #[serde(default)]
    pub kernel: Option<KernelProfile>,
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub j_range: Option<(i32, i32)>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub h_factor: Option<f64>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub test_function: Option<TestFunction>,
    #[serde(default)]
    pub partition: Option<PartitionRule>,
    #[serde(default)]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub classes: Option<usize>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub label_fraction: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn cfg<T>(m: String) -> Result<T> {
    Err(Error::Config(m))
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) | Error::UnknownExperiment(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Scalar flag overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seeds = vec![s];
        }
        if let Some(n) = o.n {
            self.n = Some(vec![n]);
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
    }

    pub fn kind(&self) -> Result<Experiment> {
        Experiment::parse(&self.experiment)
    }

    pub fn density(&self) -> DensityModel {
        self.density.clone().unwrap_or(DensityModel::UniformSphere)
    }

    pub fn kernel(&self) -> KernelProfile {
        self.kernel.unwrap_or_else(|| KernelProfile::gaussian(self.density().k()))
    }

    pub fn n_grid(&self) -> Vec<usize> {
        match (&self.n, self.kind()) {
            (Some(n), _) => n.clone(),
            (None, Ok(e)) => e.default_n(),
            (None, Err(_)) => Vec::new(),
        }
    }

    /// `n` for experiments on a single graph size.
    pub fn single_n(&self) -> Result<usize> {
        match self.n_grid().as_slice() {
            [n] => Ok(*n),
            g => Err(Error::Config(format!("{} runs on one graph size, got n = {g:?}", self.experiment))),
        }
    }

    pub fn j_range(&self) -> (i32, i32) {
        self.j_range.unwrap_or(DEFAULT_J_RANGE)
    }

    pub fn test_function(&self) -> TestFunction {
        self.test_function.unwrap_or(match self.density() {
            DensityModel::UniformFlatTorus { .. } => TestFunction::Sine { axis: 0, amplitude: 1.0 },
            _ => TestFunction::Coordinate { axis: 2, amplitude: 1.0 },
        })
    }

    pub fn partition(&self) -> PartitionRule {
        self.partition.unwrap_or(match self.density() {
            DensityModel::UniformFlatTorus { .. } => PartitionRule::HalfSpace { axis: 0, threshold: 0.5 },
            _ => PartitionRule::hemisphere(),
        })
    }

    pub fn classes(&self) -> usize {
        self.classes.unwrap_or_else(|| self.sigma.as_ref().map_or(2, Vec::len))
    }

    pub fn steps(&self) -> usize {
        self.steps.unwrap_or(20)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(1e-10)
    }

    pub fn label_fraction(&self) -> f64 {
        self.label_fraction.unwrap_or(0.02)
    }

    /// Number of ground-truth labels shown to the ssl demo.
    pub fn revealed_labels(&self, n: usize) -> usize {
        (self.label_fraction() * n as f64).round() as usize
    }

    pub fn grid(&self) -> GridConfig {
        self.grid.clone().unwrap_or_default()
    }

    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut note = |set: bool, name: &'static str| {
            if set {
                v.push(name);
            }
        };
        note(self.density.is_some(), "density");
        note(self.kernel.is_some(), "kernel");
        note(self.n.is_some(), "n");
        note(self.j_range.is_some(), "j_range");
        note(self.h.is_some(), "h");
        note(self.h_factor.is_some(), "h_factor");
        note(self.t.is_some(), "t");
        note(self.test_function.is_some(), "test_function");
        note(self.partition.is_some(), "partition");
        note(self.sigma.is_some(), "sigma");
        note(self.classes.is_some(), "classes");
        note(self.steps.is_some(), "steps");
        note(self.gamma.is_some(), "gamma");
        note(self.label_fraction.is_some(), "label_fraction");
        note(self.tolerance.is_some(), "tolerance");
        note(self.grid.is_some(), "grid");
        v
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<Experiment> {
        let kind = self.kind()?;
        if self.seeds.is_empty() {
            return cfg("at least one explicit seed is required".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return cfg("seeds must be distinct".into());
        }
        if let Some(f) = self.present().into_iter().find(|f| !kind.accepts(f)) {
            return cfg(format!("field `{f}` is not used by {}", kind.name()));
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => cfg(format!("{name} must be positive, got {x}")),
            _ => Ok(()),
        };
        positive("h", self.h)?;
        positive("h_factor", self.h_factor)?;
        positive("tolerance", self.tolerance)?;
        if let Some(t) = self.t {
            if !(t >= 0.0 && t.is_finite()) {
                return cfg(format!("t must be nonnegative, got {t}"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return cfg(format!("gamma must be nonnegative, got {g}"));
            }
        }
        if self.steps == Some(0) {
            return cfg("steps must be positive".into());
        }
        let frac = self.label_fraction();
        if !(0.0..=1.0).contains(&frac) {
            return cfg(format!("label_fraction must lie in [0, 1], got {frac}"));
        }
        let (j0, j1) = self.j_range();
        if j0 > j1 {
            return cfg(format!("j_range [{j0}, {j1}] is empty"));
        }

        if kind == Experiment::GridMonotonicity {
            let g = self.grid();
            g.lattice()?;
            g.audit_grid().validate()?;
            return Ok(kind);
        }

        let density = self.density();
        density.validate().map_err(as_config)?;
        let kernel = self.kernel();
        kernel.validate().map_err(as_config)?;
        if kernel.k != density.k() {
            return cfg(format!("kernel dimension {} differs from density dimension {}", kernel.k, density.k()));
        }
        let n = self.n_grid();
        if n.is_empty() {
            return cfg("n grid is empty".into());
        }
        if n[0] < 2 {
            return cfg("graph sizes must be at least 2".into());
        }
        if n.windows(2).any(|w| w[0] >= w[1]) {
            return cfg("n grid must be strictly increasing".into());
        }
        match kind {
            Experiment::Monotonicity | Experiment::MboRun => {
                self.single_n()?;
            }
            Experiment::SslDemo => {
                let n = self.single_n()?;
                if self.revealed_labels(n) == 0 {
                    return Err(Error::MissingLabels(format!("label fraction {frac} reveals no labels at n = {n}")));
                }
            }
            Experiment::HeatConsistency | Experiment::OneStepConsistency if n.len() < 2 => {
                return cfg(format!("{} compares graph sizes and needs at least two n values", kind.name()));
            }
            _ => {}
        }
        if let Some(PartitionRule::HalfSpace { axis, .. }) = self.partition {
            if axis >= density_dim(&density) {
                return cfg(format!("partition axis {axis} out of range"));
            }
        }
        if let Some(f) = self.test_function {
            let axis = match f {
                TestFunction::Coordinate { axis, .. } | TestFunction::Sine { axis, .. } => axis,
                TestFunction::Constant { .. } => 0,
            };
            if axis >= density_dim(&density) {
                return cfg(format!("test function axis {axis} out of range"));
            }
        }
        if kind == Experiment::MboRun {
            let p = self.classes();
            if p < 2 {
                return cfg(format!("need at least 2 classes, got {p}"));
            }
            if let Some(s) = &self.sigma {
                let sigma = validate_sigma(s)?;
                if sigma.p() != p {
                    return cfg(format!("sigma is {0}x{0} but classes = {p}", sigma.p()));
                }
            }
        }
        Ok(kind)
    }
}

/// Ambient coordinate count of the sampled points.
fn density_dim(model: &DensityModel) -> usize {
    match model {
        DensityModel::UniformSphere => 3,
        m => m.k(),
    }
}
