use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::density::{sample_cloud, stream_seed, DensityModel};
use super::sweep::{check_grid, check_seeds, SweepResult};
use super::transport::{geometric_coupling, tl2_distance, TransportMethod};
use crate::error::{Error, Result};
use crate::kernel_graph::{
    build_graph, epsilon_rule, kernel_constants, streamed_degrees, streamed_dirichlet, GraphOptions, KernelProfile,
    PointCloud,
};
use crate::mbo::{mbo_step, thresholding_energy, LabelField, SurfaceTension};
use crate::operators::GraphOperator;

/// Above this size experiments use the Krylov heat action: each graph is
/// diffused only a few times, so an eigendecomposition does not pay off.
const EXPERIMENT_DENSE_LIMIT: usize = 1000;
const CONSTANT_TOL: f64 = 1e-10;

fn one() -> f64 {
    1.0
}

/// Smooth test functions with closed-form continuum Dirichlet energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `amplitude * x[axis]`
    Coordinate {
        axis: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude * sin(2 pi x[axis])`
    Sine {
        axis: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Constant { value: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            TestFunction::Coordinate { axis, amplitude } => amplitude * x[axis],
            TestFunction::Sine { axis, amplitude } => amplitude * (2.0 * std::f64::consts::PI * x[axis]).sin(),
            TestFunction::Constant { value } => value,
        }
    }

    pub fn on_cloud(&self, cloud: &PointCloud) -> Vec<f64> {
        (0..cloud.len()).map(|i| self.eval(cloud.point(i))).collect()
    }

    /// Continuum limit `(C2/4) int |grad u|^2 rho^2 dVol`, when known in closed form.
    pub fn dirichlet_limit(&self, model: &DensityModel, c2: f64) -> Option<f64> {
        use std::f64::consts::PI;
        match (*self, model) {
            (TestFunction::Constant { .. }, _) => Some(0.0),
            // int_{S^2} (1 - x_a^2) = 8 pi / 3 and rho = 1/(4 pi)
            (TestFunction::Coordinate { axis, amplitude }, DensityModel::UniformSphere) if axis < 3 => {
                Some(amplitude * amplitude * c2 / (24.0 * PI))
            }
            // int_{[0,1]^k} (2 pi)^2 cos^2 = 2 pi^2 and rho = 1
            (TestFunction::Sine { axis, amplitude }, DensityModel::UniformFlatTorus { k }) if axis < *k => {
                Some(amplitude * amplitude * c2 * PI * PI / 2.0)
            }
            _ => None,
        }
    }
}

/// Geometric initial partitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PartitionRule {
    /// Class 1 where `x[axis] > threshold`, class 0 elsewhere.
    HalfSpace { axis: usize, threshold: f64 },
    /// Everything in class 0.
    Trivial,
}

impl PartitionRule {
    pub fn hemisphere() -> Self {
        PartitionRule::HalfSpace { axis: 2, threshold: 0.0 }
    }

    pub fn classes(&self, cloud: &PointCloud) -> Vec<usize> {
        (0..cloud.len())
            .map(|i| match *self {
                PartitionRule::HalfSpace { axis, threshold } => usize::from(cloud.point(i)[axis] > threshold),
                PartitionRule::Trivial => 0,
            })
            .collect()
    }
}

fn check_sizes(grid: &[usize], min_len: usize) -> Result<()> {
    check_grid("n", &grid.iter().map(|&n| n as f64).collect::<Vec<_>>())?;
    if grid.len() < min_len {
        return Err(Error::Config(format!("n grid needs at least {min_len} sizes")));
    }
    if grid[0] < 2 {
        return Err(Error::Config("graph sizes must be at least 2".into()));
    }
    Ok(())
}

fn cloud_for(model: &DensityModel, n: usize, seed: u64) -> Result<PointCloud> {
    sample_cloud(model, n, stream_seed(seed, n as u64))
}

fn model_json(model: &DensityModel) -> serde_json::Value {
    match model {
        DensityModel::Custom(c) => json!({"kind": "custom", "name": c.name, "k": c.k}),
        m => serde_json::to_value(m).unwrap_or(serde_json::Value::Null),
    }
}

/// `max_i |d_i - C1 rho(X_i)|` for a given cloud and scale.
pub fn degree_deviation(cloud: &PointCloud, model: &DensityModel, kernel: &KernelProfile, epsilon: f64, c1: f64) -> Result<f64> {
    let d = streamed_degrees(cloud, epsilon, kernel, GraphOptions::default())?;
    Ok((0..cloud.len()).map(|i| (d[i] - c1 * model.density(cloud.point(i))).abs()).fold(0.0, f64::max))
}

/// Sup-norm deviation of the degrees from `C1 rho` along an n grid at `eps(n)`.
pub fn degree_convergence_experiment(
    model: &DensityModel,
    kernel: &KernelProfile,
    n_grid: &[usize],
    seeds: &[u64],
) -> Result<SweepResult> {
    check_sizes(n_grid, 1)?;
    check_seeds(seeds)?;
    let c = kernel_constants(kernel, CONSTANT_TOL)?;
    let k = model.k();
    let mut out = SweepResult::new(
        "degrees",
        "n",
        n_grid.iter().map(|&n| n as f64).collect(),
        seeds.to_vec(),
        json!({"density": model_json(model), "kernel": kernel, "c1": c.c1, "epsilon_rule": "(log n / n)^(1/(k+3))"}),
    );
    for &n in n_grid {
        let eps = epsilon_rule(n, k);
        for &seed in seeds {
            let cloud = cloud_for(model, n, seed)?;
            out.push(n as f64, seed, degree_deviation(&cloud, model, kernel, eps, c.c1)?);
        }
    }
    Ok(out)
}

/// Graph Dirichlet energy of a smooth function along an n grid; the
/// continuum limit is stored as `oracle` in the metadata when known.
pub fn dirichlet_consistency_experiment(
    model: &DensityModel,
    kernel: &KernelProfile,
    f: TestFunction,
    n_grid: &[usize],
    seeds: &[u64],
) -> Result<SweepResult> {
    check_sizes(n_grid, 1)?;
    check_seeds(seeds)?;
    let c = kernel_constants(kernel, CONSTANT_TOL)?;
    let oracle = f.dirichlet_limit(model, c.c2);
    let mut out = SweepResult::new(
        "dirichlet",
        "n",
        n_grid.iter().map(|&n| n as f64).collect(),
        seeds.to_vec(),
        json!({"density": model_json(model), "kernel": kernel, "c2": c.c2, "test_function": f, "oracle": oracle,
               "epsilon_rule": "(log n / n)^(1/(k+3))"}),
    );
    for &n in n_grid {
        let eps = epsilon_rule(n, model.k());
        for &seed in seeds {
            let cloud = cloud_for(model, n, seed)?;
            let u = f.on_cloud(&cloud);
            out.push(n as f64, seed, streamed_dirichlet(&cloud, eps, kernel, GraphOptions::default(), &u)?);
        }
    }
    Ok(out)
}

fn diffused_field(cloud: &PointCloud, kernel: &KernelProfile, f: TestFunction, t: f64) -> Result<Vec<f64>> {
    let u = f.on_cloud(cloud);
    let g = build_graph(cloud, epsilon_rule(cloud.len(), cloud.k), kernel)?;
    let op = GraphOperator::random_walk(&g).with_dense_limit(EXPERIMENT_DENSE_LIMIT);
    op.heat(&u, t, op.tolerance())
}

/// TL2 distance (greedy coupling) between the diffused fields of two sampled graphs.
pub fn heat_tl2_pair(
    model: &DensityModel,
    kernel: &KernelProfile,
    f: TestFunction,
    t: f64,
    (na, seed_a): (usize, u64),
    (nb, seed_b): (usize, u64),
) -> Result<f64> {
    let a = cloud_for(model, na, seed_a)?;
    let b = cloud_for(model, nb, seed_b)?;
    let ua = diffused_field(&a, kernel, f, t)?;
    let ub = diffused_field(&b, kernel, f, t)?;
    Ok(tl2_distance(&a, &ua, &b, &ub, TransportMethod::Greedy)?.1)
}

/// For consecutive sizes `n < n'`, TL2 distance between `e^{-t Delta_n} u` and
/// `e^{-t Delta_n'} u`; recorded at `n'`.
pub fn heat_consistency_experiment(
    model: &DensityModel,
    kernel: &KernelProfile,
    f: TestFunction,
    t: f64,
    n_grid: &[usize],
    seeds: &[u64],
) -> Result<SweepResult> {
    check_sizes(n_grid, 2)?;
    check_seeds(seeds)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("heat time must be nonnegative, got {t}")));
    }
    let mut out = SweepResult::new(
        "heat-consistency",
        "n",
        n_grid[1..].iter().map(|&n| n as f64).collect(),
        seeds.to_vec(),
        json!({"density": model_json(model), "kernel": kernel, "t": t, "test_function": f,
               "coupling": "greedy", "compared_with": "previous grid size"}),
    );
    for &seed in seeds {
        let mut prev: Option<(PointCloud, Vec<f64>)> = None;
        for &n in n_grid {
            let cloud = cloud_for(model, n, seed)?;
            let field = diffused_field(&cloud, kernel, f, t)?;
            if let Some((pc, pf)) = &prev {
                out.push(n as f64, seed, tl2_distance(pc, pf, &cloud, &field, TransportMethod::Greedy)?.1);
            }
            prev = Some((cloud, field));
        }
    }
    Ok(out)
}

/// Initial and one-step labels on a sampled graph.
pub struct OneStepOutcome {
    pub cloud: PointCloud,
    pub initial: Vec<usize>,
    pub output: Vec<usize>,
    pub h: f64,
}

/// One two-phase MBO step from a geometric partition with `h = h_factor * eps(n)^2`.
pub fn one_step(
    model: &DensityModel,
    kernel: &KernelProfile,
    partition: PartitionRule,
    h_factor: f64,
    n: usize,
    seed: u64,
) -> Result<OneStepOutcome> {
    let cloud = cloud_for(model, n, seed)?;
    let eps = epsilon_rule(n, model.k());
    let h = h_factor * eps * eps;
    let g = build_graph(&cloud, eps, kernel)?;
    let op = GraphOperator::random_walk(&g).with_dense_limit(EXPERIMENT_DENSE_LIMIT);
    let initial = partition.classes(&cloud);
    let chi = LabelField::from_classes(&initial, 2)?;
    let output = mbo_step(&op, &chi, &SurfaceTension::two_phase(), h, None)?.classes().unwrap();
    Ok(OneStepOutcome { cloud, initial, output, h })
}

/// Mass of a geometric greedy coupling on which two labelings agree.
pub fn label_agreement(a: &PointCloud, la: &[usize], b: &PointCloud, lb: &[usize]) -> Result<f64> {
    let plan = geometric_coupling(a, b, TransportMethod::Greedy)?;
    Ok(plan.agreement(|i, j| la[i] == lb[j]))
}

/// Agreement of one-step outputs between consecutive graph sizes, recorded at
/// the larger size. Input agreements go to the metadata.
pub fn one_step_consistency_experiment(
    model: &DensityModel,
    kernel: &KernelProfile,
    partition: PartitionRule,
    h_factor: f64,
    n_grid: &[usize],
    seeds: &[u64],
) -> Result<SweepResult> {
    check_sizes(n_grid, 2)?;
    check_seeds(seeds)?;
    if !(h_factor > 0.0 && h_factor.is_finite()) {
        return Err(Error::Config(format!("h factor must be positive, got {h_factor}")));
    }
    let mut input_agreement = Vec::new();
    let mut out = SweepResult::new(
        "one-step-consistency",
        "n",
        n_grid[1..].iter().map(|&n| n as f64).collect(),
        seeds.to_vec(),
        serde_json::Value::Null,
    );
    for &seed in seeds {
        let mut prev: Option<OneStepOutcome> = None;
        for &n in n_grid {
            let cur = one_step(model, kernel, partition, h_factor, n, seed)?;
            if let Some(p) = &prev {
                let plan = geometric_coupling(&p.cloud, &cur.cloud, TransportMethod::Greedy)?;
                out.push(n as f64, seed, plan.agreement(|i, j| p.output[i] == cur.output[j]));
                input_agreement.push(json!({"n": n, "seed": seed,
                    "agreement": plan.agreement(|i, j| p.initial[i] == cur.initial[j])}));
            }
            prev = Some(cur);
        }
    }
    out.metadata = json!({"density": model_json(model), "kernel": kernel, "partition": partition,
                          "h": "h_factor * eps(n)^2", "h_factor": h_factor, "coupling": "greedy geometric",
                          "input_agreement": input_agreement});
    Ok(out)
}

/// Default exponent range `j` for `h = 2^j eps^2`.
pub const DEFAULT_J_RANGE: (i32, i32) = (-5, 4);

/// Thresholding energy of a random balanced two-class field on one sampled
/// graph, over `h = 2^j eps^2` for `j` in the inclusive range.
pub fn monotonicity_sweep(
    model: &DensityModel,
    kernel: &KernelProfile,
    n: usize,
    seed: u64,
    j_range: (i32, i32),
) -> Result<SweepResult> {
    monotonicity_sweeps(model, kernel, n, &[seed], j_range)
}

pub fn monotonicity_sweeps(
    model: &DensityModel,
    kernel: &KernelProfile,
    n: usize,
    seeds: &[u64],
    j_range: (i32, i32),
) -> Result<SweepResult> {
    check_seeds(seeds)?;
    if j_range.0 > j_range.1 {
        return Err(Error::Config(format!("empty j range {j_range:?}")));
    }
    if n < 2 {
        return Err(Error::Config("n must be at least 2".into()));
    }
    let eps = epsilon_rule(n, model.k());
    let hs: Vec<f64> = (j_range.0..=j_range.1).map(|j| 2f64.powi(j) * eps * eps).collect();
    let mut out = SweepResult::new(
        "monotonicity",
        "h",
        hs.clone(),
        seeds.to_vec(),
        json!({"density": model_json(model), "kernel": kernel, "n": n, "epsilon": eps,
               "j_range": [j_range.0, j_range.1], "sigma": SurfaceTension::two_phase()}),
    );
    let sigma = SurfaceTension::two_phase();
    for &seed in seeds {
        let cloud = cloud_for(model, n, seed)?;
        let g = build_graph(&cloud, eps, kernel)?;
        let op = GraphOperator::random_walk(&g);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(stream_seed(seed, 1)));
        let mut classes = vec![0; n];
        for &i in &order[..n / 2] {
            classes[i] = 1;
        }
        let chi = LabelField::from_classes(&classes, 2)?;
        for &h in &hs {
            out.push(h, seed, thresholding_energy(&op, &chi, &sigma, h)?.total);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedResidual {
    pub seed: u64,
    pub h: f64,
    pub h_tilde: f64,
    pub residual: f64,
}

/// Residuals `E^{h~} - [g(h) E^h + f(h~) E^h + z(h~)]` for every pair `h <= h~` of a sweep.
pub fn relaxed_monotonicity_audit(
    sweep: &SweepResult,
    g: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
    z: impl Fn(f64) -> f64,
) -> Vec<RelaxedResidual> {
    let mut out = Vec::new();
    for &seed in &sweep.seeds {
        let curve = sweep.curve(seed);
        for a in 0..curve.len() {
            for b in a..curve.len() {
                let (h, ht) = (sweep.grid[a], sweep.grid[b]);
                let residual = curve[b] - (g(h) * curve[a] + f(ht) * curve[a] + z(ht));
                out.push(RelaxedResidual { seed, h, h_tilde: ht, residual });
            }
        }
    }
    out
}
