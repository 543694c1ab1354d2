use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_graph::{DensityDescriptor, PointCloud};

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// User-supplied density, usable for evaluation only.
#[derive(Clone)]
pub struct CustomDensity {
    pub name: String,
    pub k: usize,
    pub eval: Evaluator,
    /// Bound on `|int rho - 1|` supplied by the caller.
    pub normalization_error: f64,
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity").field("name", &self.name).field("k", &self.k).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityModel {
    /// Uniform on the unit sphere in R^3, `rho = 1/(4 pi)`.
    UniformSphere,
    /// Uniform on `[0,1)^k` with periodic identification, `rho = 1`.
    UniformFlatTorus { k: usize },
    #[serde(skip)]
    Custom(CustomDensity),
}

/// Independent RNG stream for task `offset` under a master seed.
pub fn stream_seed(master: u64, offset: u64) -> u64 {
    master.wrapping_add(offset.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl DensityModel {
    pub fn custom(name: impl Into<String>, k: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        DensityModel::Custom(CustomDensity { name: name.into(), k, eval: Arc::new(eval), normalization_error: 0.0 })
    }

    /// Intrinsic dimension.
    pub fn k(&self) -> usize {
        match self {
            DensityModel::UniformSphere => 2,
            DensityModel::UniformFlatTorus { k } => *k,
            DensityModel::Custom(c) => c.k,
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        match self {
            DensityModel::UniformSphere => 1.0 / (4.0 * std::f64::consts::PI),
            DensityModel::UniformFlatTorus { .. } => 1.0,
            DensityModel::Custom(c) => (c.eval)(x),
        }
    }

    pub fn normalization_error(&self) -> f64 {
        match self {
            DensityModel::Custom(c) => c.normalization_error,
            _ => 0.0,
        }
    }

    pub fn descriptor(&self) -> DensityDescriptor {
        match self {
            DensityModel::UniformSphere => DensityDescriptor::UniformSphere,
            DensityModel::UniformFlatTorus { k } => DensityDescriptor::UniformTorus { k: *k },
            DensityModel::Custom(c) => DensityDescriptor::Custom { name: c.name.clone() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DensityModel::UniformFlatTorus { k } if *k == 0 => Err(Error::Config("torus dimension must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// Draws `n` iid points from the model with a seeded ChaCha8 stream.
pub fn sample_cloud(model: &DensityModel, n: usize, seed: u64) -> Result<PointCloud> {
    model.validate()?;
    if n < 2 {
        return Err(Error::Domain(format!("need at least two points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (coords, dim) = match model {
        DensityModel::UniformSphere => {
            let mut c = Vec::with_capacity(3 * n);
            for _ in 0..n {
                loop {
                    let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
                    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if r > 1e-12 {
                        c.extend(v.iter().map(|x| x / r));
                        break;
                    }
                }
            }
            (c, 3)
        }
        DensityModel::UniformFlatTorus { k } => ((0..n * k).map(|_| rng.random::<f64>()).collect(), *k),
        DensityModel::Custom(c) => {
            return Err(Error::UnsupportedDensity(format!("`{}` has an evaluator but no sampler", c.name)));
        }
    };
    Ok(PointCloud::new(coords, dim, model.k(), model.descriptor())?.with_seed(seed))
}
