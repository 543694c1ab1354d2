use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature;

/// Radial profile families with closed-form exponential decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum KernelShape {
    /// `exp(-rate * t^2)`
    Gaussian { rate: f64 },
    /// `exp(-rate * t)`
    Exponential { rate: f64 },
    /// Logistic step `1 / (1 + exp((t - 1) / width))`, a smooth stand-in for `1_{[0,1]}`.
    SmoothTruncated { width: f64 },
}

/// The radial profile `eta` together with the intrinsic dimension it is integrated over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    #[serde(flatten)]
    pub shape: KernelShape,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Intrinsic (manifold) dimension.
    pub k: usize,
}

fn one() -> f64 {
    1.0
}

impl KernelProfile {
    pub fn new(shape: KernelShape, k: usize) -> Result<Self> {
        let p = Self { shape, amplitude: 1.0, k };
        p.validate()?;
        Ok(p)
    }

    pub fn gaussian(k: usize) -> Self {
        Self { shape: KernelShape::Gaussian { rate: 1.0 }, amplitude: 1.0, k }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let param = match self.shape {
            KernelShape::Gaussian { rate } | KernelShape::Exponential { rate } => rate,
            KernelShape::SmoothTruncated { width } => width,
        };
        if !(param.is_finite() && param > 0.0) {
            return Err(Error::Domain(format!("kernel parameter must be positive, got {param}")));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::Domain(format!("kernel amplitude must be positive, got {}", self.amplitude)));
        }
        if self.k == 0 {
            return Err(Error::Domain("intrinsic dimension must be at least 1".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let v = match self.shape {
            KernelShape::Gaussian { rate } => (-rate * t * t).exp(),
            KernelShape::Exponential { rate } => (-rate * t).exp(),
            KernelShape::SmoothTruncated { width } => {
                let z = (t - 1.0) / width;
                if z > 0.0 {
                    let e = (-z).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + z.exp())
                }
            }
        };
        self.amplitude * v
    }

    /// Smallest radius (in kernel units) beyond which `eta < floor`.
    /// Returns `None` when `eta(0)` itself is below the floor.
    pub fn cutoff(&self, floor: f64) -> Option<f64> {
        let ratio = self.amplitude / floor;
        if ratio <= 1.0 {
            return None;
        }
        let l = ratio.ln();
        Some(match self.shape {
            KernelShape::Gaussian { rate } => (l / rate).sqrt(),
            KernelShape::Exponential { rate } => l / rate,
            KernelShape::SmoothTruncated { width } => 1.0 + width * (ratio - 1.0).ln(),
        })
    }

    /// Surface area of the unit sphere in `R^k`.
    pub fn sphere_area(&self) -> f64 {
        let k = self.k as f64;
        2.0 * std::f64::consts::PI.powf(k / 2.0) / gamma(k / 2.0)
    }
}

/// Moment constants `C1 = ∫ eta(|y|) dy` and `C2 = ∫ eta(|y|) y_1^2 dy` over `R^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub c1: f64,
    pub c2: f64,
    pub quadrature_error: f64,
}

/// Evaluates the moment constants by adaptive radial quadrature.
///
/// `C2` uses radial symmetry: `∫ eta y_1^2 = (1/k) ∫ eta |y|^2`.
pub fn kernel_constants(profile: &KernelProfile, tol: f64) -> Result<KernelConstants> {
    profile.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let k = profile.k as i32;
    let area = profile.sphere_area();
    // eta has dropped below 1e-40 of its peak beyond this radius
    let far = profile.cutoff(profile.amplitude * 1e-40).unwrap_or(1.0).max(2.0);
    let mut breaks = vec![0.0];
    if let KernelShape::SmoothTruncated { .. } = profile.shape {
        breaks.push(1.0);
    }
    breaks.push(far);

    let radial = |p: i32, budget: f64| -> Estimate2 {
        let f = |r: f64| profile.eval(r) * r.powi(p);
        let mut value = 0.0;
        let mut error = 0.0;
        let mut converged = true;
        let share = budget / breaks.len() as f64;
        for w in breaks.windows(2) {
            let e = quadrature::integrate(f, w[0], w[1], share, 4000);
            value += e.value;
            error += e.error;
            converged &= e.converged;
        }
        // tail beyond `far`, bounded by one more window of the same length
        let tail = quadrature::integrate(f, far, 2.0 * far, share, 4000);
        value += tail.value;
        error += tail.error + tail.value.abs();
        Estimate2 { value, error, converged: converged && tail.converged }
    };

    let budget = tol / area.max(1.0) / 2.0;
    let m0 = radial(k - 1, budget);
    let m2 = radial(k + 1, budget * profile.k as f64);
    let err1 = area * m0.error;
    let err2 = area * m2.error / profile.k as f64;
    let quadrature_error = err1.max(err2);
    if !(m0.converged && m2.converged) || quadrature_error > tol || !quadrature_error.is_finite() {
        return Err(Error::QuadratureFailure { requested: tol, achieved: quadrature_error });
    }
    Ok(KernelConstants {
        c1: area * m0.value,
        c2: area * m2.value / profile.k as f64,
        quadrature_error,
    })
}

struct Estimate2 {
    value: f64,
    error: f64,
    converged: bool,
}
