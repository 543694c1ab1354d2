use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the points were generated; also fixes the metric used on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityDescriptor {
    /// Uniform on the unit sphere `S^2 ⊂ R^3`.
    UniformSphere,
    /// Uniform on the flat torus `[0,1)^k` with the quotient metric.
    UniformTorus { k: usize },
    /// Anything else; distances are ambient Euclidean.
    Custom { name: String },
}

/// Metric in which graph weights are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    /// Minimum-image distance on `[0,1)^d`.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    /// Intrinsic dimension.
    pub k: usize,
    pub density: DensityDescriptor,
    pub seed: Option<u64>,
}

impl PointCloud {
    pub fn new(coords: Vec<f64>, dim: usize, k: usize, density: DensityDescriptor) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::Dimension { expected: dim.max(1), found: coords.len() });
        }
        if k == 0 || k > dim {
            return Err(Error::Domain(format!("intrinsic dimension {k} must lie in 1..={dim}")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        Ok(Self { coords, dim, k, density, seed: None })
    }

    pub fn from_rows(rows: &[Vec<f64>], k: usize, density: DensityDescriptor) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Dimension { expected: dim, found: r.len() });
            }
            coords.extend_from_slice(r);
        }
        Self::new(coords, dim, k, density)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Ambient dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn metric(&self) -> Metric {
        match self.density {
            DensityDescriptor::UniformTorus { .. } => Metric::Periodic,
            _ => Metric::Euclidean,
        }
    }

    /// Distance used for graph weights: ambient Euclidean, or the quotient
    /// metric on the flat torus.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist2(self.metric(), self.point(i), self.point(j)).sqrt()
    }

    /// Intrinsic distance: arc length on the sphere, quotient metric on the
    /// torus, Euclidean otherwise (which only bounds a geodesic from below).
    pub fn geodesic(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.density {
            DensityDescriptor::UniformSphere => {
                // acos of the dot product is ill-conditioned near ±1
                let chord = dist2(Metric::Euclidean, a, b).sqrt();
                2.0 * (0.5 * chord).min(1.0).asin()
            }
            DensityDescriptor::UniformTorus { .. } => dist2(Metric::Periodic, a, b).sqrt(),
            DensityDescriptor::Custom { .. } => dist2(Metric::Euclidean, a, b).sqrt(),
        }
    }

    /// Whether [`Self::geodesic`] is exact rather than a Euclidean lower bound.
    pub fn geodesic_is_exact(&self) -> bool {
        !matches!(self.density, DensityDescriptor::Custom { .. })
    }

    /// Reads a headered CSV with columns `x0..x{d-1}`.
    pub fn read_csv(path: impl AsRef<Path>, k: usize, density: DensityDescriptor) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let dim = rdr.headers()?.len();
        let mut coords = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            for field in rec.iter() {
                coords.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("bad coordinate `{field}`: {e}")))?,
                );
            }
        }
        Self::new(coords, dim, k, density)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record((0..self.dim).map(|c| format!("x{c}")))?;
        for i in 0..self.len() {
            w.write_record(self.point(i).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[inline]
pub(crate) fn dist2(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        Metric::Periodic => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let mut d = (x - y).abs();
                d -= d.floor();
                let d = d.min(1.0 - d);
                d * d
            })
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_distance_wraps() {
        let d = dist2(Metric::Periodic, &[0.05, 0.5], &[0.95, 0.5]).sqrt();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn sphere_geodesic_is_arc_length() {
        let c = PointCloud::from_rows(&[vec![1.0, 0.0, 0.0]], 2, DensityDescriptor::UniformSphere).unwrap();
        let g = c.geodesic(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!((g - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let g = c.geodesic(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]);
        assert!((g - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let r = PointCloud::from_rows(&[vec![0.0, 1.0], vec![0.0]], 1, DensityDescriptor::Custom { name: "x".into() });
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cloud.csv");
        let c = PointCloud::from_rows(
            &[vec![0.1, 0.2, 0.3], vec![-1.5, 2.0, 1e-17]],
            2,
            DensityDescriptor::Custom { name: "t".into() },
        )
        .unwrap();
        c.write_csv(&p).unwrap();
        let back = PointCloud::read_csv(&p, 2, c.density.clone()).unwrap();
        assert_eq!(back.coords(), c.coords());
    }
}
