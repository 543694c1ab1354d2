use crate::error::{Error, Result};
use crate::kernel_graph::SimilarityGraph;
use crate::operators::infinity_laplacian_solve;

/// Per-class forcing `f^m` on the vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingField {
    n: usize,
    p: usize,
    values: Vec<f64>,
    pub gamma: f64,
}

impl ForcingField {
    pub fn zero(n: usize, p: usize) -> Self {
        Self { n, p, values: vec![0.0; n * p], gamma: 0.0 }
    }

    /// Row-major `n x P` values.
    pub fn new(n: usize, p: usize, values: Vec<f64>, gamma: f64) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::Dimension { expected: n * p, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("forcing has non-finite entries".into()));
        }
        Ok(Self { n, p, values, gamma })
    }

    /// Two-class field from the scalar forcing `f` acting on class 1
    /// (class 0 receives `-f`).
    pub fn from_two_class(f: &[f64], gamma: f64) -> Result<Self> {
        let values = f.iter().flat_map(|&v| [-v, v]).collect();
        Self::new(f.len(), 2, values, gamma)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, m: usize) -> f64 {
        self.values[i * self.p + m]
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, m)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| c * v).collect(), gamma: c * self.gamma, ..*self }
    }
}

/// Scalar two-class forcing `-gamma (1 - 2 u0)` on labeled vertices, zero elsewhere.
pub fn two_class_forcing(labels: &[(usize, f64)], gamma: f64, n: usize) -> Result<Vec<f64>> {
    let mut f = vec![0.0; n];
    for &(i, u0) in labels {
        if i >= n {
            return Err(Error::Dimension { expected: n, found: i + 1 });
        }
        f[i] = -gamma * (1.0 - 2.0 * u0);
    }
    Ok(f)
}

/// `f^m = gamma (2 [label = m] - 1)` on labeled vertices, zero elsewhere.
pub fn forcing_from_labels(labels: &[(usize, usize)], gamma: f64, n: usize, p: usize) -> Result<ForcingField> {
    if labels.is_empty() {
        return Err(Error::MissingLabels("forcing needs at least one labeled vertex".into()));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma must be nonnegative, got {gamma}")));
    }
    let mut values = vec![0.0; n * p];
    for &(i, c) in labels {
        if c >= p {
            return Err(Error::LabelOutOfRange { vertex: i, class: c, classes: p });
        }
        if i >= n {
            return Err(Error::Dimension { expected: n, found: i + 1 });
        }
        for m in 0..p {
            values[i * p + m] = if m == c { gamma } else { -gamma };
        }
    }
    ForcingField::new(n, p, values, gamma)
}

/// Infinity-harmonic extension `u` of the 0/1 labels, then `f = -gamma (1 - 2u)`
/// everywhere, as a two-class field.
pub fn lipschitz_forcing(
    graph: &SimilarityGraph,
    labels: &[(usize, f64)],
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ForcingField> {
    let u = infinity_laplacian_solve(graph, labels, tol, max_iter)?;
    let f: Vec<f64> = u.values().iter().map(|&x| -gamma * (1.0 - 2.0 * x)).collect();
    ForcingField::from_two_class(&f, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_class_sign_convention() {
        let f = two_class_forcing(&[(0, 1.0), (1, 0.0)], 2.0, 3).unwrap();
        assert_eq!(f, vec![2.0, -2.0, 0.0]);
    }

    #[test]
    fn multiclass_reduces_to_two_class() {
        let labels = [(0, 1), (2, 0)];
        let multi = forcing_from_labels(&labels, 1.5, 4, 2).unwrap();
        let scalar = two_class_forcing(&[(0, 1.0), (2, 0.0)], 1.5, 4).unwrap();
        assert_eq!(multi, ForcingField::from_two_class(&scalar, 1.5).unwrap());
    }

    #[test]
    fn out_of_range_class() {
        assert!(matches!(forcing_from_labels(&[(0, 3)], 1.0, 2, 3), Err(Error::LabelOutOfRange { class: 3, .. })));
        assert!(matches!(forcing_from_labels(&[], 1.0, 2, 3), Err(Error::MissingLabels(_))));
    }

    #[test]
    fn lipschitz_on_path() {
        let g = SimilarityGraph::from_dense(3, 1.0, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let f = lipschitz_forcing(&g, &[(0, 0.0), (2, 1.0)], 1.0, 1e-12, 100).unwrap();
        let col = f.column(1);
        for (a, b) in col.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let all_one = lipschitz_forcing(&g, &[(0, 1.0), (2, 1.0)], 0.3, 1e-12, 100).unwrap();
        assert!(all_one.column(1).iter().all(|&v| (v - 0.3).abs() < 1e-15));
        let zero = lipschitz_forcing(&g, &[(0, 0.0), (2, 1.0)], 0.0, 1e-12, 100).unwrap();
        assert!(zero.column(1).iter().all(|&v| v == 0.0));
    }
}
