use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SigmaViolation};

/// Validated matrix of pairwise interface costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SurfaceTension {
    p: usize,
    sigma: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for SurfaceTension {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        validate_sigma(&rows)
    }
}

impl From<SurfaceTension> for Vec<Vec<f64>> {
    fn from(s: SurfaceTension) -> Self {
        s.rows()
    }
}

/// Checks symmetry, zero diagonal, positivity, the triangle inequality and
/// conditional negative semidefiniteness, reporting every violation found.
pub fn validate_sigma(rows: &[Vec<f64>]) -> Result<SurfaceTension> {
    let p = rows.len();
    let mut bad = Vec::new();
    if let Some(r) = rows.iter().find(|r| r.len() != p) {
        return Err(Error::SigmaValidation(vec![SigmaViolation::NotSquare { rows: p, cols: r.len() }]));
    }
    if p < 2 {
        return Err(Error::SigmaValidation(vec![SigmaViolation::TooFewPhases(p)]));
    }
    for i in 0..p {
        for j in 0..p {
            if !rows[i][j].is_finite() {
                bad.push(SigmaViolation::NonFinite { i, j });
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::SigmaValidation(bad));
    }
    for i in 0..p {
        if rows[i][i] != 0.0 {
            bad.push(SigmaViolation::NonZeroDiagonal { i });
        }
        for j in i + 1..p {
            if rows[i][j] != rows[j][i] {
                bad.push(SigmaViolation::NotSymmetric { i, j });
            }
            if !(rows[i][j] > 0.0 && rows[j][i] > 0.0) {
                bad.push(SigmaViolation::NonPositiveOffDiagonal { i, j });
            }
        }
    }
    let scale = rows.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..p {
        for j in i + 1..p {
            for l in 0..p {
                if l != i && l != j && rows[i][j] > rows[i][l] + rows[l][j] + 1e-14 * scale {
                    bad.push(SigmaViolation::TriangleInequality { i, j, l });
                }
            }
        }
    }
    // largest eigenvalue of the projection onto the complement of the constants
    let proj = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / p as f64);
    let sym = DMatrix::from_fn(p, p, |i, j| 0.5 * (rows[i][j] + rows[j][i]));
    let m = &proj * sym * &proj;
    let top = SymmetricEigen::new(m).eigenvalues.max();
    if top > 1e-10 * scale {
        bad.push(SigmaViolation::NotConditionallyNegative { max_eigenvalue: top });
    }
    if !bad.is_empty() {
        return Err(Error::SigmaValidation(bad));
    }
    Ok(SurfaceTension { p, sigma: rows.iter().flatten().copied().collect() })
}

impl SurfaceTension {
    /// `sigma_ij = 1` for `i != j`.
    pub fn uniform(p: usize) -> Result<Self> {
        validate_sigma(&(0..p).map(|i| (0..p).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect::<Vec<_>>())
    }

    pub fn two_phase() -> Self {
        Self { p: 2, sigma: vec![0.0, 1.0, 1.0, 0.0] }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.p + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.sigma.chunks(self.p).map(|r| r.to_vec()).collect()
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        validate_sigma(&self.rows().into_iter().map(|r| r.into_iter().map(|v| v * c).collect()).collect::<Vec<_>>())
    }

    /// `sigma'_{perm[i] perm[j]} = sigma_ij`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.p {
            return Err(Error::Dimension { expected: self.p, found: perm.len() });
        }
        let mut rows = vec![vec![0.0; self.p]; self.p];
        for i in 0..self.p {
            for j in 0..self.p {
                rows[perm[i]][perm[j]] = self.get(i, j);
            }
        }
        validate_sigma(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_valid_for_any_p() {
        for p in 2..7 {
            assert_eq!(SurfaceTension::uniform(p).unwrap().get(0, 1), 1.0);
        }
        assert!(validate_sigma(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    }

    #[test]
    fn triangle_violation_names_witness() {
        let rows = vec![vec![0.0, 5.0, 1.0], vec![5.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        match validate_sigma(&rows) {
            Err(Error::SigmaValidation(v)) => {
                assert!(v.contains(&SigmaViolation::TriangleInequality { i: 0, j: 1, l: 2 }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_violations() {
        let e = validate_sigma(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(e, Error::SigmaValidation(ref v) if v.contains(&SigmaViolation::NotSymmetric { i: 0, j: 1 })));
        let e = validate_sigma(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(e, Error::SigmaValidation(ref v) if v.contains(&SigmaViolation::NonZeroDiagonal { i: 0 })));
        let e = validate_sigma(&[vec![0.0]]).unwrap_err();
        assert!(matches!(e, Error::SigmaValidation(ref v) if v == &[SigmaViolation::TooFewPhases(1)]));
        let e = validate_sigma(&[vec![0.0, 1.0], vec![1.0]]).unwrap_err();
        assert!(matches!(e, Error::SigmaValidation(ref v) if matches!(v[0], SigmaViolation::NotSquare { .. })));
    }

    #[test]
    fn metric_but_not_negative_type_is_rejected() {
        // shortest-path metric of K_{2,3}: a metric, but not of negative type
        let part = [0, 0, 1, 1, 1];
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| if i == j { 0.0 } else if part[i] != part[j] { 1.0 } else { 2.0 }).collect())
            .collect();
        match validate_sigma(&rows) {
            Err(Error::SigmaValidation(v)) => {
                assert!(v.iter().all(|x| matches!(x, SigmaViolation::NotConditionallyNegative { .. })), "{v:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn serde_round_trip_validates() {
        let s: SurfaceTension = serde_json::from_str("[[0,2],[2,0]]").unwrap();
        assert_eq!(s.get(1, 0), 2.0);
        assert!(serde_json::from_str::<SurfaceTension>("[[0,2],[1,0]]").is_err());
        assert_eq!(serde_json::to_string(&s).unwrap(), "[[0.0,2.0],[2.0,0.0]]");
    }
}
