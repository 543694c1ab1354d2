use crate::error::{Error, Result};

const ENTRY_TOL: f64 = 1e-12;

/// Uniform cell lattice on `[-L, L]^k` with `m` cells per axis, row-major
/// with the last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub k: usize,
    pub m: usize,
    pub half_width: f64,
}

impl Lattice {
    pub fn new(k: usize, m: usize, half_width: f64) -> Result<Self> {
        if k == 0 || k > 3 {
            return Err(Error::Domain(format!("grid dimension must be 1, 2 or 3, got {k}")));
        }
        if m < 4 || !m.is_multiple_of(2) {
            return Err(Error::Domain(format!("cells per axis must be even and at least 4, got {m}")));
        }
        if !(half_width > 1.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("box half-width must exceed 1, got {half_width}")));
        }
        if m.checked_pow(k as u32).is_none_or(|c| c > 1 << 24) {
            return Err(Error::Domain(format!("grid {m}^{k} is too large")));
        }
        Ok(Lattice { k, m, half_width })
    }

    pub fn cells(&self) -> usize {
        self.m.pow(self.k as u32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.m as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.k as i32)
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for a in (0..self.k).rev() {
            out[a] = idx % self.m;
            idx /= self.m;
        }
        out
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        let d = self.spacing();
        self.multi_index(idx).into_iter().map(|i| -self.half_width + (i as f64 + 0.5) * d).collect()
    }

    pub fn centers(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.cells()).map(|i| self.center(i))
    }

    /// Cells whose centre lies in the closed unit ball.
    pub fn inside_ball(&self) -> Vec<bool> {
        self.centers().map(|c| norm(&c) <= 1.0).collect()
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Phase field on a lattice. `phases == 1` is the two-phase scalar `u`
/// (the second phase is `1 - u`); otherwise each cell holds `P` values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    lattice: Lattice,
    phases: usize,
    values: Vec<f64>,
    support: bool,
}

impl GridField {
    pub fn new(lattice: Lattice, phases: usize, values: Vec<f64>) -> Result<Self> {
        if phases == 0 {
            return Err(Error::Domain("a grid field needs at least one phase".into()));
        }
        if values.len() != lattice.cells() * phases {
            return Err(Error::Dimension { expected: lattice.cells() * phases, found: values.len() });
        }
        for (i, &v) in values.iter().enumerate() {
            if !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(&v) {
                return Err(Error::Domain(format!("entry {i} = {v} outside [0, 1]")));
            }
        }
        if phases > 1 {
            for (c, row) in values.chunks(phases).enumerate() {
                let s: f64 = row.iter().sum();
                if s > 1.0 + ENTRY_TOL {
                    return Err(Error::Domain(format!("cell {c} phases sum to {s}")));
                }
            }
        }
        let inside = lattice.inside_ball();
        let support = values.chunks(phases).zip(&inside).all(|(row, &ins)| ins || row.iter().all(|&v| v == 0.0));
        Ok(GridField { lattice, phases, values, support })
    }

    pub fn two_phase_from_fn(lattice: Lattice, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = lattice.centers().map(|c| f(&c)).collect();
        Self::new(lattice, 1, values)
    }

    /// Simplex-valued field on the unit ball, extended by zero.
    pub fn multiclass_from_fn(lattice: Lattice, phases: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(lattice.cells() * phases);
        for c in lattice.centers() {
            if norm(&c) <= 1.0 {
                let row = f(&c);
                if row.len() != phases {
                    return Err(Error::Dimension { expected: phases, found: row.len() });
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > ENTRY_TOL {
                    return Err(Error::Domain(format!("phases sum to {s} at {c:?}")));
                }
                values.extend(row);
            } else {
                values.extend(std::iter::repeat_n(0.0, phases));
            }
        }
        Self::new(lattice, phases, values)
    }

    /// `u = 1` on `{x_1 > 0}` inside the unit ball.
    pub fn half_plane(lattice: Lattice) -> Result<Self> {
        Self::two_phase_from_fn(lattice, |x| if x[0] > 0.0 && norm(x) <= 1.0 { 1.0 } else { 0.0 })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn is_two_phase(&self) -> bool {
        self.phases == 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when every value vanishes at cells centred outside the unit ball.
    pub fn is_supported_in_ball(&self) -> bool {
        self.support
    }

    pub fn phase(&self, q: usize) -> Vec<f64> {
        self.values.iter().skip(q).step_by(self.phases).copied().collect()
    }

    pub(crate) fn from_phases(lattice: Lattice, cols: &[Vec<f64>]) -> Result<Self> {
        let p = cols.len();
        let mut values = vec![0.0; lattice.cells() * p];
        for (q, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                values[i * p + q] = v.clamp(0.0, 1.0);
            }
        }
        Self::new(lattice, p, values)
    }
}

/// Nonnegative weight compactly supported in the unit ball, sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFunction {
    lattice: Lattice,
    values: Vec<f64>,
    sup_grad: f64,
}

/// `exp(1 - 1/(1 - |x|^2))` inside the unit ball, 0 outside.
pub fn standard_bump(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 < 1.0 {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

impl BumpFunction {
    pub fn from_fn(lattice: Lattice, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let inside = lattice.inside_ball();
        let mut values = Vec::with_capacity(lattice.cells());
        for (i, c) in lattice.centers().enumerate() {
            let v = f(&c);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("bump value {v} at {c:?}")));
            }
            if !inside[i] && v != 0.0 {
                return Err(Error::Domain(format!("bump does not vanish at {c:?}")));
            }
            values.push(v);
        }
        let sup_grad = central_difference_sup(&lattice, &values);
        Ok(BumpFunction { lattice, values, sup_grad })
    }

    pub fn standard(lattice: Lattice) -> Result<Self> {
        Self::from_fn(lattice, standard_bump)
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `||D beta||_inf` by central differences.
    pub fn sup_grad(&self) -> f64 {
        self.sup_grad
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("bump scale must be nonnegative, got {c}")));
        }
        Ok(BumpFunction {
            lattice: self.lattice,
            values: self.values.iter().map(|v| v * c).collect(),
            sup_grad: self.sup_grad * c,
        })
    }
}

fn central_difference_sup(lattice: &Lattice, values: &[f64]) -> f64 {
    let (m, k, d) = (lattice.m, lattice.k, lattice.spacing());
    let mut best = 0.0f64;
    for idx in 0..values.len() {
        let mi = lattice.multi_index(idx);
        if mi.iter().any(|&i| i == 0 || i == m - 1) {
            continue;
        }
        let mut g2 = 0.0;
        for a in 0..k {
            let stride = m.pow((k - 1 - a) as u32);
            let diff = (values[idx + stride] - values[idx - stride]) / (2.0 * d);
            g2 += diff * diff;
        }
        best = best.max(g2.sqrt());
    }
    best
}

/// `int_{x_1 = 0} beta dH^{k-1}` for the standard bump.
pub fn standard_bump_hyperplane_integral(k: usize) -> f64 {
    use std::f64::consts::PI;
    let f = |r: f64| standard_bump(&[r]);
    match k {
        1 => 1.0,
        2 => 2.0 * crate::quadrature::integrate(f, 0.0, 1.0, 1e-14, 4096).value,
        _ => {
            let n = (k - 1) as f64;
            let sphere = 2.0 * PI.powf(n / 2.0) / statrs::function::gamma::gamma(n / 2.0);
            sphere * crate::quadrature::integrate(|r| f(r) * r.powi(k as i32 - 2), 0.0, 1.0, 1e-14, 4096).value
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centres_are_symmetric() {
        let l = Lattice::new(2, 8, 2.0).unwrap();
        assert_eq!(l.center(0), vec![-1.75, -1.75]);
        assert_eq!(l.center(l.cells() - 1), vec![1.75, 1.75]);
        assert_eq!(l.multi_index(9), vec![1, 1]);
    }

    #[test]
    fn half_plane_is_supported() {
        let f = GridField::half_plane(Lattice::new(2, 32, 2.0).unwrap()).unwrap();
        assert!(f.is_supported_in_ball());
        let g = GridField::two_phase_from_fn(f.lattice(), |_| 1.0).unwrap();
        assert!(!g.is_supported_in_ball());
    }

    #[test]
    fn rejects_bad_values() {
        let l = Lattice::new(1, 4, 2.0).unwrap();
        assert!(GridField::new(l, 1, vec![0.0, 1.5, 0.0, 0.0]).is_err());
        assert!(GridField::new(l, 2, vec![0.6; 8]).is_err());
        assert!(Lattice::new(2, 7, 2.0).is_err());
        assert!(Lattice::new(2, 8, 1.0).is_err());
    }

    #[test]
    fn standard_bump_gradient() {
        let b = BumpFunction::standard(Lattice::new(2, 256, 2.0).unwrap()).unwrap();
        // sup of |d/dr exp(1 - 1/(1-r^2))| on a fine 1D mesh
        let mut exact = 0.0f64;
        for i in 1..100000 {
            let r = i as f64 / 100000.0;
            let s = 1.0 - r * r;
            exact = exact.max(standard_bump(&[r]) * 2.0 * r / (s * s));
        }
        assert!((b.sup_grad() - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn hyperplane_integral_in_2d() {
        let v = standard_bump_hyperplane_integral(2);
        let n = 200000;
        let riemann: f64 = (0..n).map(|i| standard_bump(&[-1.0 + (i as f64 + 0.5) * 2.0 / n as f64]) * 2.0 / n as f64).sum();
        assert!((v - riemann).abs() < 1e-8);
    }
}
