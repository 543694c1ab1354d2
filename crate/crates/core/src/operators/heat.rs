use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::vector::{dirichlet_slice, inner_slices, VectorOnGraph, Weighting};
use crate::error::{Error, Result};
use crate::kernel_graph::SimilarityGraph;

/// Graphs up to this size use a dense eigendecomposition by default.
pub const DENSE_LIMIT: usize = 2000;

pub const DEFAULT_TOL: f64 = 1e-10;

const KRYLOV_MAX_DIM: usize = 120;
const MAX_SPLIT_LEVEL: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `eps^-2 (I - (1/n) D^-1 W)`, self-adjoint for the degree-weighted product.
    RandomWalk,
    /// `eps^-2 (D - (1/n) W)`, self-adjoint for the unweighted product.
    Unnormalized,
}

impl LaplacianKind {
    pub fn weighting(self) -> Weighting {
        match self {
            LaplacianKind::RandomWalk => Weighting::Degree,
            LaplacianKind::Unnormalized => Weighting::Uniform,
        }
    }
}

/// Eigendecomposition `S = Q diag(values) Q^T` of the symmetrized operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// A Laplacian bound to a graph.
#[derive(Debug)]
pub struct GraphOperator<'g> {
    kind: LaplacianKind,
    graph: &'g SimilarityGraph,
    epsilon: f64,
    dense_limit: usize,
    tol: f64,
    /// `sqrt(d_i)` for the random-walk symmetrization, ones otherwise.
    sqrt_d: Vec<f64>,
    cache: OnceLock<Spectrum>,
}

impl<'g> GraphOperator<'g> {
    pub fn new(graph: &'g SimilarityGraph, kind: LaplacianKind) -> Self {
        let sqrt_d = match kind {
            LaplacianKind::RandomWalk => graph.degrees().iter().map(|d| d.sqrt()).collect(),
            LaplacianKind::Unnormalized => vec![1.0; graph.n()],
        };
        Self { kind, graph, epsilon: graph.epsilon(), dense_limit: DENSE_LIMIT, tol: DEFAULT_TOL, sqrt_d, cache: OnceLock::new() }
    }

    pub fn random_walk(graph: &'g SimilarityGraph) -> Self {
        Self::new(graph, LaplacianKind::RandomWalk)
    }

    pub fn unnormalized(graph: &'g SimilarityGraph) -> Self {
        Self::new(graph, LaplacianKind::Unnormalized)
    }

    /// Sizes above `limit` use the Krylov exponential action.
    pub fn with_dense_limit(mut self, limit: usize) -> Self {
        self.dense_limit = limit;
        self
    }

    /// Relative accuracy used by callers that do not pass their own.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn graph(&self) -> &'g SimilarityGraph {
        self.graph
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn uses_dense(&self) -> bool {
        self.graph.n() <= self.dense_limit
    }

    /// Inner product matching the operator kind.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        inner_slices(self.graph, self.kind.weighting(), u, v)
    }

    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        dirichlet_slice(self.graph, u)
    }

    /// `Delta u` in the operator's (non-symmetrized) form.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let nf = n as f64;
        let mut wu = vec![0.0; n];
        self.graph.weight_matvec(u, &mut wu);
        let s = 1.0 / (self.epsilon * self.epsilon);
        let d = self.graph.degrees();
        match self.kind {
            LaplacianKind::RandomWalk => (0..n).map(|i| s * (u[i] - wu[i] / (nf * d[i]))).collect(),
            LaplacianKind::Unnormalized => (0..n).map(|i| s * (d[i] * u[i] - wu[i] / nf)).collect(),
        }
    }

    /// Applies the symmetrized operator `S`.
    fn symmetric_matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        let nf = n as f64;
        let s = 1.0 / (self.epsilon * self.epsilon);
        let d = self.graph.degrees();
        match self.kind {
            LaplacianKind::RandomWalk => {
                let scaled: Vec<f64> = x.iter().zip(&self.sqrt_d).map(|(a, b)| a / b).collect();
                self.graph.weight_matvec(&scaled, y);
                for i in 0..n {
                    y[i] = s * (x[i] - y[i] / (nf * self.sqrt_d[i]));
                }
            }
            LaplacianKind::Unnormalized => {
                self.graph.weight_matvec(x, y);
                for i in 0..n {
                    y[i] = s * (d[i] * x[i] - y[i] / nf);
                }
            }
        }
    }

    fn symmetric_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let nf = n as f64;
        let s = 1.0 / (self.epsilon * self.epsilon);
        let d = self.graph.degrees();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = match self.kind {
                LaplacianKind::RandomWalk => s,
                LaplacianKind::Unnormalized => s * d[i],
            };
            for (j, w) in self.graph.row(i) {
                m[(i, j)] = -s * w / (nf * self.sqrt_d[i] * self.sqrt_d[j]);
            }
        }
        m
    }

    /// Dense eigendecomposition of the symmetrized operator, computed once.
    pub fn spectrum(&self) -> &Spectrum {
        self.cache.get_or_init(|| {
            let eig = SymmetricEigen::new(self.symmetric_dense());
            Spectrum { values: eig.eigenvalues, vectors: eig.eigenvectors }
        })
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("heat time must be finite and nonnegative, got {t}")));
        }
        Ok(())
    }

    /// `e^{-t Delta} u` on a raw slice.
    pub fn heat(&self, u: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
        Ok(self.heat_many(&[u], t, tol)?.pop().unwrap())
    }

    /// `e^{-t Delta}` applied to several vectors at once.
    pub fn heat_many(&self, us: &[&[f64]], t: f64, tol: f64) -> Result<Vec<Vec<f64>>> {
        Self::check_time(t)?;
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
        }
        let n = self.n();
        for u in us {
            if u.len() != n {
                return Err(Error::Dimension { expected: n, found: u.len() });
            }
        }
        if t == 0.0 {
            return Ok(us.iter().map(|u| u.to_vec()).collect());
        }
        if self.uses_dense() {
            let sp = self.spectrum();
            let b = DMatrix::from_fn(n, us.len(), |i, c| us[c][i] * self.sqrt_d[i]);
            let mut coef = sp.vectors.tr_mul(&b);
            for k in 0..n {
                let f = (-t * sp.values[k]).exp();
                coef.row_mut(k).scale_mut(f);
            }
            let y = &sp.vectors * coef;
            Ok((0..us.len()).map(|c| (0..n).map(|i| y[(i, c)] / self.sqrt_d[i]).collect()).collect())
        } else {
            us.iter().map(|u| self.heat_krylov(u, t, tol)).collect()
        }
    }

    pub fn heat_apply(&self, u: &VectorOnGraph, t: f64, tol: f64) -> Result<VectorOnGraph> {
        u.check(self.graph)?;
        VectorOnGraph::new(self.graph, self.heat(u.values(), t, tol)?)
    }

    fn heat_krylov(&self, u: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
        let b: Vec<f64> = u.iter().zip(&self.sqrt_d).map(|(a, s)| a * s).collect();
        // relative accuracy in symmetrized coordinates that guarantees `tol` after unscaling
        let (lo, hi) = self.sqrt_d.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
        let tol_b = tol * lo / hi;
        let mut worst = f64::INFINITY;
        for level in 0..=MAX_SPLIT_LEVEL {
            let steps = 1usize << level;
            let dt = t / steps as f64;
            let mut x = b.clone();
            let mut ok = true;
            for _ in 0..steps {
                match krylov_expm(|v, w| self.symmetric_matvec(v, w), &x, dt, tol_b / steps as f64) {
                    Ok(y) => x = y,
                    Err(res) => {
                        worst = worst.min(res);
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(x.iter().zip(&self.sqrt_d).map(|(a, s)| a / s).collect());
            }
        }
        Err(Error::ToleranceFailure { residual: worst, tol })
    }
}

/// Lanczos approximation of `e^{-tA} b` for symmetric `A`, with the
/// a-posteriori estimate `|b| beta_m |[e^{-tT_m}]_{m,1}|` as stopping rule.
/// On failure returns the best relative estimate reached.
fn krylov_expm(matvec: impl Fn(&[f64], &mut [f64]), b: &[f64], t: f64, tol: f64) -> std::result::Result<Vec<f64>, f64> {
    let n = b.len();
    let beta0 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if beta0 == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let max_m = KRYLOV_MAX_DIM.min(n);
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut best = f64::INFINITY;
    for j in 0..max_m {
        matvec(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        let bj = dot(&w, &w).sqrt();
        let m = j + 1;
        let coeffs = small_expm_first_column(&alpha, &beta, t);
        let estimate = bj * coeffs[m - 1].abs();
        let invariant = bj <= 1e-13 * (a.abs() + beta.last().copied().unwrap_or(0.0)).max(1e-300);
        if estimate <= tol || invariant || m == n {
            let mut y = vec![0.0; n];
            for (c, v) in coeffs.iter().zip(&basis) {
                axpy(beta0 * c, v, &mut y);
            }
            return Ok(y);
        }
        best = best.min(estimate);
        beta.push(bj);
        basis.push(w.iter().map(|x| x / bj).collect());
    }
    Err(best)
}

/// First column of `exp(-t T)` for the tridiagonal `T(alpha, beta)`.
fn small_expm_first_column(alpha: &[f64], beta: &[f64], t: f64) -> Vec<f64> {
    let m = alpha.len();
    let mut tm = DMatrix::zeros(m, m);
    for i in 0..m {
        tm[(i, i)] = alpha[i];
        if i + 1 < m {
            tm[(i, i + 1)] = beta[i];
            tm[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(tm);
    let q = &eig.eigenvectors;
    (0..m)
        .map(|i| (0..m).map(|k| q[(i, k)] * (-t * eig.eigenvalues[k]).exp() * q[(0, k)]).sum())
        .collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Terms of the energy-dissipation inequality along `v(s) = e^{-s Delta} u`.
#[derive(Debug, Clone, Copy)]
pub struct DissipationAudit {
    pub energy_start: f64,
    pub energy_end: f64,
    /// Trapezoid estimate of `(1/2) int_0^t |Delta v|^2 ds`.
    pub laplacian_term: f64,
    /// Trapezoid estimate of `(1/2) int_0^t |v'|^2 ds`.
    pub velocity_term: f64,
    /// Upper bound on the trapezoid overestimate of both terms.
    pub quadrature_slack: f64,
}

impl DissipationAudit {
    pub fn lhs(&self) -> f64 {
        self.energy_end + self.laplacian_term + self.velocity_term
    }

    pub fn rhs(&self) -> f64 {
        self.energy_start + self.quadrature_slack
    }

    pub fn holds(&self, round_off: f64) -> bool {
        self.lhs() <= self.rhs() + round_off
    }
}

pub const DISSIPATION_NODES: usize = 64;

/// Evaluates both sides of `E[v(t)] + 1/2 int |Delta v|^2 + 1/2 int |v'|^2 <= E[u]`
/// on a geometric time grid. Both integrands are completely monotone, so the
/// trapezoid rule overestimates and the midpoint rule underestimates each
/// panel; their difference is the slack added to the right side.
pub fn dissipation_audit(op: &GraphOperator<'_>, u: &[f64], t: f64, tol: f64) -> Result<DissipationAudit> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("audit time must be positive, got {t}")));
    }
    let lu = op.laplacian(u);
    let mut nodes = vec![0.0];
    let q = (1e6f64).powf(1.0 / (DISSIPATION_NODES as f64 - 2.0));
    for j in 1..DISSIPATION_NODES {
        nodes.push(t * q.powi(-((DISSIPATION_NODES - 1 - j) as i32)));
    }
    let lap_sq = |s: f64| -> Result<f64> {
        let v = op.heat(u, s, tol)?;
        let l = op.laplacian(&v);
        Ok(op.inner(&l, &l))
    };
    let vel_sq = |s: f64| -> Result<f64> {
        let v = op.heat(&lu, s, tol)?;
        Ok(op.inner(&v, &v))
    };
    let mut lap = (0.0, 0.0);
    let mut vel = (0.0, 0.0);
    let mut prev = (lap_sq(0.0)?, vel_sq(0.0)?);
    for p in nodes.windows(2) {
        let (a, b) = (p[0], p[1]);
        let hgt = b - a;
        let mid = 0.5 * (a + b);
        let next = (lap_sq(b)?, vel_sq(b)?);
        let m = (lap_sq(mid)?, vel_sq(mid)?);
        lap.0 += 0.5 * hgt * (prev.0 + next.0);
        lap.1 += hgt * m.0;
        vel.0 += 0.5 * hgt * (prev.1 + next.1);
        vel.1 += hgt * m.1;
        prev = next;
    }
    let end = op.heat(u, t, tol)?;
    Ok(DissipationAudit {
        energy_start: op.dirichlet(u),
        energy_end: op.dirichlet(&end),
        laplacian_term: 0.5 * lap.0,
        velocity_term: 0.5 * vel.0,
        quadrature_slack: 0.5 * ((lap.0 - lap.1) + (vel.0 - vel.1)),
    })
}
