//! Shared fixtures and independent oracles for the integration suites.
#![allow(dead_code)]

use graph_mbo::kernel_graph::SimilarityGraph;
use graph_mbo::mbo::{LabelField, SurfaceTension};
use graph_mbo::operators::LaplacianKind;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric graph: a weighted path (so no vertex is isolated) plus
/// random extra edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SimilarityGraph {
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || rng.random::<f64>() < density {
                let v = rng.random_range(0.1..2.0);
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
    }
    let eps = rng.random_range(0.3..1.5);
    SimilarityGraph::from_dense(n, eps, &w).unwrap()
}

/// Dense Laplacian matrix of the given kind.
pub fn laplacian_matrix(g: &SimilarityGraph, kind: LaplacianKind) -> DMatrix<f64> {
    let n = g.n();
    let nf = n as f64;
    let e2 = g.epsilon() * g.epsilon();
    let w = DMatrix::from_row_slice(n, n, &g.to_dense());
    let d = g.degrees();
    DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        match kind {
            LaplacianKind::RandomWalk => (id - w[(i, j)] / (nf * d[i])) / e2,
            LaplacianKind::Unnormalized => (id * d[i] - w[(i, j)] / nf) / e2,
        }
    })
}

/// `exp(-t L)` by the general (Pade) matrix exponential, no symmetrization.
pub fn heat_matrix(g: &SimilarityGraph, kind: LaplacianKind, t: f64) -> DMatrix<f64> {
    (laplacian_matrix(g, kind) * (-t)).exp()
}

/// Vertex weights of the inner product matching the operator kind.
pub fn measure(g: &SimilarityGraph, kind: LaplacianKind) -> Vec<f64> {
    let n = g.n() as f64;
    match kind {
        LaplacianKind::RandomWalk => g.degrees().iter().map(|d| d / n).collect(),
        LaplacianKind::Unnormalized => vec![1.0 / n; g.n()],
    }
}

/// Random valid surface tension: pairwise distances of random points in the
/// plane (Euclidean distances are conditionally negative definite).
pub fn random_sigma(rng: &mut ChaCha8Rng, p: usize) -> SurfaceTension {
    let pts: Vec<(f64, f64)> = (0..p).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let rows: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| if i == j { 0.0 } else { ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt() + 0.05 })
                .collect()
        })
        .collect();
    // adding a constant off the diagonal keeps negative type and the triangle inequality
    SurfaceTension::try_from(rows).unwrap()
}

pub fn random_classes(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..p)).collect()
}

/// Exhaustive minimizer of the movement functional over all hard labelings.
/// Returns the lexicographically first labeling (vertex 0 most significant,
/// lower classes first) whose value is within `rel_tol` of the minimum.
pub struct BruteForce {
    pub best: Vec<usize>,
    pub min: f64,
}

pub fn brute_force_argmin(
    heat: &DMatrix<f64>,
    mu: &[f64],
    sigma: &SurfaceTension,
    chi: &[usize],
    h: f64,
    rel_tol: f64,
) -> BruteForce {
    let n = chi.len();
    let p = sigma.p();
    // A = diag(mu) H is symmetric for either kind
    let a = DMatrix::from_fn(n, n, |x, y| mu[x] * heat[(x, y)]);
    let s = |i: usize, j: usize| sigma.get(i, j);
    let scale = h.sqrt().recip();
    let value = |c: &[usize]| -> f64 {
        let mut e = 0.0;
        let mut q = 0.0;
        for x in 0..n {
            for y in 0..n {
                let axy = a[(x, y)];
                e += s(c[x], c[y]) * axy;
                q += axy * (s(c[x], c[y]) - s(c[x], chi[y]) - s(chi[x], c[y]) + s(chi[x], chi[y]));
            }
        }
        scale * (e - q)
    };
    let total = p.pow(n as u32);
    let mut values = Vec::with_capacity(total);
    let mut c = vec![0usize; n];
    for code in 0..total {
        let mut k = code;
        for x in (0..n).rev() {
            c[x] = k % p;
            k /= p;
        }
        values.push(value(&c));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mag = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let first = values.iter().position(|&v| v <= min + rel_tol * mag).unwrap();
    let mut best = vec![0; n];
    let mut k = first;
    for x in (0..n).rev() {
        best[x] = k % p;
        k /= p;
    }
    BruteForce { best, min }
}

pub fn hard(classes: &[usize], p: usize) -> LabelField {
    LabelField::from_classes(classes, p).unwrap()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
