use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::vector::VectorOnGraph;
use crate::error::{Error, Result};
use crate::kernel_graph::SimilarityGraph;

/// Vertex visiting order for the Gauss-Seidel sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    Index,
    /// Fresh random permutation each sweep.
    Shuffled { seed: u64 },
}

/// `max_j w_ij (u_j - u_i) + min_j w_ij (u_j - u_i)` over neighbours `j`.
pub fn infinity_laplacian(graph: &SimilarityGraph, u: &[f64], i: usize) -> f64 {
    local_residual(graph, u, i, u[i])
}

fn local_residual(graph: &SimilarityGraph, u: &[f64], i: usize, x: f64) -> f64 {
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (j, w) in graph.row(i) {
        let v = w * (u[j] - x);
        hi = hi.max(v);
        lo = lo.min(v);
    }
    if hi == f64::NEG_INFINITY {
        0.0
    } else {
        hi + lo
    }
}

/// Root of the decreasing piecewise-linear map `x -> residual at x`.
fn local_solve(graph: &SimilarityGraph, u: &[f64], i: usize) -> f64 {
    let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
    for (j, _) in graph.row(i) {
        a = a.min(u[j]);
        b = b.max(u[j]);
    }
    if a == b {
        return a;
    }
    let mut x = u[i].clamp(a, b);
    for _ in 0..200 {
        // active extremal pair at x
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut wp, mut up, mut wm, mut um) = (0.0, 0.0, 0.0, 0.0);
        for (j, w) in graph.row(i) {
            let v = w * (u[j] - x);
            if v > hi {
                hi = v;
                wp = w;
                up = u[j];
            }
            if v < lo {
                lo = v;
                wm = w;
                um = u[j];
            }
        }
        let g = hi + lo;
        if g == 0.0 {
            return x;
        }
        if g > 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = (wp * up + wm * um) / (wp + wm);
        let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if next == x || b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Infinity-harmonic extension of `boundary` by Gauss-Seidel sweeps.
pub fn infinity_laplacian_solve(
    graph: &SimilarityGraph,
    boundary: &[(usize, f64)],
    tol: f64,
    max_iter: usize,
) -> Result<VectorOnGraph> {
    infinity_laplacian_solve_with(graph, boundary, tol, max_iter, SweepOrder::Index)
}

pub fn infinity_laplacian_solve_with(
    graph: &SimilarityGraph,
    boundary: &[(usize, f64)],
    tol: f64,
    max_iter: usize,
    order: SweepOrder,
) -> Result<VectorOnGraph> {
    let n = graph.n();
    if boundary.is_empty() {
        return Err(Error::MissingLabels("infinity-harmonic extension needs boundary values".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut fixed = vec![false; n];
    let mut u = vec![0.0; n];
    for &(i, v) in boundary {
        if i >= n {
            return Err(Error::Dimension { expected: n, found: i + 1 });
        }
        if !v.is_finite() {
            return Err(Error::Domain(format!("boundary value at {i} is not finite")));
        }
        fixed[i] = true;
        u[i] = v;
    }
    let mut free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if let Some(&i) = free.iter().find(|&&i| graph.row(i).next().is_none()) {
        return Err(Error::IsolatedVertex { vertex: i });
    }
    // start from the boundary mean so the iterate lies inside the comparison bounds
    let mean = boundary.iter().map(|b| b.1).sum::<f64>() / boundary.len() as f64;
    for &i in &free {
        u[i] = mean;
    }
    let mut rng = match order {
        SweepOrder::Shuffled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        SweepOrder::Index => None,
    };
    let residual = |u: &[f64], free: &[usize]| free.iter().map(|&i| infinity_laplacian(graph, u, i).abs()).fold(0.0, f64::max);
    let mut res = residual(&u, &free);
    for _ in 0..max_iter {
        if res <= tol {
            return VectorOnGraph::new(graph, u);
        }
        if let Some(r) = rng.as_mut() {
            free.shuffle(r);
        }
        for &i in &free {
            u[i] = local_solve(graph, &u, i);
        }
        res = residual(&u, &free);
    }
    if res <= tol {
        return VectorOnGraph::new(graph, u);
    }
    Err(Error::Convergence { residual: res, iterations: max_iter })
}
