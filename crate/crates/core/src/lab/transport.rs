use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_graph::PointCloud;

/// Largest size accepted by the exact assignment solver.
pub const EXACT_MAX: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportMethod {
    /// Optimal assignment (equal sizes only).
    Exact,
    /// Mutual nearest neighbours, then nearest remaining; a capacity-respecting
    /// greedy coupling when sizes differ.
    Greedy,
}

/// Coupling between two empirical measures with uniform masses.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub source_indices: Vec<usize>,
    pub target_indices: Vec<usize>,
    pub masses: Vec<f64>,
    /// `sum_k m_k d(x_k, y_k)^2`
    pub cost_distance_sq: f64,
    /// `sum_k m_k |u(x_k) - v(y_k)|^2`
    pub cost_function_sq: f64,
    /// False when distances are ambient Euclidean stand-ins for geodesics.
    pub geodesic_exact: bool,
    pub method: TransportMethod,
}

impl TransportPlan {
    pub fn distance(&self) -> f64 {
        (self.cost_distance_sq + self.cost_function_sq).sqrt()
    }

    /// Mass of pairs on which `agree(i, j)` holds.
    pub fn agreement(&self, mut agree: impl FnMut(usize, usize) -> bool) -> f64 {
        let mut s = 0.0;
        for k in 0..self.masses.len() {
            if agree(self.source_indices[k], self.target_indices[k]) {
                s += self.masses[k];
            }
        }
        s
    }
}

/// Optimal assignment for a square cost matrix (row-major), by the
/// shortest augmenting path method with potentials. Returns the column of each row.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Equal sizes: one round of mutual nearest neighbours, then each unmatched
/// source (in index order) takes its nearest unmatched target.
fn greedy_bijection(n: usize, cost: &(impl Fn(usize, usize) -> f64 + Sync)) -> Vec<usize> {
    use rayon::prelude::*;
    let argmin = |f: &dyn Fn(usize) -> f64| {
        let mut best = (f64::INFINITY, 0);
        for j in 0..n {
            let c = f(j);
            if c < best.0 {
                best = (c, j);
            }
        }
        best.1
    };
    let nn_row: Vec<usize> = (0..n).into_par_iter().map(|i| argmin(&|j| cost(i, j))).collect();
    let nn_col: Vec<usize> = (0..n).into_par_iter().map(|j| argmin(&|i| cost(i, j))).collect();
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for i in 0..n {
        let j = nn_row[i];
        if nn_col[j] == i {
            assign[i] = j;
            taken[j] = true;
        }
    }
    for i in 0..n {
        if assign[i] == usize::MAX {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..n {
                if !taken[j] {
                    let c = cost(i, j);
                    if c < best.0 || best.1 == usize::MAX {
                        best = (c, j);
                    }
                }
            }
            assign[i] = best.1;
            taken[best.1] = true;
        }
    }
    assign
}

/// Unequal sizes: greedy on the globally sorted list of short candidate
/// pairs, moving as much mass as capacities allow, then nearest-remaining
/// for leftovers. Masses are in units of `1/(na nb)`.
fn greedy_coupling(na: usize, nb: usize, cost: &(impl Fn(usize, usize) -> f64 + Sync)) -> Vec<(usize, usize, u64)> {
    use rayon::prelude::*;
    let kk = (8 * nb.div_ceil(na) + 8).min(nb);
    let mut cand: Vec<(f64, usize, usize)> = (0..na)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut row: Vec<(f64, usize)> = (0..nb).map(|j| (cost(i, j), j)).collect();
            if kk < nb {
                row.select_nth_unstable_by(kk, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                row.truncate(kk);
            }
            row.into_iter().map(move |(c, j)| (c, i, j))
        })
        .collect();
    cand.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut src = vec![nb as u64; na];
    let mut dst = vec![na as u64; nb];
    let mut out = Vec::new();
    for &(_, i, j) in &cand {
        let m = src[i].min(dst[j]);
        if m > 0 {
            src[i] -= m;
            dst[j] -= m;
            out.push((i, j, m));
        }
    }
    for i in 0..na {
        while src[i] > 0 {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..nb {
                if dst[j] > 0 {
                    let c = cost(i, j);
                    if c < best.0 || best.1 == usize::MAX {
                        best = (c, j);
                    }
                }
            }
            let j = best.1;
            let m = src[i].min(dst[j]);
            src[i] -= m;
            dst[j] -= m;
            out.push((i, j, m));
        }
    }
    out
}

fn check_geometry(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.dim() != b.dim() || a.density != b.density {
        return Err(Error::Method("clouds live on different spaces".into()));
    }
    Ok(())
}

/// Coupling of two clouds that optionally includes a field discrepancy in the cost.
fn couple(
    a: &PointCloud,
    ua: Option<&[f64]>,
    b: &PointCloud,
    ub: Option<&[f64]>,
    method: TransportMethod,
) -> Result<TransportPlan> {
    check_geometry(a, b)?;
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return Err(Error::Method("empty cloud".into()));
    }
    let dist2 = |i: usize, j: usize| a.geodesic(a.point(i), b.point(j)).powi(2);
    let fdiff2 = |i: usize, j: usize| match (ua, ub) {
        (Some(x), Some(y)) => (x[i] - y[j]).powi(2),
        _ => 0.0,
    };
    let cost = |i: usize, j: usize| dist2(i, j) + fdiff2(i, j);
    let triples: Vec<(usize, usize, f64)> = match method {
        TransportMethod::Exact => {
            if na != nb {
                return Err(Error::Method(format!("exact assignment needs equal sizes, got {na} and {nb}")));
            }
            if na > EXACT_MAX {
                return Err(Error::Method(format!("exact assignment is limited to {EXACT_MAX} points, got {na}")));
            }
            let mut c = vec![0.0; na * na];
            for i in 0..na {
                for j in 0..na {
                    c[i * na + j] = cost(i, j);
                }
            }
            hungarian(&c, na).into_iter().enumerate().map(|(i, j)| (i, j, 1.0 / na as f64)).collect()
        }
        TransportMethod::Greedy if na == nb => {
            greedy_bijection(na, &cost).into_iter().enumerate().map(|(i, j)| (i, j, 1.0 / na as f64)).collect()
        }
        TransportMethod::Greedy => {
            let unit = 1.0 / (na as f64 * nb as f64);
            greedy_coupling(na, nb, &cost).into_iter().map(|(i, j, m)| (i, j, m as f64 * unit)).collect()
        }
    };
    let mut plan = TransportPlan {
        source_indices: Vec::with_capacity(triples.len()),
        target_indices: Vec::with_capacity(triples.len()),
        masses: Vec::with_capacity(triples.len()),
        cost_distance_sq: 0.0,
        cost_function_sq: 0.0,
        geodesic_exact: a.geodesic_is_exact(),
        method,
    };
    for (i, j, m) in triples {
        plan.cost_distance_sq += m * dist2(i, j);
        plan.cost_function_sq += m * fdiff2(i, j);
        plan.source_indices.push(i);
        plan.target_indices.push(j);
        plan.masses.push(m);
    }
    Ok(plan)
}

/// Matching-family upper bound on the TL2 distance between `(a, ua)` and `(b, ub)`.
pub fn tl2_distance(
    a: &PointCloud,
    ua: &[f64],
    b: &PointCloud,
    ub: &[f64],
    method: TransportMethod,
) -> Result<(TransportPlan, f64)> {
    if ua.len() != a.len() {
        return Err(Error::Dimension { expected: a.len(), found: ua.len() });
    }
    if ub.len() != b.len() {
        return Err(Error::Dimension { expected: b.len(), found: ub.len() });
    }
    let plan = couple(a, Some(ua), b, Some(ub), method)?;
    let d = plan.distance();
    Ok((plan, d))
}

/// Coupling driven by point positions alone.
pub fn geometric_coupling(a: &PointCloud, b: &PointCloud, method: TransportMethod) -> Result<TransportPlan> {
    couple(a, None, b, None, method)
}
