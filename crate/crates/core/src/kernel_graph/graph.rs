use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cloud::{dist2, Metric, PointCloud};
use super::kdtree::KdTree;
use super::kernel::KernelProfile;
use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// Default relative weight floor: entries below `floor * eps^-k` are dropped.
pub const DEFAULT_FLOOR: f64 = 1e-14;

/// Above this size neighbour search uses a kd-tree.
const BRUTE_FORCE_MAX: usize = 2000;

/// Scale rule `eps(n) = (log n / n)^(1/(k+3))`.
pub fn epsilon_rule(n: usize, k: usize) -> f64 {
    let n = n as f64;
    (n.ln() / n).powf(1.0 / (k as f64 + 3.0))
}

#[derive(Debug, Clone, Copy)]
pub struct GraphOptions {
    pub floor: f64,
    /// Force the brute-force neighbour search regardless of size.
    pub brute_force: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self { floor: DEFAULT_FLOOR, brute_force: false }
    }
}

/// Symmetric weighted graph in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    id: u64,
    n: usize,
    epsilon: f64,
    lambda: f64,
    kernel: Option<KernelProfile>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    degrees: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphHeader {
    n: usize,
    epsilon: f64,
    lambda: f64,
    kernel: Option<KernelProfile>,
    entries: usize,
}

/// Per-row neighbour computation shared by graph assembly and the streaming
/// reductions used for graphs too large to store.
struct RowBuilder<'a> {
    cloud: &'a PointCloud,
    metric: Metric,
    epsilon: f64,
    profile: KernelProfile,
    scale: f64,
    floor: f64,
    radius: f64,
    tree: Option<KdTree<'a>>,
    shifts: Vec<Vec<f64>>,
}

impl<'a> RowBuilder<'a> {
    fn new(cloud: &'a PointCloud, epsilon: f64, profile: &KernelProfile, opts: GraphOptions) -> Result<Self> {
        profile.validate()?;
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if profile.k != cloud.k {
            return Err(Error::Dimension { expected: cloud.k, found: profile.k });
        }
        if !(opts.floor >= 0.0) {
            return Err(Error::Domain("weight floor must be nonnegative".into()));
        }
        let metric = cloud.metric();
        let radius = match profile.cutoff(opts.floor) {
            Some(r) => r * epsilon,
            None => return Err(Error::Domain("weight floor exceeds the kernel peak".into())),
        };
        let n = cloud.len();
        let periodic_full = metric == Metric::Periodic && radius >= 0.5;
        let use_tree = !opts.brute_force && n > BRUTE_FORCE_MAX && !periodic_full;
        let mut shifts = vec![vec![0.0; cloud.dim()]];
        if use_tree && metric == Metric::Periodic {
            shifts.clear();
            let d = cloud.dim();
            for code in 0..3usize.pow(d as u32) {
                let mut c = code;
                let mut s = vec![0.0; d];
                for v in s.iter_mut() {
                    *v = (c % 3) as f64 - 1.0;
                    c /= 3;
                }
                shifts.push(s);
            }
        }
        Ok(Self {
            cloud,
            metric,
            epsilon,
            profile: *profile,
            scale: epsilon.powi(-(profile.k as i32)),
            floor: opts.floor,
            radius,
            tree: use_tree.then(|| KdTree::build(cloud.coords(), cloud.dim())),
            shifts,
        })
    }

    #[inline]
    fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let d = dist2(self.metric, self.cloud.point(i), self.cloud.point(j)).sqrt();
        let eta = self.profile.eval(d / self.epsilon);
        (eta > 0.0 && eta >= self.floor).then_some(self.scale * eta)
    }

    /// Neighbours of `i` sorted by index, excluding `i` itself.
    fn row(&self, i: usize, out: &mut Vec<(u32, f64)>) {
        out.clear();
        match &self.tree {
            None => {
                for j in 0..self.cloud.len() {
                    if j != i {
                        if let Some(w) = self.weight(i, j) {
                            out.push((j as u32, w));
                        }
                    }
                }
            }
            Some(tree) => {
                let q = self.cloud.point(i);
                let mut shifted = q.to_vec();
                // slack so the candidate set is a superset; weights are recomputed exactly
                let r = self.radius * (1.0 + 1e-9) + 1e-12;
                for s in &self.shifts {
                    let mut needed = true;
                    for (c, sv) in s.iter().enumerate() {
                        shifted[c] = q[c] + sv;
                        if *sv < 0.0 && q[c] + r < 1.0 || *sv > 0.0 && q[c] - r > 0.0 {
                            needed = false;
                        }
                    }
                    if !needed {
                        continue;
                    }
                    tree.for_each_within(&shifted, r, |j, _| {
                        if j != i {
                            if let Some(w) = self.weight(i, j) {
                                out.push((j as u32, w));
                            }
                        }
                    });
                }
                out.sort_unstable_by_key(|e| e.0);
                out.dedup_by_key(|e| e.0);
            }
        }
    }
}

/// Applies `map` to every weight row of the graph `build_graph` would produce,
/// without storing the matrix. Rows are built in parallel; results are in
/// vertex order.
pub fn map_rows<T, F>(cloud: &PointCloud, epsilon: f64, profile: &KernelProfile, opts: GraphOptions, map: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &[(u32, f64)]) -> T + Sync,
{
    let rb = RowBuilder::new(cloud, epsilon, profile, opts)?;
    Ok((0..cloud.len())
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            rb.row(i, buf);
            map(i, buf)
        })
        .collect())
}

/// Degrees `(1/n) sum_j w_ij` without assembling the graph.
pub fn streamed_degrees(cloud: &PointCloud, epsilon: f64, profile: &KernelProfile, opts: GraphOptions) -> Result<Vec<f64>> {
    let n = cloud.len() as f64;
    map_rows(cloud, epsilon, profile, opts, |_, row| row.iter().map(|e| e.1).sum::<f64>() / n)
}

/// Graph Dirichlet energy of `u` without assembling the graph.
pub fn streamed_dirichlet(cloud: &PointCloud, epsilon: f64, profile: &KernelProfile, opts: GraphOptions, u: &[f64]) -> Result<f64> {
    let n = cloud.len();
    if u.len() != n {
        return Err(Error::Dimension { expected: n, found: u.len() });
    }
    let rows = map_rows(cloud, epsilon, profile, opts, |i, row| {
        row.iter().map(|&(j, w)| w * (u[j as usize] - u[i]).powi(2)).sum::<f64>()
    })?;
    let nf = n as f64;
    Ok(rows.iter().sum::<f64>() / (4.0 * nf * nf * epsilon * epsilon))
}

/// Builds `w_ij = eps^-k eta(|X_i - X_j| / eps)` with the default floor.
pub fn build_graph(cloud: &PointCloud, epsilon: f64, profile: &KernelProfile) -> Result<SimilarityGraph> {
    build_graph_with(cloud, epsilon, profile, GraphOptions::default())
}

pub fn build_graph_with(cloud: &PointCloud, epsilon: f64, profile: &KernelProfile, opts: GraphOptions) -> Result<SimilarityGraph> {
    let rows = map_rows(cloud, epsilon, profile, opts, |_, row| row.to_vec())?;
    let mut g = SimilarityGraph::from_rows(cloud.len(), epsilon, rows)?;
    g.kernel = Some(*profile);
    Ok(g)
}

impl SimilarityGraph {
    fn from_rows(n: usize, epsilon: f64, rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for r in rows {
            for (j, w) in r {
                cols.push(j);
                vals.push(w);
            }
            row_ptr.push(cols.len());
        }
        let mut g = Self {
            id: fresh_id(),
            n,
            epsilon,
            lambda: 0.0,
            kernel: None,
            row_ptr,
            cols,
            vals,
            degrees: Vec::new(),
        };
        g.degrees = g.compute_degrees()?;
        Ok(g)
    }

    /// Graph from an explicit dense weight matrix (row-major). Zero entries
    /// are not stored.
    pub fn from_dense(n: usize, epsilon: f64, weights: &[f64]) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::Dimension { expected: n * n, found: weights.len() });
        }
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = weights[i * n + j];
                if w != 0.0 {
                    triplets.push((i, j, w));
                }
            }
        }
        Self::from_triplets(n, epsilon, &triplets)
    }

    /// Graph from `(i, j, w)` entries; both orientations must be listed.
    pub fn from_triplets(n: usize, epsilon: f64, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("graph needs at least one vertex".into()));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in triplets {
            if i >= n || j >= n {
                return Err(Error::Dimension { expected: n, found: i.max(j) + 1 });
            }
            if i == j && w != 0.0 {
                return Err(Error::Domain(format!("nonzero diagonal weight at {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Domain(format!("weight ({i},{j}) = {w} is not a nonnegative number")));
            }
            if w > 0.0 {
                rows[i].push((j as u32, w));
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable_by_key(|e| e.0);
            if r.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::Domain("duplicate weight entry".into()));
            }
        }
        let g = Self::from_rows(n, epsilon, rows)?;
        for i in 0..n {
            for (j, w) in g.row(i) {
                if g.weight(j, i) != w {
                    return Err(Error::Domain(format!("weights not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(g)
    }

    fn compute_degrees(&self) -> Result<Vec<f64>> {
        let nf = self.n as f64;
        let mut d = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let di = self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum::<f64>() / nf;
            if !(di > 0.0) {
                return Err(Error::IsolatedVertex { vertex: i });
            }
            d.push(di);
        }
        Ok(d)
    }

    /// Data-dependent weights `w_ij / (d_i d_j)^lambda` with recomputed degrees.
    pub fn reweight_lambda(&self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be finite, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(self.clone());
        }
        if self.lambda != 0.0 {
            return Err(Error::Domain("graph is already reweighted".into()));
        }
        let mut g = self.clone();
        g.id = fresh_id();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p] as usize;
                g.vals[p] = self.vals[p] / (self.degrees[i] * self.degrees[j]).powf(lambda);
            }
        }
        g.lambda = lambda;
        g.degrees = g.compute_degrees()?;
        Ok(g)
    }

    /// Identity used to bind vectors to this graph.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel(&self) -> Option<&KernelProfile> {
        self.kernel.as_ref()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Number of stored (directed) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.vals[r].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// Raw CSR arrays `(row_ptr, cols, vals)`.
    pub fn csr(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }

    /// `y = W x`.
    pub fn weight_matvec(&self, x: &[f64], y: &mut [f64]) {
        let rp = &self.row_ptr;
        let (cols, vals) = (&self.cols, &self.vals);
        let body = |(i, yi): (usize, &mut f64)| {
            let mut s = 0.0;
            for p in rp[i]..rp[i + 1] {
                s += vals[p] * x[cols[p] as usize];
            }
            *yi = s;
        };
        if self.vals.len() > 200_000 {
            y.par_iter_mut().enumerate().for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                m[i * self.n + j] = w;
            }
        }
        m
    }

    /// Writes the triplet CSV `(i, j, w)` and its JSON header.
    pub fn write(&self, csv_path: impl AsRef<Path>, header_path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record(["i", "j", "w"])?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                w.write_record([i.to_string(), j.to_string(), format!("{v:e}")])?;
            }
        }
        w.flush()?;
        let header = GraphHeader {
            n: self.n,
            epsilon: self.epsilon,
            lambda: self.lambda,
            kernel: self.kernel,
            entries: self.nnz(),
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(header_path)?), &header)?;
        Ok(())
    }

    pub fn read(csv_path: impl AsRef<Path>, header_path: impl AsRef<Path>) -> Result<Self> {
        let header: GraphHeader = serde_json::from_reader(File::open(header_path)?)?;
        let mut rdr = csv::Reader::from_path(csv_path)?;
        let mut triplets = Vec::with_capacity(header.entries);
        for rec in rdr.deserialize() {
            let (i, j, w): (usize, usize, f64) = rec?;
            triplets.push((i, j, w));
        }
        let mut g = Self::from_triplets(header.n, header.epsilon, &triplets)?;
        g.lambda = header.lambda;
        g.kernel = header.kernel;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_graph::cloud::DensityDescriptor;

    fn custom() -> DensityDescriptor {
        DensityDescriptor::Custom { name: "test".into() }
    }

    #[test]
    fn two_points_at_distance_eps() {
        let eps = 0.3;
        let c = PointCloud::from_rows(&[vec![0.0, 0.0], vec![eps, 0.0]], 2, custom()).unwrap();
        let g = build_graph(&c, eps, &KernelProfile::gaussian(2)).unwrap();
        let want = (-1.0f64).exp() / (eps * eps);
        assert!((g.weight(0, 1) - want).abs() <= 1e-15 * want);
        assert_eq!(g.weight(0, 1), g.weight(1, 0));
    }

    #[test]
    fn two_point_degrees() {
        let c = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]], 2, custom()).unwrap();
        let g = build_graph(&c, 1.0, &KernelProfile::gaussian(2)).unwrap();
        let want = (-1.0f64).exp() / 2.0;
        for d in g.degrees() {
            assert!((d - want).abs() < 1e-16);
        }
    }

    #[test]
    fn single_point_is_isolated() {
        let c = PointCloud::from_rows(&[vec![0.0, 0.0]], 2, custom()).unwrap();
        let r = build_graph(&c, 1.0, &KernelProfile::gaussian(2));
        assert!(matches!(r, Err(Error::IsolatedVertex { vertex: 0 })));
    }

    #[test]
    fn far_points_are_isolated_after_floor() {
        let c = PointCloud::from_rows(&[vec![0.0], vec![100.0]], 1, custom()).unwrap();
        let r = build_graph(&c, 1.0, &KernelProfile::gaussian(1));
        assert!(matches!(r, Err(Error::IsolatedVertex { .. })));
    }

    #[test]
    fn lambda_one_on_two_nodes() {
        let g = SimilarityGraph::from_dense(2, 1.0, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(g.degrees(), &[0.5, 0.5]);
        let r = g.reweight_lambda(1.0).unwrap();
        assert_eq!(r.weight(0, 1), 4.0);
        assert_eq!(r.degrees(), &[2.0, 2.0]);
        assert_eq!(r.lambda(), 1.0);
        assert_ne!(r.id(), g.id());
    }

    #[test]
    fn lambda_half_on_regular_graph() {
        // 4-cycle with unit weights: every degree is 2/4
        let mut w = vec![0.0; 16];
        for i in 0..4 {
            let j = (i + 1) % 4;
            w[i * 4 + j] = 1.0;
            w[j * 4 + i] = 1.0;
        }
        let g = SimilarityGraph::from_dense(4, 1.0, &w).unwrap();
        let c = g.degrees()[0];
        let r = g.reweight_lambda(0.5).unwrap();
        for i in 0..4 {
            for (j, v) in r.row(i) {
                assert!((v - g.weight(i, j) / c).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let r = SimilarityGraph::from_dense(2, 1.0, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn epsilon_rule_values() {
        let e = epsilon_rule(1000, 2);
        assert!((e - (1000f64.ln() / 1000.0).powf(0.2)).abs() < 1e-15);
        assert!(epsilon_rule(4000, 2) < e);
    }

    #[test]
    fn triplet_round_trip() {
        let c = PointCloud::from_rows(
            &[vec![0.0, 0.0], vec![0.5, 0.1], vec![0.2, 0.9], vec![1.0, 1.0]],
            2,
            custom(),
        )
        .unwrap();
        let g = build_graph(&c, 0.7, &KernelProfile::gaussian(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("g.csv"), dir.path().join("g.json"));
        g.write(&a, &b).unwrap();
        let back = SimilarityGraph::read(&a, &b).unwrap();
        assert_eq!(back.to_dense(), g.to_dense());
        assert_eq!(back.kernel(), g.kernel());
    }
}
