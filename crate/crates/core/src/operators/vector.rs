use crate::error::{Error, Result};
use crate::kernel_graph::SimilarityGraph;

/// Real function on the vertices of a specific graph.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorOnGraph {
    graph_id: u64,
    values: Vec<f64>,
}

impl VectorOnGraph {
    pub fn new(graph: &SimilarityGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.n() {
            return Err(Error::Dimension { expected: graph.n(), found: values.len() });
        }
        Ok(Self { graph_id: graph.id(), values })
    }

    pub fn constant(graph: &SimilarityGraph, c: f64) -> Self {
        Self { graph_id: graph.id(), values: vec![c; graph.n()] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check(&self, graph: &SimilarityGraph) -> Result<()> {
        if self.values.len() != graph.n() {
            return Err(Error::Dimension { expected: graph.n(), found: self.values.len() });
        }
        if self.graph_id != graph.id() {
            return Err(Error::GraphMismatch);
        }
        Ok(())
    }

    /// Single-column CSV aligned to vertex index.
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["value"])?;
        for v in &self.values {
            w.write_record([v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(graph: &SimilarityGraph, path: impl AsRef<std::path::Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut values = Vec::new();
        for rec in r.deserialize() {
            let (v,): (f64,) = rec?;
            values.push(v);
        }
        Self::new(graph, values)
    }
}

/// Which vertex measure an inner product uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `(1/n) sum d_i u_i v_i`
    Degree,
    /// `(1/n) sum u_i v_i`
    Uniform,
}

pub(crate) fn inner_slices(graph: &SimilarityGraph, weighting: Weighting, u: &[f64], v: &[f64]) -> f64 {
    let n = graph.n() as f64;
    match weighting {
        Weighting::Degree => graph.degrees().iter().zip(u).zip(v).map(|((d, a), b)| d * a * b).sum::<f64>() / n,
        Weighting::Uniform => u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / n,
    }
}

/// Vertex inner product; `Weighting::Uniform` gives the unweighted variant
/// paired with the unnormalized Laplacian.
pub fn inner_product_v(graph: &SimilarityGraph, u: &VectorOnGraph, v: &VectorOnGraph, weighting: Weighting) -> Result<f64> {
    u.check(graph)?;
    v.check(graph)?;
    Ok(inner_slices(graph, weighting, &u.values, &v.values))
}

pub(crate) fn dirichlet_slice(graph: &SimilarityGraph, u: &[f64]) -> f64 {
    let n = graph.n() as f64;
    let mut s = 0.0;
    for i in 0..graph.n() {
        for (j, w) in graph.row(i) {
            let d = u[j] - u[i];
            s += w * d * d;
        }
    }
    s / (4.0 * n * n * graph.epsilon() * graph.epsilon())
}

/// `(1/(4 n^2 eps^2)) sum_ij w_ij (u_j - u_i)^2`
pub fn dirichlet_energy(graph: &SimilarityGraph, u: &VectorOnGraph) -> Result<f64> {
    u.check(graph)?;
    Ok(dirichlet_slice(graph, &u.values))
}
