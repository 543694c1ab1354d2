//! Point clouds, kernel profiles and similarity graphs.

mod cloud;
mod graph;
mod kdtree;
mod kernel;

pub use cloud::{DensityDescriptor, Metric, PointCloud};
pub use graph::{
    build_graph, build_graph_with, epsilon_rule, map_rows, streamed_degrees, streamed_dirichlet, GraphOptions,
    SimilarityGraph, DEFAULT_FLOOR,
};
pub use kernel::{kernel_constants, KernelConstants, KernelProfile, KernelShape};
