//! Graph MBO threshold dynamics: similarity graphs, heat semigroups,
//! multiclass and semi-supervised MBO, and numerical experiments.

pub mod error;
pub mod grid;
pub mod kernel_graph;
pub mod lab;
pub mod mbo;
pub mod operators;
pub mod quadrature;

pub use error::{Error, Result};
