//! Word-association graphs, moral value propagation over them, and the
//! evaluation and comparative analysis of the resulting moral networks.

pub mod analysis;
pub mod data_io;
pub mod dimension;
pub mod elicitation;
pub mod evaluation;
pub mod graph;
pub mod propagation;
pub mod sparse;

pub use dimension::{Dimension, DIMENSION_COUNT};
