//! Matrix-function centrality and communicability on graphs, hop distances
//! from Krylov bases, and a priori bounds on how far an entry of `f(A)` can
//! move when a localized set of edges changes.

pub mod faber_bounds;
pub mod func;
pub mod graph;
pub mod krylov;
pub mod model;
pub mod oracle;
pub mod sparse;
pub mod spectral;

pub use faber_bounds::{BoundError, BoundReport, Degree, Epsilon, ReportOptions};
pub use func::FunctionDescriptor;
pub use graph::{EdgeAction, EdgeChange, EdgeDelta, Graph, GraphError, Hops, MatrixKind, NodeId};
pub use krylov::{DistanceTracker, KrylovDecomposition, KrylovError};
pub use oracle::{DenseMatrix, OracleError};
pub use sparse::{CsrMatrix, LinearOperator};
pub use spectral::{Region, SpectralError};
