//! Discrete Schrödinger operators on weighted graphs.
//!
//! A graph `(X, b, m, q)` carries a symmetric edge weight `b`, a vertex
//! measure `m` and a potential `q`. The formal operator is
//!
//! ```text
//! Hf(x) = (1/m(x)) Σ_y b(x,y)(f(x) − f(y)) + q(x) f(x)
//! ```
//!
//! and its form is `h(φ) = Σ_edges b (φ(x) − φ(y))² + Σ_x q φ² m`. The crate
//! evaluates identities and inequalities for these objects on finite
//! truncations and returns [`report::VerificationReport`]s stating both sides.

pub mod agmon;
pub mod error;
pub mod exhaustion;
pub mod fixtures;
pub mod generators;
pub mod graph;
pub mod hardy;
pub mod io;
pub mod metrics;
pub mod operator;
pub mod report;
pub mod spectral;
pub mod suites;

pub use error::{Error, Result};
pub use graph::{build_graph, dirichlet_restriction, neighborhood, Edge, GraphFunction, VertexSet, WeightedGraph};
pub use report::VerificationReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
