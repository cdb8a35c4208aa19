//! Incremental (k,z)-clustering on weighted undirected graphs.
//!
//! Edges arrive one at a time. A leveled bicriteria structure keeps a
//! candidate set `S` with an assignment `σ`, and a reduction layer turns
//! `σ` into a small vertex-weighted instance that a static solver clusters
//! down to at most `k` centers after every update.
//!
//! Module map:
//! - [`graph`]: the insert-only graph and exact Dijkstra.
//! - [`sssp`]: incremental approximate multi-source distances.
//! - [`mpbi`]: the static leveled sampler with clamped radii.
//! - [`incremental`]: the leveled sampler under edge insertions.
//! - [`spanner`]: weight-class spanner of the reduced instance.
//! - [`weighted`]: static solver for vertex-weighted instances.
//! - [`reduction`]: the reduced instance and its upkeep.
//! - [`pipeline`]: both layers wired to one graph.
//! - [`oracle`]: brute-force optimum and seeded trial suites.
//! - [`verify`]: runtime invariant checks shared by tests and the CLI.

pub mod assign;
pub mod error;
pub mod gen;
pub mod graph;
pub mod incremental;
pub mod mpbi;
pub mod oracle;
pub mod pipeline;
pub mod reduction;
pub mod scale;
pub mod spanner;
pub mod sssp;
pub mod stream;
pub mod verify;
pub mod weighted;

pub use error::{Error, Result};
pub use graph::{DynGraph, VertexId};
