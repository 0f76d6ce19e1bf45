//! Multiclass linear discriminant analysis with a prototype-based solver family.
//!
//! The crate covers four linear solvers over a shared objective
//! `J(A) = tr{(AᵀS_tA)† AᵀS_bA}`:
//!
//! - `eig-lda`: the classical generalized-eigenvector solution with `C−1` features,
//! - `lda++`: the closed form `A = S_t†M` with one feature per cluster prototype,
//! - `eig-lda++`: `lda++` composed with a metric-changing eigenbasis,
//! - `sw-pinv-m`: `A = S_w†M`, optimal only when `S_w` and `M̂ᵀS_w⁻¹M̂` are invertible,
//!
//! plus the kernelized counterparts, k-means subclass partitioning, and a
//! nearest-neighbor cross-validation harness. Every solver runs in two modes:
//! `ldlss` forms the `D×D` scatter matrices explicitly, `hdsss` works from the
//! tall factor matrices and never materializes anything `D×D`.
//!
//! All fitting entry points are pure functions of an immutable [`Dataset`];
//! fitted models are plain data and safe to share across threads.

pub mod cluster;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod numerics;
pub mod scatter;
pub mod solvers;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use eval::{EquivalenceReport, EvalReport};
pub use kernel::{KernelDescriptor, KernelKind, KernelModel, KernelSolverKind};
pub use scatter::{ClusterStats, FactorSet, ScatterSet};
pub use solvers::{BayesWeights, LdaModel, Mode, SolverConfig, SolverKind};
