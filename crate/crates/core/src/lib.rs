//! Pattern-completion actors in a linguistic multi-actor environment, with
//! probes for conventions, sanctions and norms.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which the harness uses throughout.

pub mod actor;
pub mod consolidation;
pub mod env;
pub mod error;
pub mod harness;
pub mod memory;
pub mod pcn;
pub mod probes;
pub mod record;
pub mod scalar;
pub mod seed;
pub mod symbols;
pub mod workspace;

pub use error::{Error, Result};
pub use memory::{MemoryBank, SimilarityMetric};
pub use pcn::{population_average, sample, Pcn, RemoteConfig, RemotePcn};
pub use record::{render_record, MemoryRecord, Sanction, Valence};
pub use scalar::Scalar;
pub use seed::SeedStream;
pub use symbols::{normalize, SymbolSeq};
pub use workspace::{chain_length, Assembly, AssemblyRole, GlobalWorkspace};

pub type CompletionDistribution = pcn::CompletionDistribution<f64>;
pub type TablePcn = pcn::TablePcn<f64>;
