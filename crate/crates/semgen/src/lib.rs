//! Synthetic structural-equation-model data across environments: the
//! three-variable model with closed-form regression coefficients, identity /
//! linear / frozen-MLP observation maps, and ground-truth generators for the
//! ten admissible causal structures.
//!
//! Everything here is a pure function of `(spec, seed)` and safe to call from
//! many threads.

pub mod dataset;
pub mod env;
pub mod error;
pub mod mixing;
pub mod model1;
pub mod structures;

pub use dataset::{make_multi_env_dataset, Dataset, Task};
pub use env::{EnvSpec, SIGMA_MAX};
pub use error::{Result, SemgenError};
pub use mixing::{apply_mixing, Mixing, MixingKind, MixingSpec};
pub use model1::{empirical_ols, ols_oracle, sample_model1, Model1Sample};
pub use structures::{generate_structure_dataset, StructureEdges, StructureKind, StructureSample};
