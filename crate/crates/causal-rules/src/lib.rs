//! Conditional-independence testing, bivariate causal direction discovery,
//! the mechanism-invariance direction score, and the ten-way causal
//! structure classifier with its parent filter.

pub mod anm;
pub mod citest;
pub mod classify;
pub mod config;
pub mod dcor;
pub mod delta;
pub mod error;
pub mod krr;
pub mod parents;
pub mod stats;

pub use anm::{anm_direction, AnmDirection, AnmResult};
pub use citest::{test_cond_independence, test_independence, CITestResult, Col};
pub use classify::{classify_structure, EvidenceItem, EvidenceOutcome, RuleId, StructureVerdict, VerdictTag};
pub use config::{CiConfig, KrrConfig};
pub use delta::{delta_criterion, DeltaScores};
pub use error::{CausalRulesError, Result};
pub use parents::{discover_parents, ParentDiscovery, ParentVerdict};
pub use stats::{fisher_combine, spearman, spearman_abs, variance_equality_p};
