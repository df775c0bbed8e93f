//! Per-dimension parent filter over inferred latents.
//!
//! A dimension is a direct cause of the target exactly when its classified
//! structure carries the `X_i -> Y` edge, which corresponds to one of the
//! four parent rules (1.2, 1.6, 2.1, 3.1). Dimensions are assessed
//! independently, each with its own derived test-stream seed.

use crate::classify::{classify_structure, RuleId, StructureVerdict, VerdictTag};
use crate::config::CiConfig;
use crate::error::{CausalRulesError, Result};
use crate::stats::spearman_abs;
use numkit::derive_seed;
use semgen::StructureKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentVerdict {
    pub latent_index: usize,
    pub is_parent: bool,
    /// The parent rule that matched, when one did.
    pub matched_rule: Option<RuleId>,
    pub verdict: StructureVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentDiscovery {
    pub parents: Vec<usize>,
    pub verdicts: Vec<ParentVerdict>,
}

fn parent_rule(kind: StructureKind) -> Option<RuleId> {
    match kind {
        StructureKind::CauseTargetShifted => Some(RuleId::R1x2),
        StructureKind::CauseEnvShifted => Some(RuleId::R1x6),
        StructureKind::CauseOnly => Some(RuleId::R2x1),
        StructureKind::CauseBothShifted => Some(RuleId::R3x1),
        _ => None,
    }
}

/// Classify every latent dimension and collect those whose structure makes
/// them a direct cause of the target.
///
/// An empty result is an error carrying the suggested fallback dimension
/// (the one with the largest |spearman| correlation with the target), so the
/// caller can decide whether to apply the fallback and must flag it loudly
/// when it does.
pub fn discover_parents(
    latents: &[Vec<f64>],
    y: &[f64],
    env: &[usize],
    cfg: &CiConfig,
) -> Result<ParentDiscovery> {
    let mut verdicts = Vec::with_capacity(latents.len());
    let mut parents = Vec::new();
    for (index, column) in latents.iter().enumerate() {
        let dim_cfg = cfg.clone().with_seed(derive_seed(cfg.seed, index as u64));
        let verdict = classify_structure(column, y, env, &dim_cfg)?;
        let matched_rule = verdict.structure().and_then(parent_rule);
        let is_parent = matched_rule.is_some();
        if is_parent {
            parents.push(index);
        }
        verdicts.push(ParentVerdict {
            latent_index: index,
            is_parent,
            matched_rule,
            verdict,
        });
    }
    if parents.is_empty() {
        let (fallback_dim, fallback_score) = latents
            .iter()
            .map(|column| spearman_abs(column, y))
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        return Err(CausalRulesError::EmptyParentSet {
            fallback_dim,
            fallback_score,
        });
    }
    Ok(ParentDiscovery { parents, verdicts })
}
