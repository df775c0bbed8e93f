use thiserror::Error;

#[derive(Debug, Error)]
pub enum CausalRulesError {
    #[error("need at least {need} paired rows, got {got}")]
    InsufficientRows { got: usize, need: usize },
    #[error("environment level {level} has {got} rows, fewer than the required {need}")]
    EnvLevelTooSmall {
        level: usize,
        got: usize,
        need: usize,
    },
    #[error("need at least {need} environments, got {got}")]
    TooFewEnvironments { got: usize, need: usize },
    #[error("degenerate conditional density in direction {direction}")]
    DegenerateDensity { direction: String },
    #[error(
        "no latent dimension matched a parent rule; fall back to dimension {fallback_dim} \
         (largest |spearman| with the target = {fallback_score:.4})"
    )]
    EmptyParentSet {
        fallback_dim: usize,
        fallback_score: f64,
    },
    #[error("unsupported column combination: {reason}")]
    Unsupported { reason: String },
    #[error("column length mismatch: {reason}")]
    LengthMismatch { reason: String },
}

pub type Result<T> = std::result::Result<T, CausalRulesError>;
