//! Ground-truth generators for the ten admissible causal structures over
//! `{X_i, Y, E}` (plus the mandatory `X_i -> O` edge, which the rule engine
//! never tests).
//!
//! Each latent dimension must connect to at least one of `{Y, E}`; together
//! with acyclicity this leaves exactly ten edge sets. The generator draws
//! linear-plus-mild-cubic Gaussian mechanisms so that bivariate direction
//! tests have a fighting chance: a strictly linear-Gaussian pair is provably
//! symmetric for additive-noise direction discovery, so the `X_i - Y`
//! mechanism uses `f(u) = a * (u + 0.25 u^3)` with `|a|` drawn from
//! `[0.5, 1.5]`. Noise on any variable pointed to by `E` is variance-modulated
//! per environment: strongly for root (cause-side) variables, mildly for
//! effect variables, which keeps the mechanism-invariance direction score
//! informative.

use numkit::seeded_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    /// X_i -> Y
    CauseOnly,
    /// Y -> X_i
    ChildOnly,
    /// E -> X_i
    EnvOnly,
    /// X_i -> Y with E -> X_i
    CauseEnvShifted,
    /// Y -> X_i with E -> X_i
    ChildEnvShifted,
    /// X_i -> Y with E -> Y
    CauseTargetShifted,
    /// Y -> X_i with E -> Y
    ChildTargetShifted,
    /// E -> X_i and E -> Y, no edge between X_i and Y
    EnvConfounder,
    /// X_i -> Y with E -> X_i and E -> Y
    CauseBothShifted,
    /// Y -> X_i with E -> X_i and E -> Y
    ChildBothShifted,
}

/// Edge indicators of a structure (besides the always-present X_i -> O).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureEdges {
    pub xi_to_y: bool,
    pub y_to_xi: bool,
    pub env_to_xi: bool,
    pub env_to_y: bool,
}

impl StructureKind {
    pub const ALL: [StructureKind; 10] = [
        StructureKind::CauseOnly,
        StructureKind::ChildOnly,
        StructureKind::EnvOnly,
        StructureKind::CauseEnvShifted,
        StructureKind::ChildEnvShifted,
        StructureKind::CauseTargetShifted,
        StructureKind::ChildTargetShifted,
        StructureKind::EnvConfounder,
        StructureKind::CauseBothShifted,
        StructureKind::ChildBothShifted,
    ];

    pub fn edges(self) -> StructureEdges {
        let (xi_to_y, y_to_xi, env_to_xi, env_to_y) = match self {
            StructureKind::CauseOnly => (true, false, false, false),
            StructureKind::ChildOnly => (false, true, false, false),
            StructureKind::EnvOnly => (false, false, true, false),
            StructureKind::CauseEnvShifted => (true, false, true, false),
            StructureKind::ChildEnvShifted => (false, true, true, false),
            StructureKind::CauseTargetShifted => (true, false, false, true),
            StructureKind::ChildTargetShifted => (false, true, false, true),
            StructureKind::EnvConfounder => (false, false, true, true),
            StructureKind::CauseBothShifted => (true, false, true, true),
            StructureKind::ChildBothShifted => (false, true, true, true),
        };
        StructureEdges {
            xi_to_y,
            y_to_xi,
            env_to_xi,
            env_to_y,
        }
    }

    /// True for the four structures in which X_i is a direct cause of Y.
    pub fn is_parent_structure(self) -> bool {
        self.edges().xi_to_y
    }

    pub fn label(self) -> &'static str {
        match self {
            StructureKind::CauseOnly => "cause_only",
            StructureKind::ChildOnly => "child_only",
            StructureKind::EnvOnly => "env_only",
            StructureKind::CauseEnvShifted => "cause_env_shifted",
            StructureKind::ChildEnvShifted => "child_env_shifted",
            StructureKind::CauseTargetShifted => "cause_target_shifted",
            StructureKind::ChildTargetShifted => "child_target_shifted",
            StructureKind::EnvConfounder => "env_confounder",
            StructureKind::CauseBothShifted => "cause_both_shifted",
            StructureKind::ChildBothShifted => "child_both_shifted",
        }
    }
}

impl std::fmt::Display for StructureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Columns `(X_i, Y, E)` drawn from one structure, with the tag retained.
#[derive(Debug, Clone)]
pub struct StructureSample {
    pub xi: Vec<f64>,
    pub y: Vec<f64>,
    pub env: Vec<usize>,
    pub kind: StructureKind,
}

// Per-environment noise variances. Root variables pointed to by E get the
// strong profile so their marginals clearly shift. Effect variables pointed
// to by E get a larger noise base with a moderate modulation: the base must
// be a visible share of the effect's total variance (the mechanism
// contributes ~2-8x the unit cause variance) for a one-way variance test to
// see the shift, while the modulation ratio stays moderate so the effect's
// conditional remains recognizably more stable than the anticausal one.
const STRONG_PROFILE: [f64; 3] = [0.5, 1.7, 3.2];
const MODULATED_EFFECT_PROFILE: [f64; 3] = [0.65, 1.0, 1.45];
const EFFECT_NOISE_VAR: f64 = 0.3;
const CUBIC_CURVATURE: f64 = 0.25;

fn strong_var(e: usize) -> f64 {
    STRONG_PROFILE[e % 3] * (1.0 + 0.2 * (e / 3) as f64)
}

fn mild_var(e: usize) -> f64 {
    MODULATED_EFFECT_PROFILE[e % 3] * (1.0 + 0.2 * (e / 3) as f64)
}

/// Generate `n_per_env` rows per environment from the given structure.
pub fn generate_structure_dataset(
    kind: StructureKind,
    num_envs: usize,
    n_per_env: usize,
    rng_seed: u64,
) -> StructureSample {
    let mut rng = seeded_rng(rng_seed);
    let edges = kind.edges();
    // Mechanism coefficient for the X_i - Y edge (if any).
    let magnitude = rng.random_range(0.5..1.5);
    let coeff = if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    };
    let mech = |u: f64| coeff * (u + CUBIC_CURVATURE * u * u * u);

    let n = num_envs * n_per_env;
    let mut xi = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut env = Vec::with_capacity(n);
    for e in 0..num_envs {
        let xi_sd = if edges.y_to_xi {
            // X_i is an effect of Y.
            if edges.env_to_xi { mild_var(e) } else { EFFECT_NOISE_VAR }
        } else if edges.env_to_xi {
            strong_var(e)
        } else {
            1.0
        }
        .sqrt();
        let y_sd = if edges.xi_to_y {
            // Y is an effect of X_i.
            if edges.env_to_y { mild_var(e) } else { EFFECT_NOISE_VAR }
        } else if edges.env_to_y {
            strong_var(e)
        } else {
            1.0
        }
        .sqrt();

        for _ in 0..n_per_env {
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            let (xv, yv) = if edges.xi_to_y {
                let xv = xi_sd * zx;
                (xv, mech(xv) + y_sd * zy)
            } else if edges.y_to_xi {
                let yv = y_sd * zy;
                (mech(yv) + xi_sd * zx, yv)
            } else {
                (xi_sd * zx, y_sd * zy)
            };
            xi.push(xv);
            y.push(yv);
            env.push(e);
        }
    }
    StructureSample { xi, y, env, kind }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_structures_satisfy_assumption_one() {
        for kind in StructureKind::ALL {
            let e = kind.edges();
            assert!(
                e.xi_to_y || e.y_to_xi || e.env_to_xi,
                "{kind} leaves X_i disconnected from (Y, E)"
            );
            assert!(!(e.xi_to_y && e.y_to_xi), "{kind} would be cyclic");
        }
    }

    #[test]
    fn exactly_four_parent_structures() {
        let parents: Vec<_> = StructureKind::ALL
            .into_iter()
            .filter(|k| k.is_parent_structure())
            .collect();
        assert_eq!(
            parents,
            vec![
                StructureKind::CauseOnly,
                StructureKind::CauseEnvShifted,
                StructureKind::CauseTargetShifted,
                StructureKind::CauseBothShifted,
            ]
        );
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate_structure_dataset(StructureKind::CauseBothShifted, 3, 100, 13);
        let b = generate_structure_dataset(StructureKind::CauseBothShifted, 3, 100, 13);
        assert_eq!(a.xi, b.xi);
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn env_modulation_shows_in_sample_variances() {
        let s = generate_structure_dataset(StructureKind::EnvOnly, 3, 4000, 21);
        let var = |e: usize| {
            let vals: Vec<f64> = s
                .xi
                .iter()
                .zip(&s.env)
                .filter(|(_, &ev)| ev == e)
                .map(|(&v, _)| v)
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64
        };
        assert!(var(0) < var(1) && var(1) < var(2));
        // No E -> Y edge here, so Y keeps unit variance in every environment.
        let y_var = |e: usize| {
            let vals: Vec<f64> = s
                .y
                .iter()
                .zip(&s.env)
                .filter(|(_, &ev)| ev == e)
                .map(|(&v, _)| v)
                .collect();
            vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64
        };
        for e in 0..3 {
            assert!((y_var(e) - 1.0).abs() < 0.1, "env {e}: {}", y_var(e));
        }
    }
}
