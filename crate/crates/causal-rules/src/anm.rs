//! Additive-noise-model direction discovery for a bivariate pair.
//!
//! Fit each direction by kernel ridge regression and test whether the
//! residuals are independent of the regressor. The direction whose residual
//! independence survives is preferred; if both survive, both fail, or both
//! fits are exact (a deterministic relation carries no orientation
//! information), the pair stays undecided.

use crate::citest::CITestResult;
use crate::config::CiConfig;
use crate::dcor::PairDcor;
use crate::error::{CausalRulesError, Result};
use crate::krr::krr_fit;
use numkit::{derive_seed, seeded_rng};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnmDirection {
    XToY,
    YToX,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnmResult {
    /// p-value of residual independence when regressing y on x.
    pub p_forward: f64,
    /// p-value of residual independence when regressing x on y.
    pub p_backward: f64,
    pub preferred: Option<AnmDirection>,
}

const PERFECT_FIT_REL_VAR: f64 = 1e-10;
const DECISIVE_P_RATIO: f64 = 20.0;

pub fn anm_direction(x: &[f64], y: &[f64], cfg: &CiConfig) -> Result<AnmResult> {
    if x.len() != y.len() {
        return Err(CausalRulesError::LengthMismatch {
            reason: format!("{} vs {}", x.len(), y.len()),
        });
    }
    if x.len() < cfg.min_rows {
        return Err(CausalRulesError::InsufficientRows {
            got: x.len(),
            need: cfg.min_rows,
        });
    }
    // canonical order plus one shared subsample for both directions
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));
    if n > cfg.max_test_rows {
        let mut picks: Vec<usize> = (0..n).collect();
        picks.shuffle(&mut seeded_rng(derive_seed(cfg.seed, 0xA5B5)));
        picks.truncate(cfg.max_test_rows);
        picks.sort_unstable();
        idx = picks.into_iter().map(|k| idx[k]).collect();
    }
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    let p_forward = residual_independence_p(&xs, &ys, cfg, 0xF0F0);
    let p_backward = residual_independence_p(&ys, &xs, cfg, 0xF0F1);

    let reject_fwd = p_forward <= cfg.alpha;
    let reject_bwd = p_backward <= cfg.alpha;
    let preferred = match (reject_fwd, reject_bwd) {
        (false, true) => Some(AnmDirection::XToY),
        (true, false) => Some(AnmDirection::YToX),
        // both rejected: no additive-noise direction fits
        (true, true) => None,
        // both accepted: prefer the larger p-value, but only on a decisive
        // asymmetry; near-equal p-values carry no orientation information
        (false, false) => {
            if p_forward >= DECISIVE_P_RATIO * p_backward {
                Some(AnmDirection::XToY)
            } else if p_backward >= DECISIVE_P_RATIO * p_forward {
                Some(AnmDirection::YToX)
            } else {
                None
            }
        }
    };
    Ok(AnmResult {
        p_forward,
        p_backward,
        preferred,
    })
}

/// p-value for "residuals of target ~ KRR(input) are independent of input".
/// An exact fit (deterministic relation) counts as independent with p = 1.
fn residual_independence_p(input: &[f64], target: &[f64], cfg: &CiConfig, tag: u64) -> f64 {
    let fit = krr_fit(&[input], target, &cfg.krr, derive_seed(cfg.seed, tag));
    let resid = fit.residuals(&[input], target);
    let n = target.len() as f64;
    let t_mean = target.iter().sum::<f64>() / n;
    let t_var = target.iter().map(|v| (v - t_mean) * (v - t_mean)).sum::<f64>() / n;
    let r_var = resid.iter().map(|v| v * v).sum::<f64>() / n;
    if r_var <= PERFECT_FIT_REL_VAR * t_var.max(1e-300) {
        return 1.0;
    }
    let (resid, input) = cap_rows(resid, input, cfg, tag);
    let mut pair = PairDcor::new(&resid, &input);
    if pair.is_degenerate() {
        return 1.0;
    }
    pair.permutation_p(
        cfg.permutations,
        &mut seeded_rng(derive_seed(cfg.seed, tag ^ 0xD0C4)),
    )
}

fn cap_rows(resid: Vec<f64>, input: &[f64], cfg: &CiConfig, tag: u64) -> (Vec<f64>, Vec<f64>) {
    let n = resid.len();
    if n <= cfg.anm_test_rows {
        return (resid, input.to_vec());
    }
    let mut picks: Vec<usize> = (0..n).collect();
    picks.shuffle(&mut seeded_rng(derive_seed(cfg.seed, tag ^ 0x5AB7)));
    picks.truncate(cfg.anm_test_rows);
    picks.sort_unstable();
    (
        picks.iter().map(|&i| resid[i]).collect(),
        picks.iter().map(|&i| input[i]).collect(),
    )
}

/// Evidence view of an [`AnmResult`] for verdict trails.
pub fn as_ci_result(r: &AnmResult, alpha: f64) -> CITestResult {
    CITestResult {
        statistic: r.p_forward - r.p_backward,
        p_value: r.p_forward.max(r.p_backward),
        independent: r.p_forward.max(r.p_backward) > alpha,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use numkit::seeded_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn cfg(seed: u64) -> CiConfig {
        CiConfig {
            permutations: 300,
            ..CiConfig::default().with_seed(seed)
        }
    }

    #[test]
    fn cubic_with_uniform_noise_prefers_forward() {
        let mut hits = 0;
        for seed in 0..10 {
            let mut rng = seeded_rng(100 + seed);
            let n = 2000;
            let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let y: Vec<f64> = x
                .iter()
                .map(|&v| v * v * v + rng.random_range(-1.0..1.0))
                .collect();
            let r = anm_direction(&x, &y, &cfg(seed)).unwrap();
            if r.preferred == Some(AnmDirection::XToY) {
                hits += 1;
            }
        }
        assert!(hits >= 8, "forward preferred in {hits}/10 seeds");
    }

    #[test]
    fn identical_columns_are_undecided() {
        // both directions fit perfectly, so there is nothing to orient on
        let mut rng = seeded_rng(7);
        let x: Vec<f64> = (0..600).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = anm_direction(&x, &x, &cfg(3)).unwrap();
        assert_eq!(r.preferred, None, "{r:?}");
        assert_eq!(r.p_forward, r.p_backward);
    }

    #[test]
    fn independent_columns_are_undecided() {
        let mut rng = seeded_rng(8);
        let x: Vec<f64> = (0..800).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = (0..800).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = anm_direction(&x, &y, &cfg(4)).unwrap();
        assert_eq!(r.preferred, None, "{r:?}");
        assert!(r.p_forward > 0.01 && r.p_backward > 0.01);
    }
}
