//! Marginal and conditional independence tests.
//!
//! Marginal continuous pairs use distance correlation with a permutation
//! p-value. Continuous-vs-environment pairs combine a one-way variance test
//! (environments here modulate noise variances, so spread is the first thing
//! to look at) with distance correlation against the one-hot encoding; the
//! two are Bonferroni-combined, so the test rejects when either component
//! rejects at half the level.
//!
//! Conditional tests condition on a discrete environment by testing within
//! each level and Fisher-combining, and on continuous variables by kernel
//! ridge regression of both sides on the conditioning set followed by a
//! residual distance-correlation test.
//!
//! Every test first brings the rows into a canonical value order and only
//! then applies its (seeded) subsampling and permutations, so shuffling the
//! input rows cannot change any decision.

use crate::config::CiConfig;
use crate::dcor::{LabelDcor, NaiveDcor, PairDcor};
use crate::error::{CausalRulesError, Result};
use crate::krr::krr_fit;
use crate::stats::{fisher_combine, variance_equality_p};

use numkit::{derive_seed, seeded_rng};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// A column handed to the tests: continuous values or environment labels.
#[derive(Debug, Clone, Copy)]
pub enum Col<'a> {
    Cont(&'a [f64]),
    Env(&'a [usize]),
}

impl Col<'_> {
    fn len(&self) -> usize {
        match self {
            Col::Cont(v) => v.len(),
            Col::Env(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CITestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Decision at the configured alpha: `p_value > alpha`.
    pub independent: bool,
    /// Set when an input column was (numerically) constant.
    pub degenerate: bool,
}

impl CITestResult {
    fn decided(statistic: f64, p_value: f64, alpha: f64) -> Self {
        CITestResult {
            statistic,
            p_value,
            independent: p_value > alpha,
            degenerate: false,
        }
    }

    fn degenerate_independent() -> Self {
        CITestResult {
            statistic: 0.0,
            p_value: 1.0,
            independent: true,
            degenerate: true,
        }
    }
}

/// Indices in canonical (value-sorted) order, optionally subsampled to `cap`.
/// The canonical sort makes every downstream seeded draw invariant to the
/// caller's row order.
fn canonical_rows(cols: &[Col<'_>], cap: usize, seed: u64) -> Vec<usize> {
    let n = cols[0].len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        for col in cols {
            let ord = match col {
                Col::Cont(v) => v[i].total_cmp(&v[j]),
                Col::Env(v) => v[i].cmp(&v[j]),
            };
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });
    if n > cap {
        let mut picks: Vec<usize> = (0..n).collect();
        picks.shuffle(&mut seeded_rng(derive_seed(seed, 0x5AB5)));
        picks.truncate(cap);
        picks.sort_unstable();
        idx = picks.into_iter().map(|k| idx[k]).collect();
    }
    idx
}

fn gather(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

fn gather_env(values: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| values[i]).collect()
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

fn check_lengths(cols: &[Col<'_>]) -> Result<usize> {
    let n = cols[0].len();
    if cols.iter().any(|c| c.len() != n) {
        return Err(CausalRulesError::LengthMismatch {
            reason: format!(
                "columns have lengths {:?}",
                cols.iter().map(Col::len).collect::<Vec<_>>()
            ),
        });
    }
    Ok(n)
}

fn bonferroni(p1: f64, p2: f64) -> f64 {
    (2.0 * p1.min(p2)).min(1.0)
}

fn num_levels(env: &[usize]) -> usize {
    env.iter().copied().max().map_or(1, |m| m + 1)
}

/// Nonlinear marginal independence test.
pub fn test_independence(a: Col<'_>, b: Col<'_>, cfg: &CiConfig) -> Result<CITestResult> {
    let n = check_lengths(&[a, b])?;
    if n < cfg.min_rows {
        return Err(CausalRulesError::InsufficientRows {
            got: n,
            need: cfg.min_rows,
        });
    }
    match (a, b) {
        (Col::Cont(x), Col::Cont(y)) => {
            let idx = canonical_rows(&[a, b], cfg.max_test_rows, cfg.seed);
            let xs = gather(x, &idx);
            let ys = gather(y, &idx);
            if is_constant(&xs) || is_constant(&ys) {
                return Ok(CITestResult::degenerate_independent());
            }
            let mut pair = PairDcor::new(&xs, &ys);
            let stat = pair.statistic();
            let p = pair.permutation_p(
                cfg.permutations,
                &mut seeded_rng(derive_seed(cfg.seed, 0xD0C0)),
            );
            Ok(CITestResult::decided(stat, p, cfg.alpha))
        }
        (Col::Cont(x), Col::Env(e)) | (Col::Env(e), Col::Cont(x)) => {
            test_env_independence(x, e, cfg)
        }
        (Col::Env(_), Col::Env(_)) => Err(CausalRulesError::Unsupported {
            reason: "independence between two environment columns".into(),
        }),
    }
}

/// Continuous vs environment labels: one-way variance test combined with a
/// one-hot distance correlation; dependent if either rejects.
fn test_env_independence(x: &[f64], e: &[usize], cfg: &CiConfig) -> Result<CITestResult> {
    let levels = num_levels(e);
    let idx = canonical_rows(&[Col::Cont(x), Col::Env(e)], cfg.max_test_rows, cfg.seed);
    let xs = gather(x, &idx);
    let es = gather_env(e, &idx);
    if is_constant(&xs) || levels < 2 {
        return Ok(CITestResult::degenerate_independent());
    }
    // variance test on the full column: O(n), order-invariant
    let p_var = variance_equality_p(x, e, levels);
    let label = LabelDcor::new(&xs, &es);
    let stat = label.statistic();
    let p_dcor = label.permutation_p(
        cfg.permutations,
        &mut seeded_rng(derive_seed(cfg.seed, 0xD0C1)),
    );
    Ok(CITestResult::decided(stat, bonferroni(p_var, p_dcor), cfg.alpha))
}

/// Conditional independence of `a` and `b` given the columns in `given`.
pub fn test_cond_independence(
    a: Col<'_>,
    b: Col<'_>,
    given: &[Col<'_>],
    cfg: &CiConfig,
) -> Result<CITestResult> {
    let mut all = vec![a, b];
    all.extend_from_slice(given);
    let n = check_lengths(&all)?;
    if n < cfg.min_rows {
        return Err(CausalRulesError::InsufficientRows {
            got: n,
            need: cfg.min_rows,
        });
    }
    let cont_given: Vec<&[f64]> = given
        .iter()
        .filter_map(|c| match c {
            Col::Cont(v) => Some(*v),
            Col::Env(_) => None,
        })
        .collect();
    let env_given: Vec<&[usize]> = given
        .iter()
        .filter_map(|c| match c {
            Col::Env(v) => Some(*v),
            Col::Cont(_) => None,
        })
        .collect();
    if env_given.len() > 1 {
        return Err(CausalRulesError::Unsupported {
            reason: "more than one environment column in the conditioning set".into(),
        });
    }

    if cont_given.is_empty() {
        // condition on the discrete environment: test within each level
        let env = env_given.first().ok_or_else(|| CausalRulesError::Unsupported {
            reason: "empty conditioning set".into(),
        })?;
        per_level_test(a, b, env, cfg)
    } else {
        residual_test(a, b, &cont_given, env_given.first().copied(), cfg)
    }
}

fn per_level_test(a: Col<'_>, b: Col<'_>, env: &[usize], cfg: &CiConfig) -> Result<CITestResult> {
    let levels = num_levels(env);
    let mut p_values = Vec::new();
    let mut stat_sum = 0.0;
    for level in 0..levels {
        let rows: Vec<usize> = (0..env.len()).filter(|&i| env[i] == level).collect();
        if rows.is_empty() {
            continue;
        }
        if rows.len() < cfg.min_env_rows {
            return Err(CausalRulesError::EnvLevelTooSmall {
                level,
                got: rows.len(),
                need: cfg.min_env_rows,
            });
        }
        let sub_cfg = CiConfig {
            min_rows: cfg.min_env_rows.min(cfg.min_rows),
            seed: derive_seed(cfg.seed, 0xE0 + level as u64),
            ..cfg.clone()
        };
        let result = match (a, b) {
            (Col::Cont(x), Col::Cont(y)) => {
                let xs = gather(x, &rows);
                let ys = gather(y, &rows);
                test_independence(Col::Cont(&xs), Col::Cont(&ys), &sub_cfg)?
            }
            _ => {
                return Err(CausalRulesError::Unsupported {
                    reason: "per-level test requires continuous columns".into(),
                })
            }
        };
        stat_sum += result.statistic;
        p_values.push(result.p_value);
    }
    if p_values.len() < 2 {
        return Ok(CITestResult::degenerate_independent());
    }
    let p = fisher_combine(&p_values);
    Ok(CITestResult::decided(
        stat_sum / p_values.len() as f64,
        p,
        cfg.alpha,
    ))
}

/// Regress both sides on the conditioning set (continuous columns plus the
/// one-hot environment when present) and test residual independence.
fn residual_test(
    a: Col<'_>,
    b: Col<'_>,
    cont_given: &[&[f64]],
    env_given: Option<&[usize]>,
    cfg: &CiConfig,
) -> Result<CITestResult> {
    let mut key_cols: Vec<Col<'_>> = vec![a, b];
    key_cols.extend(cont_given.iter().map(|c| Col::Cont(c)));
    if let Some(e) = env_given {
        key_cols.push(Col::Env(e));
    }
    let idx = canonical_rows(&key_cols, cfg.max_test_rows, cfg.seed);

    // When one side is the environment, residual dependence often shows up
    // as a per-level variance change, which a distance-correlation test is
    // weak against; pair it with the variance-equality test on the other
    // side's residuals, rejecting if either rejects.
    let labels_of = |col: Col<'_>| match col {
        Col::Env(e) => Some(gather_env(e, &idx)),
        Col::Cont(_) => None,
    };
    let env_side_labels = labels_of(a).or_else(|| labels_of(b));

    // conditioning design: continuous columns plus one-hot env levels
    let mut design: Vec<Vec<f64>> = cont_given.iter().map(|c| gather(c, &idx)).collect();
    if let Some(e) = env_given {
        let es = gather_env(e, &idx);
        for level in 0..num_levels(&es) {
            design.push(es.iter().map(|&v| (v == level) as u8 as f64).collect());
        }
    }
    let design_refs: Vec<&[f64]> = design.iter().map(|c| c.as_slice()).collect();

    let residualize = |col: &[f64], tag: u64| -> Vec<f64> {
        let fit = krr_fit(&design_refs, col, &cfg.krr, derive_seed(cfg.seed, tag));
        fit.residuals(&design_refs, col)
    };

    let res_a: Vec<Vec<f64>> = match a {
        Col::Cont(x) => vec![residualize(&gather(x, &idx), 0xF0)],
        Col::Env(e) => one_hot_residuals(&gather_env(e, &idx), &residualize, 0x100),
    };
    let res_b: Vec<Vec<f64>> = match b {
        Col::Cont(y) => vec![residualize(&gather(y, &idx), 0xF1)],
        Col::Env(e) => one_hot_residuals(&gather_env(e, &idx), &residualize, 0x200),
    };

    if res_a.iter().all(|c| is_constant(c)) || res_b.iter().all(|c| is_constant(c)) {
        return Ok(CITestResult::degenerate_independent());
    }

    let p_variance = env_side_labels.as_ref().map(|labels| {
        let cont_res = if matches!(a, Col::Cont(_)) { &res_a } else { &res_b };
        variance_equality_p(&cont_res[0], labels, num_levels(labels))
    });

    let univariate = res_a.len() == 1 && res_b.len() == 1;
    let cap = if univariate {
        cfg.cond_residual_rows
    } else {
        cfg.cond_residual_rows.min(cfg.max_naive_rows)
    };
    let n = res_a[0].len();
    let (res_a, res_b) = if n > cap {
        let mut picks: Vec<usize> = (0..n).collect();
        picks.shuffle(&mut seeded_rng(derive_seed(cfg.seed, 0x5AB6)));
        picks.truncate(cap);
        picks.sort_unstable();
        (
            res_a.iter().map(|c| gather(c, &picks)).collect::<Vec<_>>(),
            res_b.iter().map(|c| gather(c, &picks)).collect::<Vec<_>>(),
        )
    } else {
        (res_a, res_b)
    };

    let (stat, p_dcor) = if univariate {
        let mut pair = PairDcor::new(&res_a[0], &res_b[0]);
        let stat = pair.statistic();
        let p = pair.permutation_p(
            cfg.permutations,
            &mut seeded_rng(derive_seed(cfg.seed, 0xD0C2)),
        );
        (stat, p)
    } else {
        let naive = NaiveDcor::new(&res_a, &res_b);
        let stat = naive.statistic();
        let p = naive.permutation_p(
            cfg.permutations,
            &mut seeded_rng(derive_seed(cfg.seed, 0xD0C3)),
        );
        (stat, p)
    };
    let p = match p_variance {
        Some(pv) => bonferroni(pv, p_dcor),
        None => p_dcor,
    };
    Ok(CITestResult::decided(stat, p, cfg.alpha))
}

fn one_hot_residuals(
    env: &[usize],
    residualize: &dyn Fn(&[f64], u64) -> Vec<f64>,
    tag_base: u64,
) -> Vec<Vec<f64>> {
    (0..num_levels(env))
        .map(|level| {
            let col: Vec<f64> = env.iter().map(|&v| (v == level) as u8 as f64).collect();
            residualize(&col, tag_base + level as u64)
        })
        .collect()
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
    fn perfect_dependence_rejected() {
        let mut rng = seeded_rng(1);
        let x: Vec<f64> = (0..400).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = test_independence(Col::Cont(&x), Col::Cont(&x), &cfg(5)).unwrap();
        assert!(!r.independent);
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn nonmonotone_link_detected() {
        let mut rng = seeded_rng(2);
        let x: Vec<f64> = (0..1000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| v * v + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let r = test_independence(Col::Cont(&x), Col::Cont(&y), &cfg(6)).unwrap();
        assert!(!r.independent, "p = {}", r.p_value);
    }

    #[test]
    fn constant_column_degenerate() {
        let x = vec![3.0; 300];
        let y: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let r = test_independence(Col::Cont(&x), Col::Cont(&y), &cfg(7)).unwrap();
        assert!(r.independent && r.degenerate && r.p_value == 1.0);
    }

    #[test]
    fn row_shuffle_leaves_decisions_unchanged() {
        let mut rng = seeded_rng(3);
        let n = 500;
        let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.4 * v + 0.9 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let e: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let r1 = test_independence(Col::Cont(&x), Col::Cont(&y), &cfg(8)).unwrap();
        let re1 = test_independence(Col::Cont(&x), Col::Env(&e), &cfg(8)).unwrap();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seeded_rng(99));
        let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let es: Vec<usize> = order.iter().map(|&i| e[i]).collect();
        let r2 = test_independence(Col::Cont(&xs), Col::Cont(&ys), &cfg(8)).unwrap();
        let re2 = test_independence(Col::Cont(&xs), Col::Env(&es), &cfg(8)).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(re1, re2);
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let x = vec![1.0; 50];
        let y = vec![2.0; 50];
        assert!(matches!(
            test_independence(Col::Cont(&x), Col::Cont(&y), &cfg(1)),
            Err(CausalRulesError::InsufficientRows { .. })
        ));
    }

    #[test]
    fn alpha_monotonicity() {
        let mut rng = seeded_rng(4);
        let x: Vec<f64> = (0..400).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.15 * v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let loose = test_independence(Col::Cont(&x), Col::Cont(&y), &cfg(9)).unwrap();
        let strict = test_independence(
            Col::Cont(&x),
            Col::Cont(&y),
            &CiConfig {
                alpha: 0.001,
                ..cfg(9)
            },
        )
        .unwrap();
        // lowering alpha can only keep or gain independence
        assert!(strict.independent || !loose.independent);
        assert_eq!(loose.p_value, strict.p_value);
    }

    #[test]
    fn small_env_level_is_named_in_error() {
        let mut rng = seeded_rng(5);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut e = vec![0usize; n];
        for slot in e.iter_mut().skip(n - 5) {
            *slot = 1; // level 1 has 5 rows
        }
        let err = test_cond_independence(Col::Cont(&x), Col::Cont(&y), &[Col::Env(&e)], &cfg(2))
            .unwrap_err();
        assert!(err.to_string().contains("level 1"));
    }
}
