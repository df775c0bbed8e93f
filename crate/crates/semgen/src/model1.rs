//! The three-variable structural equation model and its closed-form
//! least-squares coefficients.
//!
//! Structural assignments, with all noises Gaussian and the `sigma` fields of
//! [`EnvSpec`] read as variances:
//!
//! ```text
//! X1 <- N(0, sigma1)
//! Y  <- X1 + N(0, sigma2)
//! X2 <- Y  + N(0, sigma3)
//! ```

use crate::env::EnvSpec;
use crate::error::{Result, SemgenError};
use numkit::seeded_rng;
use rand::Rng;
use rand_distr::StandardNormal;

/// Columns sampled from the structural model.
#[derive(Debug, Clone)]
pub struct Model1Sample {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y: Vec<f64>,
}

/// Draw `n` rows from the structural model under `env`.
pub fn sample_model1(env: &EnvSpec, n: usize, rng_seed: u64) -> Model1Sample {
    let mut rng = seeded_rng(rng_seed);
    let (s1, s2, s3) = (env.sigma1.sqrt(), env.sigma2.sqrt(), env.sigma3.sqrt());
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let z3: f64 = rng.sample(StandardNormal);
        let x1v = s1 * z1;
        let yv = x1v + s2 * z2;
        let x2v = yv + s3 * z3;
        x1.push(x1v);
        y.push(yv);
        x2.push(x2v);
    }
    Model1Sample { x1, x2, y }
}

/// Population least-squares coefficients `(alpha1, alpha2)` for predicting Y.
///
/// * Case 1 — regress on X1 alone: `(1, 0)`.
/// * Case 2 — regress on X2 alone: `(0, (s1+s2)/(s1+s2+s3))`.
/// * Case 3 — regress on both: `(s3/(s2+s3), s2/(s2+s3))`.
pub fn ols_oracle(case: u8, env: &EnvSpec) -> Result<(f64, f64)> {
    match case {
        1 => Ok((1.0, 0.0)),
        2 => {
            let denom = env.sigma1 + env.sigma2 + env.sigma3;
            if denom == 0.0 {
                return Err(SemgenError::DegenerateCase {
                    case: 2,
                    reason: "sigma1 + sigma2 + sigma3 = 0 makes X2 constant".into(),
                });
            }
            Ok((0.0, (env.sigma1 + env.sigma2) / denom))
        }
        3 => {
            let denom = env.sigma2 + env.sigma3;
            if denom == 0.0 {
                return Err(SemgenError::DegenerateCase {
                    case: 3,
                    reason: "sigma2 + sigma3 = 0 makes the joint regression singular".into(),
                });
            }
            Ok((env.sigma3 / denom, env.sigma2 / denom))
        }
        other => Err(SemgenError::DegenerateCase {
            case: other,
            reason: "case must be 1, 2, or 3".into(),
        }),
    }
}

/// No-intercept least squares of `y` on the given regressor columns, solved
/// through the normal equations. Independent check for [`ols_oracle`].
pub fn empirical_ols(regressors: &[&[f64]], y: &[f64]) -> Vec<f64> {
    let p = regressors.len();
    let n = y.len();
    let mut gram = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = (0..n).map(|r| regressors[i][r] * regressors[j][r]).sum();
            gram[i * p + j] = s;
            gram[j * p + i] = s;
        }
        xty[i] = (0..n).map(|r| regressors[i][r] * y[r]).sum();
    }
    solve_small(&mut gram, &mut xty, p);
    xty
}

/// Gaussian elimination with partial pivoting; overwrites `b` with the
/// solution. Only used for tiny systems.
fn solve_small(a: &mut [f64], b: &mut [f64], p: usize) {
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| {
                a[i * p + col]
                    .abs()
                    .partial_cmp(&a[j * p + col].abs())
                    .unwrap()
            })
            .unwrap();
        if pivot != col {
            for k in 0..p {
                a.swap(col * p + k, pivot * p + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * p + col];
        for row in col + 1..p {
            let f = a[row * p + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..p {
                a[row * p + k] -= f * a[col * p + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..p).rev() {
        let mut s = b[col];
        for k in col + 1..p {
            s -= a[col * p + k] * b[k];
        }
        b[col] = s / a[col * p + col];
    }
}
