//! Test-engine configuration.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KrrConfig {
    /// Upper bound on kernel anchors; below this count the fit is exact
    /// kernel ridge, above it a subsampled-anchor approximation.
    pub max_anchors: usize,
    /// Ridge candidates, relative to the mean feature-Gram eigenvalue;
    /// generalized cross-validation picks among them.
    pub ridge_grid: Vec<f64>,
    /// Multiplier on the median-heuristic kernel bandwidth.
    pub bandwidth_scale: f64,
    /// Append the raw (scaled) inputs to the kernel features. A pure RBF fit
    /// decays to the mean away from its training data; the linear component
    /// gives the fit a sane extrapolation.
    pub include_linear: bool,
}

impl Default for KrrConfig {
    fn default() -> Self {
        KrrConfig {
            max_anchors: 192,
            ridge_grid: vec![1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            bandwidth_scale: 1.0,
            include_linear: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CiConfig {
    /// Decision level: independent iff p > alpha.
    pub alpha: f64,
    /// Permutations per p-value (add-one estimator).
    pub permutations: usize,
    /// Minimum paired rows for any test.
    pub min_rows: usize,
    /// Minimum rows per environment level for conditional and
    /// per-environment computations.
    pub min_env_rows: usize,
    /// Rows above this are canonically subsampled before computing
    /// permutation statistics; keeps the permutation loop affordable without
    /// hurting power at the effect sizes involved here.
    pub max_test_rows: usize,
    /// Row cap for the O(n^2) multivariate residual path.
    pub max_naive_rows: usize,
    /// Row cap for the additive-noise direction test's residual
    /// independence checks. Kernel fits are never exact, and at large n a
    /// distance-correlation test starts rejecting on smoothing bias alone;
    /// testing residuals on a bounded sample keeps that below the detection
    /// threshold while leaving ample power for genuinely dependent
    /// residuals.
    pub anm_test_rows: usize,
    /// Row cap for conditional-independence residual tests. These need more
    /// power than the direction test (conditional dependence can hide in a
    /// variance change), so the cap sits higher.
    pub cond_residual_rows: usize,
    /// Row cap for the mechanism-variation direction score; its kernel fits
    /// benefit from more rows than permutation tests can afford.
    pub delta_rows: usize,
    pub krr: KrrConfig,
    /// Base seed of the permutation/subsample stream. Per-dimension runs
    /// derive their own stream from (seed, dimension index).
    pub seed: u64,
}

impl Default for CiConfig {
    fn default() -> Self {
        CiConfig {
            alpha: 0.01,
            permutations: 500,
            min_rows: 200,
            min_env_rows: 100,
            max_test_rows: 2500,
            max_naive_rows: 1024,
            anm_test_rows: 1024,
            cond_residual_rows: 1536,
            delta_rows: 4000,
            krr: KrrConfig::default(),
            seed: 0,
        }
    }
}

impl CiConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
