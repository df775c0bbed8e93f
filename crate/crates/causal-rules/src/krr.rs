//! Gaussian-kernel ridge regression with the ridge weight chosen by
//! generalized cross-validation.
//!
//! Fits use an anchor expansion: below `max_anchors` rows this is exact
//! kernel ridge, above it the kernel columns are restricted to a seeded
//! subsample of anchor points, which keeps the normal equations at
//! `max_anchors^2` regardless of n. A [`FeatureMap`] (anchors, per-feature
//! scales, bandwidth) can be built once and shared by several fits so their
//! conditional densities are directly comparable.

use crate::config::KrrConfig;
use nalgebra::{DMatrix, DVector};
use numkit::{derive_seed, seeded_rng};
use rand::seq::SliceRandom;

/// Frozen kernel feature map: scaled anchor rows, a bandwidth, and
/// optionally the scaled inputs themselves as linear features.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    anchors: Vec<f64>, // m x d, row-major, already scaled
    dim: usize,
    scales: Vec<f64>,
    bandwidth: f64,
    include_linear: bool,
}

impl FeatureMap {
    pub fn num_anchors(&self) -> usize {
        self.anchors.len() / self.dim.max(1)
    }

    /// Total feature count (anchors plus optional linear columns).
    pub fn num_features(&self) -> usize {
        self.num_anchors() + if self.include_linear { self.dim } else { 0 }
    }

    fn fill_features(&self, raw_row: &[f64], out: &mut [f64]) {
        let inv2h2 = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let m = self.num_anchors();
        for (a, slot) in out.iter_mut().take(m).enumerate() {
            let mut s = 0.0;
            for c in 0..self.dim {
                let diff = raw_row[c] / self.scales[c] - self.anchors[a * self.dim + c];
                s += diff * diff;
            }
            *slot = (-s * inv2h2).exp();
        }
        if self.include_linear {
            for c in 0..self.dim {
                out[m + c] = raw_row[c] / self.scales[c];
            }
        }
    }
}

/// Build a feature map from the rows of `x_cols` (column-major design).
pub fn feature_map(x_cols: &[&[f64]], cfg: &KrrConfig, seed: u64) -> FeatureMap {
    let n = x_cols[0].len();
    let d = x_cols.len();
    let scales: Vec<f64> = x_cols
        .iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            if var > 1e-24 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();

    let m = cfg.max_anchors.min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    if m < n {
        idx.shuffle(&mut seeded_rng(derive_seed(seed, 0xA17C)));
        idx.truncate(m);
        idx.sort_unstable();
    }
    let mut anchors = Vec::with_capacity(m * d);
    for &i in &idx {
        for c in 0..d {
            anchors.push(x_cols[c][i] / scales[c]);
        }
    }
    let bandwidth = median_heuristic(&anchors, m, d).max(1e-12) * cfg.bandwidth_scale;
    FeatureMap {
        anchors,
        dim: d,
        scales,
        bandwidth,
        include_linear: cfg.include_linear,
    }
}

pub struct KrrFit {
    map: FeatureMap,
    beta: Vec<f64>,
    y_mean: f64,
    pub chosen_ridge: f64,
    /// Trace of the hat matrix at the chosen ridge (effective model dof).
    pub effective_dof: f64,
    /// Rows the fit was trained on.
    pub train_rows: usize,
}

/// Fit with a fresh feature map built from the data.
pub fn krr_fit(x_cols: &[&[f64]], y: &[f64], cfg: &KrrConfig, seed: u64) -> KrrFit {
    let map = feature_map(x_cols, cfg, seed);
    krr_fit_on(map, x_cols, y, cfg)
}

/// Fit ridge weights on an existing feature map. GCV picks the ridge.
pub fn krr_fit_on(map: FeatureMap, x_cols: &[&[f64]], y: &[f64], cfg: &KrrConfig) -> KrrFit {
    let n = y.len();
    let m = map.num_features();
    let d = map.dim;
    debug_assert!(x_cols.len() == d && x_cols.iter().all(|c| c.len() == n));

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut xty = DVector::<f64>::zeros(m);
    let mut phi_row = vec![0.0; m];
    let mut raw_row = vec![0.0; d];
    for i in 0..n {
        for c in 0..d {
            raw_row[c] = x_cols[c][i];
        }
        map.fill_features(&raw_row, &mut phi_row);
        let yc = y[i] - y_mean;
        for a in 0..m {
            xty[a] += phi_row[a] * yc;
            for b in a..m {
                gram[(a, b)] += phi_row[a] * phi_row[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }

    let eig = gram.symmetric_eigen();
    let evals: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    let z = eig.eigenvectors.transpose() * &xty;
    let ssy: f64 = y.iter().map(|&v| (v - y_mean) * (v - y_mean)).sum();
    let scale = (evals.iter().sum::<f64>() / m as f64).max(1e-12);

    // GCV(ridge) = n * RSS / (n - tr H)^2 over the candidate grid
    let mut best = (f64::INFINITY, cfg.ridge_grid[0] * scale, 0.0);
    for &rel in &cfg.ridge_grid {
        let lam = rel * scale;
        let mut fit_dot = 0.0;
        let mut fit_sq = 0.0;
        let mut tr_h = 0.0;
        for (k, &dk) in evals.iter().enumerate() {
            let denom = dk + lam;
            fit_dot += z[k] * z[k] / denom;
            fit_sq += z[k] * z[k] * dk / (denom * denom);
            tr_h += dk / denom;
        }
        let rss = (ssy - 2.0 * fit_dot + fit_sq).max(0.0);
        let dof = (n as f64 - tr_h).max(1e-6);
        let gcv = n as f64 * rss / (dof * dof);
        if gcv < best.0 {
            best = (gcv, lam, tr_h);
        }
    }
    let lam = best.1;
    let mut beta_eig = DVector::<f64>::zeros(m);
    for k in 0..m {
        beta_eig[k] = z[k] / (evals[k] + lam);
    }
    let beta = eig.eigenvectors * beta_eig;

    KrrFit {
        map,
        beta: beta.iter().copied().collect(),
        y_mean,
        chosen_ridge: lam,
        effective_dof: best.2,
        train_rows: n,
    }
}

impl KrrFit {
    pub fn predict_row(&self, raw: &[f64]) -> f64 {
        let m = self.beta.len();
        let mut phi = vec![0.0; m];
        self.map.fill_features(raw, &mut phi);
        self.y_mean
            + phi
                .iter()
                .zip(&self.beta)
                .map(|(p, b)| p * b)
                .sum::<f64>()
    }

    pub fn predict_cols(&self, x_cols: &[&[f64]]) -> Vec<f64> {
        let n = x_cols[0].len();
        let d = self.map.dim;
        let m = self.beta.len();
        let mut phi = vec![0.0; m];
        let mut raw_row = vec![0.0; d];
        (0..n)
            .map(|i| {
                for c in 0..d {
                    raw_row[c] = x_cols[c][i];
                }
                self.map.fill_features(&raw_row, &mut phi);
                self.y_mean
                    + phi
                        .iter()
                        .zip(&self.beta)
                        .map(|(p, b)| p * b)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn residuals(&self, x_cols: &[&[f64]], y: &[f64]) -> Vec<f64> {
        self.predict_cols(x_cols)
            .into_iter()
            .zip(y)
            .map(|(pred, &obs)| obs - pred)
            .collect()
    }
}

/// Median pairwise distance among the (scaled) anchor rows.
fn median_heuristic(rows: &[f64], m: usize, d: usize) -> f64 {
    if m < 2 {
        return 1.0;
    }
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let mut s = 0.0;
            for c in 0..d {
                let diff = rows[i * d + c] - rows[j * d + c];
                s += diff * diff;
            }
            dists.push(s.sqrt());
        }
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    let mid = dists.len() / 2;
    let med = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn recovers_smooth_function() {
        let mut rng = seeded_rng(3);
        let n = 600;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| v.sin() + 0.05 * rng.random_range(-1.0..1.0))
            .collect();
        let fit = krr_fit(&[&x], &y, &KrrConfig::default(), 7);
        let mse: f64 = x
            .iter()
            .zip(&y)
            .map(|(&xv, &yv)| (fit.predict_row(&[xv]) - yv).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!(mse < 0.01, "mse = {mse}");
    }

    #[test]
    fn constant_target_predicts_mean() {
        let x: Vec<f64> = (0..300).map(|i| i as f64 / 100.0).collect();
        let y = vec![4.2; 300];
        let fit = krr_fit(&[&x], &y, &KrrConfig::default(), 7);
        for probe in [0.0, 1.0, 2.5] {
            assert!((fit.predict_row(&[probe]) - 4.2).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = seeded_rng(5);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| v * v).collect();
        let a = krr_fit(&[&x], &y, &KrrConfig::default(), 11);
        let b = krr_fit(&[&x], &y, &KrrConfig::default(), 11);
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.chosen_ridge, b.chosen_ridge);
    }

    #[test]
    fn shared_feature_map_fits_two_targets() {
        let mut rng = seeded_rng(9);
        let n = 500;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y1: Vec<f64> = x.iter().map(|&v| v * v).collect();
        let y2: Vec<f64> = x.iter().map(|&v| -v).collect();
        let cfg = KrrConfig::default();
        let map = feature_map(&[&x], &cfg, 4);
        let f1 = krr_fit_on(map.clone(), &[&x], &y1, &cfg);
        let f2 = krr_fit_on(map, &[&x], &y2, &cfg);
        assert!((f1.predict_row(&[1.5]) - 2.25).abs() < 0.1);
        assert!((f2.predict_row(&[1.5]) + 1.5).abs() < 0.1);
    }
}
