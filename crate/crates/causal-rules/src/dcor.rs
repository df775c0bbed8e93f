//! Distance covariance and correlation (the biased V-statistic form), with
//! permutation p-values.
//!
//! Three evaluation paths share one definition:
//!
//! * univariate-vs-univariate in `O(n log n)` through order statistics and a
//!   Fenwick tree,
//! * univariate-vs-discrete-labels in `O(n log n)` through group sums,
//! * the general double-centering form in `O(n^2)`, kept both as the oracle
//!   the fast paths are tested against and as the fallback for small
//!   multivariate inputs.
//!
//! All three use the identity
//! `dcov^2 = S1 - 2*S2 + S3` with
//! `S1 = sum_ij a_ij b_ij / n^2`,
//! `S2 = sum_i (sum_j a_ij)(sum_k b_ik) / n^3`,
//! `S3 = (sum_ij a_ij)(sum_kl b_kl) / n^4`.

use numkit::{seeded_rng, SeededRng};
use rand::seq::SliceRandom;

const EPS: f64 = 1e-14;

/// Row sums `r_i = sum_j |x_i - x_j|` in `O(n log n)`.
fn abs_row_sums(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut out = vec![0.0; n];
    let mut prefix = 0.0;
    let total: f64 = x.iter().sum();
    for (k, &i) in order.iter().enumerate() {
        let v = x[i];
        // sum over j before i in sorted order: (v - x_j); after: (x_j - v)
        let below = v * k as f64 - prefix;
        let above = (total - prefix - v) - v * (n - 1 - k) as f64;
        out[i] = below + above;
        prefix += v;
    }
    out
}

/// `sum_ij (x_i - x_j)^2` in closed form.
fn sq_diff_sum(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s: f64 = x.iter().sum();
    let ss: f64 = x.iter().map(|v| v * v).sum();
    2.0 * n * ss - 2.0 * s * s
}

/// Distance variance (squared) of a univariate sample.
fn dvar_univariate(x: &[f64], row_sums: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s1 = sq_diff_sum(x) / (n * n);
    let s2 = row_sums.iter().map(|r| r * r).sum::<f64>() / (n * n * n);
    let s3 = (row_sums.iter().sum::<f64>() / (n * n)).powi(2);
    s1 - 2.0 * s2 + s3
}

/// Fenwick tree carrying (count, sum x, sum y, sum xy) per y-rank.
struct Bit4 {
    n: usize,
    cnt: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
    sxy: Vec<f64>,
}

impl Bit4 {
    fn new(n: usize) -> Self {
        Bit4 {
            n,
            cnt: vec![0.0; n + 1],
            sx: vec![0.0; n + 1],
            sy: vec![0.0; n + 1],
            sxy: vec![0.0; n + 1],
        }
    }

    fn reset(&mut self) {
        self.cnt.fill(0.0);
        self.sx.fill(0.0);
        self.sy.fill(0.0);
        self.sxy.fill(0.0);
    }

    fn add(&mut self, mut pos: usize, x: f64, y: f64) {
        pos += 1;
        while pos <= self.n {
            self.cnt[pos] += 1.0;
            self.sx[pos] += x;
            self.sy[pos] += y;
            self.sxy[pos] += x * y;
            pos += pos & pos.wrapping_neg();
        }
    }

    fn prefix(&self, mut pos: usize) -> (f64, f64, f64, f64) {
        pos += 1;
        let (mut c, mut x, mut y, mut xy) = (0.0, 0.0, 0.0, 0.0);
        while pos > 0 {
            c += self.cnt[pos];
            x += self.sx[pos];
            y += self.sy[pos];
            xy += self.sxy[pos];
            pos -= pos & pos.wrapping_neg();
        }
        (c, x, y, xy)
    }
}

fn ranks(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// `sum_{i<j} |x_i - x_j| |y_i - y_j|` using a single sweep in x order.
fn cross_abs_sum(order_by_x: &[usize], x: &[f64], y: &[f64], yrank: &[usize], bit: &mut Bit4) -> f64 {
    bit.reset();
    let mut total = 0.0;
    let (mut c_all, mut sx_all, mut sy_all, mut sxy_all) = (0.0, 0.0, 0.0, 0.0);
    for &i in order_by_x {
        let (xi, yi, r) = (x[i], y[i], yrank[i]);
        let (c_le, sx_le, sy_le, sxy_le) = bit.prefix(r);
        let (c_gt, sx_gt, sy_gt, sxy_gt) = (
            c_all - c_le,
            sx_all - sx_le,
            sy_all - sy_le,
            sxy_all - sxy_le,
        );
        // processed points have x <= xi; those with y <= yi contribute
        // (xi - x)(yi - y), the rest (xi - x)(y - yi)
        total += c_le * xi * yi - xi * sy_le - yi * sx_le + sxy_le;
        total += xi * sy_gt - c_gt * xi * yi + yi * sx_gt - sxy_gt;
        bit.add(r, xi, yi);
        c_all += 1.0;
        sx_all += xi;
        sy_all += yi;
        sxy_all += xi * yi;
    }
    total
}

/// Reusable state for a univariate pair test: everything that does not change
/// when one side is permuted.
pub struct PairDcor {
    x: Vec<f64>,
    y: Vec<f64>,
    order_by_x: Vec<usize>,
    yrank_base: Vec<usize>,
    rx: Vec<f64>,
    ry: Vec<f64>,
    dvar_x: f64,
    dvar_y: f64,
    sum_rx: f64,
    sum_ry: f64,
    bit: Bit4,
    scratch_y: Vec<f64>,
    scratch_ry: Vec<f64>,
    scratch_rank: Vec<usize>,
}

impl PairDcor {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        assert_eq!(n, y.len());
        let mut order_by_x: Vec<usize> = (0..n).collect();
        order_by_x.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let rx = abs_row_sums(x);
        let ry = abs_row_sums(y);
        let dvar_x = dvar_univariate(x, &rx);
        let dvar_y = dvar_univariate(y, &ry);
        PairDcor {
            x: x.to_vec(),
            y: y.to_vec(),
            order_by_x,
            yrank_base: ranks(y),
            sum_rx: rx.iter().sum(),
            sum_ry: ry.iter().sum(),
            rx,
            ry,
            dvar_x,
            dvar_y,
            bit: Bit4::new(n),
            scratch_y: vec![0.0; n],
            scratch_ry: vec![0.0; n],
            scratch_rank: vec![0; n],
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.dvar_x <= EPS || self.dvar_y <= EPS
    }

    /// dcor under the pairing `(x_i, y_{perm[i]})`; `perm = identity` gives
    /// the observed statistic.
    fn dcor_with(&mut self, perm: Option<&[usize]>) -> f64 {
        let n = self.x.len() as f64;
        match perm {
            None => {
                self.scratch_y.copy_from_slice(&self.y);
                self.scratch_ry.copy_from_slice(&self.ry);
                self.scratch_rank.copy_from_slice(&self.yrank_base);
            }
            Some(p) => {
                for (dst, &k) in self.scratch_y.iter_mut().zip(p) {
                    *dst = self.y[k];
                }
                for (dst, &k) in self.scratch_ry.iter_mut().zip(p) {
                    *dst = self.ry[k];
                }
                for (dst, &k) in self.scratch_rank.iter_mut().zip(p) {
                    *dst = self.yrank_base[k];
                }
            }
        }
        let cross = cross_abs_sum(
            &self.order_by_x,
            &self.x,
            &self.scratch_y,
            &self.scratch_rank,
            &mut self.bit,
        );
        let s1 = 2.0 * cross / (n * n);
        let s2 = self
            .rx
            .iter()
            .zip(&self.scratch_ry)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (n * n * n);
        let s3 = (self.sum_rx / (n * n)) * (self.sum_ry / (n * n));
        let dcov_sq = s1 - 2.0 * s2 + s3;
        normalize(dcov_sq, self.dvar_x, self.dvar_y)
    }

    pub fn statistic(&mut self) -> f64 {
        self.dcor_with(None)
    }

    /// Permutation p-value with the add-one estimator.
    pub fn permutation_p(&mut self, permutations: usize, rng: &mut SeededRng) -> f64 {
        if self.is_degenerate() {
            return 1.0;
        }
        let observed = self.dcor_with(None);
        let n = self.x.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut exceed = 0usize;
        for _ in 0..permutations {
            perm.shuffle(rng);
            if self.dcor_with(Some(&perm)) >= observed {
                exceed += 1;
            }
        }
        (1 + exceed) as f64 / (1 + permutations) as f64
    }
}

/// Univariate-vs-discrete-labels distance correlation with the one-hot
/// distance `sqrt(2) * [l_i != l_j]`.
pub struct LabelDcor {
    x_sorted: Vec<f64>,
    order_original: Vec<usize>,
    labels: Vec<usize>,
    rx_in_x_order: Vec<f64>,
    sum_rx: f64,
    dvar_x: f64,
    dvar_l: f64,
    sum_sl: f64,
    group_sizes: Vec<usize>,
    num_levels: usize,
}

impl LabelDcor {
    pub fn new(x: &[f64], labels: &[usize]) -> Self {
        let n = x.len();
        assert_eq!(n, labels.len());
        let num_levels = labels.iter().copied().max().map_or(1, |m| m + 1);
        let mut group_sizes = vec![0usize; num_levels];
        for &l in labels {
            group_sizes[l] += 1;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let rx = abs_row_sums(x);
        let dvar_x = dvar_univariate(x, &rx);

        let nf = n as f64;
        let c = std::f64::consts::SQRT_2;
        // label-side quantities depend only on group sizes
        let sum_sq_sizes: f64 = group_sizes.iter().map(|&g| (g * g) as f64).sum();
        let s1l = 2.0 * (nf * nf - sum_sq_sizes) / (nf * nf);
        let s2l = group_sizes
            .iter()
            .map(|&g| g as f64 * 2.0 * (nf - g as f64).powi(2))
            .sum::<f64>()
            / (nf * nf * nf);
        let sum_sl: f64 = group_sizes
            .iter()
            .map(|&g| c * g as f64 * (nf - g as f64))
            .sum();
        let s3l = (sum_sl / (nf * nf)).powi(2);
        let dvar_l = s1l - 2.0 * s2l + s3l;

        LabelDcor {
            x_sorted: order.iter().map(|&i| x[i]).collect(),
            rx_in_x_order: order.iter().map(|&i| rx[i]).collect(),
            order_original: order,
            labels: labels.to_vec(),
            sum_rx: rx.iter().sum(),
            dvar_x,
            dvar_l,
            sum_sl,
            group_sizes,
            num_levels,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.dvar_x <= EPS || self.dvar_l <= EPS
    }

    /// dcor with labels reassigned as `labels[perm[i]]` (identity when None).
    fn dcor_with(&self, perm: Option<&[usize]>) -> f64 {
        let n = self.x_sorted.len();
        let nf = n as f64;
        let c = std::f64::consts::SQRT_2;

        // within-group ordered |x_i - x_j| sums via one sweep in x order
        let mut cnt = vec![0.0f64; self.num_levels];
        let mut sum = vec![0.0f64; self.num_levels];
        let mut within = 0.0;
        // and sum_i rx_i * s_i on the fly
        let mut rs = 0.0;
        for k in 0..n {
            let orig = self.order_original[k];
            let lab = match perm {
                None => self.labels[orig],
                Some(p) => self.labels[p[orig]],
            };
            let v = self.x_sorted[k];
            within += v * cnt[lab] - sum[lab];
            cnt[lab] += 1.0;
            sum[lab] += v;
            rs += self.rx_in_x_order[k] * c * (nf - self.group_sizes[lab] as f64);
        }
        let total_abs = self.sum_rx;
        let s1 = c * (total_abs - 2.0 * within) / (nf * nf);
        let s2 = rs / (nf * nf * nf);
        let s3 = (self.sum_rx / (nf * nf)) * (self.sum_sl / (nf * nf));
        normalize(s1 - 2.0 * s2 + s3, self.dvar_x, self.dvar_l)
    }

    pub fn statistic(&self) -> f64 {
        self.dcor_with(None)
    }

    pub fn permutation_p(&self, permutations: usize, rng: &mut SeededRng) -> f64 {
        if self.is_degenerate() {
            return 1.0;
        }
        let observed = self.dcor_with(None);
        let n = self.x_sorted.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut exceed = 0usize;
        for _ in 0..permutations {
            perm.shuffle(rng);
            if self.dcor_with(Some(&perm)) >= observed {
                exceed += 1;
            }
        }
        (1 + exceed) as f64 / (1 + permutations) as f64
    }
}

fn normalize(dcov_sq: f64, dvar_x: f64, dvar_y: f64) -> f64 {
    let denom = (dvar_x * dvar_y).sqrt();
    if denom <= EPS {
        return 0.0;
    }
    (dcov_sq.max(0.0) / denom).sqrt()
}

/// Naive `O(n^2)` distance correlation for multivariate columns. `x` and `y`
/// are column-major: `x[c][i]` is row `i` of column `c`.
pub struct NaiveDcor {
    a: Vec<f64>,
    b: Vec<f64>,
    n: usize,
    dvar_a: f64,
    dvar_b: f64,
}

impl NaiveDcor {
    pub fn new(x: &[Vec<f64>], y: &[Vec<f64>]) -> Self {
        let n = x[0].len();
        let a = centered_distance_matrix(x, n);
        let b = centered_distance_matrix(y, n);
        let dvar_a = frob_mean(&a, &a, n);
        let dvar_b = frob_mean(&b, &b, n);
        NaiveDcor {
            a,
            b,
            n,
            dvar_a,
            dvar_b,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.dvar_a <= EPS || self.dvar_b <= EPS
    }

    fn dcor_with(&self, perm: Option<&[usize]>) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        match perm {
            None => {
                for (av, bv) in self.a.iter().zip(&self.b) {
                    acc += av * bv;
                }
            }
            Some(p) => {
                for i in 0..n {
                    let pi = p[i] * n;
                    let ai = i * n;
                    for j in 0..n {
                        acc += self.a[ai + j] * self.b[pi + p[j]];
                    }
                }
            }
        }
        normalize(acc / (n * n) as f64, self.dvar_a, self.dvar_b)
    }

    pub fn statistic(&self) -> f64 {
        self.dcor_with(None)
    }

    pub fn permutation_p(&self, permutations: usize, rng: &mut SeededRng) -> f64 {
        if self.is_degenerate() {
            return 1.0;
        }
        let observed = self.dcor_with(None);
        let mut perm: Vec<usize> = (0..self.n).collect();
        let mut exceed = 0usize;
        for _ in 0..permutations {
            perm.shuffle(rng);
            if self.dcor_with(Some(&perm)) >= observed {
                exceed += 1;
            }
        }
        (1 + exceed) as f64 / (1 + permutations) as f64
    }
}

fn centered_distance_matrix(cols: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for col in cols {
                let diff = col[i] - col[j];
                s += diff * diff;
            }
            let dist = s.sqrt();
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    let mut row_mean = vec![0.0; n];
    for i in 0..n {
        row_mean[i] = d[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64;
    }
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] += grand - row_mean[i] - row_mean[j];
        }
    }
    d
}

fn frob_mean(a: &[f64], b: &[f64], n: usize) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (n * n) as f64
}

/// Convenience: observed univariate dcor value.
pub fn dcor_univariate(x: &[f64], y: &[f64]) -> f64 {
    PairDcor::new(x, y).statistic()
}

/// Convenience: observed univariate-vs-labels dcor value.
pub fn dcor_labels(x: &[f64], labels: &[usize]) -> f64 {
    LabelDcor::new(x, labels).statistic()
}

/// Convenience: observed naive multivariate dcor value.
pub fn dcor_naive(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    NaiveDcor::new(x, y).statistic()
}

/// Seeded permutation p-value for a univariate pair.
pub fn pair_permutation_p(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> (f64, f64) {
    let mut pc = PairDcor::new(x, y);
    let stat = pc.statistic();
    let p = pc.permutation_p(permutations, &mut seeded_rng(seed));
    (stat, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_univariate(x: &[f64], y: &[f64]) -> f64 {
        dcor_naive(&[x.to_vec()], &[y.to_vec()])
    }

    #[test]
    fn fast_pair_matches_naive_on_fixed_cases() {
        let x = vec![0.3, -1.2, 2.4, 0.0, 0.7, -0.5, 1.1, 3.0];
        let y = vec![1.0, 0.2, -0.4, 0.9, 2.2, -1.7, 0.0, 0.5];
        let fast = dcor_univariate(&x, &y);
        let naive = naive_univariate(&x, &y);
        assert!((fast - naive).abs() < 1e-12, "{fast} vs {naive}");
    }

    #[test]
    fn fast_pair_handles_ties() {
        let x = vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let y = vec![0.0, 1.0, 0.0, 1.0, 1.0, 1.0];
        let fast = dcor_univariate(&x, &y);
        let naive = naive_univariate(&x, &y);
        assert!((fast - naive).abs() < 1e-12, "{fast} vs {naive}");
    }

    #[test]
    fn label_dcor_matches_naive_one_hot() {
        let x = vec![0.3, -1.2, 2.4, 0.0, 0.7, -0.5, 1.1, 3.0, -2.0, 0.05];
        let labels = vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0];
        let fast = dcor_labels(&x, &labels);
        // one-hot columns
        let levels = 3;
        let onehot: Vec<Vec<f64>> = (0..levels)
            .map(|l| labels.iter().map(|&v| (v == l) as u8 as f64).collect())
            .collect();
        let naive = dcor_naive(&[x.clone()], &onehot);
        assert!((fast - naive).abs() < 1e-12, "{fast} vs {naive}");
    }

    #[test]
    fn identical_columns_have_dcor_one() {
        let x = vec![0.1, 0.4, -0.3, 2.0, 1.5, -0.7];
        assert!((dcor_univariate(&x, &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_degenerate_zero() {
        let x = vec![1.0; 8];
        let y = vec![0.3, -1.2, 2.4, 0.0, 0.7, -0.5, 1.1, 3.0];
        assert_eq!(dcor_univariate(&x, &y), 0.0);
        assert!(PairDcor::new(&x, &y).is_degenerate());
    }

    #[test]
    fn permutation_p_detects_strong_dependence() {
        let x: Vec<f64> = (0..200).map(|i| (i as f64) / 20.0 - 5.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let (_, p) = pair_permutation_p(&x, &y, 199, 5);
        assert!(p <= 0.01, "p = {p}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn fast_pair_agrees_with_naive(
            pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 4..60)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let fast = dcor_univariate(&x, &y);
            let naive = naive_univariate(&x, &y);
            prop_assert!((fast - naive).abs() < 1e-9, "{} vs {}", fast, naive);
        }

        #[test]
        fn label_fast_agrees_with_naive(
            rows in prop::collection::vec((-20.0f64..20.0, 0usize..4), 6..50)
        ) {
            let x: Vec<f64> = rows.iter().map(|p| p.0).collect();
            let mut labels: Vec<usize> = rows.iter().map(|p| p.1).collect();
            // make labels contiguous 0..k
            let max = *labels.iter().max().unwrap();
            labels.push(max); // ensure max level present at least once
            let x2 = {
                let mut v = x.clone();
                v.push(0.0);
                v
            };
            let levels = max + 1;
            let onehot: Vec<Vec<f64>> = (0..levels)
                .map(|l| labels.iter().map(|&v| (v == l) as u8 as f64).collect())
                .collect();
            let fast = dcor_labels(&x2, &labels);
            let naive = dcor_naive(&[x2.clone()], &onehot);
            prop_assert!((fast - naive).abs() < 1e-9, "{} vs {}", fast, naive);
        }
    }
}
