//! Small statistical helpers: a variance-equality test across groups,
//! Fisher's p-value combination, and rank correlation.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

/// Brown-Forsythe test (median-centered one-way variance test) of whether the
/// spread of `values` differs across environment levels. Returns the p-value.
pub fn variance_equality_p(values: &[f64], labels: &[usize], num_levels: usize) -> f64 {
    let n = values.len();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); num_levels];
    for (v, &l) in values.iter().zip(labels) {
        groups[l].push(*v);
    }
    let groups: Vec<Vec<f64>> = groups.into_iter().filter(|g| g.len() >= 2).collect();
    let k = groups.len();
    if k < 2 {
        return 1.0;
    }

    // absolute deviations from the group median
    let mut z_all = Vec::with_capacity(n);
    let mut z_groups = Vec::with_capacity(k);
    for g in &groups {
        let med = median(g);
        let z: Vec<f64> = g.iter().map(|v| (v - med).abs()).collect();
        z_all.extend_from_slice(&z);
        z_groups.push(z);
    }
    let total_n = z_all.len() as f64;
    let grand = z_all.iter().sum::<f64>() / total_n;
    let mut between = 0.0;
    let mut within = 0.0;
    for z in &z_groups {
        let m = z.iter().sum::<f64>() / z.len() as f64;
        between += z.len() as f64 * (m - grand) * (m - grand);
        within += z.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let df1 = (k - 1) as f64;
    let df2 = total_n - k as f64;
    if within <= 1e-300 {
        return if between <= 1e-300 { 1.0 } else { 0.0 };
    }
    let f = (df2 / df1) * between / within;
    match FisherSnedecor::new(df1, df2) {
        Ok(dist) => (1.0 - dist.cdf(f)).clamp(0.0, 1.0),
        Err(_) => 1.0,
    }
}

/// Fisher's method for combining independent p-values.
pub fn fisher_combine(p_values: &[f64]) -> f64 {
    if p_values.is_empty() {
        return 1.0;
    }
    let stat: f64 = p_values.iter().map(|p| -2.0 * p.max(1e-300).ln()).sum();
    match ChiSquared::new(2.0 * p_values.len() as f64) {
        Ok(dist) => (1.0 - dist.cdf(stat)).clamp(0.0, 1.0),
        Err(_) => 1.0,
    }
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = fractional_ranks(a);
    let rb = fractional_ranks(b);
    pearson(&ra, &rb)
}

pub fn spearman_abs(a: &[f64], b: &[f64]) -> f64 {
    spearman(a, b).abs()
}

pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let mut j = k;
        while j + 1 < n && values[order[j + 1]] == values[order[k]] {
            j += 1;
        }
        let avg = (k + j) as f64 / 2.0 + 1.0;
        for &i in &order[k..=j] {
            ranks[i] = avg;
        }
        k = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 1e-300 || vb <= 1e-300 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}
