//! Monte-Carlo moment checks against the closed forms.

use semgen::{empirical_ols, make_multi_env_dataset, ols_oracle, sample_model1, EnvSpec};
use semgen::{MixingSpec, Task};

fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

#[test]
fn structural_moments_within_three_standard_errors() {
    let n = 100_000;
    let env = EnvSpec::new(1.0, 0.4, 0.8).unwrap();
    let s = sample_model1(&env, n, 31);
    // Var(X1) = s1, Var(Y) = s1 + s2, Var(X2) = s1 + s2 + s3.
    let checks = [
        (variance(&s.x1), 1.0),
        (variance(&s.y), 1.4),
        (variance(&s.x2), 2.2),
    ];
    for (got, want) in checks {
        let se = want * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!(
            (got - want).abs() < 3.0 * se,
            "variance {got} vs {want} (3se = {})",
            3.0 * se
        );
    }
    for col in [&s.x1, &s.y, &s.x2] {
        let mean = col.iter().sum::<f64>() / n as f64;
        let se = (variance(col) / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} not near zero");
    }
}

#[test]
fn variance_addition_example() {
    // sigma1 = 1, sigma2 = 0, sigma3 = 0.2 gives Var(X2) = 1.2.
    let env = EnvSpec::new(1.0, 0.0, 0.2).unwrap();
    let s = sample_model1(&env, 1_000_000, 77);
    assert!((variance(&s.x2) - 1.2).abs() < 0.01);
}

#[test]
fn empirical_ols_matches_oracle_for_all_cases() {
    let n = 300_000;
    let env = EnvSpec::new(0.9, 0.35, 1.4).unwrap();
    let s = sample_model1(&env, n, 17);
    let tol = 6e-3;

    let got = empirical_ols(&[&s.x1], &s.y);
    let (a1, _) = ols_oracle(1, &env).unwrap();
    assert!((got[0] - a1).abs() < tol, "case 1: {} vs {a1}", got[0]);

    let got = empirical_ols(&[&s.x2], &s.y);
    let (_, a2) = ols_oracle(2, &env).unwrap();
    assert!((got[0] - a2).abs() < tol, "case 2: {} vs {a2}", got[0]);

    let got = empirical_ols(&[&s.x1, &s.x2], &s.y);
    let (a1, a2) = ols_oracle(3, &env).unwrap();
    assert!((got[0] - a1).abs() < tol, "case 3 a1: {} vs {a1}", got[0]);
    assert!((got[1] - a2).abs() < tol, "case 3 a2: {} vs {a2}", got[1]);
}

#[test]
fn mixing_keeps_latents_recoverable_in_linear_case() {
    let envs = [
        EnvSpec::new(1.0, 0.0, 0.2).unwrap(),
        EnvSpec::new(1.0, 0.0, 2.0).unwrap(),
    ];
    let ds = make_multi_env_dataset(&envs, 500, &MixingSpec::linear(3), 8, Task::Regression)
        .unwrap();
    // With a full-row-rank S the latents are an exact linear function of O,
    // so regressing X1 on O must give an essentially perfect fit.
    let x_true = ds.latents_true.as_ref().unwrap();
    let x1: Vec<f64> = x_true.column(0);
    let cols: Vec<Vec<f64>> = (0..ds.obs_dim()).map(|c| ds.observations.column(c)).collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let beta = empirical_ols(&refs, &x1);
    let mut resid = 0.0;
    for i in 0..ds.len() {
        let pred: f64 = (0..ds.obs_dim())
            .map(|c| beta[c] * ds.observations.get2(i, c))
            .sum();
        resid += (pred - x1[i]).powi(2);
    }
    assert!(resid / (ds.len() as f64) < 1e-12);
}
