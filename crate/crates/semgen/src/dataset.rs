//! Multi-environment datasets and their CSV form.

use crate::env::EnvSpec;
use crate::error::{Result, SemgenError};
use crate::mixing::{Mixing, MixingSpec};
use crate::model1::sample_model1;
use numkit::{derive_seed, Tensor};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

/// Sampled triples `(O, Y, E)` with the ground-truth latents retained for
/// simulator-generated data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Tensor,
    pub targets: Vec<f64>,
    pub env: Vec<usize>,
    pub latents_true: Option<Tensor>,
    pub task: Task,
    pub num_envs: usize,
}

impl Dataset {
    pub fn new(
        observations: Tensor,
        targets: Vec<f64>,
        env: Vec<usize>,
        latents_true: Option<Tensor>,
        task: Task,
        num_envs: usize,
    ) -> Result<Self> {
        let n = observations.rows();
        if targets.len() != n || env.len() != n {
            return Err(SemgenError::RowMismatch {
                reason: format!(
                    "observations {n}, targets {}, env {}",
                    targets.len(),
                    env.len()
                ),
            });
        }
        if let Some(x) = &latents_true {
            if x.rows() != n {
                return Err(SemgenError::RowMismatch {
                    reason: format!("latents_true has {} rows, expected {n}", x.rows()),
                });
            }
        }
        if let Some(&bad) = env.iter().find(|&&e| e >= num_envs) {
            return Err(SemgenError::RowMismatch {
                reason: format!("env index {bad} out of range 0..{num_envs}"),
            });
        }
        Ok(Dataset {
            observations,
            targets,
            env,
            latents_true,
            task,
            num_envs,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.observations.cols()
    }

    /// Row indices belonging to environment `e`.
    pub fn env_rows(&self, e: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.env[i] == e).collect()
    }

    /// Write as CSV with header `o_0..o_{d-1},y,e[,x_true_0,x_true_1]`.
    /// Floats carry 17 significant digits so the round-trip is value-exact.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| SemgenError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        let d = self.obs_dim();
        let mut header: Vec<String> = (0..d).map(|c| format!("o_{c}")).collect();
        header.push("y".into());
        header.push("e".into());
        if self.latents_true.is_some() {
            header.push("x_true_0".into());
            header.push("x_true_1".into());
        }
        let io_err = |source| SemgenError::Io {
            path: path.display().to_string(),
            source,
        };
        writeln!(w, "{}", header.join(",")).map_err(io_err)?;
        for i in 0..self.len() {
            let mut fields: Vec<String> = (0..d)
                .map(|c| format_float(self.observations.get2(i, c)))
                .collect();
            fields.push(format_float(self.targets[i]));
            fields.push(self.env[i].to_string());
            if let Some(x) = &self.latents_true {
                fields.push(format_float(x.get2(i, 0)));
                fields.push(format_float(x.get2(i, 1)));
            }
            writeln!(w, "{}", fields.join(",")).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }

    /// Read a dataset written by [`Dataset::write_csv`]. The task is not part
    /// of the file format and must be supplied by the caller's config.
    pub fn read_csv(path: &Path, task: Task) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| SemgenError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| SemgenError::CsvParse {
                line: 1,
                reason: "empty file".into(),
            })?
            .map_err(|source| SemgenError::Io {
                path: path.display().to_string(),
                source,
            })?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let d = cols.iter().take_while(|c| c.starts_with("o_")).count();
        let has_latents = cols.contains(&"x_true_0");
        let expected = d + 2 + if has_latents { 2 } else { 0 };
        if cols.len() != expected || cols.get(d) != Some(&"y") || cols.get(d + 1) != Some(&"e") {
            return Err(SemgenError::CsvParse {
                line: 1,
                reason: format!("unexpected header {header:?}"),
            });
        }

        let mut obs = Vec::new();
        let mut targets = Vec::new();
        let mut env = Vec::new();
        let mut latents = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line.map_err(|source| SemgenError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 2;
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != expected {
                return Err(SemgenError::CsvParse {
                    line: lineno,
                    reason: format!("expected {expected} fields, got {}", fields.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| SemgenError::CsvParse {
                    line: lineno,
                    reason: format!("bad float {s:?}: {e}"),
                })
            };
            for f in &fields[..d] {
                obs.push(parse(f)?);
            }
            targets.push(parse(fields[d])?);
            env.push(
                fields[d + 1]
                    .parse::<usize>()
                    .map_err(|e| SemgenError::CsvParse {
                        line: lineno,
                        reason: format!("bad env index {:?}: {e}", fields[d + 1]),
                    })?,
            );
            if has_latents {
                latents.push(parse(fields[d + 2])?);
                latents.push(parse(fields[d + 3])?);
            }
        }
        let n = targets.len();
        let num_envs = env.iter().copied().max().map_or(1, |m| m + 1);
        Dataset::new(
            Tensor::from_vec(vec![n, d], obs)?,
            targets,
            env,
            if has_latents {
                Some(Tensor::from_vec(vec![n, 2], latents)?)
            } else {
                None
            },
            task,
            num_envs,
        )
    }
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sample every environment, apply one shared mixing, and concatenate.
///
/// For classification the target is binarized at the pooled per-dataset
/// median. Ground-truth latents are always retained.
pub fn make_multi_env_dataset(
    envs: &[EnvSpec],
    n_per_env: usize,
    mixing: &MixingSpec,
    rng_seed: u64,
    task: Task,
) -> Result<Dataset> {
    if envs.is_empty() {
        return Err(SemgenError::NoEnvironments);
    }
    let map = Mixing::build(mixing)?;
    let mut x_true = Vec::with_capacity(envs.len() * n_per_env * 2);
    let mut y = Vec::with_capacity(envs.len() * n_per_env);
    let mut env_col = Vec::with_capacity(envs.len() * n_per_env);
    for (e, spec) in envs.iter().enumerate() {
        let s = sample_model1(spec, n_per_env, derive_seed(rng_seed, e as u64));
        for i in 0..n_per_env {
            x_true.push(s.x1[i]);
            x_true.push(s.x2[i]);
        }
        y.extend_from_slice(&s.y);
        env_col.extend(std::iter::repeat(e).take(n_per_env));
    }
    let n = y.len();
    let latents = Tensor::from_vec(vec![n, 2], x_true)?;
    let observations = map.apply(&latents)?;
    let targets = match task {
        Task::Regression => y,
        Task::Classification => {
            let m = median(&y);
            y.iter().map(|&v| if v > m { 1.0 } else { 0.0 }).collect()
        }
    };
    Dataset::new(
        observations,
        targets,
        env_col,
        Some(latents),
        task,
        envs.len(),
    )
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(s1: f64, s2: f64, s3: f64) -> EnvSpec {
        EnvSpec::new(s1, s2, s3).unwrap()
    }

    #[test]
    fn rows_and_env_indices() {
        let envs = [env(1.0, 0.0, 0.2), env(1.0, 0.0, 2.0)];
        let ds = make_multi_env_dataset(&envs, 1000, &MixingSpec::identity(), 4, Task::Regression)
            .unwrap();
        assert_eq!(ds.len(), 2000);
        assert!(ds.env[..1000].iter().all(|&e| e == 0));
        assert!(ds.env[1000..].iter().all(|&e| e == 1));
        assert!(ds.latents_true.is_some());
    }

    #[test]
    fn single_env_has_constant_index() {
        let ds = make_multi_env_dataset(
            &[env(1.0, 0.0, 0.2)],
            50,
            &MixingSpec::identity(),
            4,
            Task::Regression,
        )
        .unwrap();
        assert!(ds.env.iter().all(|&e| e == 0));
        assert_eq!(ds.num_envs, 1);
    }

    #[test]
    fn empty_env_list_is_an_error() {
        assert!(matches!(
            make_multi_env_dataset(&[], 10, &MixingSpec::identity(), 4, Task::Regression),
            Err(SemgenError::NoEnvironments)
        ));
    }

    #[test]
    fn classification_is_near_balanced() {
        let envs = [env(1.0, 0.0, 0.2), env(1.0, 0.0, 2.0)];
        let ds = make_multi_env_dataset(
            &envs,
            5000,
            &MixingSpec::identity(),
            9,
            Task::Classification,
        )
        .unwrap();
        let rate = ds.targets.iter().sum::<f64>() / ds.len() as f64;
        assert!(ds.targets.iter().all(|&y| y == 0.0 || y == 1.0));
        assert!((0.45..=0.55).contains(&rate), "class balance {rate}");
    }

    #[test]
    fn generation_is_bitwise_reproducible() {
        let envs = [env(1.0, 0.0, 0.2), env(1.0, 0.0, 2.0)];
        let a = make_multi_env_dataset(&envs, 200, &MixingSpec::nonlinear(5), 11, Task::Regression)
            .unwrap();
        let b = make_multi_env_dataset(&envs, 200, &MixingSpec::nonlinear(5), 11, Task::Regression)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_is_value_exact() {
        let envs = [env(1.0, 0.3, 0.2), env(1.0, 0.3, 2.0)];
        let ds = make_multi_env_dataset(&envs, 60, &MixingSpec::nonlinear(5), 2, Task::Regression)
            .unwrap();
        let dir = std::env::temp_dir().join("semgen_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ds.csv");
        ds.write_csv(&path).unwrap();
        let back = Dataset::read_csv(&path, Task::Regression).unwrap();
        assert_eq!(ds, back);
    }
}
