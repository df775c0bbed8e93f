//! Observation maps from the 2-dimensional latent space: identity, a random
//! full-row-rank linear map, or a frozen random MLP.

use crate::error::{Result, SemgenError};
use numkit::{seeded_rng, Mlp, MlpSpec, Tensor};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingKind {
    Identity,
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingSpec {
    pub kind: MixingKind,
    pub seed: u64,
    pub out_dim: usize,
}

impl MixingSpec {
    pub fn identity() -> Self {
        MixingSpec {
            kind: MixingKind::Identity,
            seed: 0,
            out_dim: 2,
        }
    }

    pub fn linear(seed: u64) -> Self {
        MixingSpec {
            kind: MixingKind::Linear,
            seed,
            out_dim: 10,
        }
    }

    pub fn nonlinear(seed: u64) -> Self {
        MixingSpec {
            kind: MixingKind::Nonlinear,
            seed,
            out_dim: 10,
        }
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            MixingKind::Identity if self.out_dim != 2 => Err(SemgenError::InvalidMixingSpec {
                reason: format!("identity mixing has out_dim 2, got {}", self.out_dim),
            }),
            _ if self.out_dim < 2 => Err(SemgenError::InvalidMixingSpec {
                reason: format!("out_dim must be at least 2, got {}", self.out_dim),
            }),
            _ => Ok(()),
        }
    }
}

/// A realized observation map. Parameters are frozen at construction, so two
/// builds from the same spec apply bitwise-identical transforms.
#[derive(Debug, Clone)]
pub enum Mixing {
    Identity,
    /// 2 x out_dim matrix with full row rank.
    Linear(Tensor),
    /// Frozen random network `2 -> 6 relu -> out_dim`.
    Nonlinear(Mlp),
}

impl Mixing {
    pub fn build(spec: &MixingSpec) -> Result<Self> {
        spec.validate()?;
        match spec.kind {
            MixingKind::Identity => Ok(Mixing::Identity),
            MixingKind::Linear => {
                // Regenerate from the next seed if the draw is rank-deficient.
                for attempt in 0..16 {
                    let mut rng = seeded_rng(spec.seed.wrapping_add(attempt));
                    let data: Vec<f64> = (0..2 * spec.out_dim)
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    let s = Tensor::from_vec(vec![2, spec.out_dim], data)?;
                    if full_row_rank(&s) {
                        return Ok(Mixing::Linear(s));
                    }
                }
                Err(SemgenError::InvalidMixingSpec {
                    reason: "could not draw a full-row-rank linear mixing".into(),
                })
            }
            MixingKind::Nonlinear => Ok(Mixing::Nonlinear(Mlp::init(
                MlpSpec::relu_hidden(2, 6, spec.out_dim),
                spec.seed,
            ))),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Mixing::Identity => 2,
            Mixing::Linear(s) => s.cols(),
            Mixing::Nonlinear(mlp) => mlp.spec().output_dim(),
        }
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        if x.cols() != 2 {
            return Err(SemgenError::MixingInputColumns { got: x.cols() });
        }
        match self {
            Mixing::Identity => Ok(x.clone()),
            Mixing::Linear(s) => {
                let n = x.rows();
                let d = s.cols();
                let mut out = vec![0.0; n * d];
                for r in 0..n {
                    let (a, b) = (x.get2(r, 0), x.get2(r, 1));
                    for c in 0..d {
                        out[r * d + c] = a * s.get2(0, c) + b * s.get2(1, c);
                    }
                }
                Ok(Tensor::from_vec(vec![n, d], out)?)
            }
            Mixing::Nonlinear(mlp) => Ok(mlp.forward_plain(x)?),
        }
    }
}

/// Apply the mixing described by `spec` to an `n x 2` latent matrix.
pub fn apply_mixing(x: &Tensor, spec: &MixingSpec) -> Result<Tensor> {
    Mixing::build(spec)?.apply(x)
}

/// A 2 x d matrix has full row rank iff its Gram determinant is far from zero
/// relative to the row norms.
fn full_row_rank(s: &Tensor) -> bool {
    let d = s.cols();
    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
    for c in 0..d {
        let (a, b) = (s.get2(0, c), s.get2(1, c));
        g11 += a * a;
        g12 += a * b;
        g22 += b * b;
    }
    let det = g11 * g22 - g12 * g12;
    det > 1e-9 * g11 * g22
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_input() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let o = apply_mixing(&x, &MixingSpec::identity()).unwrap();
        assert_eq!(o.data(), &[1.0, 2.0]);
    }

    #[test]
    fn linear_matches_hand_computed_product() {
        let spec = MixingSpec {
            kind: MixingKind::Linear,
            seed: 3,
            out_dim: 4,
        };
        let Mixing::Linear(s) = Mixing::build(&spec).unwrap() else {
            panic!("expected linear mixing");
        };
        let x = Tensor::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![2.0, -1.0],
        ])
        .unwrap();
        let o = apply_mixing(&x, &spec).unwrap();
        for c in 0..4 {
            assert_eq!(o.get2(0, c), s.get2(0, c));
            assert_eq!(o.get2(1, c), s.get2(1, c));
            assert_eq!(o.get2(2, c), 2.0 * s.get2(0, c) - s.get2(1, c));
        }
    }

    #[test]
    fn nonlinear_is_frozen_and_deterministic() {
        let spec = MixingSpec::nonlinear(11);
        let x = Tensor::from_rows(&[vec![0.5, -0.25], vec![1.0, 2.0]]).unwrap();
        let a = apply_mixing(&x, &spec).unwrap();
        let b = apply_mixing(&x, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cols(), 10);
    }

    #[test]
    fn wrong_column_count_is_an_error() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(apply_mixing(&x, &MixingSpec::identity()).is_err());
    }

    #[test]
    fn identity_out_dim_is_validated() {
        let spec = MixingSpec {
            kind: MixingKind::Identity,
            seed: 0,
            out_dim: 10,
        };
        assert!(Mixing::build(&spec).is_err());
    }
}
