//! Training and test parameter samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned parameter box `[lower_i, upper_i]`; a dimension with
/// `lower == upper` is held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParameterBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::invalid(format!(
                "parameter box needs matching non-empty bounds, got {} and {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) || l > u {
                return Err(Error::invalid(format!(
                    "parameter box is empty in dimension {i}: [{l}, {u}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim()
            && mu
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(m, (l, u))| l <= m && m <= u)
    }

    /// Dimensions with a non-degenerate range.
    fn free_dims(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.upper[i] > self.lower[i])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// Tensor grid over the free dimensions, including the endpoints; `n` must
    /// be a perfect power of the number of free dimensions.
    Equispaced,
    Random {
        seed: u64,
    },
}

pub fn sample_parameters(
    space: &ParameterBox,
    n: usize,
    strategy: Sampling,
) -> Result<Vec<Vec<f64>>> {
    space.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    match strategy {
        Sampling::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n)
                .map(|_| {
                    (0..space.dim())
                        .map(|i| {
                            let (l, u) = (space.lower[i], space.upper[i]);
                            if u > l {
                                rng.random_range(l..=u)
                            } else {
                                l
                            }
                        })
                        .collect()
                })
                .collect())
        }
        Sampling::Equispaced => {
            let free = space.free_dims();
            let center: Vec<f64> = space
                .lower
                .iter()
                .zip(&space.upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect();
            if n == 1 || free.is_empty() {
                return Ok(vec![center; n]);
            }
            let per = (n as f64).powf(1.0 / free.len() as f64).round() as usize;
            if per.pow(free.len() as u32) != n {
                return Err(Error::invalid(format!(
                    "equispaced sampling of {} free dimensions needs a perfect power count, got {n}",
                    free.len()
                )));
            }
            let axis = |i: usize, k: usize| {
                let (l, u) = (space.lower[i], space.upper[i]);
                if k + 1 == per {
                    u
                } else {
                    l + (u - l) * k as f64 / (per - 1) as f64
                }
            };
            Ok((0..n)
                .map(|flat| {
                    let mut mu = space.lower.clone();
                    let mut rest = flat;
                    // first free dimension varies slowest
                    for &i in free.iter().rev() {
                        mu[i] = axis(i, rest % per);
                        rest /= per;
                    }
                    mu
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equispaced_interval_covers_endpoints() {
        let b = ParameterBox::new(vec![-0.65], vec![0.65]).unwrap();
        let s = sample_parameters(&b, 3, Sampling::Equispaced).unwrap();
        assert_eq!(s, vec![vec![-0.65], vec![0.0], vec![0.65]]);
    }

    #[test]
    fn random_samples_are_reproducible_and_inside() {
        let b = ParameterBox::new(vec![-1.5, -0.15], vec![-1.0, 0.15]).unwrap();
        let s1 = sample_parameters(&b, 4, Sampling::Random { seed: 42 }).unwrap();
        let s2 = sample_parameters(&b, 4, Sampling::Random { seed: 42 }).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.len(), 4);
        assert!(s1.iter().all(|mu| b.contains(mu)));
        let s3 = sample_parameters(&b, 4, Sampling::Random { seed: 43 }).unwrap();
        assert_ne!(s1, s3);
    }

    #[test]
    fn fixed_dimension_is_held() {
        let b = ParameterBox::new(vec![-1.5, -0.65], vec![-1.5, 0.65]).unwrap();
        let s = sample_parameters(&b, 5, Sampling::Equispaced).unwrap();
        assert!(s.iter().all(|mu| mu[0] == -1.5));
        assert_eq!(s[4][1], 0.65);
    }

    #[test]
    fn tensor_grid_in_two_dimensions() {
        let b = ParameterBox::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let s = sample_parameters(&b, 9, Sampling::Equispaced).unwrap();
        assert_eq!(s[0], vec![0.0, 0.0]);
        assert_eq!(s[1], vec![0.0, 1.0]);
        assert_eq!(s[8], vec![1.0, 2.0]);
        assert!(sample_parameters(&b, 8, Sampling::Equispaced).is_err());
    }

    #[test]
    fn empty_box_is_rejected() {
        assert!(ParameterBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(ParameterBox::new(vec![], vec![]).is_err());
        let b = ParameterBox {
            lower: vec![0.0],
            upper: vec![1.0],
        };
        assert!(sample_parameters(&b, 0, Sampling::Equispaced).is_err());
    }
}
