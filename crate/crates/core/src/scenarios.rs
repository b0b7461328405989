//! Synthetic data-generating processes.
//!
//! Each scenario draws `x ~ U[0,1]^d` and sets
//! `y = f*(x) + sqrt(g*(x)) * eps` with unit-variance noise `eps`. The mean
//! functions are two-level compositions `f* = h2 o h1`.
//!
//! | id | d  | noise                 |
//! |----|----|-----------------------|
//! | 1  | 2  | N(0, 1)               |
//! | 2  | 2  | N(0, 1)               |
//! | 3  | 2  | N(0, 1)               |
//! | 4  | 5  | U(-sqrt 3, sqrt 3)    |
//! | 5  | 10 | U(-sqrt 3, sqrt 3)    |

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng as SeedRng};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NoiseLaw {
    StandardNormal,
    /// Uniform on `(-sqrt 3, sqrt 3)`.
    UniformUnitVariance,
}

impl NoiseLaw {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseLaw::StandardNormal => StandardNormal.sample(rng),
            NoiseLaw::UniformUnitVariance => rng.random_range(-SQRT_3..SQRT_3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSpec {
    id: u8,
}

impl ScenarioSpec {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=5).contains(&id) {
            Ok(Self { id })
        } else {
            Err(Error::InvalidConfig(format!("scenario id must be 1..=5, got {id}")))
        }
    }

    pub fn all() -> [ScenarioSpec; 5] {
        [1, 2, 3, 4, 5].map(|id| ScenarioSpec { id })
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn dim(&self) -> usize {
        match self.id {
            1..=3 => 2,
            4 => 5,
            _ => 10,
        }
    }

    pub fn noise_law(&self) -> NoiseLaw {
        match self.id {
            1..=3 => NoiseLaw::StandardNormal,
            _ => NoiseLaw::UniformUnitVariance,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    pub fn eval_f_star(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.f_star(x))
    }

    pub fn eval_g_star(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.g_star(x))
    }

    /// Conditional mean; `x.len()` must equal [`ScenarioSpec::dim`].
    pub fn f_star(&self, x: &[f64]) -> f64 {
        match self.id {
            1 => {
                let (a, b) = ((x[0]).sqrt() + x[0] * x[1], (2.0 * PI * x[1]).cos());
                (a + b * b).sqrt() + a * a * b
            }
            2 => {
                let a = (1.0 + x[0] * x[0]).ln() + x[0] * x[1];
                let b = (3.0 * PI * x[1]).sin() * (-x[0]).exp();
                (a * a + b * b).cbrt() + a * a / (1.0 + b.abs())
            }
            3 => {
                let a = x[0].tan() + x[0] * x[0] * x[1] * x[1];
                let b = x[1].powi(3) - 2.0 * x[0];
                a * b.sin() + (a - b).abs().sqrt() + 1.0 / (1.0 + a * a)
            }
            4 => {
                let a = x[0].sin() * x[1] * x[1] + x[2].exp() - x[3] * x[4];
                let b = x[1].cos() + x[2] * x[3].tanh() + x[4].powi(3);
                (a + b).powi(2) + (a * b).abs().sqrt()
            }
            _ => {
                let a = x[..4].iter().map(|v| v * v).sum::<f64>() + x[4..].iter().sum::<f64>();
                let b = x[..4].iter().sum::<f64>() + x[4..].iter().map(|v| v * v).sum::<f64>();
                a + b + a * b
            }
        }
    }

    /// Conditional variance; `x.len()` must equal [`ScenarioSpec::dim`].
    pub fn g_star(&self, x: &[f64]) -> f64 {
        match self.id {
            1 => (x[0] - 0.5).hypot(x[1] - 0.5),
            2 => (x[0] - 0.25).hypot(x[1] - 0.75),
            3 => (-x[0].abs() - (x[1] - 1.0).abs()).exp(),
            4 => {
                const SHIFT: [f64; 5] = [-0.5, 0.5, -0.5, 0.5, -0.5];
                let (l2, l1) = x.iter().zip(SHIFT).fold((0.0, 0.0), |(l2, l1), (v, s)| {
                    let d = v - s;
                    (l2 + d * d, l1 + d.abs())
                });
                (-l2.sqrt()).exp() + (l1 + 1.0).sqrt()
            }
            _ => {
                let (l2, l1) = x.iter().fold((0.0, 0.0), |(l2, l1), v| {
                    let d = v - 0.5;
                    (l2 + d * d, l1 + d.abs())
                });
                l2.sqrt() + l1.sqrt()
            }
        }
    }

    pub fn sample_covariates<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n * self.dim()).map(|_| rng.random::<f64>()).collect()
    }

    /// Draws `n` samples. Covariates come first, then noise, from one stream.
    pub fn sample_dataset(&self, n: usize, seed: u64) -> Result<SyntheticSample> {
        if n == 0 {
            return Err(Error::EmptyInput("scenario sample size must be >= 1"));
        }
        let mut rng: SeedRng = rng_from_seed(seed);
        let d = self.dim();
        let xs = self.sample_covariates(n, &mut rng);
        let noise: Vec<f64> = (0..n).map(|_| self.noise_law().sample(&mut rng)).collect();
        let mut f_values = Vec::with_capacity(n);
        let mut g_values = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for (x, e) in xs.chunks_exact(d).zip(&noise) {
            let f = self.f_star(x);
            let g = self.g_star(x);
            ys.push(f + g.sqrt() * e);
            f_values.push(f);
            g_values.push(g);
        }
        Ok(SyntheticSample {
            dataset: Dataset::new(d, xs, ys)?,
            f_values,
            g_values,
            noise,
        })
    }
}

impl std::fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "scenario {}", self.id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub dataset: Dataset,
    pub f_values: Vec<f64>,
    pub g_values: Vec<f64>,
    pub noise: Vec<f64>,
}
