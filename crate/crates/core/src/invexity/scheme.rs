use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    UniformBall {
        center: Vec<f64>,
        radius: f64,
    },
    /// Every ordered pair of the listed points is used.
    ExplicitList {
        points: Vec<Vec<f64>>,
    },
}

/// How the universally quantified variables of a definition are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleScheme {
    pub n_pairs: usize,
    /// Number of equally spaced parameters in `[0, 1]`, endpoints included.
    pub s_grid: usize,
    pub rng_seed: u64,
    /// One-sided violation tolerance.
    pub tol: f64,
    pub sampler: Sampler,
}

impl SampleScheme {
    pub fn new(n_pairs: usize, s_grid: usize, rng_seed: u64, sampler: Sampler) -> Self {
        Self {
            n_pairs,
            s_grid,
            rng_seed,
            tol: 1e-8,
            sampler,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::Config("n_pairs must be positive".into()));
        }
        if self.s_grid < 2 {
            return Err(Error::Config("s_grid must be at least 2".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tol must be nonnegative".into()));
        }
        match &self.sampler {
            Sampler::UniformBall { radius, .. } if !(*radius >= 0.0) => {
                Err(Error::Config("sampler radius must be nonnegative".into()))
            }
            Sampler::ExplicitList { points } if points.is_empty() => Err(Error::Config(
                "explicit_list needs at least one point".into(),
            )),
            _ => Ok(()),
        }
    }

    /// `k / (s_grid − 1)` for `k = 0..s_grid`; both endpoints exact.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.s_grid.max(2);
        (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }

    /// Sampled `(r₁, s₁)` pairs.
    ///
    /// Uniform-ball pairs are drawn sequentially from one stream, so a larger
    /// `n_pairs` extends the sequence without changing its prefix.
    pub fn draw_pairs(&self, m: &Manifold) -> Result<Vec<(Point, Point)>> {
        self.validate()?;
        match &self.sampler {
            Sampler::UniformBall { center, radius } => {
                let c = m.point(center.clone())?;
                let mut rng = self.rng();
                (0..self.n_pairs)
                    .map(|_| {
                        let r1 = m.sample_ball(&c, *radius, &mut rng)?;
                        let s1 = m.sample_ball(&c, *radius, &mut rng)?;
                        Ok((r1, s1))
                    })
                    .collect()
            }
            Sampler::ExplicitList { points } => {
                let pts = points
                    .iter()
                    .map(|p| m.point(p.clone()))
                    .collect::<Result<Vec<_>>>()?;
                let mut out = Vec::with_capacity(pts.len() * pts.len());
                for a in &pts {
                    for b in &pts {
                        out.push((a.clone(), b.clone()));
                    }
                }
                Ok(out)
            }
        }
    }

    /// `n_pairs` single points from the sampler (the explicit list is returned as-is).
    pub fn draw_points(&self, m: &Manifold) -> Result<Vec<Point>> {
        self.validate()?;
        match &self.sampler {
            Sampler::UniformBall { center, radius } => {
                let c = m.point(center.clone())?;
                let mut rng = self.rng();
                (0..self.n_pairs)
                    .map(|_| m.sample_ball(&c, *radius, &mut rng))
                    .collect()
            }
            Sampler::ExplicitList { points } => points.iter().map(|p| m.point(p.clone())).collect(),
        }
    }
}
