//! Ground-truth models for simulation.
//!
//! Either a discrete mixing measure, or the exp-product truth
//! `f0(x) = prod_i exp(-x_i)`, which is itself a scale mixture of uniforms
//! (its mixing measure is the product of Gamma(2,1) marginals). Sampling
//! follows the multiplicative representation `X = (U_1 Y_1, ..., U_d Y_d)`
//! with the `U_i` i.i.d. uniform on (0,1) independent of `Y ~ G`.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mixture::{MixingMeasure, SmuDensity};
use crate::rng::Stream;

/// Closed-form density of the exp-product truth.
pub fn exp_truth_density(x: &Point) -> f64 {
    (-x.coords().iter().sum::<f64>()).exp()
}

/// A generative model: scale distribution G plus the induced density.
#[derive(Debug, Clone)]
pub enum TruthModel {
    Discrete(MixingMeasure),
    ExpProduct { dim: usize },
}

impl TruthModel {
    pub fn dim(&self) -> usize {
        match self {
            TruthModel::Discrete(m) => m.dim(),
            TruthModel::ExpProduct { dim } => *dim,
        }
    }

    /// Density of the model at a point.
    pub fn density(&self, x: &Point) -> f64 {
        match self {
            TruthModel::Discrete(m) => SmuDensity::new(m.clone()).density(x),
            TruthModel::ExpProduct { .. } => exp_truth_density(x),
        }
    }

    /// One-line description for metadata files.
    pub fn describe(&self) -> String {
        match self {
            TruthModel::Discrete(m) => format!("discrete({} atoms, d={})", m.len(), m.dim()),
            TruthModel::ExpProduct { dim } => format!("exp-product(d={dim})"),
        }
    }

    /// Draw `n` points, deterministically in the seed. Each coordinate is
    /// `U_i * Y_i`; for the exp-product truth `Y_i` is the sum of two
    /// unit-rate exponentials (Gamma(2,1)), each drawn by inverse CDF.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Point>> {
        if n == 0 {
            return Err(Error::EmptyInput("sample size must be at least 1"));
        }
        let mut stream = Stream::new(seed);
        let d = self.dim();
        let mut out = Vec::with_capacity(n);
        match self {
            TruthModel::Discrete(m) => {
                let mut cumulative = Vec::with_capacity(m.len());
                let mut acc = 0.0;
                for &w in m.weights() {
                    acc += w;
                    cumulative.push(acc);
                }
                for _ in 0..n {
                    let atom = &m.atoms()[stream.categorical(&cumulative)];
                    let coords: Vec<f64> = (0..d)
                        .map(|j| stream.uniform_open() * atom.get(j))
                        .collect();
                    out.push(Point::new(coords)?);
                }
            }
            TruthModel::ExpProduct { .. } => {
                for _ in 0..n {
                    let coords: Vec<f64> = (0..d)
                        .map(|_| {
                            let y = stream.exponential() + stream.exponential();
                            stream.uniform_open() * y
                        })
                        .collect();
                    out.push(Point::new(coords)?);
                }
            }
        }
        Ok(out)
    }
}
