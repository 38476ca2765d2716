//! Discrete mixing measures and the scale-mixture densities they induce.
//!
//! A mixing measure G places weights on atoms in (0, inf)^d; the induced
//! density is `f_G(x) = sum_j pi_j 1[x <= y_j] / |y_j|`, the mixture of
//! uniforms on the lower-left rectangles (0, y_j]. The density evaluator
//! uses the upper semi-continuous version: the indicator is closed at the
//! upper boundary. Inversion back to G from the density values on a grid
//! goes through signed unit-rectangle volumes.

use crate::error::{Error, Result};
use crate::geom::{grid_join, Grid, Point};
use crate::scan;

/// Weights below this are pruned when constructing a mixing measure.
pub const WEIGHT_PRUNE_EPS: f64 = 1e-12;

/// A discrete probability measure on (0, inf)^d: atoms with positive
/// weights summing to one. Construction merges duplicate atoms, prunes
/// negligible weights and renormalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl MixingMeasure {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput("mixing measure needs atoms"));
        }
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        let d = atoms[0].dim();
        for a in &atoms {
            if a.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: a.dim() });
            }
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::BadWeight { index, value });
            }
        }

        // Merge atoms with identical coordinates, then prune and renormalize.
        let mut pairs: Vec<(Point, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| {
            a.0.coords()
                .partial_cmp(b.0.coords())
                .expect("finite coordinates")
        });
        let mut merged: Vec<(Point, f64)> = Vec::with_capacity(pairs.len());
        for (atom, w) in pairs {
            match merged.last_mut() {
                Some((prev, pw)) if prev == &atom => *pw += w,
                _ => merged.push((atom, w)),
            }
        }
        merged.retain(|(_, w)| *w > WEIGHT_PRUNE_EPS);
        let mass: f64 = merged.iter().map(|(_, w)| w).sum();
        if merged.is_empty() || mass <= 0.0 {
            return Err(Error::EmptyMixingMeasure);
        }
        let (atoms, weights) = merged
            .into_iter()
            .map(|(a, w)| (a, w / mass))
            .unzip();
        Ok(Self { atoms, weights })
    }

    /// Point mass at a single atom.
    pub fn point_mass(atom: Point) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Componentwise maximum of the atoms: the support join.
    pub fn support_join(&self) -> Point {
        grid_join(&self.atoms).expect("non-empty atom set")
    }
}

/// Density / distribution-function evaluator for a discrete mixing measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SmuDensity {
    mixing: MixingMeasure,
    inv_volumes: Vec<f64>,
}

impl SmuDensity {
    pub fn new(mixing: MixingMeasure) -> Self {
        let inv_volumes = mixing.atoms().iter().map(|a| 1.0 / a.volume()).collect();
        Self { mixing, inv_volumes }
    }

    pub fn mixing(&self) -> &MixingMeasure {
        &self.mixing
    }

    pub fn dim(&self) -> usize {
        self.mixing.dim()
    }

    /// `f(x) = sum_{j : x <= y_j} pi_j / |y_j|`. The indicator is closed at
    /// the atom itself, the upper semi-continuous version.
    pub fn density(&self, x: &Point) -> f64 {
        debug_assert_eq!(x.dim(), self.dim());
        let mut total = 0.0;
        for ((atom, &w), &iv) in self
            .mixing
            .atoms()
            .iter()
            .zip(self.mixing.weights())
            .zip(&self.inv_volumes)
        {
            if x.le(atom) {
                total += w * iv;
            }
        }
        total
    }

    /// `F(x) = sum_j pi_j |x ^ y_j| / |y_j|` where the meet is the
    /// componentwise minimum.
    pub fn cdf(&self, x: &Point) -> f64 {
        debug_assert_eq!(x.dim(), self.dim());
        let mut total = 0.0;
        for ((atom, &w), &iv) in self
            .mixing
            .atoms()
            .iter()
            .zip(self.mixing.weights())
            .zip(&self.inv_volumes)
        {
            let meet_vol: f64 = x
                .coords()
                .iter()
                .zip(atom.coords())
                .map(|(a, b)| a.min(*b))
                .product();
            total += w * meet_vol * iv;
        }
        total
    }

    /// Largest value of `f(x) |x|` over the probes. The pointwise bound
    /// says this never exceeds one.
    pub fn pointwise_bound_check(&self, probes: &[Point]) -> f64 {
        probes
            .iter()
            .map(|x| self.density(x) * x.volume())
            .fold(0.0, f64::max)
    }

    pub fn support_join(&self) -> Point {
        self.mixing.support_join()
    }

    /// Evaluate the density at every grid point in grid order.
    pub fn densities_on_grid(&self, grid: &Grid) -> Vec<f64> {
        // Atoms on the grid contribute through a suffix scan; atoms off the
        // grid (possible for hand-built measures) fall back to direct sums.
        let mut on_grid_positions = Vec::new();
        let mut on_grid_values = Vec::new();
        let mut off_grid: Vec<usize> = Vec::new();
        for (j, atom) in self.mixing.atoms().iter().enumerate() {
            match grid.position_of(atom) {
                Some(idx) => {
                    on_grid_positions.push(idx);
                    on_grid_values.push(self.mixing.weights()[j] * self.inv_volumes[j]);
                }
                None => off_grid.push(j),
            }
        }
        let mut values = if on_grid_positions.is_empty() {
            vec![0.0; grid.len() as usize]
        } else {
            scan::dominating_sums(grid, &on_grid_positions, &on_grid_values)
        };
        if !off_grid.is_empty() {
            for (lin, value) in values.iter_mut().enumerate() {
                let p = grid.point_at(&grid.multi_index(lin as u64));
                for &j in &off_grid {
                    if p.le(&self.mixing.atoms()[j]) {
                        *value += self.mixing.weights()[j] * self.inv_volumes[j];
                    }
                }
            }
        }
        values
    }
}

/// Recover the mixing measure from density values on a grid.
///
/// `pi_k = (-1)^d V_f[W_k, W_k^+) * |W_k|` with the value array extended by
/// zero beyond the grid. For values that really are a SMU density evaluated
/// at all grid points (atoms on the grid), this inverts `SmuDensity::density`
/// exactly. A weight below -1e-9 means the values cannot come from a SMU
/// density on this grid.
pub fn weights_from_density(grid: &Grid, values: &[f64]) -> Result<MixingMeasure> {
    if values.len() as u64 != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len() as usize,
            got: values.len(),
        });
    }
    let unit = scan::unit_volumes(grid, values);
    let vols = scan::point_volumes(grid);
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    let mut mass = 0.0;
    for (lin, (&u, &v)) in unit.iter().zip(&vols).enumerate() {
        let w = u * v;
        if w < -1e-9 {
            let point = grid.point_at(&grid.multi_index(lin as u64));
            return Err(Error::NotSmuOnGrid {
                point: point.coords().to_vec(),
                value: w,
            });
        }
        mass += w;
        if w > WEIGHT_PRUNE_EPS {
            atoms.push(grid.point_at(&grid.multi_index(lin as u64)));
            weights.push(w);
        }
    }
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::MassMismatch { mass, tol: 1e-9 });
    }
    MixingMeasure::new(atoms, weights)
}
