//! Piecewise-constant densities on a grid partition, and the membership
//! test deciding whether such a density is a scale mixture of uniforms.
//!
//! The grid coordinates split `(0, bound]` into cells `(prev, coord]` per
//! dimension; the density is constant on every cell and zero beyond the
//! upper corner. Membership holds iff the signed unit-rectangle volumes
//! `(-1)^d V_f[W_k, W_k^+)` are all non-negative; by additivity of the
//! volume under splits, checking the adjacent-cell rectangles (with the
//! zero extension past the boundary) settles every rectangle.

use crate::error::{Error, Result};
use crate::geom::{Grid, Point, Rect};
use crate::scan;

/// Tolerance for the membership scan: unit volumes may dip this far below
/// zero before a density is rejected.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// A density that is constant on each grid cell and zero beyond the grid's
/// upper corner.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity {
    grid: Grid,
    values: Vec<f64>,
}

impl GriddedDensity {
    /// Wrap explicit per-cell values (grid order).
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len() as usize,
                got: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::BadWeight { index, value });
            }
        }
        Ok(Self { grid, values })
    }

    /// Sample a function onto the grid: each cell takes the value at its
    /// upper corner, which is the cell's representative point for an upper
    /// semi-continuous block-decreasing function.
    pub fn from_fn<F: Fn(&Point) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values: Vec<f64> = (0..grid.len())
            .map(|lin| f(&grid.point_at(&grid.multi_index(lin))))
            .collect();
        Self::new(grid, values)
    }

    /// Like `new`, but requires total mass 1 within 1e-9.
    pub fn new_probability(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let g = Self::new(grid, values)?;
        let mass = g.integral();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::MassMismatch { mass, tol: 1e-9 });
        }
        Ok(g)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Point beyond which the density vanishes.
    pub fn support_bound(&self) -> Point {
        self.grid.upper_corner()
    }

    /// Value at a point: the value of the cell `(prev, coord]` containing
    /// it, zero beyond the support bound.
    pub fn value_at(&self, x: &Point) -> f64 {
        debug_assert_eq!(x.dim(), self.grid.dim());
        let mut idx = Vec::with_capacity(self.grid.dim());
        for j in 0..self.grid.dim() {
            let axis = self.grid.axis(j);
            // smallest grid coordinate >= x_j
            let k = axis.partition_point(|&c| c < x.get(j));
            if k == axis.len() {
                return 0.0;
            }
            idx.push(k);
        }
        self.values[self.grid.linear_index(&idx) as usize]
    }

    /// Exact integral over all cells.
    pub fn integral(&self) -> f64 {
        let d = self.grid.dim();
        let mut cell_vols = vec![1.0; self.values.len()];
        let shape: Vec<usize> = (0..d).map(|j| self.grid.axis_len(j)).collect();
        for j in 0..d {
            let inner: usize = shape[j + 1..].iter().product();
            let outer: usize = shape[..j].iter().product();
            let axis = self.grid.axis(j);
            for o in 0..outer {
                for k in 0..shape[j] {
                    let width = if k == 0 { axis[0] } else { axis[k] - axis[k - 1] };
                    let base = (o * shape[j] + k) * inner;
                    for i in 0..inner {
                        cell_vols[base + i] *= width;
                    }
                }
            }
        }
        self.values
            .iter()
            .zip(&cell_vols)
            .map(|(v, w)| v * w)
            .sum()
    }
}

/// Outcome of the SMU membership test.
#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Accepted,
    /// A rectangle whose signed volume is negative; the density cannot be a
    /// scale mixture of uniforms.
    Rejected { witness: Rect, volume: f64 },
}

impl Membership {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Membership::Accepted)
    }
}

/// Decide SMU membership of a gridded density by scanning the signed
/// unit-rectangle volumes in lexicographic order. The first rectangle with
/// `(-1)^d V_f < -1e-12` is returned as witness; rectangles on the outer
/// boundary extend one step beyond the support bound, where the density
/// is zero.
pub fn is_smu(f: &GriddedDensity) -> Membership {
    let grid = f.grid();
    let unit = scan::unit_volumes(grid, f.values());
    for (lin, &u) in unit.iter().enumerate() {
        if u < -MEMBERSHIP_TOL {
            let idx = grid.multi_index(lin as u64);
            let lower = grid.point_at(&idx);
            let upper_coords: Vec<f64> = (0..grid.dim())
                .map(|j| {
                    let axis = grid.axis(j);
                    if idx[j] + 1 < axis.len() {
                        axis[idx[j] + 1]
                    } else {
                        // one step into the zero extension
                        2.0 * axis[idx[j]]
                    }
                })
                .collect();
            let upper = Point::new(upper_coords).expect("positive coordinates");
            let witness = Rect::half_open(lower, upper).expect("ordered corners");
            return Membership::Rejected { witness, volume: u };
        }
    }
    Membership::Accepted
}
