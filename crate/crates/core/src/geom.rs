//! Axis-aligned rectangle calculus on the positive orthant.
//!
//! Points carry strictly positive coordinates, rectangles enumerate their
//! 2^d vertices with parity signs, and a dataset generates the rectangular
//! grid of all coordinate combinations. The signed-vertex sum of a function
//! over a rectangle (its g-volume) is what characterises scale mixtures of
//! uniforms, so everything downstream leans on this module.

use crate::error::{Error, Result};

/// A point in (0, inf)^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Build a point, validating that every coordinate is finite and > 0.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        for (index, &value) in coords.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::BadCoordinate { index, value });
            }
        }
        Ok(Self { coords })
    }

    /// Point from a slice; panics on invalid input. Test/demo convenience.
    pub fn from_slice(coords: &[f64]) -> Self {
        Self::new(coords.to_vec()).expect("valid coordinates")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    /// Coordinate product |x| = prod_i x_i.
    pub fn volume(&self) -> f64 {
        self.coords.iter().product()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Point) -> bool {
        self.coords
            .iter()
            .zip(&other.coords)
            .all(|(a, b)| a <= b)
    }

    /// Componentwise maximum.
    pub fn join(&self, other: &Point) -> Point {
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    /// Componentwise minimum.
    pub fn meet(&self, other: &Point) -> Point {
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.min(*b))
                .collect(),
        }
    }
}

/// Which faces of a rectangle belong to it. Affects membership tests only;
/// volumes are insensitive to the closure flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RectClosure {
    Closed,
    #[default]
    LowerClosedUpperOpen,
    LowerOpenUpperClosed,
    Open,
}

/// An axis-aligned rectangle with `lower <= upper` coordinatewise.
/// Degenerate faces (`lower_i == upper_i`) are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    lower: Point,
    upper: Point,
    closure: RectClosure,
}

impl Rect {
    pub fn new(lower: Point, upper: Point, closure: RectClosure) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch {
                expected: lower.dim(),
                got: upper.dim(),
            });
        }
        if !lower.le(&upper) {
            return Err(Error::UnorderedRect {
                lower: lower.coords().to_vec(),
                upper: upper.coords().to_vec(),
            });
        }
        Ok(Self { lower, upper, closure })
    }

    /// `[lower, upper)` rectangle, the flavor used by the SMU volume test.
    pub fn half_open(lower: Point, upper: Point) -> Result<Self> {
        Self::new(lower, upper, RectClosure::LowerClosedUpperOpen)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn closure(&self) -> RectClosure {
        self.closure
    }

    pub fn contains(&self, x: &Point) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        for i in 0..self.dim() {
            let (lo, hi, v) = (self.lower.get(i), self.upper.get(i), x.get(i));
            let lo_ok = match self.closure {
                RectClosure::Closed | RectClosure::LowerClosedUpperOpen => v >= lo,
                _ => v > lo,
            };
            let hi_ok = match self.closure {
                RectClosure::Closed | RectClosure::LowerOpenUpperClosed => v <= hi,
                _ => v < hi,
            };
            if !lo_ok || !hi_ok {
                return false;
            }
        }
        true
    }
}

/// A rectangle vertex with its parity sign: -1 when the number of
/// coordinates taken from the lower corner is odd, +1 when even.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedVertex {
    pub sign: i8,
    pub vertex: Point,
}

/// Enumerate all 2^d signed vertices of a rectangle. Vertices of a
/// degenerate rectangle repeat but keep their own signs.
pub fn vertex_signs(r: &Rect) -> Vec<SignedVertex> {
    let d = r.dim();
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0u32..(1u32 << d) {
        let mut coords = Vec::with_capacity(d);
        let mut lower_count = 0u32;
        for i in 0..d {
            if mask & (1 << i) == 0 {
                coords.push(r.lower().get(i));
                lower_count += 1;
            } else {
                coords.push(r.upper().get(i));
            }
        }
        let sign = if lower_count % 2 == 1 { -1 } else { 1 };
        out.push(SignedVertex {
            sign,
            vertex: Point { coords },
        });
    }
    out
}

/// Signed-vertex sum `V_g[x, y) = sum_{(sign, u)} sign * g(u)`.
///
/// `(-1)^d * V_f >= 0` over every rectangle characterises SMU densities.
/// Errors if `g` returns a non-finite value at some vertex.
pub fn g_volume<F: Fn(&Point) -> f64>(g: F, r: &Rect) -> Result<f64> {
    let mut total = 0.0;
    for sv in vertex_signs(r) {
        let value = g(&sv.vertex);
        if !value.is_finite() {
            return Err(Error::VertexEvaluation {
                vertex: sv.vertex.coords().to_vec(),
                value,
            });
        }
        total += f64::from(sv.sign) * value;
    }
    Ok(total)
}

/// The rectangular grid generated by a dataset: per dimension, the sorted
/// unique coordinate values; the grid holds every combination of them.
///
/// Iteration is lexicographic with dimension 0 most significant, so all
/// derived results are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    coords: Vec<Vec<f64>>,
}

impl Grid {
    /// Grid generated by the data: dimension j collects the sorted unique
    /// j-th coordinates. Coordinates are compared exactly; data are taken
    /// as read, with no epsilon-dedup.
    pub fn from_data(data: &[Point]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("grid construction needs data"));
        }
        let d = data[0].dim();
        for p in data {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        let mut coords = Vec::with_capacity(d);
        for j in 0..d {
            let mut column: Vec<f64> = data.iter().map(|p| p.get(j)).collect();
            column.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
            column.dedup();
            coords.push(column);
        }
        Ok(Self { coords })
    }

    /// Grid from explicit per-dimension coordinate lists (sorted, unique).
    pub fn from_coords(coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput("grid needs at least one dimension"));
        }
        for axis in &coords {
            if axis.is_empty() {
                return Err(Error::EmptyInput("grid axis with no coordinates"));
            }
            for w in axis.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::Parse(format!(
                        "grid axis not strictly increasing: {} then {}",
                        w[0], w[1]
                    )));
                }
            }
            for (index, &value) in axis.iter().enumerate() {
                if !value.is_finite() || value <= 0.0 {
                    return Err(Error::BadCoordinate { index, value });
                }
            }
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of distinct coordinates along dimension j.
    pub fn axis_len(&self, j: usize) -> usize {
        self.coords[j].len()
    }

    pub fn axis(&self, j: usize) -> &[f64] {
        &self.coords[j]
    }

    /// Total number of grid points N = prod_j n_j.
    pub fn len(&self) -> u64 {
        self.coords.iter().map(|c| c.len() as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a linear index, lexicographic with dim 0 slowest.
    pub fn multi_index(&self, mut linear: u64) -> Vec<usize> {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        for j in (0..d).rev() {
            let n = self.coords[j].len() as u64;
            idx[j] = (linear % n) as usize;
            linear /= n;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> u64 {
        let mut linear = 0u64;
        for j in 0..self.dim() {
            linear = linear * self.coords[j].len() as u64 + idx[j] as u64;
        }
        linear
    }

    /// The grid point at a multi-index.
    pub fn point_at(&self, idx: &[usize]) -> Point {
        Point {
            coords: idx
                .iter()
                .enumerate()
                .map(|(j, &k)| self.coords[j][k])
                .collect(),
        }
    }

    /// Locate a point whose every coordinate is a grid coordinate.
    pub fn position_of(&self, p: &Point) -> Option<Vec<usize>> {
        if p.dim() != self.dim() {
            return None;
        }
        let mut idx = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let k = self.coords[j]
                .binary_search_by(|c| c.partial_cmp(&p.get(j)).expect("finite"))
                .ok()?;
            idx.push(k);
        }
        Some(idx)
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.position_of(p).is_some()
    }

    /// Upper corner: the componentwise largest grid point.
    pub fn upper_corner(&self) -> Point {
        Point {
            coords: self.coords.iter().map(|c| *c.last().expect("non-empty axis")).collect(),
        }
    }

    /// Lower corner: the componentwise smallest grid point.
    pub fn lower_corner(&self) -> Point {
        Point {
            coords: self.coords.iter().map(|c| c[0]).collect(),
        }
    }

    /// Iterate grid points in lexicographic order.
    pub fn iter_points(&self) -> GridPoints<'_> {
        GridPoints {
            grid: self,
            next: 0,
            total: self.len(),
        }
    }
}

pub struct GridPoints<'a> {
    grid: &'a Grid,
    next: u64,
    total: u64,
}

impl Iterator for GridPoints<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        if self.next >= self.total {
            return None;
        }
        let idx = self.grid.multi_index(self.next);
        self.next += 1;
        Some(self.grid.point_at(&idx))
    }
}

/// Componentwise maximum of a non-empty set of points: the smallest x with
/// p <= x for every p in the set. For subsets of a dataset the result lies
/// on the grid generated by the full dataset.
pub fn grid_join(points: &[Point]) -> Result<Point> {
    let first = points.first().ok_or(Error::EmptyInput("join of no points"))?;
    let mut acc = first.clone();
    for p in &points[1..] {
        if p.dim() != acc.dim() {
            return Err(Error::DimensionMismatch {
                expected: acc.dim(),
                got: p.dim(),
            });
        }
        acc = acc.join(p);
    }
    Ok(acc)
}
