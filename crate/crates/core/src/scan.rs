//! Cumulative scans over grid-shaped arrays.
//!
//! A value array indexed like the grid (lexicographic, dimension 0 most
//! significant) admits O(d N) dominance sums by running a prefix or suffix
//! accumulation along each axis in turn. The solver and the Fenchel
//! certificate use these to evaluate indicator sums at every grid point at
//! once instead of scanning data per point.

use crate::geom::Grid;

fn shape_of(grid: &Grid) -> Vec<usize> {
    (0..grid.dim()).map(|j| grid.axis_len(j)).collect()
}

/// Accumulate along one axis; `forward` gives prefix sums, otherwise suffix.
fn axis_sum(data: &mut [f64], shape: &[usize], axis: usize, forward: bool) {
    let inner: usize = shape[axis + 1..].iter().product();
    let n = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    for o in 0..outer {
        let base = o * n * inner;
        if forward {
            for k in 1..n {
                let (prev, cur) = data[base + (k - 1) * inner..base + (k + 1) * inner].split_at_mut(inner);
                for i in 0..inner {
                    cur[i] += prev[i];
                }
            }
        } else {
            for k in (0..n.saturating_sub(1)).rev() {
                let (cur, next) = data[base + k * inner..base + (k + 2) * inner].split_at_mut(inner);
                for i in 0..inner {
                    cur[i] += next[i];
                }
            }
        }
    }
}

/// Scatter-add weights into a zeroed grid array at the given multi-indices.
pub fn scatter(grid: &Grid, positions: &[Vec<usize>], weights: &[f64]) -> Vec<f64> {
    let mut data = vec![0.0; grid.len() as usize];
    for (idx, &w) in positions.iter().zip(weights) {
        data[grid.linear_index(idx) as usize] += w;
    }
    data
}

/// `out[k] = sum of weights at positions p with p <= k componentwise`.
pub fn dominated_sums(grid: &Grid, positions: &[Vec<usize>], weights: &[f64]) -> Vec<f64> {
    let mut data = scatter(grid, positions, weights);
    let shape = shape_of(grid);
    for axis in 0..grid.dim() {
        axis_sum(&mut data, &shape, axis, true);
    }
    data
}

/// `out[k] = sum of weights at positions p with p >= k componentwise`.
pub fn dominating_sums(grid: &Grid, positions: &[Vec<usize>], weights: &[f64]) -> Vec<f64> {
    let mut data = scatter(grid, positions, weights);
    let shape = shape_of(grid);
    for axis in 0..grid.dim() {
        axis_sum(&mut data, &shape, axis, false);
    }
    data
}

/// Run suffix sums along every axis of an existing grid array in place.
pub fn suffix_sums_in_place(grid: &Grid, data: &mut [f64]) {
    let shape = shape_of(grid);
    for axis in 0..grid.dim() {
        axis_sum(data, &shape, axis, false);
    }
}

/// Coordinate product |W| for every grid point.
pub fn point_volumes(grid: &Grid) -> Vec<f64> {
    let shape = shape_of(grid);
    let total: usize = shape.iter().product();
    let mut vols = vec![1.0; total];
    for axis in 0..grid.dim() {
        let inner: usize = shape[axis + 1..].iter().product();
        let n = shape[axis];
        let outer: usize = shape[..axis].iter().product();
        for o in 0..outer {
            let base = o * n * inner;
            for k in 0..n {
                let c = grid.axis(axis)[k];
                for i in 0..inner {
                    vols[base + k * inner + i] *= c;
                }
            }
        }
    }
    vols
}

/// `(-1)^d V_f[W_k, W_k^+)` for every grid point `W_k`, where `W_k^+` steps
/// one grid coordinate up in each dimension and the value array is extended
/// by zero beyond the grid. Equals `sum_s (-1)^{|s|} f(k + s)` over corner
/// masks `s`.
pub fn unit_volumes(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let shape = shape_of(grid);
    let total: usize = shape.iter().product();
    assert_eq!(values.len(), total, "value array must match the grid");
    let mut strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * shape[j + 1];
    }
    let mut out = vec![0.0; total];
    let mut idx = vec![0usize; d];
    for lin in 0..total {
        let mut acc = 0.0;
        'mask: for mask in 0u32..(1u32 << d) {
            let mut offset = lin;
            for j in 0..d {
                if mask & (1 << j) != 0 {
                    if idx[j] + 1 >= shape[j] {
                        continue 'mask; // zero extension beyond the grid
                    }
                    offset += strides[j];
                }
            }
            if mask.count_ones() % 2 == 0 {
                acc += values[offset];
            } else {
                acc -= values[offset];
            }
        }
        out[lin] = acc;
        // advance the multi-index
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < shape[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn grid_2x2() -> Grid {
        Grid::from_data(&[Point::from_slice(&[1.0, 3.0]), Point::from_slice(&[3.0, 2.0])]).unwrap()
    }

    #[test]
    fn dominated_sums_match_direct_count() {
        let grid = grid_2x2();
        // data points at (1,3) and (3,2)
        let positions = vec![vec![0, 1], vec![1, 0]];
        let weights = vec![1.0, 1.0];
        let sums = dominated_sums(&grid, &positions, &weights);
        // grid order: (1,2), (1,3), (3,2), (3,3)
        assert_eq!(sums, vec![0.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn dominating_sums_match_direct_count() {
        let grid = grid_2x2();
        let positions = vec![vec![0, 1], vec![1, 0]];
        let weights = vec![0.5, 0.25];
        let sums = dominating_sums(&grid, &positions, &weights);
        // points >= (1,2): both; >= (1,3): (1,3); >= (3,2): (3,2); >= (3,3): none
        assert_eq!(sums, vec![0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn point_volumes_are_products() {
        let grid = grid_2x2();
        assert_eq!(point_volumes(&grid), vec![2.0, 3.0, 6.0, 9.0]);
    }

    #[test]
    fn unit_volumes_d1_are_differences() {
        let grid = Grid::from_coords(vec![vec![0.5, 1.0]]).unwrap();
        let uv = unit_volumes(&grid, &[1.5, 0.5]);
        assert_eq!(uv, vec![1.0, 0.5]);
    }

    #[test]
    fn unit_volumes_sum_to_corner_value() {
        // Telescoping: the sum of all unit volumes equals f at the lower corner.
        let grid = Grid::from_coords(vec![vec![1.0, 2.0, 3.0], vec![1.0, 4.0]]).unwrap();
        let values = vec![0.9, 0.4, 0.55, 0.3, 0.2, 0.1];
        let total: f64 = unit_volumes(&grid, &values).iter().sum();
        assert!((total - 0.9).abs() < 1e-15);
    }
}
