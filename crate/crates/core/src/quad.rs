//! Adaptive tensor-product midpoint quadrature.
//!
//! Each axis is split at known integrand breakpoints and every segment is
//! then halved dyadically until two successive estimates agree to the
//! requested relative tolerance or the node cap is reached. Midpoint sums
//! are exact on segments where the integrand is linear, so aligning the
//! breakpoints with the kinks of piecewise-multilinear integrands makes
//! the refinement converge after a step or two.

/// Options controlling the refinement loop.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Stop when successive estimates differ by less than this, relatively.
    pub rel_tol: f64,
    /// Hard cap on the number of tensor nodes at one level.
    pub max_nodes: u64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_nodes: 1 << 24,
        }
    }
}

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute difference between the last two estimates.
    pub last_delta: f64,
    /// Function evaluations spent.
    pub nodes: u64,
    pub converged: bool,
}

/// One axis: base segments between breakpoints.
#[derive(Debug, Clone)]
struct Axis {
    segments: Vec<(f64, f64)>,
}

impl Axis {
    fn new(lo: f64, hi: f64, breakpoints: &[f64]) -> Self {
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|c| *c > lo && *c < hi)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        cuts.dedup();
        let mut segments = Vec::with_capacity(cuts.len() + 1);
        let mut prev = lo;
        for c in cuts {
            segments.push((prev, c));
            prev = c;
        }
        segments.push((prev, hi));
        Self { segments }
    }

    /// Midpoint nodes and weights with every segment split into 2^level.
    fn nodes(&self, level: u32) -> (Vec<f64>, Vec<f64>) {
        let parts = 1usize << level;
        let mut xs = Vec::with_capacity(self.segments.len() * parts);
        let mut ws = Vec::with_capacity(self.segments.len() * parts);
        for &(a, b) in &self.segments {
            let h = (b - a) / parts as f64;
            if h <= 0.0 {
                continue;
            }
            for k in 0..parts {
                xs.push(a + (k as f64 + 0.5) * h);
                ws.push(h);
            }
        }
        (xs, ws)
    }
}

fn tensor_sum<F: Fn(&[f64]) -> f64>(
    f: &F,
    node_axes: &[(Vec<f64>, Vec<f64>)],
) -> (f64, u64) {
    let d = node_axes.len();
    let counts: Vec<usize> = node_axes.iter().map(|(xs, _)| xs.len()).collect();
    if counts.iter().any(|&c| c == 0) {
        return (0.0, 0);
    }
    let total: u64 = counts.iter().map(|&c| c as u64).product();
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0f64; d];
    let mut sum = 0.0;
    for _ in 0..total {
        let mut w = 1.0;
        for j in 0..d {
            point[j] = node_axes[j].0[idx[j]];
            w *= node_axes[j].1[idx[j]];
        }
        sum += w * f(&point);
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < counts[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    (sum, total)
}

fn accept(new: f64, old: f64, rel_tol: f64) -> (f64, bool) {
    let delta = (new - old).abs();
    (delta, delta <= rel_tol * new.abs() || delta == 0.0)
}

/// Integrate `f` over the box `domain`, refining until converged. Interior
/// breakpoints (per axis) seed the segment structure.
pub fn integrate_nd<F: Fn(&[f64]) -> f64>(
    f: F,
    domain: &[(f64, f64)],
    breakpoints: &[Vec<f64>],
    opts: QuadOptions,
) -> QuadResult {
    let axes: Vec<Axis> = domain
        .iter()
        .enumerate()
        .map(|(j, &(lo, hi))| {
            let empty = Vec::new();
            Axis::new(lo, hi, breakpoints.get(j).unwrap_or(&empty))
        })
        .collect();
    if domain.iter().any(|&(lo, hi)| hi <= lo) {
        return QuadResult { value: 0.0, last_delta: 0.0, nodes: 0, converged: true };
    }
    let mut spent = 0u64;
    let mut prev = f64::NAN;
    let mut value = 0.0;
    let mut delta = f64::INFINITY;
    for level in 0.. {
        let planned: u64 = axes
            .iter()
            .map(|a| (a.segments.len() as u64) << level)
            .product();
        if planned > opts.max_nodes {
            return QuadResult { value, last_delta: delta, nodes: spent, converged: false };
        }
        let node_axes: Vec<(Vec<f64>, Vec<f64>)> = axes.iter().map(|a| a.nodes(level)).collect();
        let (sum, used) = tensor_sum(&f, &node_axes);
        spent += used;
        value = sum;
        if level > 0 {
            let (dl, ok) = accept(value, prev, opts.rel_tol);
            delta = dl;
            if ok {
                return QuadResult { value, last_delta: delta, nodes: spent, converged: true };
            }
        }
        prev = value;
    }
    unreachable!()
}

/// Integrate a separable integrand `prod_j f_j(x_j)` over the box. The
/// tensor-product midpoint sum of a separable integrand factors exactly
/// into the product of the per-axis sums, so this evaluates the same
/// estimates as `integrate_nd` at a cost linear in the dimension.
pub fn integrate_product(
    factors: &[Box<dyn Fn(f64) -> f64 + '_>],
    domain: &[(f64, f64)],
    breakpoints: &[Vec<f64>],
    opts: QuadOptions,
) -> QuadResult {
    let axes: Vec<Axis> = domain
        .iter()
        .enumerate()
        .map(|(j, &(lo, hi))| {
            let empty = Vec::new();
            Axis::new(lo, hi, breakpoints.get(j).unwrap_or(&empty))
        })
        .collect();
    if domain.iter().any(|&(lo, hi)| hi <= lo) {
        return QuadResult { value: 0.0, last_delta: 0.0, nodes: 0, converged: true };
    }
    let mut spent = 0u64;
    let mut prev = f64::NAN;
    let mut value = 0.0;
    let mut delta = f64::INFINITY;
    for level in 0.. {
        let planned: u64 = axes
            .iter()
            .map(|a| (a.segments.len() as u64) << level)
            .sum();
        if planned > opts.max_nodes {
            return QuadResult { value, last_delta: delta, nodes: spent, converged: false };
        }
        let mut product = 1.0;
        for (axis, f) in axes.iter().zip(factors) {
            let (xs, ws) = axis.nodes(level);
            spent += xs.len() as u64;
            let s: f64 = xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum();
            product *= s;
        }
        value = product;
        if level > 0 {
            let (dl, ok) = accept(value, prev, opts.rel_tol);
            delta = dl;
            if ok {
                return QuadResult { value, last_delta: delta, nodes: spent, converged: true };
            }
        }
        prev = value;
    }
    unreachable!()
}

/// One-dimensional convenience wrapper.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> QuadResult {
    integrate_nd(
        |x| f(x[0]),
        &[(lo, hi)],
        std::slice::from_ref(&breakpoints.to_vec()),
        opts,
    )
}
