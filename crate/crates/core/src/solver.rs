//! Likelihood maximization over scale mixtures of uniforms.
//!
//! The maximizer is a discrete mixing measure supported on the coordinate
//! grid generated by the data, so the problem is a concave program over
//! simplex weights on grid candidates. The solver alternates multiplicative
//! (EM) sweeps with Newton refinement on the active support and grows the
//! candidate set along the strongest Fenchel violations; the loop stops
//! only when the optimality certificate passes at the requested tolerance.
//!
//! The certificate scans `c(x) = (1/n) sum_i 1[X_i <= x] / f(X_i)` against
//! `|x|` over the whole grid. For a fixed indicator pattern the ratio
//! `c(x)/|x|` is largest at the componentwise join of the dominated data
//! points, and joins of data subsets are grid points, so the grid scan
//! bounds the condition everywhere; a seeded off-grid probe set is scanned
//! on top of that.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{grid_join, Grid, Point};
use crate::mixture::{MixingMeasure, SmuDensity, WEIGHT_PRUNE_EPS};
use crate::rng::Stream;
use crate::scan;
use nalgebra::{DMatrix, DVector};

/// Certificate tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative log-likelihood change below which an EM block stops.
const EM_REL_TOL: f64 = 1e-10;
/// EM sweeps allowed inside one round of the solver loop.
const EM_SWEEPS_PER_ROUND: u64 = 60;
/// Work budget for the full-grid warmup; the sweep count scales inversely
/// with the grid size, between 150 and 2000 sweeps.
const WARMUP_OP_BUDGET: u64 = 3_000_000;
/// Newton refinement is skipped while the active support is larger.
const NEWTON_SUPPORT_CAP: usize = 2000;
const NEWTON_STEPS_PER_ROUND: u64 = 50;
/// Fenchel violations added per round (strongest first, distinct points).
const VERTEX_ADDITIONS_PER_ROUND: usize = 24;
/// Violations tracked per scan, so additions can skip existing candidates.
const SCAN_TOP_K: usize = 96;
/// Memory guard for grid-sized scans (one f64 array of this length).
const MAX_CERT_GRID: u64 = 40_000_000;
const OFFGRID_PROBES: usize = 1000;
const PROBE_SEED: u64 = 0x5eed_0ff6_12d5_eed5;

/// Options for [`fit`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Certificate tolerance; the solver stops once the fit certifies here.
    pub tol: f64,
    /// Budget of inner iterations (EM sweeps plus Newton steps).
    pub max_iter: u64,
    /// Grids up to this many points start from the full candidate grid;
    /// larger ones start from the data points and their join and grow by
    /// vertex-direction steps.
    pub full_grid_limit: u64,
    /// Randomize the initial weights (None keeps the uniform start).
    pub init_seed: Option<u64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: 100_000,
            full_grid_limit: 200_000,
            init_seed: None,
        }
    }
}

/// The indicator/volume matrix `a[i][j] = 1[X_i <= W_j] / |W_j|`, stored
/// sparsely as the list of dominated data indices per candidate column.
#[derive(Debug, Clone)]
pub struct LikelihoodCache {
    candidates: Vec<Point>,
    inv_volumes: Vec<f64>,
    dominated: Vec<Vec<u32>>,
    n_data: usize,
}

impl LikelihoodCache {
    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidates(&self) -> &[Point] {
        &self.candidates
    }

    /// Matrix entry `a[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.dominated[j].binary_search(&(i as u32)).is_ok() {
            self.inv_volumes[j]
        } else {
            0.0
        }
    }

    /// Mixture values `f_i = sum_j w_j a[i][j]`.
    pub fn mixture_values(&self, weights: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.n_data];
        for (j, rows) in self.dominated.iter().enumerate() {
            let contrib = weights[j] * self.inv_volumes[j];
            if contrib == 0.0 {
                continue;
            }
            for &i in rows {
                f[i as usize] += contrib;
            }
        }
        f
    }
}

/// Build the cache for a candidate list. Candidates dominating no data
/// point contribute all-zero columns and are dropped.
pub fn build_cache(data: &[Point], candidates: &[Point]) -> LikelihoodCache {
    let mut kept: Vec<Point> = Vec::with_capacity(candidates.len());
    let mut inv_volumes = Vec::with_capacity(candidates.len());
    let mut dominated = Vec::with_capacity(candidates.len());
    let mut dropped = 0usize;
    for w in candidates {
        let rows: Vec<u32> = data
            .iter()
            .enumerate()
            .filter(|(_, x)| x.le(w))
            .map(|(i, _)| i as u32)
            .collect();
        if rows.is_empty() {
            dropped += 1;
            continue;
        }
        inv_volumes.push(1.0 / w.volume());
        dominated.push(rows);
        kept.push(w.clone());
    }
    if dropped > 0 {
        log::debug!("build_cache: dropped {dropped} candidates dominating no data point");
    }
    LikelihoodCache {
        candidates: kept,
        inv_volumes,
        dominated,
        n_data: data.len(),
    }
}

/// One multiplicative update `w_j <- w_j (1/n) sum_i a[i][j] / f_i`. The
/// output stays on the simplex and the log-likelihood never decreases.
pub fn em_step(weights: &[f64], cache: &LikelihoodCache) -> Result<Vec<f64>> {
    let f = cache.mixture_values(weights);
    if let Some(i) = f.iter().position(|&v| v <= 0.0) {
        return Err(Error::UncoveredDataPoint { index: i });
    }
    let inv_f: Vec<f64> = f.iter().map(|v| 1.0 / v).collect();
    let n = cache.n_data as f64;
    let mut out = vec![0.0; weights.len()];
    for (j, rows) in cache.dominated.iter().enumerate() {
        if weights[j] == 0.0 {
            continue;
        }
        let mut s = 0.0;
        for &i in rows {
            s += inv_f[i as usize];
        }
        out[j] = weights[j] * cache.inv_volumes[j] * s / n;
    }
    Ok(out)
}

/// Fenchel directional derivative
/// `D(y) = (1/n) sum_i 1[X_i <= y] / (|y| f_i) - 1`: non-positive at the
/// optimum everywhere, zero at supported atoms.
pub fn directional_derivative(candidate: &Point, fitted: &[f64], data: &[Point]) -> f64 {
    let mut s = 0.0;
    for (x, &fi) in data.iter().zip(fitted) {
        if x.le(candidate) {
            s += 1.0 / fi;
        }
    }
    s / (data.len() as f64 * candidate.volume()) - 1.0
}

/// Fenchel optimality certificate: the worst inequality gap over the grid,
/// the same gap over a seeded off-grid probe set, and per-atom equality
/// gaps. Passing means every gap is within the tolerance.
#[derive(Debug, Clone)]
pub struct FenchelCertificate {
    /// `max over grid points of c(x)/|x| - 1`.
    pub max_ineq_gap: f64,
    /// Same quantity over the off-grid probes.
    pub offgrid_gap: f64,
    /// `|c(y_j)/|y_j| - 1|` per atom of the mixing measure.
    pub atom_eq_gaps: Vec<f64>,
    /// Tolerance the certificate was requested at.
    pub tol: f64,
}

impl FenchelCertificate {
    pub fn worst_atom_gap(&self) -> f64 {
        self.atom_eq_gaps.iter().copied().fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.max_ineq_gap <= self.tol
            && self.offgrid_gap <= self.tol
            && self.worst_atom_gap() <= self.tol
    }
}

/// Output of [`fit`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub mixing: MixingMeasure,
    /// `f(X_i)` at the returned measure, the a.s.-unique optimizer vector.
    pub fitted: Vec<f64>,
    pub loglik: f64,
    /// Inner iterations spent (EM sweeps plus Newton steps).
    pub iterations: u64,
    pub certificate: FenchelCertificate,
}

impl FitResult {
    pub fn certified(&self) -> bool {
        self.certificate.passes()
    }
}

fn loglik_of(fitted: &[f64]) -> f64 {
    fitted.iter().map(|v| v.ln()).sum()
}

fn validate_data(data: &[Point]) -> Result<usize> {
    let first = data.first().ok_or(Error::EmptyInput("fit needs data"))?;
    let d = first.dim();
    if d >= 5 {
        return Err(Error::DimensionTooLarge(d));
    }
    for p in data {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
    }
    Ok(d)
}

fn data_positions(grid: &Grid, data: &[Point]) -> Vec<Vec<usize>> {
    data.iter()
        .map(|p| grid.position_of(p).expect("data lies on its own grid"))
        .collect()
}

/// Gap scan over the grid: worst value of `c(W)/|W| - 1` plus the
/// strongest violations above a threshold (ties prefer smaller |W|).
struct GapScan {
    max_gap: f64,
    top: Vec<(f64, u64)>,
}

fn gap_scan(
    grid: &Grid,
    positions: &[Vec<usize>],
    fitted: &[f64],
    keep_top: usize,
    top_threshold: f64,
) -> GapScan {
    let n = fitted.len() as f64;
    let weights: Vec<f64> = fitted.iter().map(|&f| 1.0 / (n * f)).collect();
    let cvals = scan::dominated_sums(grid, positions, &weights);
    let d = grid.dim();
    let shape: Vec<usize> = (0..d).map(|j| grid.axis_len(j)).collect();
    let mut idx = vec![0usize; d];
    // running prefix products of coordinates; prods[d-1] = |W|
    let mut prods = vec![1.0f64; d];
    for j in 0..d {
        let prev = if j == 0 { 1.0 } else { prods[j - 1] };
        prods[j] = prev * grid.axis(j)[0];
    }
    let mut max_gap = f64::NEG_INFINITY;
    let mut top: Vec<(f64, u64, f64)> = Vec::new();
    for (lin, &c) in cvals.iter().enumerate() {
        let vol = prods[d - 1];
        let gap = c / vol - 1.0;
        if gap > max_gap {
            max_gap = gap;
        }
        if keep_top > 0 && gap > top_threshold {
            let pos = top
                .iter()
                .position(|&(g, _, v)| gap > g || (gap == g && vol < v))
                .unwrap_or(top.len());
            if pos < keep_top {
                top.insert(pos, (gap, lin as u64, vol));
                top.truncate(keep_top);
            }
        }
        // advance the odometer, refreshing the touched prefix products
        let mut j = d;
        while j > 0 {
            j -= 1;
            idx[j] += 1;
            if idx[j] < shape[j] {
                break;
            }
            idx[j] = 0;
        }
        if lin + 1 < cvals.len() {
            for k in j..d {
                let prev = if k == 0 { 1.0 } else { prods[k - 1] };
                prods[k] = prev * grid.axis(k)[idx[k]];
            }
        }
    }
    GapScan {
        max_gap,
        top: top.into_iter().map(|(g, l, _)| (g, l)).collect(),
    }
}

fn offgrid_probe_gap(data: &[Point], fitted: &[f64], upper: &Point) -> f64 {
    let mut stream = Stream::new(PROBE_SEED);
    let d = upper.dim();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..OFFGRID_PROBES {
        let coords: Vec<f64> = (0..d)
            .map(|j| stream.uniform_in(upper.get(j) * 1.1))
            .collect();
        let probe = Point::new(coords).expect("positive probe");
        let gap = directional_derivative(&probe, fitted, data);
        if gap > worst {
            worst = gap;
        }
    }
    worst
}

/// Evaluate the Fenchel certificate of a mixing measure against a dataset.
pub fn certify(mixing: &MixingMeasure, data: &[Point], tol: f64) -> Result<FenchelCertificate> {
    validate_data(data)?;
    let density = SmuDensity::new(mixing.clone());
    let mut fitted = Vec::with_capacity(data.len());
    for (i, x) in data.iter().enumerate() {
        let v = density.density(x);
        if v <= 0.0 {
            return Err(Error::UncoveredDataPoint { index: i });
        }
        fitted.push(v);
    }
    let grid = Grid::from_data(data)?;
    if grid.len() > MAX_CERT_GRID {
        return Err(Error::CellOverflow { cells: grid.len(), limit: MAX_CERT_GRID });
    }
    let positions = data_positions(&grid, data);
    let scan = gap_scan(&grid, &positions, &fitted, 0, f64::INFINITY);
    let atom_eq_gaps = mixing
        .atoms()
        .iter()
        .map(|y| directional_derivative(y, &fitted, data).abs())
        .collect();
    let offgrid_gap = offgrid_probe_gap(data, &fitted, &grid.upper_corner());
    Ok(FenchelCertificate {
        max_ineq_gap: scan.max_gap,
        offgrid_gap,
        atom_eq_gaps,
        tol,
    })
}

/// Newton refinement of the unconstrained concave surrogate
/// `phi(w) = sum_i log f_i - n sum_j w_j`, whose stationary points are
/// exactly the Fenchel equalities on the active support. Returns the
/// number of Newton steps taken; weights are renormalized afterwards.
fn newton_polish(cache: &LikelihoodCache, weights: &mut [f64], budget: u64) -> u64 {
    let m = weights.len();
    let n = cache.n_data;
    // beyond n active columns the Hessian is rank-deficient by construction
    if (0..m).filter(|&j| weights[j] > 0.0).count() > NEWTON_SUPPORT_CAP.min(n) {
        return 0;
    }
    let mut steps = 0;
    for _ in 0..budget {
        let active: Vec<usize> = (0..m).filter(|&j| weights[j] > 0.0).collect();
        let ma = active.len();
        if ma == 0 {
            break;
        }
        // big supports only get the mass-shedding projected steps
        if ma > 350 && steps >= 2 {
            break;
        }
        let f = cache.mixture_values(weights);
        if f.iter().any(|&v| v <= 0.0) {
            break;
        }
        let phi0: f64 =
            f.iter().map(|v| v.ln()).sum::<f64>() - n as f64 * weights.iter().sum::<f64>();
        // gradient g_j = n D(y_j) and scaled design C = D^{1/2} B
        let mut grad = DVector::zeros(ma);
        let mut c = DMatrix::zeros(n, ma);
        for (col, &j) in active.iter().enumerate() {
            let iv = cache.inv_volumes[j];
            let mut g = 0.0;
            for &i in &cache.dominated[j] {
                let fi = f[i as usize];
                g += iv / fi;
                c[(i as usize, col)] = iv / fi;
            }
            grad[col] = g - n as f64;
        }
        if grad.amax() <= 1e-13 * n as f64 {
            break;
        }
        let mut h = c.tr_mul(&c);
        // Jacobi preconditioning plus a tiny ridge keep the factorization
        // well behaved despite the wild column scales
        let scale: Vec<f64> = (0..ma)
            .map(|k| 1.0 / h[(k, k)].max(f64::MIN_POSITIVE).sqrt())
            .collect();
        for r in 0..ma {
            for k in 0..ma {
                h[(r, k)] *= scale[r] * scale[k];
            }
        }
        for k in 0..ma {
            h[(k, k)] += 1e-11;
        }
        let scaled_grad = DVector::from_iterator(ma, (0..ma).map(|k| grad[k] * scale[k]));
        let Some(chol) = h.cholesky() else { break };
        let mut delta = chol.solve(&scaled_grad);
        for k in 0..ma {
            delta[k] *= scale[k];
        }

        // projected line search: negatives clamp to zero, which retires
        // many dead weights in one move
        let try_direction = |dir: &DVector<f64>, t0: f64, weights: &mut [f64]| -> bool {
            let mut t = t0;
            for _ in 0..40 {
                let mut trial: Vec<f64> = weights.to_vec();
                for (col, &j) in active.iter().enumerate() {
                    trial[j] = (weights[j] + t * dir[col]).max(0.0);
                }
                let ft = cache.mixture_values(&trial);
                if ft.iter().all(|&v| v > 0.0) {
                    let phi: f64 = ft.iter().map(|v| v.ln()).sum::<f64>()
                        - n as f64 * trial.iter().sum::<f64>();
                    if phi > phi0 {
                        weights.copy_from_slice(&trial);
                        return true;
                    }
                }
                t *= 0.5;
            }
            false
        };
        let mut improved = grad.dot(&delta) > 0.0 && try_direction(&delta, 1.0, weights);
        if !improved {
            // ill-conditioned solve: a projected gradient step still ascends
            let wmax = active.iter().map(|&j| weights[j]).fold(0.0, f64::max);
            let t0 = 0.5 * wmax / grad.amax().max(f64::MIN_POSITIVE);
            improved = try_direction(&grad, t0, weights);
        }
        steps += 1;
        if !improved {
            break;
        }
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    steps
}

/// Final refinement: full Newton-Raphson on the Fenchel equality system
/// `sum_i a_ij / f_i = n` over the identified support. No line search; a
/// step is reverted when it leaves the feasible cone or grows the
/// residual. Quadratic convergence takes the fitted values to machine
/// precision, which the likelihood-based line search cannot resolve.
fn equality_polish(cache: &LikelihoodCache, weights: &mut [f64]) {
    let n = cache.n_data;
    let active: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > 0.0).collect();
    let ma = active.len();
    if ma == 0 || ma > 600 {
        return;
    }
    let residual = |w: &[f64]| -> Option<(DVector<f64>, Vec<f64>)> {
        let f = cache.mixture_values(w);
        if f.iter().any(|&v| v <= 0.0) {
            return None;
        }
        let mut g = DVector::zeros(ma);
        for (col, &j) in active.iter().enumerate() {
            let mut acc = 0.0;
            for &i in &cache.dominated[j] {
                acc += cache.inv_volumes[j] / f[i as usize];
            }
            g[col] = acc - n as f64;
        }
        Some((g, f))
    };
    let Some((mut g, mut f)) = residual(weights) else { return };
    for _ in 0..12 {
        let norm = g.amax();
        if norm <= 1e-12 * n as f64 {
            break;
        }
        let mut c = DMatrix::zeros(n, ma);
        for (col, &j) in active.iter().enumerate() {
            for &i in &cache.dominated[j] {
                c[(i as usize, col)] = cache.inv_volumes[j] / f[i as usize];
            }
        }
        let mut h = c.tr_mul(&c);
        for k in 0..ma {
            h[(k, k)] += 1e-14 * h[(k, k)].abs().max(1e-300);
        }
        let Some(chol) = h.cholesky() else { break };
        let delta = chol.solve(&g);
        let mut trial = weights.to_vec();
        let mut feasible = true;
        for (col, &j) in active.iter().enumerate() {
            trial[j] = weights[j] + delta[col];
            if trial[j] <= 0.0 {
                feasible = false;
                break;
            }
        }
        if !feasible {
            break;
        }
        match residual(&trial) {
            Some((g2, f2)) if g2.amax() < norm => {
                weights.copy_from_slice(&trial);
                g = g2;
                f = f2;
            }
            _ => break,
        }
    }
}

/// Block of EM sweeps; stops when the log-likelihood stalls. The mixture
/// values are computed once per sweep and shared between the stall check
/// and the multiplicative update.
fn em_block(cache: &LikelihoodCache, weights: &mut [f64], max_sweeps: u64) -> Result<u64> {
    let n = cache.n_data as f64;
    let mut prev = f64::NEG_INFINITY;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let f = cache.mixture_values(weights);
        if let Some(i) = f.iter().position(|&v| v <= 0.0) {
            return Err(Error::UncoveredDataPoint { index: i });
        }
        let loglik = loglik_of(&f);
        if prev.is_finite() && (loglik - prev).abs() <= EM_REL_TOL * loglik.abs().max(1.0) {
            break;
        }
        prev = loglik;
        let inv_f: Vec<f64> = f.iter().map(|v| 1.0 / v).collect();
        for (j, rows) in cache.dominated.iter().enumerate() {
            if weights[j] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for &i in rows {
                s += inv_f[i as usize];
            }
            weights[j] *= cache.inv_volumes[j] * s / n;
        }
        sweeps += 1;
    }
    Ok(sweeps)
}

/// Line-search weight for mixing a new candidate into the current fit:
/// maximizes `sum_i log((1-a) f_i + a g_i)` over `a in [0, 0.999]`.
fn mixin_weight(f: &[f64], g: &[f64]) -> f64 {
    let deriv = |a: f64| -> f64 {
        f.iter()
            .zip(g)
            .map(|(&fi, &gi)| (gi - fi) / ((1.0 - a) * fi + a * gi))
            .sum()
    };
    if deriv(0.0) <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 0.999f64);
    if deriv(hi) > 0.0 {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn initial_weights(m: usize, init_seed: Option<u64>) -> Vec<f64> {
    match init_seed {
        None => vec![1.0 / m as f64; m],
        Some(seed) => {
            let mut stream = Stream::new(seed);
            let raw: Vec<f64> = (0..m).map(|_| stream.exponential()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / total).collect()
        }
    }
}

/// Full-grid EM warmup through cumulative scans; O(d N) per sweep. Returns
/// surviving candidates and weights.
fn full_grid_warmup(
    grid: &Grid,
    positions: &[Vec<usize>],
    opts: &FitOptions,
    iterations: &mut u64,
) -> Result<(Vec<Point>, Vec<f64>)> {
    let total = grid.len() as usize;
    let vols = scan::point_volumes(grid);
    let mut weights = initial_weights(total, opts.init_seed);
    let n = positions.len();
    let mut prev = f64::NEG_INFINITY;
    let sweep_cap = (WARMUP_OP_BUDGET / grid.len().max(1)).clamp(150, 2000);
    for _ in 0..sweep_cap {
        if *iterations >= opts.max_iter {
            break;
        }
        // density at every grid point, then at the data
        let mut arr: Vec<f64> = weights.iter().zip(&vols).map(|(w, v)| w / v).collect();
        scan::suffix_sums_in_place(grid, &mut arr);
        let mut inv_f = Vec::with_capacity(n);
        let mut loglik = 0.0;
        for pos in positions {
            let fi = arr[grid.linear_index(pos) as usize];
            if fi <= 0.0 {
                return Err(Error::UncoveredDataPoint { index: inv_f.len() });
            }
            inv_f.push(1.0 / fi);
            loglik += fi.ln();
        }
        let sums = scan::dominated_sums(grid, positions, &inv_f);
        for ((w, &s), &v) in weights.iter_mut().zip(&sums).zip(&vols) {
            *w *= s / (n as f64 * v);
        }
        *iterations += 1;
        if prev.is_finite() && (loglik - prev).abs() <= EM_REL_TOL * loglik.abs().max(1.0) {
            break;
        }
        prev = loglik;
    }
    let mut candidates = Vec::new();
    let mut kept = Vec::new();
    for (lin, &w) in weights.iter().enumerate() {
        if w > WEIGHT_PRUNE_EPS {
            candidates.push(grid.point_at(&grid.multi_index(lin as u64)));
            kept.push(w);
        }
    }
    Ok((candidates, kept))
}

/// Merge candidates sharing the same dominated-index pattern into the one
/// with the smallest volume, and keep at most `cap` candidates by weight.
/// Moving weight onto the minimal representative of a pattern never lowers
/// the likelihood, and anything over-pruned is recoverable through later
/// vertex additions.
fn reduce_candidates(
    data: &[Point],
    candidates: Vec<Point>,
    weights: Vec<f64>,
    cap: usize,
) -> (Vec<Point>, Vec<f64>) {
    let mut by_pattern: HashMap<Vec<u32>, (Point, f64)> = HashMap::new();
    let mut order: Vec<Vec<u32>> = Vec::new();
    for (cand, w) in candidates.into_iter().zip(weights) {
        let pattern: Vec<u32> = data
            .iter()
            .enumerate()
            .filter(|(_, x)| x.le(&cand))
            .map(|(i, _)| i as u32)
            .collect();
        if pattern.is_empty() {
            continue;
        }
        match by_pattern.get_mut(&pattern) {
            None => {
                order.push(pattern.clone());
                by_pattern.insert(pattern, (cand, w));
            }
            Some((best, bw)) => {
                *bw += w;
                let better = cand.volume() < best.volume()
                    || (cand.volume() == best.volume()
                        && cand.coords() < best.coords());
                if better {
                    *best = cand;
                }
            }
        }
    }
    let mut merged: Vec<(Point, f64)> = order
        .into_iter()
        .map(|p| by_pattern.remove(&p).expect("pattern recorded"))
        .collect();
    if merged.len() > cap {
        // keep the heaviest candidates; order is deterministic
        let mut indexed: Vec<(usize, f64)> =
            merged.iter().enumerate().map(|(i, (_, w))| (i, *w)).collect();
        indexed.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        indexed.truncate(cap);
        indexed.sort_by_key(|&(i, _)| i);
        merged = indexed.into_iter().map(|(i, _)| merged[i].clone()).collect();
    }
    let mass: f64 = merged.iter().map(|(_, w)| w).sum();
    merged
        .into_iter()
        .map(|(p, w)| (p, w / mass))
        .unzip()
}

/// Pruning and capping must never leave a data point with no dominating
/// candidate; the join of all data covers everything, so it is re-added
/// with a small weight whenever coverage breaks.
fn ensure_coverage(data: &[Point], join: &Point, candidates: &mut Vec<Point>, weights: &mut Vec<f64>) {
    if data.iter().all(|x| candidates.iter().any(|c| x.le(c))) {
        return;
    }
    candidates.push(join.clone());
    weights.push(1e-6);
    let mass: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= mass;
    }
}

/// Maximize the likelihood over SMU densities for the dataset.
///
/// Returns the fitted measure together with its certificate. When the
/// iteration budget runs out first, the best iterate is returned and its
/// certificate reports the remaining gap (`certified()` is false then).
pub fn fit(data: &[Point], opts: &FitOptions) -> Result<FitResult> {
    validate_data(data)?;
    let n = data.len();
    let grid = Grid::from_data(data)?;
    if grid.len() > MAX_CERT_GRID {
        return Err(Error::CellOverflow { cells: grid.len(), limit: MAX_CERT_GRID });
    }
    let positions = data_positions(&grid, data);
    let mut iterations = 0u64;

    // Starting candidates: the whole grid when affordable, otherwise the
    // data points plus their join.
    let (mut candidates, mut weights) = if grid.len() <= opts.full_grid_limit {
        full_grid_warmup(&grid, &positions, opts, &mut iterations)?
    } else {
        let mut cands: Vec<Point> = data.to_vec();
        cands.push(grid_join(data)?);
        cands.sort_by(|a, b| a.coords().partial_cmp(b.coords()).expect("finite"));
        cands.dedup();
        let w = initial_weights(cands.len(), opts.init_seed);
        (cands, w)
    };

    let join = grid_join(data)?;
    (candidates, weights) = reduce_candidates(data, candidates, weights, n.max(64));
    ensure_coverage(data, &join, &mut candidates, &mut weights);
    let mut cache = build_cache(data, &candidates);
    debug_assert_eq!(cache.n_candidates(), candidates.len());

    loop {
        if iterations >= opts.max_iter {
            break;
        }
        let budget = EM_SWEEPS_PER_ROUND.min(opts.max_iter - iterations);
        iterations += em_block(&cache, &mut weights, budget)?;
        iterations += newton_polish(&cache, &mut weights, NEWTON_STEPS_PER_ROUND);

        // prune, merge dominated patterns, renormalize
        let mut live_candidates = Vec::with_capacity(cache.n_candidates());
        let mut live_weights = Vec::with_capacity(cache.n_candidates());
        for (j, &w) in weights.iter().enumerate() {
            if w > WEIGHT_PRUNE_EPS {
                live_candidates.push(cache.candidates()[j].clone());
                live_weights.push(w);
            }
        }
        (candidates, weights) = reduce_candidates(data, live_candidates, live_weights, n.max(64));
        ensure_coverage(data, &join, &mut candidates, &mut weights);
        cache = build_cache(data, &candidates);

        let mut fitted = cache.mixture_values(&weights);
        let scan = gap_scan(&grid, &positions, &fitted, SCAN_TOP_K, opts.tol);
        log::trace!(
            "round: iters={iterations} m={} gap={:.3e}",
            cache.n_candidates(),
            scan.max_gap
        );
        let atoms_ok = cache
            .candidates()
            .iter()
            .all(|y| directional_derivative(y, &fitted, data).abs() <= opts.tol);
        if scan.max_gap <= opts.tol && atoms_ok {
            break;
        }

        // vertex-direction additions: strongest violations not yet present,
        // each mixed in by its own line search
        let mut added = 0usize;
        for &(_, lin) in &scan.top {
            if added >= VERTEX_ADDITIONS_PER_ROUND {
                break;
            }
            let y = grid.point_at(&grid.multi_index(lin));
            if candidates.contains(&y) {
                continue;
            }
            let iv = 1.0 / y.volume();
            let g: Vec<f64> = data
                .iter()
                .map(|x| if x.le(&y) { iv } else { 0.0 })
                .collect();
            let alpha = mixin_weight(&fitted, &g);
            if alpha <= 0.0 {
                continue;
            }
            for w in weights.iter_mut() {
                *w *= 1.0 - alpha;
            }
            weights.push(alpha);
            candidates.push(y);
            for (fi, &gi) in fitted.iter_mut().zip(&g) {
                *fi = (1.0 - alpha) * *fi + alpha * gi;
            }
            added += 1;
        }
        if added > 0 {
            cache = build_cache(data, &candidates);
        }
        // with nothing added the next round just keeps optimizing
    }

    equality_polish(&cache, &mut weights);
    let mixing = MixingMeasure::new(candidates, weights)?;
    let density = SmuDensity::new(mixing.clone());
    let fitted: Vec<f64> = data.iter().map(|x| density.density(x)).collect();
    let loglik = loglik_of(&fitted);
    let certificate = certify(&mixing, data, opts.tol)?;
    Ok(FitResult {
        mixing,
        fitted,
        loglik,
        iterations,
        certificate,
    })
}
