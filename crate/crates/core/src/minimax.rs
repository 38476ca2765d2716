//! Numerical verifier for the local-minimax perturbation construction.
//!
//! Around a point `x0` with mixed derivative `b` (sign `(-1)^d b > 0`), a
//! shrinking rectangle `I_n` of half-widths `eps_i = h_i n^{-1/(3d)}`
//! carries a tent perturbation `g_n`; mixed with a smooth base density at
//! level `theta` and renormalized it yields a density sequence `f_n` whose
//! scaled Hellinger distance to the base stabilizes at rate `1/n`. The
//! derivation chain behind this is treated here as claims to verify:
//! every integral is recomputed by quadrature and reported next to the
//! candidate closed forms, including both printed constants for the
//! `int g_n^2` identity, whose two candidates differ by a factor `4^d`.

use crate::error::{Error, Result};
use crate::geom::{Grid, Point, Rect};
use crate::gridded::Membership;
use crate::quad::{integrate_nd, integrate_product, QuadOptions};
use crate::truth::TruthModel;

/// Tolerance for the membership lattice scan.
const MEMBERSHIP_SCAN_TOL: f64 = 1e-10;

/// The perturbation around `x0`: bandwidths, mixing level, index, mixed
/// derivative of the base at `x0`, and the base model itself.
#[derive(Debug, Clone)]
pub struct PerturbationSpec {
    x0: Point,
    h: Vec<f64>,
    theta: f64,
    n: u64,
    b: f64,
    base: TruthModel,
}

impl PerturbationSpec {
    pub fn new(
        x0: Point,
        h: Vec<f64>,
        theta: f64,
        n: u64,
        b: f64,
        base: TruthModel,
    ) -> Result<Self> {
        let spec = Self::new_unchecked(x0, h, theta, n, b, base)?;
        let d = spec.dim();
        let signed_b = if d % 2 == 0 { spec.b } else { -spec.b };
        if !(signed_b > 0.0) {
            return Err(Error::BadDerivativeSign { signed_b });
        }
        if !(spec.theta > 0.0 && spec.theta < 1.0) {
            return Err(Error::BadTheta(spec.theta));
        }
        let eps = spec.half_widths();
        if (0..d).any(|i| spec.x0.get(i) - eps[i] <= 0.0) {
            return Err(Error::BelowN0 { n: spec.n, n0: spec.min_valid_n() });
        }
        Ok(spec)
    }

    /// Builds the perturbation with structural checks only; the sign condition,
    /// the theta range and the orthant constraint are not enforced. Meant
    /// for deliberately broken configurations (forced theta outside (0,1)).
    pub fn new_unchecked(
        x0: Point,
        h: Vec<f64>,
        theta: f64,
        n: u64,
        b: f64,
        base: TruthModel,
    ) -> Result<Self> {
        let d = x0.dim();
        if h.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: h.len() });
        }
        if base.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: base.dim() });
        }
        for (index, &value) in h.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::BadCoordinate { index, value });
            }
        }
        if n == 0 {
            return Err(Error::EmptyInput("perturbation index n must be at least 1"));
        }
        if !b.is_finite() || !theta.is_finite() {
            return Err(Error::Parse("theta and b must be finite".into()));
        }
        Ok(Self { x0, h, theta, n, b, base })
    }

    /// Exp-product base at `x0`, whose mixed derivative there is
    /// `b = (-1)^d exp(-sum x0_i)`.
    pub fn exp_default(x0: Point, h: Vec<f64>, theta: f64, n: u64) -> Result<Self> {
        let d = x0.dim();
        let magnitude = (-x0.coords().iter().sum::<f64>()).exp();
        let b = if d % 2 == 0 { magnitude } else { -magnitude };
        Self::new(x0, h, theta, n, b, TruthModel::ExpProduct { dim: d })
    }

    /// Same perturbation at a different index. Only the orthant constraint
    /// depends on `n`, so sign and theta checks are not repeated (forced
    /// configurations stay forced).
    pub fn with_n(&self, n: u64) -> Result<Self> {
        let spec = Self::new_unchecked(
            self.x0.clone(),
            self.h.clone(),
            self.theta,
            n,
            self.b,
            self.base.clone(),
        )?;
        let eps = spec.half_widths();
        if (0..spec.dim()).any(|i| spec.x0.get(i) - eps[i] <= 0.0) {
            return Err(Error::BelowN0 { n, n0: spec.min_valid_n() });
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    pub fn x0(&self) -> &Point {
        &self.x0
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.h
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mixed_derivative(&self) -> f64 {
        self.b
    }

    pub fn base(&self) -> &TruthModel {
        &self.base
    }

    /// `(-1)^d b`, positive under the standing sign assumption.
    pub fn signed_b(&self) -> f64 {
        if self.dim() % 2 == 0 {
            self.b
        } else {
            -self.b
        }
    }

    /// Half-widths `eps_i = h_i n^{-1/(3d)}`.
    pub fn half_widths(&self) -> Vec<f64> {
        let rate = (self.n as f64).powf(-1.0 / (3.0 * self.dim() as f64));
        self.h.iter().map(|hi| hi * rate).collect()
    }

    /// Per-dimension intervals of the perturbation rectangle `I_n`.
    pub fn domain(&self) -> Vec<(f64, f64)> {
        let eps = self.half_widths();
        (0..self.dim())
            .map(|i| (self.x0.get(i) - eps[i], self.x0.get(i) + eps[i]))
            .collect()
    }

    /// Smallest index for which `I_n` stays inside the positive orthant.
    pub fn min_valid_n(&self) -> u64 {
        let d = self.dim() as f64;
        let mut n0 = 1u64;
        for i in 0..self.dim() {
            let ratio = self.h[i] / self.x0.get(i);
            if ratio >= 1.0 {
                let bound = ratio.powf(3.0 * d);
                n0 = n0.max(bound.floor() as u64 + 1);
            }
        }
        n0
    }

    /// Normalizing constant `d_n = 1 + (-1)^d theta b prod h_i^2 n^{-2/3}`.
    pub fn normalizer(&self) -> f64 {
        let h2: f64 = self.h.iter().map(|hi| hi * hi).product();
        1.0 + self.theta * self.signed_b() * h2 * (self.n as f64).powf(-2.0 / 3.0)
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.domain()
            .iter()
            .zip(x)
            .all(|(&(lo, hi), &xi)| xi >= lo && xi <= hi)
    }
}

/// The oscillating step `h_n` driving the perturbation:
/// `(-1)^d prod_i (1(x0_i < u_i <= x0_i + eps_i) - 1(x0_i - eps_i <= u_i <= x0_i))`.
pub fn h_step(u: &Point, spec: &PerturbationSpec) -> f64 {
    let eps = spec.half_widths();
    let mut value = if spec.dim() % 2 == 0 { 1.0 } else { -1.0 };
    for i in 0..spec.dim() {
        let x0 = spec.x0().get(i);
        let ui = u.get(i);
        let factor = if ui > x0 && ui <= x0 + eps[i] {
            1.0
        } else if ui >= x0 - eps[i] && ui <= x0 {
            -1.0
        } else {
            0.0
        };
        if factor == 0.0 {
            return 0.0;
        }
        value *= factor;
    }
    value
}

fn g_closed_raw(x: &[f64], spec: &PerturbationSpec, eps: &[f64]) -> f64 {
    let mut value = spec.signed_b();
    for i in 0..x.len() {
        let t = eps[i] - (x[i] - spec.x0().get(i)).abs();
        if t <= 0.0 {
            return 0.0;
        }
        value *= t;
    }
    value
}

/// Tent perturbation `g_n(y)`: `(-1)^d b` times the volume of the
/// rectangle between `y` and the nearest vertex of `I_n`, i.e.
/// `(-1)^d b prod_i max(0, eps_i - |y_i - x0_i|)`; zero off `I_n`.
pub fn g_perturb(y: &Point, spec: &PerturbationSpec) -> f64 {
    let eps = spec.half_widths();
    g_closed_raw(y.coords(), spec, &eps)
}

/// Definitional evaluation of `g_n(y) = b int_{u >= y} 1_{I_n}(u) h_n(u) du`
/// by tensor-product quadrature of the indicator bracket, one axis at a
/// time (the integrand is a product across axes, so the tensor midpoint
/// sum factors exactly). Cross-checks the closed form.
pub fn g_perturb_definitional(y: &Point, spec: &PerturbationSpec, opts: QuadOptions) -> f64 {
    let d = spec.dim();
    let eps = spec.half_widths();
    let mut value = spec.signed_b();
    for i in 0..d {
        let x0 = spec.x0().get(i);
        let (lo, hi) = (x0 - eps[i], x0 + eps[i]);
        let from = y.get(i).max(lo);
        if from >= hi {
            return 0.0;
        }
        let bracket = move |u: f64| -> f64 {
            if u > x0 && u <= hi {
                1.0
            } else if u >= lo && u <= x0 {
                -1.0
            } else {
                0.0
            }
        };
        let q = crate::quad::integrate_1d(bracket, from, hi, &[x0], opts);
        value *= q.value;
    }
    value
}

/// The perturbed density
/// `f_n = (f + theta g_n)/d_n` on `I_n`, `f/d_n` outside.
pub fn perturbed_density(x: &Point, spec: &PerturbationSpec) -> f64 {
    let dn = spec.normalizer();
    let fx = spec.base().density(x);
    if spec.contains(x.coords()) {
        (fx + spec.theta() * g_perturb(x, spec)) / dn
    } else {
        fx / dn
    }
}

/// Quadrature check of `int_{I_n} g_n = (-1)^d b prod h_i^2 n^{-2/3}`.
#[derive(Debug, Clone, Copy)]
pub struct Mml1Report {
    pub quadrature: f64,
    pub formula: f64,
    pub rel_err: f64,
    pub nodes: u64,
    pub converged: bool,
}

pub fn check_mml1(spec: &PerturbationSpec, opts: QuadOptions) -> Mml1Report {
    let d = spec.dim();
    let eps = spec.half_widths();
    let domain = spec.domain();
    let breakpoints: Vec<Vec<f64>> = (0..d).map(|i| vec![spec.x0().get(i)]).collect();
    let factors: Vec<Box<dyn Fn(f64) -> f64 + '_>> = (0..d)
        .map(|i| {
            let x0 = spec.x0().get(i);
            let e = eps[i];
            Box::new(move |t: f64| (e - (t - x0).abs()).max(0.0)) as Box<dyn Fn(f64) -> f64>
        })
        .collect();
    let quad = integrate_product(&factors, &domain, &breakpoints, opts);
    let quadrature = spec.signed_b() * quad.value;
    let h2: f64 = spec.h.iter().map(|hi| hi * hi).product();
    let formula = spec.signed_b() * h2 * (spec.n as f64).powf(-2.0 / 3.0);
    Mml1Report {
        quadrature,
        formula,
        rel_err: (quadrature - formula).abs() / formula.abs(),
        nodes: quad.nodes,
        converged: quad.converged,
    }
}

/// Which closed-form constant the quadrature agrees with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mml2Verdict {
    MatchesDerived,
    MatchesPrinted,
    Neither,
}

/// Three-way comparison for `int_{I_n} g_n^2`: the definitional quadrature
/// against the printed `(8/3)^d` constant and the per-coordinate
/// re-derivation `(2/3)^d` (the two differ by `4^d`).
#[derive(Debug, Clone, Copy)]
pub struct Mml2Report {
    pub quadrature: f64,
    pub printed_value: f64,
    pub derived_value: f64,
    pub rel_err_printed: f64,
    pub rel_err_derived: f64,
    pub verdict: Mml2Verdict,
    pub tol: f64,
    pub nodes: u64,
    pub converged: bool,
}

pub fn check_mml2(spec: &PerturbationSpec, tol: f64, opts: QuadOptions) -> Mml2Report {
    let d = spec.dim();
    let eps = spec.half_widths();
    let domain = spec.domain();
    let breakpoints: Vec<Vec<f64>> = (0..d).map(|i| vec![spec.x0().get(i)]).collect();
    let factors: Vec<Box<dyn Fn(f64) -> f64 + '_>> = (0..d)
        .map(|i| {
            let x0 = spec.x0().get(i);
            let e = eps[i];
            Box::new(move |t: f64| {
                let v = (e - (t - x0).abs()).max(0.0);
                v * v
            }) as Box<dyn Fn(f64) -> f64>
        })
        .collect();
    let quad = integrate_product(&factors, &domain, &breakpoints, opts);
    let quadrature = spec.b * spec.b * quad.value;
    let h3: f64 = spec.h.iter().map(|hi| hi * hi * hi).product();
    let scale = spec.b * spec.b * h3 / spec.n as f64;
    let printed_value = (8.0f64 / 3.0).powi(d as i32) * scale;
    let derived_value = (2.0f64 / 3.0).powi(d as i32) * scale;
    let rel_err_printed = (quadrature - printed_value).abs() / printed_value.abs();
    let rel_err_derived = (quadrature - derived_value).abs() / derived_value.abs();
    let verdict = if rel_err_derived <= tol {
        Mml2Verdict::MatchesDerived
    } else if rel_err_printed <= tol {
        Mml2Verdict::MatchesPrinted
    } else {
        Mml2Verdict::Neither
    };
    Mml2Report {
        quadrature,
        printed_value,
        derived_value,
        rel_err_printed,
        rel_err_derived,
        verdict,
        tol,
        nodes: quad.nodes,
        converged: quad.converged,
    }
}

/// The scaled Hellinger sequence `n h^2(f_n, f)` along an index list, with
/// both candidate limits. The verdict names the closer candidate.
#[derive(Debug, Clone)]
pub struct HellingerLimitReport {
    pub entries: Vec<(u64, f64)>,
    /// Last sequence value.
    pub stabilized: f64,
    /// Relative change between the final two entries.
    pub final_rel_change: f64,
    pub derived_limit: f64,
    pub printed_limit: f64,
    pub rel_err_derived: f64,
    pub rel_err_printed: f64,
    pub verdict: Mml2Verdict,
}

/// Compute `n h^2(f_n, f)` for every index in `n_list` (strictly
/// increasing). Inside `I_n` the squared root difference is integrated by
/// tensor quadrature in the cancellation-free form
/// `(f_n - f) / (sqrt(f_n) + sqrt(f))`; outside, `f_n = f / d_n` makes the
/// contribution exactly `(1 - 1/sqrt(d_n))^2` times the remaining mass.
/// Requires the exp-product base (closed-form mass of `I_n`).
pub fn hellinger_limit_sequence(
    spec: &PerturbationSpec,
    n_list: &[u64],
    opts: QuadOptions,
) -> Result<HellingerLimitReport> {
    if !matches!(spec.base(), TruthModel::ExpProduct { .. }) {
        return Err(Error::ExpProductBaseRequired { context: "hellinger_limit_sequence" });
    }
    if n_list.is_empty() {
        return Err(Error::EmptyInput("hellinger sequence needs indices"));
    }
    for w in n_list.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Parse(format!(
                "n list must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let d = spec.dim();
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sp = spec.with_n(n)?;
        let dn = sp.normalizer();
        let theta = sp.theta();
        let eps = sp.half_widths();
        let domain = sp.domain();
        let breakpoints: Vec<Vec<f64>> = (0..d).map(|i| vec![sp.x0().get(i)]).collect();
        let spr = &sp;
        let epsr = &eps;
        let inside = integrate_nd(
            move |x: &[f64]| {
                let fx = (-x.iter().sum::<f64>()).exp();
                let gx = g_closed_raw(x, spr, epsr);
                let diff = (theta * gx - (dn - 1.0) * fx) / dn;
                let fnx = (fx + theta * gx) / dn;
                let denom = fnx.sqrt() + fx.sqrt();
                0.5 * (diff / denom) * (diff / denom)
            },
            &domain,
            &breakpoints,
            opts,
        );
        let mass_in: f64 = domain
            .iter()
            .map(|&(lo, hi)| (-lo).exp() - (-hi).exp())
            .product();
        let outside = 0.5 * {
            let r = 1.0 - 1.0 / dn.sqrt();
            r * r
        } * (1.0 - mass_in);
        entries.push((n, n as f64 * (inside.value + outside)));
    }
    let stabilized = entries.last().expect("non-empty").1;
    let final_rel_change = if entries.len() >= 2 {
        let prev = entries[entries.len() - 2].1;
        (stabilized - prev).abs() / stabilized.abs().max(f64::MIN_POSITIVE)
    } else {
        f64::INFINITY
    };
    let h3: f64 = spec.h.iter().map(|hi| hi * hi * hi).product();
    let scale = spec.theta() * spec.theta() * spec.b * spec.b * h3
        / (8.0 * spec.base().density(spec.x0()));
    let derived_limit = (2.0f64 / 3.0).powi(d as i32) * scale;
    let printed_limit = (8.0f64 / 3.0).powi(d as i32) * scale;
    let rel_err_derived = (stabilized - derived_limit).abs() / derived_limit.abs();
    let rel_err_printed = (stabilized - printed_limit).abs() / printed_limit.abs();
    let verdict = if rel_err_derived < rel_err_printed {
        Mml2Verdict::MatchesDerived
    } else if rel_err_printed < rel_err_derived {
        Mml2Verdict::MatchesPrinted
    } else {
        Mml2Verdict::Neither
    };
    Ok(HellingerLimitReport {
        entries,
        stabilized,
        final_rel_change,
        derived_limit,
        printed_limit,
        rel_err_derived,
        rel_err_printed,
        verdict,
    })
}

/// Scan the signed mixed differences of `f_n` over a lattice covering
/// `I_n` plus a collar, rejecting on any difference below `-1e-10`.
/// Requires the exp-product base. `resolution` is the lattice density per
/// axis across `I_n`.
pub fn membership_scan(spec: &PerturbationSpec, resolution: usize) -> Result<Membership> {
    if !matches!(spec.base(), TruthModel::ExpProduct { .. }) {
        return Err(Error::ExpProductBaseRequired { context: "membership_scan" });
    }
    let d = spec.dim();
    let resolution = resolution.max(5);
    let eps = spec.half_widths();
    let mut coords = Vec::with_capacity(d);
    for i in 0..d {
        let (lo, hi) = (spec.x0().get(i) - eps[i], spec.x0().get(i) + eps[i]);
        let collar_lo = (lo - 0.5 * eps[i]).max(0.5 * lo);
        let collar_hi = hi + 0.5 * eps[i];
        let mut axis = Vec::with_capacity(resolution + resolution / 2 + 3);
        let steps = resolution + resolution / 2;
        for k in 0..=steps {
            axis.push(collar_lo + (collar_hi - collar_lo) * k as f64 / steps as f64);
        }
        axis.extend([lo, spec.x0().get(i), hi]);
        axis.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        axis.dedup();
        coords.push(axis);
    }
    let grid = Grid::from_coords(coords)?;
    let values: Vec<f64> = (0..grid.len())
        .map(|lin| perturbed_density(&grid.point_at(&grid.multi_index(lin)), spec))
        .collect();

    // interior unit rectangles only: f_n keeps support past the collar,
    // so no zero extension applies here
    let shape: Vec<usize> = (0..d).map(|j| grid.axis_len(j)).collect();
    let mut strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * shape[j + 1];
    }
    let mut idx = vec![0usize; d];
    let total = grid.len() as usize;
    for lin in 0..total {
        if (0..d).all(|j| idx[j] + 1 < shape[j]) {
            let mut acc = 0.0;
            for mask in 0u32..(1u32 << d) {
                let mut offset = lin;
                for j in 0..d {
                    if mask & (1 << j) != 0 {
                        offset += strides[j];
                    }
                }
                if mask.count_ones() % 2 == 0 {
                    acc += values[offset];
                } else {
                    acc -= values[offset];
                }
            }
            if acc < -MEMBERSHIP_SCAN_TOL {
                let lower = grid.point_at(&idx);
                let upper_idx: Vec<usize> = idx.iter().map(|&k| k + 1).collect();
                let upper = grid.point_at(&upper_idx);
                let witness = Rect::half_open(lower, upper)?;
                return Ok(Membership::Rejected { witness, volume: acc });
            }
        }
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < shape[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(Membership::Accepted)
}

/// Smallest index whose perturbed density passes [`membership_scan`],
/// located by doubling then bisection. The scan outcome is treated as
/// monotone in `n`, which the construction guarantees eventually.
pub fn membership_threshold(
    spec: &PerturbationSpec,
    resolution: usize,
    n_cap: u64,
) -> Result<u64> {
    let start = spec.min_valid_n().max(1);
    if membership_scan(&spec.with_n(start)?, resolution)?.is_accepted() {
        return Ok(start);
    }
    let mut lo = start;
    let mut hi = start;
    loop {
        hi = hi.saturating_mul(2).max(start + 1);
        if hi > n_cap {
            return Err(Error::Parse(format!(
                "no accepted index found up to the cap {n_cap}"
            )));
        }
        if membership_scan(&spec.with_n(hi)?, resolution)?.is_accepted() {
            break;
        }
        lo = hi;
    }
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if membership_scan(&spec.with_n(mid)?, resolution)?.is_accepted() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The displayed lower-bound constant
/// `e^{-1/3} / 2^d * (3^{d-1})^{1/3} * ((-1)^d b f(x0))^{1/3}`.
pub fn lower_bound_constant(f_at_x0: f64, b: f64, d: usize) -> Result<f64> {
    let signed_b = if d % 2 == 0 { b } else { -b };
    if !(signed_b > 0.0) {
        return Err(Error::BadDerivativeSign { signed_b });
    }
    if !(f_at_x0 > 0.0) {
        return Err(Error::Parse(format!(
            "density at x0 must be positive, got {f_at_x0}"
        )));
    }
    Ok((-1.0f64 / 3.0).exp() / 2.0f64.powi(d as i32)
        * 3.0f64.powi(d as i32 - 1).powf(1.0 / 3.0)
        * (signed_b * f_at_x0).powf(1.0 / 3.0))
}
