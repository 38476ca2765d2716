//! The consistency sweep: simulate, fit, certify and measure across sample
//! sizes, then report the empirical rate slope.
//!
//! Replications run in parallel; each derives its own seed from the root
//! seed and the (sample-size index, replication) pair, so the record set is
//! independent of scheduling. Rows are emitted sorted by (n, rep).

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use smu_core::io::{self, format_f64};
use smu_core::rng::derive_seed;
use smu_core::{
    hellinger, hellinger_vs_exp_truth, l1_distance, Error, FitOptions, Point, SmuDensity,
    TruthModel,
};

use crate::commands::parse_truth;

struct SweepRecord {
    n: usize,
    rep: usize,
    hellinger: f64,
    l1: Option<f64>,
    ptwise_err: f64,
    iters: u64,
    cert_gap: f64,
    certified: bool,
    wall_ms: u64,
}

/// Default probe lattice when no probe file is given: a small grid over
/// the truth's core support.
fn default_probes(truth: &TruthModel) -> Vec<Point> {
    let d = truth.dim();
    let fractions = [0.1, 0.3, 0.5, 0.7, 0.9];
    let scale: Vec<f64> = match truth {
        TruthModel::ExpProduct { .. } => vec![2.5; d],
        TruthModel::Discrete(m) => {
            let join = m.support_join();
            (0..d).map(|j| join.get(j)).collect()
        }
    };
    let mut probes = Vec::with_capacity(fractions.len().pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        let coords: Vec<f64> = (0..d).map(|j| fractions[idx[j]] * scale[j]).collect();
        probes.push(Point::new(coords).expect("positive probes"));
        let mut j = d;
        loop {
            if j == 0 {
                return probes;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < fractions.len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

fn run_one(
    truth: &TruthModel,
    n: usize,
    n_index: usize,
    rep: usize,
    root_seed: u64,
    opts: &FitOptions,
    probes: &[Point],
) -> Result<SweepRecord> {
    let seed = derive_seed(root_seed, n_index as u64, rep as u64);
    let data = truth.sample(n, seed)?;
    let start = Instant::now();
    let result = smu_core::fit(&data, opts)?;
    let wall_ms = start.elapsed().as_millis() as u64;
    let density = SmuDensity::new(result.mixing.clone());
    let (h, l1) = match truth {
        TruthModel::ExpProduct { .. } => (hellinger_vs_exp_truth(&density), None),
        TruthModel::Discrete(m) => {
            let truth_density = SmuDensity::new(m.clone());
            let h = hellinger(&density, &truth_density)?;
            let l1 = match l1_distance(&density, &truth_density) {
                Ok(v) => Some(v),
                Err(Error::CellOverflow { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            (h, l1)
        }
    };
    let ptwise_err = probes
        .iter()
        .map(|p| (density.density(p) - truth.density(p)).abs())
        .fold(0.0, f64::max);
    let cert_gap = result
        .certificate
        .max_ineq_gap
        .max(result.certificate.offgrid_gap)
        .max(result.certificate.worst_atom_gap());
    Ok(SweepRecord {
        n,
        rep,
        hellinger: h,
        l1,
        ptwise_err,
        iters: result.iterations,
        cert_gap,
        certified: result.certified(),
        wall_ms,
    })
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

/// Ordinary least squares of y on x; returns (slope, intercept, slope se).
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / k;
    let ybar = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - xbar) * (v - xbar)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xbar) * (b - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let dof = (x.len().saturating_sub(2)).max(1) as f64;
    let se = (rss / dof / sxx).sqrt();
    (slope, intercept, se)
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    truth_spec: &str,
    dim: Option<usize>,
    n_list: &[usize],
    reps: usize,
    seed: u64,
    tol: f64,
    max_iter: u64,
    probes_path: Option<&Path>,
    out: &Path,
) -> Result<bool> {
    if n_list.is_empty() {
        bail!("--n needs at least one sample size");
    }
    for w in n_list.windows(2) {
        if w[0] >= w[1] {
            bail!("--n must be strictly increasing, got {} then {}", w[0], w[1]);
        }
    }
    if reps == 0 {
        bail!("--reps must be at least 1");
    }
    let truth = parse_truth(truth_spec, dim)?;
    let probes = match probes_path {
        Some(path) => io::read_dataset(path).context("reading probe file")?,
        None => default_probes(&truth),
    };
    let opts = FitOptions { tol, max_iter, ..FitOptions::default() };

    let tasks: Vec<(usize, usize, usize)> = n_list
        .iter()
        .enumerate()
        .flat_map(|(ni, &n)| (0..reps).map(move |rep| (ni, n, rep)))
        .collect();
    let records: Result<Vec<SweepRecord>> = tasks
        .par_iter()
        .map(|&(ni, n, rep)| run_one(&truth, n, ni, rep, seed, &opts, &probes))
        .collect();
    let records = records?;

    std::fs::create_dir_all(out)?;
    let mut csv = String::from("n,rep,hellinger,l1,ptwise_err,iters,cert_gap,certified,wall_ms\n");
    for r in &records {
        let l1 = r.l1.map(format_f64).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.rep,
            format_f64(r.hellinger),
            l1,
            format_f64(r.ptwise_err),
            r.iters,
            format_f64(r.cert_gap),
            r.certified,
            r.wall_ms
        );
    }
    std::fs::write(out.join("sweep.csv"), &csv)?;

    // medians over certified rows only
    let mut medians = Vec::new();
    for &n in n_list {
        let mut values: Vec<f64> = records
            .iter()
            .filter(|r| r.n == n && r.certified)
            .map(|r| r.hellinger)
            .collect();
        if values.is_empty() {
            bail!("no certified fits at n = {n}; cannot summarize");
        }
        medians.push(median(&mut values));
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|&m| m.ln()).collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let mut summary = String::new();
    let _ = writeln!(summary, "command = sweep");
    let _ = writeln!(summary, "truth = {}", truth.describe());
    let _ = writeln!(summary, "reps = {reps}");
    let _ = writeln!(summary, "seed = {seed}");
    let uncertified = records.iter().filter(|r| !r.certified).count();
    let _ = writeln!(summary, "uncertified_rows = {uncertified}");
    for (&n, &m) in n_list.iter().zip(&medians) {
        let _ = writeln!(summary, "median_hellinger[{n}] = {}", format_f64(m));
    }
    let _ = writeln!(summary, "median_decreasing = {decreasing}");
    if n_list.len() >= 2 {
        let (slope, intercept, se) = ols(&xs, &ys);
        let _ = writeln!(summary, "slope = {}", format_f64(slope));
        let _ = writeln!(summary, "slope_se = {}", format_f64(se));
        let _ = writeln!(summary, "intercept = {}", format_f64(intercept));
    }
    std::fs::write(out.join("slope.txt"), &summary)?;
    print!("{summary}");
    Ok(uncertified == 0)
}
