//! Implementations of the single-shot subcommands.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use smu_core::io::{self, format_f64};
use smu_core::quad::QuadOptions;
use smu_core::{
    check_mml1, check_mml2, grenander_1d, hellinger, hellinger_limit_sequence,
    hellinger_vs_exp_truth, l1_distance, lower_bound_constant, mc_distance, membership_scan,
    membership_threshold, Error, FitOptions, Membership, Metric, Mml2Verdict, PerturbationSpec,
    Point, SmuDensity, TruthModel,
};

/// Parse `exp` / `file:PATH` into a truth model.
pub fn parse_truth(spec: &str, dim: Option<usize>) -> Result<TruthModel> {
    if spec == "exp" {
        let dim = dim.context("--dim is required for the exp truth")?;
        if dim == 0 || dim > 4 {
            bail!("dimension must be between 1 and 4, got {dim}");
        }
        Ok(TruthModel::ExpProduct { dim })
    } else if let Some(path) = spec.strip_prefix("file:") {
        let mixing = io::read_mixing(Path::new(path))
            .with_context(|| format!("reading truth mixing file {path}"))?;
        if let Some(d) = dim {
            if d != mixing.dim() {
                bail!("--dim {d} contradicts the {}-dimensional truth file", mixing.dim());
            }
        }
        Ok(TruthModel::Discrete(mixing))
    } else {
        bail!("truth must be `exp` or `file:PATH`, got {spec:?}")
    }
}

pub fn simulate(truth: &str, dim: Option<usize>, n: usize, seed: u64, out: &Path) -> Result<bool> {
    let model = parse_truth(truth, dim)?;
    let data = model.sample(n, seed)?;
    std::fs::create_dir_all(out)?;
    io::write_dataset(&out.join("dataset.csv"), &data)?;
    let mut meta = String::new();
    let _ = writeln!(meta, "command = simulate");
    let _ = writeln!(meta, "truth = {}", model.describe());
    let _ = writeln!(meta, "dim = {}", model.dim());
    let _ = writeln!(meta, "n = {n}");
    let _ = writeln!(meta, "seed = {seed}");
    let _ = writeln!(meta, "format = csv, header x1..xd, 17 significant digits");
    std::fs::write(out.join("dataset.meta"), meta)?;
    println!(
        "wrote {} rows from {} (seed {seed}) to {}",
        n,
        model.describe(),
        out.join("dataset.csv").display()
    );
    Ok(true)
}

pub fn fit(data_path: &Path, tol: f64, max_iter: u64, out: &Path) -> Result<bool> {
    let data = io::read_dataset(data_path)
        .with_context(|| format!("reading dataset {}", data_path.display()))?;
    let opts = FitOptions { tol, max_iter, ..FitOptions::default() };
    let result = smu_core::fit(&data, &opts)?;
    std::fs::create_dir_all(out)?;
    io::write_mixing(&out.join("mixing.csv"), &result.mixing)?;

    let mut fitted_csv = String::from("f\n");
    for v in &result.fitted {
        fitted_csv.push_str(&format_f64(*v));
        fitted_csv.push('\n');
    }
    std::fs::write(out.join("fitted.csv"), fitted_csv)?;

    let dim = result.mixing.dim();
    let mut summary = String::new();
    let _ = writeln!(summary, "command = fit");
    let _ = writeln!(summary, "dim = {dim}");
    let _ = writeln!(summary, "n = {}", data.len());
    let _ = writeln!(summary, "loglik = {}", format_f64(result.loglik));
    let _ = writeln!(summary, "iterations = {}", result.iterations);
    let _ = writeln!(summary, "atoms = {}", result.mixing.len());
    let _ = writeln!(summary, "tol = {}", format_f64(tol));
    let _ = writeln!(summary, "certified = {}", result.certified());
    let _ = writeln!(summary, "max_ineq_gap = {}", format_f64(result.certificate.max_ineq_gap));
    let _ = writeln!(summary, "offgrid_gap = {}", format_f64(result.certificate.offgrid_gap));
    let _ = writeln!(
        summary,
        "worst_atom_gap = {}",
        format_f64(result.certificate.worst_atom_gap())
    );
    if dim == 1 {
        let raw: Vec<f64> = data.iter().map(|p| p.get(0)).collect();
        let oracle = grenander_1d(&raw)?;
        let max_diff = result
            .fitted
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let _ = writeln!(summary, "oracle_agree = {}", max_diff <= 1e-8);
        let _ = writeln!(summary, "oracle_max_diff = {}", format_f64(max_diff));
    }
    std::fs::write(out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(result.certified())
}

pub fn certify(data_path: &Path, mixing_path: &Path, tol: f64) -> Result<bool> {
    let data = io::read_dataset(data_path)?;
    let mixing = io::read_mixing(mixing_path)?;
    match smu_core::certify(&mixing, &data, tol) {
        Ok(cert) => {
            println!("max_ineq_gap = {}", format_f64(cert.max_ineq_gap));
            println!("offgrid_gap = {}", format_f64(cert.offgrid_gap));
            println!("worst_atom_gap = {}", format_f64(cert.worst_atom_gap()));
            println!("tol = {}", format_f64(tol));
            println!("pass = {}", cert.passes());
            Ok(cert.passes())
        }
        Err(Error::UncoveredDataPoint { index }) => {
            println!("pass = false");
            println!("failure = mixing density is zero at data row {}", index + 1);
            Ok(false)
        }
        Err(other) => Err(other.into()),
    }
}

pub fn eval(mixing_path: &Path, probes_path: &Path, out: Option<&Path>) -> Result<bool> {
    let mixing = io::read_mixing(mixing_path)?;
    let probes = io::read_dataset(probes_path)?;
    let density = SmuDensity::new(mixing);
    let d = density.dim();
    let mut csv = String::new();
    for j in 0..d {
        let _ = write!(csv, "x{},", j + 1);
    }
    csv.push_str("density,cdf,density_times_volume\n");
    let mut sup = 0.0f64;
    for p in &probes {
        if p.dim() != d {
            bail!("probe dimension {} does not match the mixing dimension {d}", p.dim());
        }
        let f = density.density(p);
        let ratio = f * p.volume();
        sup = sup.max(ratio);
        for j in 0..d {
            let _ = write!(csv, "{},", format_f64(p.get(j)));
        }
        let _ = writeln!(
            csv,
            "{},{},{}",
            format_f64(f),
            format_f64(density.cdf(p)),
            format_f64(ratio)
        );
    }
    match out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    println!("sup_density_times_volume = {}", format_f64(sup));
    Ok(sup <= 1.0 + 1e-12)
}

pub fn dist(
    mixing_path: &Path,
    other: Option<&Path>,
    truth: Option<&str>,
    metric: &str,
    mc: bool,
    n_mc: u64,
    seed: u64,
) -> Result<bool> {
    let f = SmuDensity::new(io::read_mixing(mixing_path)?);
    let want_l1 = metric == "l1" || metric == "both";
    let want_h = metric == "hellinger" || metric == "both";
    if !(want_l1 || want_h) {
        bail!("unknown metric {metric:?}; use l1, hellinger or both");
    }
    match (other, truth) {
        (Some(other_path), None) => {
            let g = SmuDensity::new(io::read_mixing(other_path)?);
            if mc {
                if want_l1 {
                    let est = mc_distance(&f, &g, Metric::L1, n_mc, seed)?;
                    println!("l1 = {} +- {}", format_f64(est.value), format_f64(est.std_error));
                }
                if want_h {
                    let est = mc_distance(&f, &g, Metric::Hellinger, n_mc, seed)?;
                    println!(
                        "hellinger = {} +- {}",
                        format_f64(est.value),
                        format_f64(est.std_error)
                    );
                }
            } else {
                let overflow_hint = |e: Error| -> anyhow::Error {
                    if matches!(e, Error::CellOverflow { .. }) {
                        anyhow::anyhow!("{e}; re-run with --mc")
                    } else {
                        e.into()
                    }
                };
                if want_l1 {
                    println!(
                        "l1 = {}",
                        format_f64(l1_distance(&f, &g).map_err(overflow_hint)?)
                    );
                }
                if want_h {
                    println!(
                        "hellinger = {}",
                        format_f64(hellinger(&f, &g).map_err(overflow_hint)?)
                    );
                }
            }
        }
        (None, Some("exp")) => {
            if want_l1 {
                bail!("no exact L1 path against the exp truth; use hellinger");
            }
            println!("hellinger = {}", format_f64(hellinger_vs_exp_truth(&f)));
        }
        (None, Some(other)) => bail!("unsupported truth {other:?}; only `exp` here"),
        (None, None) => bail!("provide --other PATH or --truth exp"),
        (Some(_), Some(_)) => bail!("--other and --truth are mutually exclusive"),
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
pub fn minimax(
    dim: usize,
    x0: Option<Vec<f64>>,
    h: Option<Vec<f64>>,
    theta: f64,
    n: u64,
    n_list: Option<Vec<u64>>,
    quad_tol: f64,
    resolution: usize,
) -> Result<bool> {
    if dim == 0 || dim > 4 {
        bail!("dimension must be between 1 and 4, got {dim}");
    }
    let x0 = Point::new(x0.unwrap_or_else(|| vec![1.0; dim]))?;
    let h = h.unwrap_or_else(|| vec![0.5; dim]);
    let spec = PerturbationSpec::exp_default(x0.clone(), h, theta, n)?;
    let opts = QuadOptions::default();
    let mut all_ok = true;

    let r1 = check_mml1(&spec, opts);
    let mml1_ok = r1.rel_err <= quad_tol;
    all_ok &= mml1_ok;
    println!("mml1_quadrature = {}", format_f64(r1.quadrature));
    println!("mml1_formula = {}", format_f64(r1.formula));
    println!("mml1_rel_err = {}", format_f64(r1.rel_err));
    println!("mml1_pass = {mml1_ok}");

    let r2 = check_mml2(&spec, quad_tol, opts);
    println!("mml2_quadrature = {}", format_f64(r2.quadrature));
    println!("mml2_printed_constant = {}", format_f64(r2.printed_value));
    println!("mml2_derived_constant = {}", format_f64(r2.derived_value));
    println!("mml2_rel_err_printed = {}", format_f64(r2.rel_err_printed));
    println!("mml2_rel_err_derived = {}", format_f64(r2.rel_err_derived));
    let verdict = match r2.verdict {
        Mml2Verdict::MatchesDerived => "derived",
        Mml2Verdict::MatchesPrinted => "printed",
        Mml2Verdict::Neither => "neither",
    };
    println!("mml2_verdict = {verdict}");
    all_ok &= r2.verdict != Mml2Verdict::Neither;

    println!("normalizer = {}", format_f64(spec.normalizer()));

    let ns = n_list.unwrap_or_else(|| (0..7).map(|k| n << k).collect());
    let report = hellinger_limit_sequence(&spec, &ns, opts)?;
    for (nk, value) in &report.entries {
        println!("n_h2[{nk}] = {}", format_f64(*value));
    }
    println!("n_h2_final_rel_change = {}", format_f64(report.final_rel_change));
    println!("n_h2_derived_limit = {}", format_f64(report.derived_limit));
    println!("n_h2_printed_limit = {}", format_f64(report.printed_limit));
    println!("n_h2_rel_err_derived = {}", format_f64(report.rel_err_derived));
    println!("n_h2_rel_err_printed = {}", format_f64(report.rel_err_printed));
    let closer = match report.verdict {
        Mml2Verdict::MatchesDerived => "derived",
        Mml2Verdict::MatchesPrinted => "printed",
        Mml2Verdict::Neither => "neither",
    };
    println!("n_h2_verdict = {closer}");

    match membership_scan(&spec, resolution)? {
        Membership::Accepted => println!("membership[n={n}] = accepted"),
        Membership::Rejected { witness, volume } => {
            println!(
                "membership[n={n}] = rejected, witness [{:?}, {:?}) volume {}",
                witness.lower().coords(),
                witness.upper().coords(),
                format_f64(volume)
            );
        }
    }
    let n1 = membership_threshold(&spec, resolution, 1 << 40)?;
    println!("membership_threshold_n1 = {n1}");

    let f0 = spec.base().density(&x0);
    let constant = lower_bound_constant(f0, spec.mixed_derivative(), dim)?;
    println!("lower_bound_constant = {}", format_f64(constant));

    Ok(all_ok)
}
