//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured quantities. Run with `cargo test --test acceptance`
//! (use `-- --nocapture` to see the lines for passing criteria too).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use smu_core::io;
use smu_core::quad::QuadOptions;
use smu_core::rng::Stream;
use smu_core::{
    check_mml1, check_mml2, fit, g_volume, grenander_1d, hellinger, is_smu, l1_distance,
    lower_bound_constant, weights_from_density, FitOptions, Grid, GriddedDensity, Membership,
    MixingMeasure, Mml2Verdict, PerturbationSpec, Point, Rect, SmuDensity, TruthModel,
    hellinger_limit_sequence,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smu"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn pass(k: u32, name: &str, details: &str) {
    println!("ACCEPTANCE {k} [{name}]: PASS ({details})");
}

fn read_kv(path: &Path) -> Vec<(String, String)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|line| {
            line.split_once(" = ")
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn kv(pairs: &[(String, String)], key: &str) -> String {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("missing key {key}"))
        .1
        .clone()
}

#[test]
fn criterion_01_two_point_example_reproduction() {
    let dir = tmp("c1");
    let data = vec![Point::from_slice(&[1.0, 3.0]), Point::from_slice(&[3.0, 2.0])];
    io::write_dataset(&dir.join("dataset.csv"), &data).unwrap();

    let start = Instant::now();
    let status = bin()
        .args(["fit", "--data"])
        .arg(dir.join("dataset.csv"))
        .arg("--out")
        .arg(dir.join("fit"))
        .status()
        .unwrap();
    let elapsed = start.elapsed();
    assert!(status.success(), "cmd_fit exited nonzero");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");

    let fitted: Vec<f64> = std::fs::read_to_string(dir.join("fit/fitted.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    assert!((fitted[0] - 1.0 / 6.0).abs() <= 1e-9);
    assert!((fitted[1] - 1.0 / 12.0).abs() <= 1e-9);

    let summary = read_kv(&dir.join("fit/summary.txt"));
    let gap: f64 = kv(&summary, "max_ineq_gap").parse().unwrap();
    assert!(gap <= 1e-8, "certificate gap {gap}");

    let mixing = io::read_mixing(&dir.join("fit/mixing.csv")).unwrap();
    let allowed = [
        Point::from_slice(&[1.0, 3.0]),
        Point::from_slice(&[3.0, 2.0]),
        Point::from_slice(&[3.0, 3.0]),
    ];
    for atom in mixing.atoms() {
        assert!(allowed.contains(atom), "atom {atom:?} outside the allowed support");
    }
    pass(
        1,
        "two-point example reproduction",
        &format!("fitted ({:.9}, {:.9}), gap {gap:.2e}, {elapsed:?}", fitted[0], fitted[1]),
    );
}

#[test]
fn criterion_02_triangle_counterexample() {
    let triangle = |p: &Point| if p.get(0) + p.get(1) <= 1.0 { 2.0 } else { 0.0 };
    let rect = Rect::half_open(
        Point::from_slice(&[0.125, 0.125]),
        Point::from_slice(&[0.5, 0.75]),
    )
    .unwrap();
    let volume = g_volume(triangle, &rect).unwrap();
    assert_eq!(volume, -2.0, "g-volume must equal -2 exactly");

    let grid = Grid::from_coords(vec![vec![0.125, 0.5], vec![0.125, 0.75]]).unwrap();
    let gridded = GriddedDensity::from_fn(grid, triangle).unwrap();
    match is_smu(&gridded) {
        Membership::Rejected { witness, .. } => {
            assert_eq!(witness.lower().coords(), &[0.125, 0.125]);
            assert_eq!(witness.upper().coords(), &[0.5, 0.75]);
        }
        Membership::Accepted => panic!("triangle density accepted as SMU"),
    }
    pass(2, "triangle counterexample", "g-volume -2 exact, witness [(1/8,1/8),(1/2,3/4))");
}

#[test]
fn criterion_03_d1_oracle_equivalence() {
    let start = Instant::now();
    let truth = TruthModel::ExpProduct { dim: 1 };
    let mut worst = 0.0f64;
    let mut fits = 0u32;
    for n in [10usize, 50, 200] {
        for seed in 0..50u64 {
            let data = truth.sample(n, 0xC3 + seed * 31).unwrap();
            let result = fit(&data, &FitOptions::default()).unwrap();
            assert!(result.certified());
            let raw: Vec<f64> = data.iter().map(|p| p.get(0)).collect();
            let oracle = grenander_1d(&raw).unwrap();
            for (a, b) in result.fitted.iter().zip(&oracle) {
                worst = worst.max((a - b).abs());
            }
            fits += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-8, "worst elementwise difference {worst}");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
    pass(
        3,
        "d=1 oracle equivalence",
        &format!("{fits} fits, worst diff {worst:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_04_inversion_round_trip() {
    let mut stream = Stream::new(0xC4);
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let dim = 1 + trial % 3;
        let m = 1 + (stream.next_u64() as usize) % 20;
        let atoms: Vec<Point> = (0..m)
            .map(|_| {
                Point::new((0..dim).map(|_| 0.05 + stream.uniform_in(5.0)).collect()).unwrap()
            })
            .collect();
        let weights: Vec<f64> = (0..m).map(|_| stream.exponential()).collect();
        let mixing = MixingMeasure::new(atoms, weights).unwrap();
        let density = SmuDensity::new(mixing.clone());
        let grid = Grid::from_data(mixing.atoms()).unwrap();
        let recovered = weights_from_density(&grid, &density.densities_on_grid(&grid)).unwrap();
        assert_eq!(recovered.atoms(), mixing.atoms(), "atom sets differ (trial {trial})");
        for (a, b) in recovered.weights().iter().zip(mixing.weights()) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 1e-10, "worst weight error {worst}");
    pass(4, "inversion round trip", &format!("200 measures, worst weight error {worst:.2e}"));
}

#[test]
fn criterion_05_certificate_soundness() {
    let mut stream = Stream::new(0xC5);
    let mut worst_excess = f64::NEG_INFINITY;
    for trial in 0..20u64 {
        let dim = 1 + (trial % 2) as usize;
        let truth = TruthModel::ExpProduct { dim };
        let data = truth.sample(30, 500 + trial).unwrap();
        let result = fit(&data, &FitOptions::default()).unwrap();
        assert!(result.certified(), "fit {trial} uncertified");
        let atoms = result.mixing.atoms().to_vec();
        for _ in 0..200 {
            let raw: Vec<f64> = (0..atoms.len()).map(|_| stream.exponential()).collect();
            let rival = SmuDensity::new(MixingMeasure::new(atoms.clone(), raw).unwrap());
            let rival_ll: f64 = data.iter().map(|x| rival.density(x).ln()).sum();
            worst_excess = worst_excess.max(rival_ll - result.loglik);
        }
    }
    assert!(worst_excess <= 1e-6, "a reweighting won by {worst_excess}");
    pass(
        5,
        "certificate soundness",
        &format!("20 fits x 200 reweightings, worst excess {worst_excess:.2e}"),
    );
}

fn mml_specs() -> Vec<PerturbationSpec> {
    let mut specs = Vec::new();
    for dim in 1..=3usize {
        let x0s: [Vec<f64>; 3] = [
            vec![1.0; dim],
            (0..dim).map(|i| 0.8 + 0.3 * i as f64).collect(),
            vec![2.0; dim],
        ];
        let hs: [Vec<f64>; 3] = [
            vec![0.5; dim],
            (0..dim).map(|i| 0.4 + 0.2 * i as f64).collect(),
            vec![1.0; dim],
        ];
        for ((x0, h), (theta, n)) in x0s
            .into_iter()
            .zip(hs)
            .zip([(0.5, 64u64), (0.25, 256), (0.75, 1024)])
        {
            specs.push(
                PerturbationSpec::exp_default(Point::new(x0).unwrap(), h, theta, n).unwrap(),
            );
        }
    }
    specs
}

#[test]
fn criterion_06_mml1_verification() {
    let opts = QuadOptions::default();
    let mut worst = 0.0f64;
    let specs = mml_specs();
    for spec in &specs {
        let report = check_mml1(spec, opts);
        assert!(
            report.rel_err <= 1e-6,
            "d={} rel err {}",
            spec.dim(),
            report.rel_err
        );
        worst = worst.max(report.rel_err);
    }
    pass(
        6,
        "mml1 verification",
        &format!("{} specs over d in 1..3, worst rel err {worst:.2e}", specs.len()),
    );
}

#[test]
fn criterion_07_mml2_adjudication() {
    let opts = QuadOptions::default();
    let mut worst = 0.0f64;
    let specs = mml_specs();
    for spec in &specs {
        let report = check_mml2(spec, 1e-6, opts);
        assert!(
            report.rel_err_derived <= 1e-6,
            "d={}: quadrature {} vs derived {}",
            spec.dim(),
            report.quadrature,
            report.derived_value
        );
        assert_eq!(report.verdict, Mml2Verdict::MatchesDerived);
        // the printed constant is carried alongside and sits 4^d higher
        let ratio = report.printed_value / report.derived_value;
        assert!((ratio - 4.0f64.powi(spec.dim() as i32)).abs() < 1e-12);
        worst = worst.max(report.rel_err_derived);
    }
    pass(
        7,
        "mml2 adjudication",
        &format!(
            "{} specs: quadrature matches (2/3)^d within {worst:.2e}; printed (8/3)^d recorded, 4^d higher",
            specs.len()
        ),
    );
}

#[test]
fn criterion_08_normalizer_and_limit() {
    // d_n reproduces the closed form exactly by construction
    for spec in mml_specs() {
        let d = spec.dim();
        let h2: f64 = spec.bandwidths().iter().map(|h| h * h).product();
        let signed_b = if d % 2 == 0 { spec.mixed_derivative() } else { -spec.mixed_derivative() };
        let expected = 1.0 + spec.theta() * signed_b * h2 * (spec.n() as f64).powf(-2.0 / 3.0);
        assert_eq!(spec.normalizer(), expected);
    }
    // and agrees with 1 + theta * quadrature(int g_n)
    let opts = QuadOptions::default();
    for spec in mml_specs().into_iter().take(3) {
        let quad = check_mml1(&spec, opts).quadrature;
        let dn = spec.normalizer();
        assert!((dn - (1.0 + spec.theta() * quad)).abs() <= 1e-9);
    }

    // the scaled Hellinger sequence stabilizes for d in {1, 2}
    for dim in 1..=2usize {
        let spec = PerturbationSpec::exp_default(
            Point::new(vec![1.0; dim]).unwrap(),
            vec![0.5; dim],
            0.5,
            1,
        )
        .unwrap();
        let ns: Vec<u64> = (8..=17).map(|k| 1u64 << k).collect();
        let seq_opts = QuadOptions { rel_tol: 1e-6, ..QuadOptions::default() };
        let report = hellinger_limit_sequence(&spec, &ns, seq_opts).unwrap();
        assert!(
            report.final_rel_change < 0.05,
            "d={dim}: change over the last doubling {}",
            report.final_rel_change
        );
        assert_eq!(report.verdict, Mml2Verdict::MatchesDerived, "d={dim}");
        println!(
            "    criterion 8 detail: d={dim} stabilized {:.6e}, derived {:.6e} (rel {:.2e}), printed {:.6e} (rel {:.2e}) -> verdict derived",
            report.stabilized,
            report.derived_limit,
            report.rel_err_derived,
            report.printed_limit,
            report.rel_err_printed
        );
    }
    pass(8, "normalizer and limit", "d_n exact; n h^2 stabilizes (<5%) for d=1,2; verdict: derived constant");
}

#[test]
fn criterion_09_lower_bound_constant() {
    let c = lower_bound_constant(1.0, -1.0, 1).unwrap();
    let expected = (-1.0f64 / 3.0).exp() / 2.0;
    assert!((c - expected).abs() <= 1e-12);
    pass(9, "lower-bound constant", &format!("c = {c:.15} vs e^(-1/3)/2 = {expected:.15}"));
}

#[test]
fn criterion_10_empirical_consistency() {
    let dir = tmp("c10");
    let start = Instant::now();
    let status = bin()
        .args([
            "sweep", "--truth", "exp", "--dim", "2", "--n", "50,100,200,400,800", "--reps", "20",
            "--seed", "11", "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    let elapsed = start.elapsed();
    assert!(status.success(), "sweep exited nonzero (uncertified rows?)");
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}, budget 10 min");

    let summary = read_kv(&dir.join("slope.txt"));
    assert_eq!(kv(&summary, "median_decreasing"), "true");
    let slope: f64 = kv(&summary, "slope").parse().unwrap();
    assert!(
        (-0.55..=-0.15).contains(&slope),
        "log-log slope {slope} outside [-0.55, -0.15]"
    );
    pass(
        10,
        "empirical consistency",
        &format!("medians strictly decreasing, slope {slope:.3}, {elapsed:?}"),
    );
}

#[test]
fn criterion_11_invariance_suite() {
    // pointwise bound on every grid point of a few fits
    let truth = TruthModel::ExpProduct { dim: 2 };
    for seed in 0..4 {
        let data = truth.sample(30, 0xC11 + seed).unwrap();
        let result = fit(&data, &FitOptions::default()).unwrap();
        let density = SmuDensity::new(result.mixing.clone());
        let grid = Grid::from_data(&data).unwrap();
        for p in grid.iter_points() {
            assert!(
                density.density(&p) * p.volume() <= 1.0 + 1e-12,
                "pointwise bound violated at {p:?}"
            );
        }
    }

    // scale equivariance of the fitted values
    let data = truth.sample(30, 0xC11F).unwrap();
    let base = fit(&data, &FitOptions::default()).unwrap();
    let c = [3.0f64, 0.25];
    let scaled: Vec<Point> = data
        .iter()
        .map(|p| Point::from_slice(&[p.get(0) * c[0], p.get(1) * c[1]]))
        .collect();
    let scaled_fit = fit(&scaled, &FitOptions::default()).unwrap();
    for (a, b) in base.fitted.iter().zip(&scaled_fit.fitted) {
        assert!((a / (c[0] * c[1]) - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    // permutation equivariance
    let flipped: Vec<Point> = data
        .iter()
        .map(|p| Point::from_slice(&[p.get(1), p.get(0)]))
        .collect();
    let flipped_fit = fit(&flipped, &FitOptions::default()).unwrap();
    for (a, b) in base.fitted.iter().zip(&flipped_fit.fitted) {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    // Le Cam chain on 500 random pairs
    let mut stream = Stream::new(0xC11C);
    for _ in 0..500 {
        let dim = 1 + (stream.next_u64() as usize) % 3;
        let draw = |stream: &mut Stream| {
            let m = 1 + (stream.next_u64() as usize) % 8;
            let atoms: Vec<Point> = (0..m)
                .map(|_| {
                    Point::new((0..dim).map(|_| 0.05 + stream.uniform_in(4.0)).collect()).unwrap()
                })
                .collect();
            let weights: Vec<f64> = (0..m).map(|_| stream.exponential()).collect();
            SmuDensity::new(MixingMeasure::new(atoms, weights).unwrap())
        };
        let f = draw(&mut stream);
        let g = draw(&mut stream);
        let h = hellinger(&f, &g).unwrap();
        let l1 = l1_distance(&f, &g).unwrap();
        assert!(h * h <= 0.5 * l1 + 1e-12);
        assert!(0.5 * l1 <= h * (2.0 - h * h).sqrt() + 1e-12);
    }
    pass(
        11,
        "invariance suite",
        "pointwise bound on grid probes, scale/permutation equivariance at 1e-9, Le Cam chain x500",
    );
}
