//! End-to-end command tests: file round trips, byte determinism, exit
//! codes and output formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smu_core::io;
use smu_core::{MixingMeasure, Point};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smu"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tmp("cli_sim");
    for sub in ["a", "b"] {
        let status = bin()
            .args(["simulate", "--truth", "exp", "--dim", "2", "--n", "50", "--seed", "7", "--out"])
            .arg(dir.join(sub))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.join("a/dataset.csv")).unwrap();
    let b = std::fs::read(dir.join("b/dataset.csv")).unwrap();
    assert_eq!(a, b, "datasets differ across identical runs");
    let ma = std::fs::read(dir.join("a/dataset.meta")).unwrap();
    let mb = std::fs::read(dir.join("b/dataset.meta")).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(
        std::fs::read_to_string(dir.join("a/dataset.csv")).unwrap().lines().next(),
        Some("x1,x2")
    );
}

#[test]
fn simulate_discrete_truth_respects_support() {
    let dir = tmp("cli_sim_disc");
    let mixing = MixingMeasure::point_mass(Point::from_slice(&[2.0, 2.0]));
    io::write_mixing(&dir.join("truth.csv"), &mixing).unwrap();
    let status = bin()
        .args(["simulate", "--truth"])
        .arg(format!("file:{}", dir.join("truth.csv").display()))
        .args(["--n", "200", "--seed", "3", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let data = io::read_dataset(&dir.join("dataset.csv")).unwrap();
    assert_eq!(data.len(), 200);
    for p in data {
        assert!(p.get(0) > 0.0 && p.get(0) <= 2.0);
        assert!(p.get(1) > 0.0 && p.get(1) <= 2.0);
    }
}

#[test]
fn fit_then_certify_round_trip() {
    let dir = tmp("cli_fit");
    assert!(bin()
        .args(["simulate", "--truth", "exp", "--dim", "2", "--n", "40", "--seed", "5", "--out"])
        .arg(&dir)
        .status()
        .unwrap()
        .success());
    assert!(bin()
        .args(["fit", "--data"])
        .arg(dir.join("dataset.csv"))
        .arg("--out")
        .arg(dir.join("fit"))
        .status()
        .unwrap()
        .success());
    let output = bin()
        .args(["certify", "--data"])
        .arg(dir.join("dataset.csv"))
        .arg("--mixing")
        .arg(dir.join("fit/mixing.csv"))
        .output()
        .unwrap();
    assert!(output.status.success(), "certify rejected a fresh fit");
    assert!(stdout_of(&output).contains("pass = true"));
}

#[test]
fn certify_rejects_tampering_with_exit_code() {
    let dir = tmp("cli_tamper");
    assert!(bin()
        .args(["simulate", "--truth", "exp", "--dim", "2", "--n", "30", "--seed", "8", "--out"])
        .arg(&dir)
        .status()
        .unwrap()
        .success());
    assert!(bin()
        .args(["fit", "--data"])
        .arg(dir.join("dataset.csv"))
        .arg("--out")
        .arg(dir.join("fit"))
        .status()
        .unwrap()
        .success());
    let mixing = io::read_mixing(&dir.join("fit/mixing.csv")).unwrap();
    let mut weights = mixing.weights().to_vec();
    weights[0] += 0.05;
    let tampered = MixingMeasure::new(mixing.atoms().to_vec(), weights).unwrap();
    io::write_mixing(&dir.join("tampered.csv"), &tampered).unwrap();
    let output = bin()
        .args(["certify", "--data"])
        .arg(dir.join("dataset.csv"))
        .arg("--mixing")
        .arg(dir.join("tampered.csv"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "tampered mixing must fail");
    assert!(stdout_of(&output).contains("pass = false"));
}

#[test]
fn fit_d1_reports_oracle_agreement() {
    let dir = tmp("cli_d1");
    assert!(bin()
        .args(["simulate", "--truth", "exp", "--dim", "1", "--n", "60", "--seed", "2", "--out"])
        .arg(&dir)
        .status()
        .unwrap()
        .success());
    let output = bin()
        .args(["fit", "--data"])
        .arg(dir.join("dataset.csv"))
        .arg("--out")
        .arg(dir.join("fit"))
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout_of(&output).contains("oracle_agree = true"));
}

#[test]
fn eval_reports_density_cdf_and_bound() {
    let dir = tmp("cli_eval");
    let mixing = MixingMeasure::new(
        vec![Point::from_slice(&[1.0, 3.0]), Point::from_slice(&[3.0, 2.0])],
        vec![0.5, 0.5],
    )
    .unwrap();
    io::write_mixing(&dir.join("mixing.csv"), &mixing).unwrap();
    io::write_dataset(
        &dir.join("probes.csv"),
        &[Point::from_slice(&[1.0, 3.0]), Point::from_slice(&[3.0, 2.0])],
    )
    .unwrap();
    let output = bin()
        .args(["eval", "--mixing"])
        .arg(dir.join("mixing.csv"))
        .arg("--probes")
        .arg(dir.join("probes.csv"))
        .arg("--out")
        .arg(dir.join("values.csv"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = std::fs::read_to_string(dir.join("values.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,density,cdf,density_times_volume"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|t| t.parse().unwrap()).collect();
    assert!((first[2] - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn dist_exact_and_mc_agree() {
    let dir = tmp("cli_dist");
    let f = MixingMeasure::point_mass(Point::from_slice(&[1.0]));
    let g = MixingMeasure::point_mass(Point::from_slice(&[2.0]));
    io::write_mixing(&dir.join("f.csv"), &f).unwrap();
    io::write_mixing(&dir.join("g.csv"), &g).unwrap();
    let exact = bin()
        .args(["dist", "--mixing"])
        .arg(dir.join("f.csv"))
        .arg("--other")
        .arg(dir.join("g.csv"))
        .args(["--metric", "l1"])
        .output()
        .unwrap();
    assert!(exact.status.success());
    let text = stdout_of(&exact);
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("l1 = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 1.0).abs() < 1e-12);

    let mc = bin()
        .args(["dist", "--mixing"])
        .arg(dir.join("f.csv"))
        .arg("--other")
        .arg(dir.join("g.csv"))
        .args(["--metric", "l1", "--mc", "--n-mc", "20000", "--seed", "4"])
        .output()
        .unwrap();
    assert!(mc.status.success());
    assert!(stdout_of(&mc).contains("l1 = "));
}

#[test]
fn minimax_reports_all_checks() {
    let output = bin()
        .args(["minimax", "--dim", "1", "--theta", "0.5", "--n", "64", "--n-list", "64,128,256"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout_of(&output);
    for key in [
        "mml1_pass = true",
        "mml2_verdict = derived",
        "membership_threshold_n1 = ",
        "lower_bound_constant = ",
        "n_h2_verdict = ",
    ] {
        assert!(text.contains(key), "missing {key:?} in:\n{text}");
    }
}

#[test]
fn sweep_rows_reproduce_under_rep_extension() {
    let dir = tmp("cli_sweep");
    for (sub, reps) in [("r2", "2"), ("r4", "4")] {
        assert!(bin()
            .args(["sweep", "--truth", "exp", "--dim", "1", "--n", "20,40", "--reps", reps,
                   "--seed", "9", "--out"])
            .arg(dir.join(sub))
            .status()
            .unwrap()
            .success());
    }
    let strip_wall = |text: &str| -> Vec<String> {
        text.lines()
            .skip(1)
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let short = strip_wall(&std::fs::read_to_string(dir.join("r2/sweep.csv")).unwrap());
    let long = strip_wall(&std::fs::read_to_string(dir.join("r4/sweep.csv")).unwrap());
    assert_eq!(
        std::fs::read_to_string(dir.join("r2/sweep.csv")).unwrap().lines().next(),
        Some("n,rep,hellinger,l1,ptwise_err,iters,cert_gap,certified,wall_ms")
    );
    // reps 0 and 1 of each n appear identically in the longer run
    for n_idx in 0..2 {
        for rep in 0..2 {
            let in_short = &short[n_idx * 2 + rep];
            let in_long = &long[n_idx * 4 + rep];
            assert_eq!(in_short, in_long, "row (n index {n_idx}, rep {rep}) not reproduced");
        }
    }
}
