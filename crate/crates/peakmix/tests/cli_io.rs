//! End-to-end runs of the command-line driver against file fixtures.

mod support;

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_peakmix")
}

struct Fixture {
    dir: PathBuf,
}

impl Fixture {
    fn new(name: &str) -> Fixture {
        let dir = std::env::temp_dir().join(format!("peakmix-cli-{}-{name}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Fixture { dir }
    }

    fn write(&self, name: &str, content: &str) -> PathBuf {
        let path = self.dir.join(name);
        std::fs::write(&path, content).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

const FREQ: &str = "\
marker,allele,frequency
D2,16,0.1
D2,17,0.2
D2,23,0.3
D2,24,0.4
VWA,14,0.3
VWA,15,0.3
VWA,16,0.4
";

const PEAKS: &str = "\
trace,marker,allele,height
T1,D2,16,64
T1,D2,17,96
T1,D2,23,507
T1,D2,24,524
T1,VWA,14,300
T1,VWA,15,250
";

const PROFILES: &str = "\
individual,marker,allele,count
K1,D2,23,1
K1,D2,24,1
K1,VWA,14,1
K1,VWA,15,1
K2,D2,24,2
K2,VWA,14,1
K2,VWA,16,1
K3,D2,16,1
K3,D2,17,1
K3,VWA,15,1
K3,VWA,16,1
";

const CASE: &str = "\
[trace T1]
threshold = 50

[hypothesis Hp]
contributors = K1, K2, K3

[hypothesis Hd]
contributors = K1, K2, U:u

[params Hp T1]
rho = 15
xi = 0.08
eta = 30
phi = K1:0.7, K2:0.2, K3:0.1

[params Hd T1]
rho = 15
xi = 0.08
eta = 30
phi = K1:0.7, K2:0.2, u:0.1

[optimizer]
seed = 17
restarts = 1
max-iter = 300
";

fn standard_fixture(name: &str) -> Fixture {
    let fx = Fixture::new(name);
    fx.write("freq.csv", FREQ);
    fx.write("peaks.csv", PEAKS);
    fx.write("profiles.csv", PROFILES);
    fx.write("case.cfg", CASE);
    fx
}

fn run(fx: &Fixture, args: &[&str]) -> (i32, String, String) {
    let output = Command::new(binary())
        .current_dir(&fx.dir)
        .args(args)
        .output()
        .expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn case_args(out: &str) -> Vec<&str> {
    vec![
        "--freq",
        "freq.csv",
        "--case",
        "case.cfg",
        "--peaks",
        "peaks.csv",
        "--profiles",
        "profiles.csv",
        "--out",
        out,
    ]
}

fn report_json(fx: &Fixture, out: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(fx.path(out).join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn loglik_matches_hand_computation_for_known_only_case() {
    let fx = standard_fixture("loglik");
    let mut args = vec!["loglik", "--hyp", "Hp"];
    args.extend(case_args("out"));
    let (code, stdout, stderr) = run(&fx, &args);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("log10 L(Hp)"));
    let report = report_json(&fx, "out");
    let found = report["result"]["total_log10_likelihood"].as_f64().unwrap();
    // Hand computation with the independent gamma routines: fixed genotypes,
    // so each allele contributes a plain factor.
    let (rho, xi, eta, c) = (15.0, 0.08, 30.0, 50.0);
    let phi = [0.7, 0.2, 0.1];
    let mut expected = 0.0f64;
    // Counts per ladder position for (K1, K2, K3):
    // D2 (16,17,23,24) and VWA (14,15,16).
    let d2 = [
        (0.0, 0.0, 1.0),
        (0.0, 0.0, 1.0),
        (1.0, 0.0, 0.0),
        (1.0, 2.0, 0.0),
    ];
    let d2_z = [64.0, 96.0, 507.0, 524.0];
    let vwa = [(1.0, 1.0, 0.0), (1.0, 0.0, 1.0), (0.0, 1.0, 1.0)];
    let vwa_z = [300.0, 250.0, 0.0];
    let factor = |counts: &[(f64, f64, f64)], z: &[f64], a: usize| -> f64 {
        let next = if a + 1 < counts.len() {
            counts[a + 1]
        } else {
            (0.0, 0.0, 0.0)
        };
        let lambda = rho
            * (((1.0 - xi) * counts[a].0 + xi * next.0) * phi[0]
                + ((1.0 - xi) * counts[a].1 + xi * next.1) * phi[1]
                + ((1.0 - xi) * counts[a].2 + xi * next.2) * phi[2]);
        if z[a] == 0.0 {
            if lambda == 0.0 {
                1.0
            } else {
                support::oracle_gamma::cdf(c, lambda, eta)
            }
        } else if lambda == 0.0 {
            0.0
        } else {
            support::oracle_gamma::pdf(z[a], lambda, eta)
        }
    };
    for a in 0..4 {
        expected += factor(&d2, &d2_z, a).ln();
    }
    for a in 0..3 {
        expected += factor(&vwa, &vwa_z, a).ln();
    }
    let expected_log10 = expected / std::f64::consts::LN_10;
    assert!(
        (found - expected_log10).abs() < 1e-8,
        "{found} vs {expected_log10}"
    );
    // The markers side table exists and has one row per marker.
    let csv = std::fs::read_to_string(fx.path("out").join("markers.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn reports_are_deterministic_given_seed() {
    let fx = standard_fixture("determinism");
    for out in ["out_a", "out_b"] {
        let mut args = vec!["mle", "--hyp", "Hd", "--seed", "9"];
        args.extend(case_args(out));
        let (code, _, stderr) = run(&fx, &args);
        assert_eq!(code, 0, "stderr: {stderr}");
    }
    let strip_time = |v: &mut serde_json::Value| {
        v["provenance"]
            .as_object_mut()
            .unwrap()
            .remove("generated_unix_time");
    };
    let mut a = report_json(&fx, "out_a");
    let mut b = report_json(&fx, "out_b");
    strip_time(&mut a);
    strip_time(&mut b);
    assert_eq!(a, b);
    let csv_a = std::fs::read_to_string(fx.path("out_a").join("params.csv")).unwrap();
    let csv_b = std::fs::read_to_string(fx.path("out_b").join("params.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn lr_of_identical_hypotheses_is_zero() {
    let fx = standard_fixture("lr-same");
    let mut args = vec!["lr", "--hp", "Hd", "--hd", "Hd"];
    args.extend(case_args("out"));
    let (code, stdout, stderr) = run(&fx, &args);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("log10 LR = 0.0000"), "stdout: {stdout}");
    let report = report_json(&fx, "out");
    assert_eq!(report["result"]["log10_lr"].as_f64().unwrap(), 0.0);
}

#[test]
fn treesize_prints_expected_values() {
    let fx = Fixture::new("treesize");
    let (code, stdout, _) = run(
        &fx,
        &["treesize", "--method", "slice", "--A", "2", "--k", "1", "--N", "1"],
    );
    assert_eq!(code, 0);
    assert!(stdout.contains("slice,2,1,1,117"), "stdout: {stdout}");
    let (code, stdout, _) = run(
        &fx,
        &["treesize", "--method", "all", "--A", "2", "--k", "1", "--N", "1"],
    );
    assert_eq!(code, 0);
    assert!(stdout.contains("triangle,2,1,1,99"));
    assert!(stdout.contains("optimal,2,1,1,99"));
    assert!(stdout.contains("allele-pair,2,1,1,15"));
    // Ranges and the compressed column.
    let (code, stdout, _) = run(
        &fx,
        &[
            "treesize",
            "--method",
            "slice",
            "--A",
            "3..4",
            "--k",
            "1..2",
            "--N",
            "1",
            "--compressed",
        ],
    );
    assert_eq!(code, 0);
    assert!(stdout.contains("slice,3,1,1,234,63"), "stdout: {stdout}");
}

#[test]
fn validation_errors_exit_with_code_two_and_context() {
    let fx = standard_fixture("validation");
    // Duplicate frequency row.
    fx.write(
        "bad_freq.csv",
        "marker,allele,frequency\nD2,16,0.5\nD2,16,0.5\n",
    );
    let (code, _, stderr) = run(
        &fx,
        &[
            "loglik", "--hyp", "Hd", "--freq", "bad_freq.csv", "--case", "case.cfg", "--out",
            "out",
        ],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("bad_freq.csv:3"), "stderr: {stderr}");
    // Peak height inside (0, threshold).
    fx.write(
        "bad_peaks.csv",
        "trace,marker,allele,height\nT1,D2,16,30\n",
    );
    let mut args = vec!["loglik", "--hyp", "Hd"];
    args.extend([
        "--freq",
        "freq.csv",
        "--case",
        "case.cfg",
        "--peaks",
        "bad_peaks.csv",
        "--profiles",
        "profiles.csv",
        "--out",
        "out",
    ]);
    let (code, _, stderr) = run(&fx, &args);
    assert_eq!(code, 2);
    assert!(stderr.contains("bad_peaks.csv:2"), "stderr: {stderr}");
    // Profile counts not summing to two.
    fx.write(
        "bad_profiles.csv",
        "individual,marker,allele,count\nK1,D2,16,1\n",
    );
    let mut args = vec!["loglik", "--hyp", "Hp"];
    args.extend([
        "--freq",
        "freq.csv",
        "--case",
        "case.cfg",
        "--peaks",
        "peaks.csv",
        "--profiles",
        "bad_profiles.csv",
        "--out",
        "out",
    ]);
    let (code, _, stderr) = run(&fx, &args);
    assert_eq!(code, 2);
    assert!(stderr.contains("bad_profiles.csv"), "stderr: {stderr}");
    // Peak at an allele absent from the ladder.
    fx.write(
        "odd_peaks.csv",
        "trace,marker,allele,height\nT1,D2,18,80\n",
    );
    let mut args = vec!["loglik", "--hyp", "Hd"];
    args.extend([
        "--freq",
        "freq.csv",
        "--case",
        "case.cfg",
        "--peaks",
        "odd_peaks.csv",
        "--profiles",
        "profiles.csv",
        "--out",
        "out",
    ]);
    let (code, _, stderr) = run(&fx, &args);
    assert_eq!(code, 2);
    assert!(stderr.contains("odd_peaks.csv:2"), "stderr: {stderr}");
    // Unknown hypothesis name.
    let mut args = vec!["loglik", "--hyp", "Hx"];
    args.extend(case_args("out"));
    let (code, _, stderr) = run(&fx, &args);
    assert_eq!(code, 2);
    assert!(stderr.contains("Hx"), "stderr: {stderr}");
    // Missing fixed parameters for a parameter-bound command.
    fx.write(
        "case_noparams.cfg",
        "[trace T1]\nthreshold = 50\n\n[hypothesis Hd]\ncontributors = U:u\n",
    );
    let (code, _, stderr) = run(
        &fx,
        &[
            "loglik",
            "--hyp",
            "Hd",
            "--freq",
            "freq.csv",
            "--case",
            "case_noparams.cfg",
            "--peaks",
            "peaks.csv",
            "--out",
            "out",
        ],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("params"), "stderr: {stderr}");
}

#[test]
fn simulate_roundtrips_through_the_peak_parser() {
    let fx = standard_fixture("simulate");
    let mut args = vec!["simulate", "--hyp", "Hd", "--seed", "4"];
    args.extend(case_args("out"));
    let (code, _, stderr) = run(&fx, &args);
    assert_eq!(code, 0, "stderr: {stderr}");
    let simulated = fx.path("out").join("simulated_peaks.csv");
    assert!(simulated.exists());
    // The simulated peaks parse back as a peaks file for the same case.
    let mut args = vec!["loglik", "--hyp", "Hd"];
    args.extend([
        "--freq",
        "freq.csv",
        "--case",
        "case.cfg",
        "--peaks",
        simulated.to_str().unwrap(),
        "--profiles",
        "profiles.csv",
        "--out",
        "out2",
    ]);
    let (code, _, stderr) = run(&fx, &args);
    assert_eq!(code, 0, "stderr: {stderr}");
    // Identical seeds reproduce identical traces.
    let mut args = vec!["simulate", "--hyp", "Hd", "--seed", "4"];
    args.extend(case_args("out_again"));
    let (code, _, _) = run(&fx, &args);
    assert_eq!(code, 0);
    let a = std::fs::read_to_string(fx.path("out").join("simulated_peaks.csv")).unwrap();
    let b = std::fs::read_to_string(fx.path("out_again").join("simulated_peaks.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn deconvolve_emits_genotype_tables_with_dropout_column() {
    let fx = standard_fixture("deconvolve");
    let mut args = vec!["deconvolve", "--hyp", "Hd", "--seen-only", "--seed", "2"];
    args.extend(case_args("out"));
    let (code, _, stderr) = run(&fx, &args);
    assert_eq!(code, 0, "stderr: {stderr}");
    let csv = std::fs::read_to_string(fx.path("out").join("deconvolve_D2.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "u:16,u:17,u:23,u:24,u:D,probability");
    assert!(csv.lines().last().unwrap().starts_with("total,"));
    let report = report_json(&fx, "out");
    let rankings = report["result"]["rankings"].as_array().unwrap();
    assert_eq!(rankings.len(), 2);
    // Rows are sorted by descending probability.
    let rows = rankings[0]["rows"].as_array().unwrap();
    let probs: Vec<f64> = rows
        .iter()
        .map(|r| r["probability"].as_f64().unwrap())
        .collect();
    assert!(probs.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn diagnose_commands_write_plot_ready_tables() {
    let fx = standard_fixture("diagnose");
    for (sub, file, header_starts) in [
        ("qq", "qq.csv", "marker,trace,allele,height,transform,position"),
        (
            "intervals",
            "intervals.csv",
            "marker,trace,allele,observed,presence_probability,q0.005",
        ),
        (
            "preq",
            "preq.csv",
            "step,marker,allele,observed,presence_probability,score",
        ),
    ] {
        let mut args = vec!["diagnose", sub, "--hyp", "Hd"];
        args.extend(case_args("out"));
        let (code, _, stderr) = run(&fx, &args);
        assert_eq!(code, 0, "{sub} stderr: {stderr}");
        let csv = std::fs::read_to_string(fx.path("out").join(file)).unwrap();
        assert!(
            csv.lines().next().unwrap().starts_with(header_starts),
            "{sub} header: {}",
            csv.lines().next().unwrap()
        );
        assert!(csv.lines().count() > 1);
    }
}

#[test]
fn presence_lr_runs_and_reports() {
    let fx = standard_fixture("presence");
    let mut args = vec!["presence-lr", "--hp", "Hp", "--hd", "Hd"];
    args.extend(case_args("out"));
    let (code, stdout, stderr) = run(&fx, &args);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("presence only"), "stdout: {stdout}");
    let report = report_json(&fx, "out");
    assert!(report["result"]["log10_presence_lr"].is_number());
    assert!(report["result"]["heights_fit"]["log10_lr"].is_number());
}

#[test]
fn missing_input_file_is_a_validation_error() {
    let fx = Fixture::new("missing");
    let (code, _, _) = run(
        &fx,
        &[
            "loglik", "--hyp", "H", "--freq", "nope.csv", "--case", "nope.cfg", "--out", "out",
        ],
    );
    assert_eq!(code, 2);
}

#[test]
fn report_numbers_use_twelve_significant_digits() {
    let fx = standard_fixture("digits");
    let mut args = vec!["loglik", "--hyp", "Hd"];
    args.extend(case_args("out"));
    let (code, _, _) = run(&fx, &args);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(fx.path("out").join("report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let total = value["result"]["total_log10_likelihood"].as_f64().unwrap();
    assert_eq!(total, peakmix::num::sig12(total));
    // Provenance carries digests of every input.
    assert_eq!(value["provenance"]["inputs"].as_array().unwrap().len(), 4);
    let _ = Path::new("x");
}
