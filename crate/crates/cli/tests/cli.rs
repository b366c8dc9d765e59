use std::fs;
use std::process::{Command, Output};

fn sqfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqfi"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("missing {key} in\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn qfi_at_time_zero_is_one() {
    let out = sqfi(&[
        "qfi",
        "--gamma-t",
        "0",
        "--r",
        "1",
        "--theta",
        "0.4",
        "--phi",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for key in ["qfi_analytic", "qfi_eigen", "qfi_bloch"] {
        assert_eq!(field(&text, key), 1.0);
    }
    assert_eq!(field(&text, "cramer_rao_dphi"), 1.0);
}

#[test]
fn markovian_vacuum_decay() {
    let out = sqfi(&["qfi", "--gamma-t", "1", "--r", "0", "--mode", "markovian"]);
    let f = field(&stdout(&out), "qfi_analytic");
    assert!((f - (-2.0f64).exp()).abs() < 1e-6, "{f}");
}

#[test]
fn matched_phase_gives_b2_squared() {
    let out = sqfi(&[
        "qfi",
        "--gamma-t",
        "3",
        "--r",
        "1",
        "--theta",
        "1.2",
        "--phi",
        "0.6",
        "--kT",
        "0.5",
    ]);
    let text = stdout(&out);
    let b2 = field(&text, "B2");
    assert!((field(&text, "qfi_analytic") - b2 * b2).abs() < 1e-5);
}

#[test]
fn qfi_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    let out = sqfi(&["qfi", "--gamma-t", "2", "--csv", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "gamma_t,phi,theta,r,kT,lambda,qfi_analytic,qfi_eigen,qfi_bloch,thermal_baseline,advantage,cramer_rao_dphi"
    );
    assert_eq!(lines.count(), 1);
}

#[test]
fn evolve_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = sqfi(&[
        "evolve",
        "--t-end",
        "1",
        "--stride",
        "100",
        "--r",
        "0.5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gamma_t,rho_ee,re_rho_eg,im_rho_eg,purity");
    assert_eq!(lines.len(), 1 + 11);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 0.5).abs() < 1e-15);
    let last: f64 = lines[11].split(',').next().unwrap().parse().unwrap();
    assert!((last - 1.0).abs() < 1e-12);
}

#[test]
fn figure_rows_follow_axis_order_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = sqfi(&["figure", "fig2a", "--points", "5", "--out-dir", d]);
    assert_eq!(out.status.code(), Some(0));
    let first = fs::read(dir.path().join("fig2a.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 25);
    for w in rows.windows(2) {
        assert!((w[0][0], w[0][1]) < (w[1][0], w[1][1]));
    }

    sqfi(&["figure", "fig2a", "--points", "5", "--out-dir", d]);
    assert_eq!(first, fs::read(dir.path().join("fig2a.csv")).unwrap());
}

#[test]
fn figure_plot_script_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqfi(&[
        "figure",
        "fig6",
        "--points",
        "3",
        "--plot-script",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let script = fs::read_to_string(dir.path().join("fig6_plot.py")).unwrap();
    assert!(script.contains("fig6.csv"));
}

#[test]
fn unknown_figure_lists_valid_ids() {
    let out = sqfi(&["figure", "fig7"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig2a") && err.contains("fig6"), "{err}");
}

#[test]
fn usage_and_domain_errors_exit_one() {
    assert_eq!(sqfi(&["qfi", "--bogus"]).status.code(), Some(1));
    assert_eq!(sqfi(&["qfi", "--r", "-1"]).status.code(), Some(1));
    assert_eq!(sqfi(&["qfi", "--kT", "-0.5"]).status.code(), Some(1));
    assert_eq!(sqfi(&["qfi", "--mode", "sideways"]).status.code(), Some(1));
    assert_eq!(sqfi(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_exits_one() {
    let out = sqfi(&[
        "figure",
        "fig2a",
        "--points",
        "3",
        "--out-dir",
        "/proc/nonexistent/dir",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unstable_step_exits_two() {
    let out = sqfi(&[
        "evolve", "--t-end", "5", "--dt", "2", "--r", "2", "--kT", "2", "--lambda", "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# vacuum, markovian\ngamma-t = 1\nr = 0\nmode = markovian\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();

    let from_file = field(&stdout(&sqfi(&["--config", c, "qfi"])), "qfi_analytic");
    assert!((from_file - (-2.0f64).exp()).abs() < 1e-6);

    let overridden = field(
        &stdout(&sqfi(&["--config", c, "qfi", "--gamma-t", "0"])),
        "qfi_analytic",
    );
    assert_eq!(overridden, 1.0);

    fs::write(&cfg, "gamma = 1\n").unwrap();
    assert_eq!(sqfi(&["--config", c, "qfi"]).status.code(), Some(1));
}

#[test]
fn verify_passes_and_detects_injected_fault() {
    let ok = sqfi(&["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(!stdout(&ok).contains("FAIL"));

    let bad = sqfi(&["verify", "--inject-fault", "swap-b1-b2"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stdout(&bad).contains("FAIL"));
}

#[test]
fn verify_denser_grid() {
    assert_eq!(
        sqfi(&["verify", "--grid-density", "3"]).status.code(),
        Some(0)
    );
}
