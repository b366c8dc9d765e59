use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sqfi_core::experiments::format_csv_float;
use sqfi_core::{
    cramer_rao_bound, evolve_numeric, figure_preset_with, prepare_output_state, qfi_report,
    run_sweep, verify_suite, EvolutionMode, FigureId, Param, ReservoirSpec, SolutionCoefficients,
    VerifyOptions, DEFAULT_DT,
};

use crate::config::RunConfig;
use crate::{CliError, Command};

const DEFAULT_GAMMA_T: f64 = 5.0;
const DEFAULT_LAMBDA: f64 = 0.1;
const DEFAULT_T_END: f64 = 10.0;

/// Fill in the defaults of the keys a command reads.
pub(crate) fn with_defaults(command: &Command, cfg: RunConfig) -> RunConfig {
    let physics = |c: RunConfig| RunConfig {
        lambda: c.lambda.or(Some(DEFAULT_LAMBDA)),
        r: c.r.or(Some(0.0)),
        theta: c.theta.or(Some(0.0)),
        phi: c.phi.or(Some(0.0)),
        kt: c.kt.or(Some(0.0)),
        mode: c.mode.or(Some(EvolutionMode::NonMarkovian)),
        ..c
    };
    match command {
        Command::Qfi(_) => {
            let c = physics(cfg);
            RunConfig {
                gamma_t: c.gamma_t.or(Some(DEFAULT_GAMMA_T)),
                nu: c.nu.or(Some(1)),
                ..c
            }
        }
        Command::Evolve(_) => {
            let c = physics(cfg);
            RunConfig {
                dt: c.dt.or(Some(DEFAULT_DT)),
                t_end: c.t_end.or(Some(DEFAULT_T_END)),
                stride: c.stride.or(Some(1)),
                ..c
            }
        }
        Command::Figure(_) => RunConfig {
            points: cfg.points.or(Some(sqfi_core::experiments::DEFAULT_POINTS)),
            out_dir: cfg.out_dir.or(Some(PathBuf::from("."))),
            ..cfg
        },
        Command::Verify(_) => RunConfig {
            grid_density: cfg.grid_density.or(Some(1)),
            ..cfg
        },
    }
}

/// Six significant digits for human-readable output.
pub(crate) fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    let exp = rounded.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn reservoir(cfg: &RunConfig) -> Result<ReservoirSpec, CliError> {
    let spec = ReservoirSpec::new(
        cfg.lambda.unwrap_or(DEFAULT_LAMBDA),
        cfg.r.unwrap_or(0.0),
        cfg.theta.unwrap_or(0.0),
        cfg.kt.unwrap_or(0.0),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn cmd_qfi(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = reservoir(cfg)?;
    let mode = cfg.mode.unwrap_or(EvolutionMode::NonMarkovian);
    let gamma_t = cfg.gamma_t.unwrap_or(DEFAULT_GAMMA_T);
    let phi = cfg.phi.unwrap_or(0.0);
    let nu = cfg.nu.unwrap_or(1);
    if !phi.is_finite() {
        return Err(CliError::Usage(format!("phi must be finite, got {phi}")));
    }
    if nu == 0 {
        return Err(CliError::Usage("nu must be >= 1".into()));
    }
    let coeffs = SolutionCoefficients::at(gamma_t, &spec, mode)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let n = spec.mean_photon_number();
    let report = qfi_report(phi, spec.theta, &coeffs, n)?;
    let bound = cramer_rao_bound(report.qfi_analytic, nu).unwrap_or(f64::INFINITY);

    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("gamma_t", fmt6(gamma_t));
    kv("mode", mode.to_string());
    kv("mean_photon_number", fmt6(n));
    kv("vartheta", fmt6(coeffs.vartheta));
    kv("A", fmt6(coeffs.a));
    kv("B1", fmt6(coeffs.b1));
    kv("B2", fmt6(coeffs.b2));
    kv("qfi_analytic", fmt6(report.qfi_analytic));
    kv("qfi_eigen", fmt6(report.qfi_eigen));
    kv("qfi_bloch", fmt6(report.qfi_bloch));
    kv("qfi_sld", fmt6(report.qfi_sld));
    kv(
        "max_pairwise_disagreement",
        format!("{:.3e}", report.max_pairwise_disagreement),
    );
    kv("thermal_baseline", fmt6(report.thermal_baseline));
    kv("advantage", report.advantage.to_string());
    kv("margin", fmt6(report.margin));
    kv(
        "threshold_cos2",
        report
            .threshold
            .map_or("undefined".into(), |t| fmt6(t.threshold)),
    );
    kv(
        "threshold_holds",
        report
            .threshold
            .map_or("undefined".into(), |t| t.holds.to_string()),
    );
    kv("nu", nu.to_string());
    kv("cramer_rao_dphi", fmt6(bound));
    print!("{out}");

    if let Some(path) = &cfg.csv {
        let header = "gamma_t,phi,theta,r,kT,lambda,qfi_analytic,qfi_eigen,qfi_bloch,thermal_baseline,advantage,cramer_rao_dphi";
        let values = [
            gamma_t,
            phi,
            spec.theta,
            spec.r,
            spec.kt_over_omega,
            spec.lambda_over_gamma,
            report.qfi_analytic,
            report.qfi_eigen,
            report.qfi_bloch,
            report.thermal_baseline,
            if report.advantage { 1.0 } else { 0.0 },
            bound,
        ];
        let row: Vec<String> = values.iter().map(|&v| format_csv_float(v)).collect();
        write_file(path, format!("{header}\n{}\n", row.join(",")).as_bytes())?;
    }
    Ok(())
}

pub(crate) const TRAJECTORY_HEADER: &str = "gamma_t,rho_ee,re_rho_eg,im_rho_eg,purity";

pub(crate) fn cmd_evolve(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = reservoir(cfg)?;
    let mode = cfg.mode.unwrap_or(EvolutionMode::NonMarkovian);
    let initial =
        prepare_output_state(cfg.phi.unwrap_or(0.0)).map_err(|e| CliError::Usage(e.to_string()))?;
    let t_end = cfg.t_end.unwrap_or(DEFAULT_T_END);
    let dt = cfg.dt.unwrap_or(DEFAULT_DT);
    let stride = cfg.stride.unwrap_or(1);
    if stride == 0 {
        return Err(CliError::Usage("stride must be >= 1".into()));
    }
    let traj = evolve_numeric(&initial, &spec, mode, t_end, dt).map_err(|e| match e {
        sqfi_core::Error::Domain(msg) => CliError::Usage(msg),
        other => CliError::Core(other),
    })?;

    let mut csv = String::with_capacity(traj.len() / stride * 100 + 64);
    csv.push_str(TRAJECTORY_HEADER);
    csv.push('\n');
    for (t, st) in traj.thinned(stride) {
        let eg = st.rho_eg();
        let fields = [t * spec.gamma, st.rho_ee(), eg.re, eg.im, st.purity()];
        let row: Vec<String> = fields.iter().map(|&v| format_csv_float(v)).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    match &cfg.output {
        Some(path) => write_file(path, csv.as_bytes()),
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

pub(crate) fn cmd_figure(id: &str, plot_script: bool, cfg: &RunConfig) -> Result<(), CliError> {
    let id: FigureId = id
        .parse()
        .map_err(|e: sqfi_core::Error| CliError::Usage(e.to_string()))?;
    let points = cfg.points.unwrap_or(sqfi_core::experiments::DEFAULT_POINTS);
    if points < 2 {
        return Err(CliError::Usage("points must be >= 2".into()));
    }
    let mut spec = figure_preset_with(id, points);
    if let Some(lambda) = cfg.lambda {
        if spec.axes.iter().any(|(p, _)| *p == Param::Lambda) {
            return Err(CliError::Usage(format!(
                "{id} sweeps lambda; it cannot be overridden"
            )));
        }
        spec.fixed.insert(Param::Lambda, lambda);
    }
    let table = run_sweep(&spec).map_err(|e| match e {
        sqfi_core::Error::Row { ref source, .. } if !source.is_numerical() => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Core(other),
    })?;
    let csv = table.to_csv_string()?;

    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let csv_path = dir.join(format!("{id}.csv"));
    write_file(&csv_path, csv.as_bytes())?;
    println!("wrote {} ({} rows)", csv_path.display(), table.rows.len());
    if plot_script {
        let script_path = dir.join(format!("{id}_plot.py"));
        write_file(
            &script_path,
            plot_script_source(&format!("{id}.csv")).as_bytes(),
        )?;
        println!("wrote {}", script_path.display());
    }
    Ok(())
}

/// Stand-alone matplotlib script that reads only the CSV next to it.
fn plot_script_source(csv_name: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
# Plots {csv_name}. The first column selects curves when it has few distinct
# values; otherwise the first two columns form a colour map.
import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{csv_name}"), newline="") as f:
    reader = csv.reader(f)
    header = next(reader)
    rows = [[float(x) for x in row] for row in reader]

cols = {{name: [r[i] for r in rows] for i, name in enumerate(header)}}
qfi = "qfi_analytic" if "qfi_analytic" in cols else header[-1]
first, second = header[0], header[1]
levels = sorted(set(cols[first]))

fig, ax = plt.subplots()
if len(levels) <= 10:
    for level in levels:
        xs = [r[1] for r in rows if r[0] == level]
        ys = [r[header.index(qfi)] for r in rows if r[0] == level]
        ax.plot(xs, ys, label=f"{{first}}={{level:g}}")
    ax.set_xlabel(second)
    ax.set_ylabel(qfi)
    ax.legend()
else:
    xs = sorted(set(cols[second]))
    grid = [[0.0] * len(xs) for _ in levels]
    for r in rows:
        grid[levels.index(r[0])][xs.index(r[1])] = r[header.index(qfi)]
    mesh = ax.pcolormesh(xs, levels, grid, shading="auto")
    fig.colorbar(mesh, ax=ax, label=qfi)
    ax.set_xlabel(second)
    ax.set_ylabel(first)

out = os.path.join(here, "{csv_name}".replace(".csv", ".png"))
fig.savefig(out, dpi=150)
print("wrote", out)
"#
    )
}

pub(crate) fn cmd_verify(cfg: &RunConfig, fault: Option<&str>) -> Result<(), CliError> {
    let grid_density = cfg.grid_density.unwrap_or(1);
    if grid_density == 0 {
        return Err(CliError::Usage("grid-density must be >= 1".into()));
    }
    let fault = match fault {
        None => None,
        Some("swap-b1-b2") => Some(sqfi_core::experiments::Fault::SwapB1B2),
        Some(other) => return Err(CliError::Usage(format!("unknown fault '{other}'"))),
    };
    let report = verify_suite(VerifyOptions {
        grid_density,
        fault,
    })?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        for c in report.failures() {
            eprintln!(
                "FAILED {}: worst {:.3e} > tolerance {:.1e}",
                c.name, c.worst, c.tolerance
            );
        }
        Err(CliError::VerificationFailed)
    }
}
