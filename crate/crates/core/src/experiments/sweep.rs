use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::{closed_form_state, EvolutionMode, SolutionCoefficients};
use crate::error::{Error, Result};
use crate::metrology::{
    bloch_derivative, drho_analytic, qfi_analytic, qfi_bloch, qfi_eigen, qfi_thermal,
};
use crate::reservoir::ReservoirSpec;
use crate::state::bloch_vector;

/// A sweepable physical parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    GammaT,
    Phi,
    Theta,
    R,
    KT,
    Lambda,
}

impl Param {
    pub const ALL: [Param; 6] = [
        Param::GammaT,
        Param::Phi,
        Param::Theta,
        Param::R,
        Param::KT,
        Param::Lambda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::GammaT => "gamma_t",
            Param::Phi => "phi",
            Param::Theta => "theta",
            Param::R => "r",
            Param::KT => "kT",
            Param::Lambda => "lambda",
        }
    }

    fn default_value(self) -> f64 {
        match self {
            Param::Lambda => 0.1,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Param::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!(
                    "unknown parameter '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// A result column of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    QfiAnalytic,
    QfiEigen,
    QfiThermal,
    Bloch,
    /// 1 when squeezing beats the thermal baseline, else 0.
    Advantage,
}

impl Output {
    pub const ALL: [Output; 5] = [
        Output::QfiAnalytic,
        Output::QfiEigen,
        Output::QfiThermal,
        Output::Bloch,
        Output::Advantage,
    ];

    /// Name of the spec-level output selector.
    pub fn name(self) -> &'static str {
        match self {
            Output::QfiAnalytic => "qfi_analytic",
            Output::QfiEigen => "qfi_eigen",
            Output::QfiThermal => "qfi_thermal",
            Output::Bloch => "bloch",
            Output::Advantage => "advantage",
        }
    }

    /// Header of the CSV column.
    pub fn column(self) -> &'static str {
        match self {
            Output::Bloch => "qfi_bloch",
            other => other.name(),
        }
    }
}

impl FromStr for Output {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Output::ALL
            .into_iter()
            .find(|o| o.name() == s || o.column() == s)
            .ok_or_else(|| Error::Config(format!("unknown output '{s}'")))
    }
}

/// Description of a Cartesian-product parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Swept parameters; the first axis varies slowest.
    pub axes: Vec<(Param, Vec<f64>)>,
    /// Values of non-swept parameters. Missing ones take defaults
    /// (`lambda = 0.1`, everything else 0).
    pub fixed: BTreeMap<Param, f64>,
    pub mode: EvolutionMode,
    pub outputs: Vec<Output>,
    /// When set to `δ`, every point uses `θ = 2(φ − δ)`.
    pub phase_offset: Option<f64>,
}

impl SweepSpec {
    pub fn new(mode: EvolutionMode) -> Self {
        SweepSpec {
            axes: Vec::new(),
            fixed: BTreeMap::new(),
            mode,
            outputs: vec![Output::QfiAnalytic],
            phase_offset: None,
        }
    }

    pub fn axis(mut self, param: Param, values: Vec<f64>) -> Self {
        self.axes.push((param, values));
        self
    }

    pub fn fix(mut self, param: Param, value: f64) -> Self {
        self.fixed.insert(param, value);
        self
    }

    pub fn outputs(mut self, outputs: &[Output]) -> Self {
        self.outputs = outputs.to_vec();
        self
    }

    pub fn with_phase_offset(mut self, delta: f64) -> Self {
        self.phase_offset = Some(delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::new();
        for (p, values) in &self.axes {
            if seen.contains(p) {
                return Err(Error::Config(format!("axis '{p}' listed twice")));
            }
            if self.fixed.contains_key(p) {
                return Err(Error::Config(format!("'{p}' is both swept and fixed")));
            }
            if values.is_empty() {
                return Err(Error::Config(format!("axis '{p}' has no values")));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::Config(format!(
                    "axis '{p}' has non-finite value {v}"
                )));
            }
            seen.push(*p);
        }
        if let Some((p, v)) = self.fixed.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("fixed '{p}' is non-finite ({v})")));
        }
        if self.phase_offset.is_some()
            && (seen.contains(&Param::Theta) || self.fixed.contains_key(&Param::Theta))
        {
            return Err(Error::Config(
                "theta cannot be set when a phase offset ties it to phi".into(),
            ));
        }
        if self.outputs.is_empty() {
            return Err(Error::Config("no outputs requested".into()));
        }
        Ok(())
    }

    /// Column headers: axes, derived `theta` (with a phase offset), outputs.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self
            .axes
            .iter()
            .map(|(p, _)| p.name().to_string())
            .collect();
        if self.phase_offset.is_some() {
            cols.push(Param::Theta.name().to_string());
        }
        cols.extend(self.outputs.iter().map(|o| o.column().to_string()));
        cols
    }

    pub fn row_count(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    fn point(&self, mut index: usize) -> PointParams {
        let mut values: BTreeMap<Param, f64> = self.fixed.clone();
        let mut axis_values = vec![0.0; self.axes.len()];
        for (k, (p, vals)) in self.axes.iter().enumerate().rev() {
            let v = vals[index % vals.len()];
            index /= vals.len();
            axis_values[k] = v;
            values.insert(*p, v);
        }
        let get = |p: Param| values.get(&p).copied().unwrap_or(p.default_value());
        let phi = get(Param::Phi);
        let theta = match self.phase_offset {
            Some(delta) => 2.0 * (phi - delta),
            None => get(Param::Theta),
        };
        PointParams {
            axis_values,
            gamma_t: get(Param::GammaT),
            phi,
            theta,
            r: get(Param::R),
            kt: get(Param::KT),
            lambda: get(Param::Lambda),
        }
    }
}

/// Fully resolved parameters of one sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointParams {
    pub axis_values: Vec<f64>,
    pub gamma_t: f64,
    pub phi: f64,
    pub theta: f64,
    pub r: f64,
    pub kt: f64,
    pub lambda: f64,
}

impl PointParams {
    fn describe(&self) -> String {
        format!(
            "gamma_t={}, phi={}, theta={}, r={}, kT={}, lambda={}",
            self.gamma_t, self.phi, self.theta, self.r, self.kt, self.lambda
        )
    }
}

/// Evaluate the requested outputs at one point.
pub fn evaluate_point(
    p: &PointParams,
    mode: EvolutionMode,
    outputs: &[Output],
) -> Result<Vec<f64>> {
    let spec = ReservoirSpec::new(p.lambda, p.r, p.theta, p.kt)?;
    let n = spec.mean_photon_number();
    let coeffs = SolutionCoefficients::at(p.gamma_t, &spec, mode)?;
    let mut analytic = None;
    let mut get_analytic = || -> Result<f64> {
        if let Some(v) = analytic {
            return Ok(v);
        }
        let v = qfi_analytic(p.phi, p.theta, &coeffs)?;
        analytic = Some(v);
        Ok(v)
    };
    let mut row = Vec::with_capacity(outputs.len());
    for out in outputs {
        let v = match out {
            Output::QfiAnalytic => get_analytic()?,
            Output::QfiThermal => qfi_thermal(coeffs.vartheta, n)?,
            Output::QfiEigen => {
                let state = closed_form_state(p.phi, p.theta, &coeffs)?;
                qfi_eigen(&state, &drho_analytic(p.phi, p.theta, &coeffs))?
            }
            Output::Bloch => {
                let state = closed_form_state(p.phi, p.theta, &coeffs)?;
                let d = drho_analytic(p.phi, p.theta, &coeffs);
                qfi_bloch(bloch_vector(&state), bloch_derivative(&d))?
            }
            Output::Advantage => {
                let margin = get_analytic()? - qfi_thermal(coeffs.vartheta, n)?;
                if margin > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        row.push(v);
    }
    Ok(row)
}

/// Rectangular result table. Rows follow the axis order of the spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Evaluate every point of the Cartesian product of the axes.
///
/// Rows are evaluated in parallel and assembled in index order, so the table
/// does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let offset_column = spec.phase_offset.is_some();
    let rows = (0..spec.row_count())
        .into_par_iter()
        .map(|i| {
            let p = spec.point(i);
            let out = evaluate_point(&p, spec.mode, &spec.outputs).map_err(|e| Error::Row {
                row: i,
                context: p.describe(),
                source: Box::new(e),
            })?;
            let mut row = p.axis_values.clone();
            if offset_column {
                row.push(p.theta);
            }
            row.extend(out);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        columns: spec.columns(),
        rows,
    })
}

/// 17 significant digits, `.` decimal separator, no grouping.
pub fn format_csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_csv_float(x)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_point_at_start_has_unit_qfi() {
        let spec = SweepSpec::new(EvolutionMode::NonMarkovian).axis(Param::GammaT, vec![0.0]);
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.columns, vec!["gamma_t", "qfi_analytic"]);
        assert_eq!(t.rows, vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn empty_axes_give_one_fixed_row() {
        let spec = SweepSpec::new(EvolutionMode::Markovian)
            .fix(Param::GammaT, 1.0)
            .outputs(&[Output::QfiAnalytic, Output::QfiThermal, Output::Advantage]);
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 1);
        let e2 = (-2.0f64).exp();
        assert!((t.rows[0][0] - e2).abs() < 1e-15);
        assert!((t.rows[0][1] - e2).abs() < 1e-15);
        assert_eq!(t.rows[0][2], 0.0);
    }

    #[test]
    fn rows_are_lexicographic_in_axis_order() {
        let spec = SweepSpec::new(EvolutionMode::NonMarkovian)
            .axis(Param::GammaT, vec![0.0, 1.0, 2.0])
            .axis(Param::Phi, vec![0.0, 0.5])
            .fix(Param::R, 0.5);
        let t = run_sweep(&spec).unwrap();
        let keys: Vec<(f64, f64)> = t.rows.iter().map(|r| (r[0], r[1])).collect();
        assert_eq!(
            keys,
            vec![
                (0.0, 0.0),
                (0.0, 0.5),
                (1.0, 0.0),
                (1.0, 0.5),
                (2.0, 0.0),
                (2.0, 0.5)
            ]
        );
    }

    #[test]
    fn phase_scan_peaks_at_matching() {
        // γt × φ with θ = 0: every row's maximum over φ sits at φ ≡ 0 (mod π).
        let phis: Vec<f64> = (0..=200).map(|i| PI * i as f64 / 200.0).collect();
        let spec = SweepSpec::new(EvolutionMode::NonMarkovian)
            .axis(Param::GammaT, vec![1.0, 5.0, 10.0])
            .axis(Param::Phi, phis.clone())
            .fix(Param::R, 1.5)
            .fix(Param::KT, 0.5);
        let t = run_sweep(&spec).unwrap();
        for chunk in t.rows.chunks(phis.len()) {
            let best = chunk.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
            assert!(
                best[1] == 0.0 || (best[1] - PI).abs() < 1e-12,
                "argmax at {}",
                best[1]
            );
        }
    }

    #[test]
    fn phase_offset_sets_theta() {
        let spec = SweepSpec::new(EvolutionMode::NonMarkovian)
            .axis(Param::Phi, vec![0.5, 1.0])
            .fix(Param::GammaT, 5.0)
            .fix(Param::R, 1.0)
            .with_phase_offset(0.01);
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.columns, vec!["phi", "theta", "qfi_analytic"]);
        assert!((t.rows[0][1] - 0.98).abs() < 1e-15);
        // QFI only depends on φ − θ/2
        assert!((t.rows[0][2] - t.rows[1][2]).abs() < 1e-14);
    }

    #[test]
    fn all_outputs_agree() {
        let spec = SweepSpec::new(EvolutionMode::NonMarkovian)
            .axis(Param::Phi, vec![0.1, 0.9])
            .fix(Param::GammaT, 3.0)
            .fix(Param::R, 0.7)
            .fix(Param::Theta, 0.3)
            .outputs(&Output::ALL);
        let t = run_sweep(&spec).unwrap();
        assert_eq!(
            t.columns,
            vec![
                "phi",
                "qfi_analytic",
                "qfi_eigen",
                "qfi_thermal",
                "qfi_bloch",
                "advantage"
            ]
        );
        for r in &t.rows {
            assert!((r[1] - r[2]).abs() < 1e-9 && (r[1] - r[4]).abs() < 1e-9);
        }
    }

    #[test]
    fn config_errors() {
        assert!("omega".parse::<Param>().is_err());
        assert_eq!("kT".parse::<Param>().unwrap(), Param::KT);
        let dup = SweepSpec::new(EvolutionMode::Markovian)
            .axis(Param::R, vec![0.0])
            .axis(Param::R, vec![1.0]);
        assert!(matches!(run_sweep(&dup), Err(Error::Config(_))));
        let both = SweepSpec::new(EvolutionMode::Markovian)
            .axis(Param::R, vec![0.0])
            .fix(Param::R, 1.0);
        assert!(run_sweep(&both).is_err());
        let tied = SweepSpec::new(EvolutionMode::Markovian)
            .fix(Param::Theta, 1.0)
            .with_phase_offset(0.01);
        assert!(run_sweep(&tied).is_err());
    }

    #[test]
    fn invalid_point_reports_row_context() {
        let spec = SweepSpec::new(EvolutionMode::Markovian).axis(Param::R, vec![0.0, -1.0]);
        let err = run_sweep(&spec).unwrap_err();
        match err {
            Error::Row { row, context, .. } => {
                assert_eq!(row, 1);
                assert!(context.contains("r=-1"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_is_deterministic_and_plain() {
        let spec = SweepSpec::new(EvolutionMode::NonMarkovian)
            .axis(Param::GammaT, (0..50).map(|i| i as f64 * 0.2).collect())
            .axis(Param::Phi, vec![0.0, 1.0, 2.0])
            .fix(Param::R, 1.0);
        let a = run_sweep(&spec).unwrap().to_csv_string().unwrap();
        let b = run_sweep(&spec).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("gamma_t,phi,qfi_analytic\n"));
        assert!(!a.contains('\r'));
        let second = a.lines().nth(1).unwrap();
        assert_eq!(
            second,
            "0.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0"
        );
        for line in a.lines().skip(1) {
            for field in line.split(',') {
                let x: f64 = field.parse().unwrap();
                assert_eq!(format_csv_float(x), field);
            }
        }
    }
}
