//! Flat `key = value` run configuration. Keys mirror the long flag names.

use std::fmt::Write as _;
use std::path::PathBuf;

use sqfi_core::EvolutionMode;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub gamma_t: Option<f64>,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub kt: Option<f64>,
    pub mode: Option<EvolutionMode>,
    pub nu: Option<u64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub stride: Option<usize>,
    pub points: Option<usize>,
    pub grid_density: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub const KEYS: [&str; 16] = [
    "gamma-t",
    "lambda",
    "r",
    "theta",
    "phi",
    "kT",
    "mode",
    "nu",
    "dt",
    "t-end",
    "stride",
    "points",
    "grid-density",
    "out-dir",
    "output",
    "csv",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value '{value}' for '{key}'")))
}

impl RunConfig {
    /// Parse a config file. `#` starts a comment; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config line {}: expected 'key = value'",
                    lineno + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "gamma-t" => self.gamma_t = Some(parse(key, value)?),
            "lambda" => self.lambda = Some(parse(key, value)?),
            "r" => self.r = Some(parse(key, value)?),
            "theta" => self.theta = Some(parse(key, value)?),
            "phi" => self.phi = Some(parse(key, value)?),
            "kT" => self.kt = Some(parse(key, value)?),
            "mode" => {
                self.mode = Some(
                    value
                        .parse()
                        .map_err(|e: sqfi_core::Error| CliError::Usage(e.to_string()))?,
                )
            }
            "nu" => self.nu = Some(parse(key, value)?),
            "dt" => self.dt = Some(parse(key, value)?),
            "t-end" => self.t_end = Some(parse(key, value)?),
            "stride" => self.stride = Some(parse(key, value)?),
            "points" => self.points = Some(parse(key, value)?),
            "grid-density" => self.grid_density = Some(parse(key, value)?),
            "out-dir" => self.out_dir = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            "csv" => self.csv = Some(PathBuf::from(value)),
            _ => {
                return Err(CliError::Usage(format!(
                    "unknown key '{key}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Values set in `over` win.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        RunConfig {
            gamma_t: over.gamma_t.or(self.gamma_t),
            lambda: over.lambda.or(self.lambda),
            r: over.r.or(self.r),
            theta: over.theta.or(self.theta),
            phi: over.phi.or(self.phi),
            kt: over.kt.or(self.kt),
            mode: over.mode.or(self.mode),
            nu: over.nu.or(self.nu),
            dt: over.dt.or(self.dt),
            t_end: over.t_end.or(self.t_end),
            stride: over.stride.or(self.stride),
            points: over.points.or(self.points),
            grid_density: over.grid_density.or(self.grid_density),
            out_dir: over.out_dir.or(self.out_dir),
            output: over.output.or(self.output),
            csv: over.csv.or(self.csv),
        }
    }

    /// Render set keys in config-file syntax, in [`KEYS`] order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        put("gamma-t", self.gamma_t.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("r", self.r.map(|v| v.to_string()));
        put("theta", self.theta.map(|v| v.to_string()));
        put("phi", self.phi.map(|v| v.to_string()));
        put("kT", self.kt.map(|v| v.to_string()));
        put("mode", self.mode.map(|v| v.to_string()));
        put("nu", self.nu.map(|v| v.to_string()));
        put("dt", self.dt.map(|v| v.to_string()));
        put("t-end", self.t_end.map(|v| v.to_string()));
        put("stride", self.stride.map(|v| v.to_string()));
        put("points", self.points.map(|v| v.to_string()));
        put("grid-density", self.grid_density.map(|v| v.to_string()));
        put(
            "out-dir",
            self.out_dir.as_ref().map(|v| v.display().to_string()),
        );
        put(
            "output",
            self.output.as_ref().map(|v| v.display().to_string()),
        );
        put("csv", self.csv.as_ref().map(|v| v.display().to_string()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let cfg = RunConfig::parse(
            "# comment\ngamma-t = 5\n kT=0.5 # hot\nmode = markovian\n\nout-dir = out\n",
        )
        .unwrap();
        assert_eq!(cfg.gamma_t, Some(5.0));
        assert_eq!(cfg.kt, Some(0.5));
        assert_eq!(cfg.mode, Some(EvolutionMode::Markovian));
        assert_eq!(cfg.out_dir, Some(PathBuf::from("out")));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(RunConfig::parse("temperature = 1").is_err());
        assert!(RunConfig::parse("r 1").is_err());
        assert!(RunConfig::parse("r = abc").is_err());
        assert!(RunConfig::parse("mode = lindblad").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = RunConfig::parse("r = 1\nphi = 0.2").unwrap();
        let flags = RunConfig {
            r: Some(0.5),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.r, Some(0.5));
        assert_eq!(merged.phi, Some(0.2));
    }

    #[test]
    fn render_round_trips() {
        let cfg =
            RunConfig::parse("gamma-t = 2.5\nmode = nonMarkovian\nnu = 10\ncsv = a.csv").unwrap();
        assert_eq!(RunConfig::parse(&cfg.render()).unwrap(), cfg);
    }
}
