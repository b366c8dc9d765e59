//! Parameter sets of the published figures.
//!
//! Spectral widths follow the figure captions (`λ = 0.1γ` for Figs. 2, 3, 5).
//! Fig. 6 quotes `kT = 0.5` without units; it is taken as `0.5ω`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::sweep::{Output, Param, SweepSpec};
use crate::dynamics::EvolutionMode;
use crate::error::{Error, Result};

/// Samples per continuous axis unless overridden.
pub const DEFAULT_POINTS: usize = 201;

/// Offset `φ − θ/2` used for near phase matching.
const MATCHING_OFFSET: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig4d,
    Fig5,
    Fig6,
}

impl FigureId {
    pub const ALL: [FigureId; 10] = [
        FigureId::Fig2a,
        FigureId::Fig2b,
        FigureId::Fig3a,
        FigureId::Fig3b,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::Fig4c,
        FigureId::Fig4d,
        FigureId::Fig5,
        FigureId::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig3a => "fig3a",
            FigureId::Fig3b => "fig3b",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4b => "fig4b",
            FigureId::Fig4c => "fig4c",
            FigureId::Fig4d => "fig4d",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
        }
    }

    pub fn valid_ids() -> String {
        FigureId::ALL
            .iter()
            .map(|f| f.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown figure '{s}' (valid: {})",
                    FigureId::valid_ids()
                ))
            })
    }
}

fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|i| start + (end - start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

pub fn figure_preset(id: FigureId) -> SweepSpec {
    figure_preset_with(id, DEFAULT_POINTS)
}

/// Preset with `points` samples on each continuous axis.
pub fn figure_preset_with(id: FigureId, points: usize) -> SweepSpec {
    use EvolutionMode::{Markovian, NonMarkovian};
    let time = || linspace(0.0, 10.0, points);
    let full_turn = || linspace(0.0, 2.0 * PI, points);
    let half_turn = || linspace(0.0, PI, points);
    let squeezings = vec![0.0, 0.2, 0.5, 1.0];
    let temperatures = vec![0.0, 0.5, 1.0, 2.0];
    let with_baseline = [Output::QfiAnalytic, Output::QfiThermal];

    let fig2 = || {
        SweepSpec::new(NonMarkovian)
            .fix(Param::Lambda, 0.1)
            .fix(Param::R, 1.5)
            .fix(Param::KT, 0.5)
            .axis(Param::GammaT, time())
    };
    let fig3 = |mode| {
        SweepSpec::new(mode)
            .fix(Param::R, 0.0)
            .fix(Param::Lambda, 0.1)
            .fix(Param::Phi, 0.0)
            .fix(Param::Theta, 0.0)
            .axis(Param::KT, temperatures.clone())
            .axis(Param::GammaT, time())
            .outputs(&with_baseline)
    };
    let fig4 = |mode, gamma_t, matched: bool| {
        let s = SweepSpec::new(mode)
            .fix(Param::KT, 0.0)
            .fix(Param::Lambda, 0.1)
            .fix(Param::GammaT, gamma_t)
            .axis(Param::R, squeezings.clone())
            .axis(Param::Phi, half_turn())
            .outputs(&with_baseline);
        if matched {
            s.with_phase_offset(MATCHING_OFFSET)
        } else {
            s.fix(Param::Theta, 0.0)
        }
    };

    match id {
        FigureId::Fig2a => fig2().fix(Param::Theta, 0.0).axis(Param::Phi, full_turn()),
        FigureId::Fig2b => fig2().fix(Param::Phi, 0.0).axis(Param::Theta, full_turn()),
        FigureId::Fig3a => fig3(NonMarkovian),
        FigureId::Fig3b => fig3(Markovian),
        FigureId::Fig4a => fig4(NonMarkovian, 5.0, false),
        FigureId::Fig4b => fig4(Markovian, 0.8, false),
        FigureId::Fig4c => fig4(NonMarkovian, 5.0, true),
        FigureId::Fig4d => fig4(Markovian, 0.8, true),
        FigureId::Fig5 => SweepSpec::new(NonMarkovian)
            .fix(Param::GammaT, 10.0)
            .fix(Param::Lambda, 0.1)
            .fix(Param::Phi, MATCHING_OFFSET)
            .with_phase_offset(MATCHING_OFFSET)
            .axis(Param::KT, linspace(0.0, 2.0, points))
            .axis(Param::R, linspace(0.0, 2.0, points))
            .outputs(&with_baseline),
        FigureId::Fig6 => SweepSpec::new(NonMarkovian)
            .fix(Param::R, 0.5)
            .fix(Param::KT, 0.5)
            .fix(Param::Phi, MATCHING_OFFSET)
            .with_phase_offset(MATCHING_OFFSET)
            .axis(Param::Lambda, vec![2.0, 0.5, 0.1, 0.05])
            .axis(Param::GammaT, time())
            .outputs(&with_baseline),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sweep::run_sweep;

    #[test]
    fn ids_round_trip() {
        for id in FigureId::ALL {
            assert_eq!(id.name().parse::<FigureId>().unwrap(), id);
            figure_preset(id).validate().unwrap();
        }
        let err = "fig7".parse::<FigureId>().unwrap_err().to_string();
        assert!(err.contains("fig2a") && err.contains("fig6"));
    }

    #[test]
    fn caption_parameters() {
        let f2 = figure_preset(FigureId::Fig2a);
        assert_eq!(f2.fixed[&Param::Lambda], 0.1);
        assert_eq!(f2.fixed[&Param::R], 1.5);
        assert_eq!(f2.fixed[&Param::KT], 0.5);
        assert_eq!(f2.axes[0].1.len(), DEFAULT_POINTS);
        assert_eq!(*f2.axes[0].1.last().unwrap(), 10.0);

        let f4d = figure_preset(FigureId::Fig4d);
        assert_eq!(f4d.mode, EvolutionMode::Markovian);
        assert_eq!(f4d.fixed[&Param::GammaT], 0.8);
        assert_eq!(f4d.phase_offset, Some(0.01));

        let f6 = figure_preset(FigureId::Fig6);
        assert_eq!(f6.axes[0], (Param::Lambda, vec![2.0, 0.5, 0.1, 0.05]));
    }

    #[test]
    fn fig3_curves_start_at_one() {
        let t = run_sweep(&figure_preset(FigureId::Fig3a)).unwrap();
        assert_eq!(t.rows.len(), 4 * DEFAULT_POINTS);
        let starts: Vec<f64> = t
            .rows
            .iter()
            .filter(|r| r[1] == 0.0)
            .map(|r| r[2])
            .collect();
        assert_eq!(starts, vec![1.0; 4]);
    }

    #[test]
    fn fig3_markovian_decays_faster() {
        let nm = run_sweep(&figure_preset_with(FigureId::Fig3a, 51)).unwrap();
        let mk = run_sweep(&figure_preset_with(FigureId::Fig3b, 51)).unwrap();
        for (a, b) in nm.rows.iter().zip(&mk.rows) {
            assert_eq!(a[..2], b[..2]);
            assert!(b[2] <= a[2]);
            if a[1] > 0.0 {
                assert!(b[2] < a[2]);
            }
        }
    }

    #[test]
    fn fig6_narrow_spectra_decay_slower() {
        let t = run_sweep(&figure_preset(FigureId::Fig6)).unwrap();
        let curves: Vec<&[Vec<f64>]> = t.rows.chunks(DEFAULT_POINTS).collect();
        // curves are ordered λ = 2, 0.5, 0.1, 0.05
        for i in 1..DEFAULT_POINTS {
            let q: Vec<f64> = curves.iter().map(|c| c[i][3]).collect();
            assert!(
                q[3] >= q[2] && q[2] >= q[1] && q[1] >= q[0],
                "gamma_t={}",
                curves[0][i][1]
            );
        }
    }
}
