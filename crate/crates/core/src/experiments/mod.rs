//! Parameter sweeps, the figure presets, and the self-verification suite.

mod presets;
mod sweep;
mod verify;

pub use presets::{figure_preset, figure_preset_with, FigureId, DEFAULT_POINTS};
pub use sweep::{
    evaluate_point, format_csv_float, run_sweep, Output, Param, PointParams, SweepSpec, SweepTable,
};
pub use verify::{verify_suite, CheckResult, Fault, VerifyOptions, VerifyReport};
