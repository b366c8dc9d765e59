//! Phase estimation with a single qubit decohering in a squeezed thermal
//! reservoir.
//!
//! The crate covers the whole pipeline: bath parameters ([`reservoir`]), the
//! phase-encoded probe state ([`state`]), the time-local master equation and
//! its closed-form solution ([`dynamics`]), the quantum Fisher information
//! of the phase computed three independent ways ([`metrology`]), and canned
//! parameter sweeps plus a self-verification suite ([`experiments`]).
//!
//! Conventions used everywhere:
//!
//! * basis ordering is `(|e⟩, |g⟩)`, index 0 is the excited state;
//! * times are measured in units of `1/γ` (with the default `γ = 1`, `t` is
//!   `γt`), spectral widths as `λ/γ`, temperatures as `kT/ω₀`;
//! * the Bloch vector is `z = 2ρ_ee − 1`, `x + iy = 2ρ_eg`.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod metrology;
pub mod reservoir;
pub mod state;

pub use dynamics::{
    alpha, closed_form_state, evolve_numeric, master_generator, solution_coefficients, vartheta,
    EvolutionMode, SolutionCoefficients, Trajectory, DEFAULT_DT,
};
pub use error::{Error, Result};
pub use experiments::{
    figure_preset, figure_preset_with, run_sweep, verify_suite, FigureId, Output, Param, SweepSpec,
    SweepTable, VerifyOptions, VerifyReport,
};
pub use metrology::{
    cramer_rao_bound, drho_analytic, qfi_analytic, qfi_bloch, qfi_eigen, qfi_report, qfi_thermal,
    sld, squeezing_advantage, QfiReport, SldMatrix,
};
pub use reservoir::{
    bath_coefficients, mean_photon_number, BathCoefficients, PhaseScenario, ReservoirSpec,
};
pub use state::{bloch_vector, prepare_output_state, state_from_bloch, Mat2, QubitState};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
