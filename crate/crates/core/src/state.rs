//! Qubit density matrices in the `(|e⟩, |g⟩)` basis.

use crate::error::{ensure_finite, Error, Result};
use crate::C64;
use nalgebra::Matrix2;

/// A 2×2 complex matrix. Row/column 0 is `|e⟩`, 1 is `|g⟩`.
pub type Mat2 = Matrix2<C64>;

/// Hermiticity and unit-trace tolerance of a validated state.
pub const STATE_TOL: f64 = 1e-12;
/// Slack allowed on the eigenvalues of a validated state.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Hermitian, unit-trace, positive 2×2 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    rho: Mat2,
}

impl QubitState {
    pub fn new(rho: Mat2) -> Result<Self> {
        Self::with_tolerance(rho, STATE_TOL, POSITIVITY_TOL)
    }

    /// Validate with explicit tolerances on Hermiticity/trace and positivity.
    pub fn with_tolerance(rho: Mat2, tol: f64, positivity_tol: f64) -> Result<Self> {
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = hermiticity_defect(&rho);
        if herm > tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let (lo, hi) = hermitian_eigenvalues(&rho);
        if lo < -positivity_tol || hi > 1.0 + positivity_tol {
            return Err(Error::InvalidState(format!(
                "eigenvalues ({lo:e}, {hi:e}) outside [0, 1]"
            )));
        }
        Ok(QubitState { rho })
    }

    /// Build from the populations and coherence, `ρ_gg = 1 − ρ_ee`.
    pub(crate) fn from_parts_unchecked(rho_ee: f64, rho_eg: C64) -> Self {
        QubitState {
            rho: Mat2::new(
                C64::new(rho_ee, 0.0),
                rho_eg,
                rho_eg.conj(),
                C64::new(1.0 - rho_ee, 0.0),
            ),
        }
    }

    pub fn rho(&self) -> &Mat2 {
        &self.rho
    }

    pub fn into_inner(self) -> Mat2 {
        self.rho
    }

    /// Excited-state population `ρ_ee`.
    pub fn rho_ee(&self) -> f64 {
        self.rho[(0, 0)].re
    }

    /// Coherence `ρ_eg`.
    pub fn rho_eg(&self) -> C64 {
        self.rho[(0, 1)]
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        hermitian_eigenvalues(&self.rho)
    }
}

/// Largest element-wise deviation of `m` from `m†`.
pub fn hermiticity_defect(m: &Mat2) -> f64 {
    let adj = m.adjoint();
    m.iter()
        .zip(adj.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub(crate) fn hermitian_eigenvalues(m: &Mat2) -> (f64, f64) {
    let mean = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let half = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let rad = half.hypot(off.norm());
    (mean - rad, mean + rad)
}

/// `|ψ⟩ = (|e⟩ + e^{iφ}|g⟩)/√2`-type probe after phase encoding:
/// `ρ_ee = ρ_gg = 1/2`, `ρ_eg = e^{iφ}/2`.
pub fn prepare_output_state(phi: f64) -> Result<QubitState> {
    ensure_finite("phi", phi)?;
    Ok(QubitState::from_parts_unchecked(
        0.5,
        0.5 * C64::from_polar(1.0, phi),
    ))
}

/// Bloch vector with `z = 2ρ_ee − 1` and `x + iy = 2ρ_eg`.
pub fn bloch_vector(state: &QubitState) -> [f64; 3] {
    let c = 2.0 * state.rho_eg();
    [c.re, c.im, 2.0 * state.rho_ee() - 1.0]
}

/// Inverse of [`bloch_vector`]. Fails outside the unit ball (with slack).
pub fn state_from_bloch(v: [f64; 3]) -> Result<QubitState> {
    for (name, x) in ["x", "y", "z"].iter().zip(v) {
        ensure_finite(name, x)?;
    }
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if norm > 1.0 + POSITIVITY_TOL {
        return Err(Error::InvalidState(format!(
            "Bloch vector length {norm} exceeds 1"
        )));
    }
    Ok(QubitState::from_parts_unchecked(
        0.5 * (1.0 + v[2]),
        0.5 * C64::new(v[0], v[1]),
    ))
}
