//! Squeezed thermal reservoir parameters and the bath coefficients `N`, `M`.
//!
//! The bath never appears as a Hilbert space; it enters the qubit dynamics
//! only through the effective occupation `N`, the two-photon correlation `M`
//! and the memory kernel (see [`crate::dynamics::alpha`]).

use crate::error::{ensure_finite, Error, Result};
use crate::C64;

/// Bath and coupling parameters.
///
/// `gamma` fixes the unit of time; the CLI and presets always use `gamma = 1`
/// so that times read as `γt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirSpec {
    pub gamma: f64,
    pub lambda_over_gamma: f64,
    pub r: f64,
    /// Squeezing reference phase. Stored as given, not reduced modulo 2π.
    pub theta: f64,
    pub kt_over_omega: f64,
}

impl ReservoirSpec {
    pub fn new(lambda_over_gamma: f64, r: f64, theta: f64, kt_over_omega: f64) -> Result<Self> {
        let spec = ReservoirSpec {
            gamma: 1.0,
            lambda_over_gamma,
            r,
            theta,
            kt_over_omega,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("gamma", self.gamma)?;
        ensure_finite("lambda", self.lambda_over_gamma)?;
        ensure_finite("r", self.r)?;
        ensure_finite("theta", self.theta)?;
        ensure_finite("kT", self.kt_over_omega)?;
        if self.gamma <= 0.0 {
            return Err(Error::Domain(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if self.lambda_over_gamma <= 0.0 {
            return Err(Error::Domain(format!(
                "lambda/gamma must be > 0, got {}",
                self.lambda_over_gamma
            )));
        }
        if self.r < 0.0 {
            return Err(Error::Domain(format!("r must be >= 0, got {}", self.r)));
        }
        if self.kt_over_omega < 0.0 {
            return Err(Error::Domain(format!(
                "kT/omega must be >= 0, got {}",
                self.kt_over_omega
            )));
        }
        Ok(())
    }

    /// Spectral width `λ` in absolute units.
    pub fn lambda(&self) -> f64 {
        self.lambda_over_gamma * self.gamma
    }

    /// Mean thermal photon number at the qubit resonance.
    pub fn mean_photon_number(&self) -> f64 {
        // validated on construction
        mean_photon_number(self.kt_over_omega).unwrap_or(0.0)
    }

    pub fn bath(&self) -> BathCoefficients {
        bath_coefficients(self.r, self.theta, self.mean_photon_number())
            .expect("validated reservoir gives finite bath coefficients")
    }
}

/// The estimated phase `φ` (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseScenario {
    pub phi: f64,
}

/// Effective occupation `N` and two-photon correlation `M` of the squeezed bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathCoefficients {
    pub n_eff: f64,
    pub m: C64,
}

/// Bose–Einstein occupation `1/(e^{ω/kT} − 1)` with `kT` in units of `ω`.
///
/// `kT = 0` is the continuous limit `n = 0`.
pub fn mean_photon_number(kt_over_omega: f64) -> Result<f64> {
    ensure_finite("kT", kt_over_omega)?;
    if kt_over_omega < 0.0 {
        return Err(Error::Domain(format!(
            "kT/omega must be >= 0, got {kt_over_omega}"
        )));
    }
    if kt_over_omega == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (1.0 / kt_over_omega).exp_m1())
}

/// `N = n(cosh²r + sinh²r) + sinh²r`, `M = −cosh r sinh r e^{iθ}(2n + 1)`.
pub fn bath_coefficients(r: f64, theta: f64, n: f64) -> Result<BathCoefficients> {
    ensure_finite("r", r)?;
    ensure_finite("theta", theta)?;
    ensure_finite("n", n)?;
    if r < 0.0 || n < 0.0 {
        return Err(Error::Domain(format!(
            "need r >= 0 and n >= 0, got r={r}, n={n}"
        )));
    }
    let (sh, ch) = (r.sinh(), r.cosh());
    let n_eff = n * (ch * ch + sh * sh) + sh * sh;
    let m = -ch * sh * (2.0 * n + 1.0) * C64::from_polar(1.0, theta);
    Ok(BathCoefficients { n_eff, m })
}
