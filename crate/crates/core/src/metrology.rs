//! Quantum Fisher information of the encoded phase.
//!
//! Three routes are kept deliberately separate so they can check each other:
//!
//! * [`qfi_analytic`]: closed form in the solution coefficients;
//! * [`qfi_eigen`]: eigendecomposition of `ρ` with first-order perturbation
//!   theory for the derivatives of eigenvalues and eigenvectors;
//! * [`qfi_bloch`]: the single-qubit Bloch-vector identity.
//!
//! All routes act on interaction-picture states. A φ-independent unitary
//! (the free evolution) leaves eigenvalues and `|⟨φᵢ|∂φⱼ⟩|` unchanged, so
//! the QFI is the same in the Schrödinger picture.

use nalgebra::Vector2;

use crate::dynamics::{closed_form_state, SolutionCoefficients};
use crate::error::{ensure_finite, Error, Result};
use crate::state::{bloch_vector, hermiticity_defect, Mat2, QubitState};
use crate::C64;

/// Eigenvalues (or eigenvalue sums) below this are treated as zero.
pub const EIGEN_CUTOFF: f64 = 1e-12;
/// Step of the central-difference fallback derivative.
pub const FD_STEP: f64 = 1e-6;

/// Closed-form QFI as a function of `φ − θ/2` and `(A, B1, B2)`.
///
/// Returns exactly 1 for the unevolved coefficients, where the formula is
/// `0/0`.
pub fn qfi_analytic(phi: f64, theta: f64, coeffs: &SolutionCoefficients) -> Result<f64> {
    ensure_finite("phi", phi)?;
    ensure_finite("theta", theta)?;
    if coeffs.is_initial() {
        return Ok(1.0);
    }
    let SolutionCoefficients { a, b1, b2, .. } = *coeffs;
    let offset = phi - 0.5 * theta;
    let c2 = offset.cos().powi(2);
    let s2 = offset.sin().powi(2);
    let (a2, b1s, b2s) = (a * a, b1 * b1, b2 * b2);

    let numerator = b1s * (a2 + b2s - 1.0) - (1.0 - a2) * (b2s - b1s) * c2;
    let denominator = a2 + b1s * c2 + b2s * s2 - 1.0;
    if denominator.abs() < 1e-14 {
        return Err(Error::Singularity {
            denominator,
            a,
            b1,
            b2,
            offset,
        });
    }
    Ok(numerator / denominator)
}

/// `∂ρ/∂φ` of the closed-form state. The diagonal is φ-independent.
pub fn drho_analytic(phi: f64, theta: f64, coeffs: &SolutionCoefficients) -> Mat2 {
    let d = phi - 0.5 * theta;
    let eg = 0.5
        * C64::from_polar(1.0, 0.5 * theta)
        * C64::new(-d.sin() * coeffs.b1, d.cos() * coeffs.b2);
    let zero = C64::new(0.0, 0.0);
    Mat2::new(zero, eg, eg.conj(), zero)
}

/// Central difference `(f(φ+h) − f(φ−h))/2h` for states without a closed form.
pub fn drho_central_difference<F>(f: F, phi: f64, h: f64) -> Result<Mat2>
where
    F: Fn(f64) -> Result<Mat2>,
{
    let plus = f(phi + h)?;
    let minus = f(phi - h)?;
    Ok((plus - minus) / C64::from(2.0 * h))
}

/// Central-difference derivative of [`closed_form_state`] in `φ`.
pub fn drho_closed_form_fd(phi: f64, theta: f64, coeffs: &SolutionCoefficients) -> Result<Mat2> {
    drho_central_difference(
        |p| Ok(closed_form_state(p, theta, coeffs)?.into_inner()),
        phi,
        FD_STEP,
    )
}

/// Eigen-decomposition of a 2×2 Hermitian matrix, ascending eigenvalues,
/// orthonormal eigenvectors.
pub fn hermitian_eigen(m: &Mat2) -> ([f64; 2], [Vector2<C64>; 2]) {
    let p = m[(0, 0)].re;
    let q = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mean = 0.5 * (p + q);
    let half = 0.5 * (p - q);
    let rad = half.hypot(b.norm());
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);

    // eigenvector of the upper eigenvalue mean + rad
    let upper = if b.norm() == 0.0 {
        if half >= 0.0 {
            Vector2::new(one, zero)
        } else {
            Vector2::new(zero, one)
        }
    } else if half >= 0.0 {
        // second row: b* x − (half + rad) y = 0
        Vector2::new(C64::from(half + rad), b.conj())
    } else {
        // first row: (half − rad) x + b y = 0
        Vector2::new(b, C64::from(rad - half))
    };
    let upper = upper / C64::from(upper.norm());
    let lower = Vector2::new(-upper[1].conj(), upper[0].conj());
    ([mean - rad, mean + rad], [lower, upper])
}

fn check_derivative(drho: &Mat2) -> Result<()> {
    if drho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("derivative has non-finite entries".into()));
    }
    let herm = hermiticity_defect(drho);
    if herm > 1e-10 {
        return Err(Error::Domain(format!(
            "derivative not Hermitian (defect {herm:e})"
        )));
    }
    let tr = drho.trace().norm();
    if tr > 1e-10 {
        return Err(Error::Domain(format!(
            "derivative not traceless (|tr| = {tr:e})"
        )));
    }
    Ok(())
}

/// QFI from the spectral decomposition of `ρ`:
/// `Σᵢ (∂λᵢ)²/λᵢ + Σ_{i≠j} 2(λᵢ−λⱼ)²/(λᵢ+λⱼ) |⟨φᵢ|∂φⱼ⟩|²`.
///
/// Eigenvalue derivatives and eigenvector overlaps come from first-order
/// perturbation theory in `drho`. Terms whose eigenvalue (or pair sum) is
/// below [`EIGEN_CUTOFF`] are dropped. For a degenerate pair the product
/// `(λᵢ−λⱼ)²|⟨φᵢ|∂φⱼ⟩|²` is replaced by its limit `|⟨φᵢ|∂ρ|φⱼ⟩|²`.
pub fn qfi_eigen(rho: &QubitState, drho: &Mat2) -> Result<f64> {
    check_derivative(drho)?;
    let (lambda, vecs) = hermitian_eigen(rho.rho());
    let elem = |i: usize, j: usize| -> C64 { (vecs[i].adjoint() * drho * vecs[j])[(0, 0)] };

    let mut f = 0.0;
    for (i, &li) in lambda.iter().enumerate() {
        if li >= EIGEN_CUTOFF {
            let dl = elem(i, i).re;
            f += dl * dl / li;
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            if i == j {
                continue;
            }
            let sum = lambda[i] + lambda[j];
            if sum < EIGEN_CUTOFF {
                continue;
            }
            let gap = lambda[i] - lambda[j];
            let weighted = if gap.abs() < EIGEN_CUTOFF {
                elem(i, j).norm_sqr()
            } else {
                let overlap = elem(i, j) / (lambda[j] - lambda[i]);
                gap * gap * overlap.norm_sqr()
            };
            f += 2.0 * weighted / sum;
        }
    }
    Ok(f)
}

/// Bloch-vector derivative matching the [`bloch_vector`] convention.
pub fn bloch_derivative(drho: &Mat2) -> [f64; 3] {
    let c = 2.0 * drho[(0, 1)];
    [c.re, c.im, 2.0 * drho[(0, 0)].re]
}

/// Single-qubit QFI from the Bloch vector `r` and its derivative:
/// `|∂r|² + (r·∂r)²/(1 − |r|²)`, or `|∂r|²` on the pure-state boundary.
pub fn qfi_bloch(r: [f64; 3], dr: [f64; 3]) -> Result<f64> {
    for x in r.iter().chain(dr.iter()) {
        ensure_finite("Bloch component", *x)?;
    }
    let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let len2 = dot(r, r);
    if len2.sqrt() > 1.0 + 1e-9 {
        return Err(Error::Domain(format!(
            "Bloch vector length {} exceeds 1",
            len2.sqrt()
        )));
    }
    let grad2 = dot(dr, dr);
    let radial = dot(r, dr);
    let defect = 1.0 - len2;
    if defect < 1e-10 {
        if radial.abs() < 1e-8 {
            return Ok(grad2);
        }
        return Err(Error::Domain(format!(
            "pure-state boundary with radial derivative r·dr = {radial:e}"
        )));
    }
    Ok(grad2 + radial * radial / defect)
}

/// Symmetric logarithmic derivative `L` solving `2∂ρ = Lρ + ρL`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SldMatrix {
    pub l: Mat2,
}

impl SldMatrix {
    /// `Tr(ρL²)`, equal to the QFI.
    pub fn qfi(&self, rho: &QubitState) -> f64 {
        (rho.rho() * self.l * self.l).trace().re
    }

    /// Largest entry of `Lρ + ρL − 2∂ρ`.
    pub fn residual(&self, rho: &QubitState, drho: &Mat2) -> f64 {
        let lhs = self.l * rho.rho() + rho.rho() * self.l;
        let rhs = drho * C64::from(2.0);
        lhs.iter()
            .zip(rhs.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Solve the SLD equation in the eigenbasis of `ρ`: `L_ij = 2∂ρ_ij/(λᵢ+λⱼ)`.
///
/// Components with `λᵢ+λⱼ` below the cutoff are set to zero; if `∂ρ` has
/// weight there the equation has no solution and an error is returned.
pub fn sld(rho: &QubitState, drho: &Mat2) -> Result<SldMatrix> {
    check_derivative(drho)?;
    let (lambda, vecs) = hermitian_eigen(rho.rho());
    let basis = Mat2::from_columns(&vecs);
    let d = basis.adjoint() * drho * basis;
    let mut l_eig = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let sum = lambda[i] + lambda[j];
            if sum < EIGEN_CUTOFF {
                let magnitude = d[(i, j)].norm();
                if magnitude > 1e-9 {
                    return Err(Error::Unresolvable { i, j, magnitude });
                }
                continue;
            }
            l_eig[(i, j)] = d[(i, j)] * C64::from(2.0 / sum);
        }
    }
    let l = basis * l_eig * basis.adjoint();
    // symmetrize away rounding
    let l = (l + l.adjoint()) * C64::from(0.5);
    Ok(SldMatrix { l })
}

/// QFI without squeezing, `e^{−2(1+2n)ϑ}`.
pub fn qfi_thermal(vt: f64, n: f64) -> Result<f64> {
    ensure_finite("vartheta", vt)?;
    ensure_finite("n", n)?;
    if vt < 0.0 || n < 0.0 {
        return Err(Error::Domain(format!(
            "need vartheta, n >= 0; got {vt}, {n}"
        )));
    }
    Ok((-2.0 * (1.0 + 2.0 * n) * vt).exp())
}

/// Whether squeezing beats the unsqueezed reservoir at the same `ϑ` and `n`.
///
/// Returns `(F − F_th > 0, F − F_th)`.
pub fn squeezing_advantage(
    phi: f64,
    theta: f64,
    coeffs: &SolutionCoefficients,
    n: f64,
) -> Result<(bool, f64)> {
    let margin = qfi_analytic(phi, theta, coeffs)? - qfi_thermal(coeffs.vartheta, n)?;
    Ok((margin > 0.0, margin))
}

/// The advantage condition rearranged as a bound on `cos²(φ − θ/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageThreshold {
    /// `(A²+B2²−1)(B1²−F_th) / ((B1²−B2²)(A²+F_th−1))`.
    pub threshold: f64,
    /// Whether `cos²(φ − θ/2)` lies on the advantage side of the threshold.
    pub holds: bool,
}

/// Threshold form of the squeezing-advantage condition. `None` when the
/// condition degenerates (`B1 = B2` or `A² + F_th = 1`), e.g. without squeezing.
pub fn advantage_threshold(
    phi: f64,
    theta: f64,
    coeffs: &SolutionCoefficients,
    n: f64,
) -> Result<Option<AdvantageThreshold>> {
    let f_th = qfi_thermal(coeffs.vartheta, n)?;
    let SolutionCoefficients { a, b1, b2, .. } = *coeffs;
    let (a2, b1s, b2s) = (a * a, b1 * b1, b2 * b2);
    let lhs_scale = (b1s - b2s) * (a2 + f_th - 1.0);
    let rhs = (a2 + b2s - 1.0) * (b1s - f_th);
    if lhs_scale == 0.0 {
        return Ok(None);
    }
    let c2 = (phi - 0.5 * theta).cos().powi(2);
    Ok(Some(AdvantageThreshold {
        threshold: rhs / lhs_scale,
        holds: c2 * lhs_scale > rhs,
    }))
}

/// Split of the spectral QFI into its eigenvalue and eigenvector parts,
/// written in terms of `m = 2|r|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MDecomposition {
    /// `(B1²−B2²) sin²(2φ−θ)/[m(2−m)]`, with the prefactor unsquared.
    pub first_unsquared: f64,
    /// `(B1²−B2²)² sin²(2φ−θ)/[m(2−m)]`, the eigenvalue term `Σ(∂λ)²/λ`.
    pub first: f64,
    /// `{2A²[B1² sin² + B2² cos²] + 2B1²B2²}/m`, the eigenvector term.
    pub second: f64,
}

impl MDecomposition {
    pub fn total(&self) -> f64 {
        self.first + self.second
    }

    pub fn total_unsquared(&self) -> f64 {
        self.first_unsquared + self.second
    }
}

pub fn m_decomposition(
    phi: f64,
    theta: f64,
    coeffs: &SolutionCoefficients,
) -> Result<MDecomposition> {
    ensure_finite("phi", phi)?;
    ensure_finite("theta", theta)?;
    let SolutionCoefficients { a, b1, b2, .. } = *coeffs;
    let d = phi - 0.5 * theta;
    let (c2, s2) = (d.cos().powi(2), d.sin().powi(2));
    let (a2, b1s, b2s) = (a * a, b1 * b1, b2 * b2);
    let m = 2.0 * (a2 + b1s * c2 + b2s * s2);
    let pure_gap = m * (2.0 - m);
    if pure_gap.abs() < 1e-14 || m.abs() < 1e-14 {
        return Err(Error::Singularity {
            denominator: pure_gap,
            a,
            b1,
            b2,
            offset: d,
        });
    }
    let sin2 = (2.0 * phi - theta).sin().powi(2);
    let diff = b1s - b2s;
    Ok(MDecomposition {
        first_unsquared: diff * sin2 / pure_gap,
        first: diff * diff * sin2 / pure_gap,
        second: (2.0 * a2 * (b1s * s2 + b2s * c2) + 2.0 * b1s * b2s) / m,
    })
}

/// Cramér–Rao bound `1/√(νF)` on the phase uncertainty.
pub fn cramer_rao_bound(f: f64, nu: u64) -> Result<f64> {
    ensure_finite("F", f)?;
    if f <= 0.0 {
        return Err(Error::Domain(format!(
            "Fisher information must be > 0, got {f}"
        )));
    }
    if nu == 0 {
        return Err(Error::Domain("repetition count must be >= 1".into()));
    }
    Ok(1.0 / (nu as f64 * f).sqrt())
}

/// All QFI routes at one parameter point, with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiReport {
    pub qfi_analytic: f64,
    pub qfi_eigen: f64,
    pub qfi_bloch: f64,
    pub qfi_sld: f64,
    pub max_pairwise_disagreement: f64,
    pub thermal_baseline: f64,
    pub advantage: bool,
    pub margin: f64,
    /// Threshold form of the advantage test; `None` where it degenerates.
    pub threshold: Option<AdvantageThreshold>,
}

/// Evaluate every route on the closed-form state.
pub fn qfi_report(
    phi: f64,
    theta: f64,
    coeffs: &SolutionCoefficients,
    n: f64,
) -> Result<QfiReport> {
    let state = closed_form_state(phi, theta, coeffs)?;
    let drho = drho_analytic(phi, theta, coeffs);
    let analytic = qfi_analytic(phi, theta, coeffs)?;
    let eigen = qfi_eigen(&state, &drho)?;
    let bloch = qfi_bloch(bloch_vector(&state), bloch_derivative(&drho))?;
    let via_sld = sld(&state, &drho)?.qfi(&state);
    let routes = [analytic, eigen, bloch];
    let mut worst: f64 = 0.0;
    for i in 0..routes.len() {
        for j in i + 1..routes.len() {
            worst = worst.max((routes[i] - routes[j]).abs());
        }
    }
    let (advantage, margin) = squeezing_advantage(phi, theta, coeffs, n)?;
    Ok(QfiReport {
        qfi_analytic: analytic,
        qfi_eigen: eigen,
        qfi_bloch: bloch,
        qfi_sld: via_sld,
        max_pairwise_disagreement: worst,
        thermal_baseline: qfi_thermal(coeffs.vartheta, n)?,
        advantage,
        margin,
        threshold: advantage_threshold(phi, theta, coeffs, n)?,
    })
}
