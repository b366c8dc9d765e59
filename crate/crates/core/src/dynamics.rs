//! Time-local master equation for the qubit, its closed-form solution, and a
//! fixed-step RK4 integrator used to cross-check the closed form.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, Error, Result};
use crate::reservoir::{BathCoefficients, ReservoirSpec};
use crate::state::{hermitian_eigenvalues, hermiticity_defect, Mat2, QubitState};
use crate::C64;

/// Default RK4 step, in units of `1/γ`.
pub const DEFAULT_DT: f64 = 1e-3;

/// Tolerance on state invariants checked after every integration step.
const INTEGRATION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvolutionMode {
    /// Lorentzian bath memory, `α(t) = (γ/2)(1 − e^{−λt})`.
    NonMarkovian,
    /// Flat spectrum, `α = γ`.
    Markovian,
}

impl EvolutionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvolutionMode::NonMarkovian => "nonMarkovian",
            EvolutionMode::Markovian => "markovian",
        }
    }
}

impl fmt::Display for EvolutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvolutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nonmarkovian" => Ok(EvolutionMode::NonMarkovian),
            "markovian" => Ok(EvolutionMode::Markovian),
            _ => Err(Error::Config(format!(
                "unknown mode '{s}' (expected nonMarkovian or markovian)"
            ))),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    ensure_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

/// Memory-kernel rate `α(t)`.
///
/// Complex so that the generator can carry the separate `α` and `α*` terms,
/// although both modes produce real values.
pub fn alpha(t: f64, spec: &ReservoirSpec, mode: EvolutionMode) -> Result<C64> {
    check_time(t)?;
    let g = spec.gamma;
    Ok(match mode {
        EvolutionMode::NonMarkovian => C64::new(-0.5 * g * (-spec.lambda() * t).exp_m1(), 0.0),
        EvolutionMode::Markovian => C64::new(g, 0.0),
    })
}

/// `x + e^{−x} − 1`, accurate for small `x`.
fn ramp_deficit(x: f64) -> f64 {
    if x < 1e-2 {
        // x²/2 − x³/6 + x⁴/24 − x⁵/120 + x⁶/720
        let x2 = x * x;
        x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0 + x2 * x2 / 720.0)
    } else {
        x + (-x).exp_m1()
    }
}

/// Decay clock `ϑ(t) = ∫₀ᵗ α(τ) dτ`.
pub fn vartheta(t: f64, spec: &ReservoirSpec, mode: EvolutionMode) -> Result<f64> {
    check_time(t)?;
    let g = spec.gamma;
    Ok(match mode {
        EvolutionMode::NonMarkovian => {
            let lambda = spec.lambda();
            0.5 * g * ramp_deficit(lambda * t) / lambda
        }
        EvolutionMode::Markovian => g * t,
    })
}

/// The quantities `(ϑ, A, B1, B2)` that fully determine the evolved state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionCoefficients {
    pub vartheta: f64,
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
}

impl SolutionCoefficients {
    /// Coefficients of the unevolved state.
    pub const INITIAL: SolutionCoefficients = SolutionCoefficients {
        vartheta: 0.0,
        a: 0.0,
        b1: 1.0,
        b2: 1.0,
    };

    /// Coefficients at time `t` for the given reservoir.
    pub fn at(t: f64, spec: &ReservoirSpec, mode: EvolutionMode) -> Result<Self> {
        let vt = vartheta(t, spec, mode)?;
        solution_coefficients(vt, spec.mean_photon_number(), spec.r)
    }

    pub fn is_initial(&self) -> bool {
        self.a == 0.0 && self.b1 == 1.0 && self.b2 == 1.0
    }
}

/// `A = (e^{−2(1+2n)ϑ cosh 2r} − 1)/((1+2n) cosh 2r)`,
/// `B1 = e^{−e^{2r}(1+2n)ϑ}`, `B2 = e^{−e^{−2r}(1+2n)ϑ}`.
pub fn solution_coefficients(vt: f64, n: f64, r: f64) -> Result<SolutionCoefficients> {
    ensure_finite("vartheta", vt)?;
    ensure_finite("n", n)?;
    ensure_finite("r", r)?;
    if vt < 0.0 || n < 0.0 || r < 0.0 {
        return Err(Error::Domain(format!(
            "need vartheta, n, r >= 0; got vartheta={vt}, n={n}, r={r}"
        )));
    }
    let k = 1.0 + 2.0 * n;
    let ch2 = (2.0 * r).cosh();
    Ok(SolutionCoefficients {
        vartheta: vt,
        a: (-2.0 * k * vt * ch2).exp_m1() / (k * ch2),
        b1: (-(2.0 * r).exp() * k * vt).exp(),
        b2: (-(-2.0 * r).exp() * k * vt).exp(),
    })
}

/// Interaction-picture state `ρ(t)` of the phase-encoded probe.
pub fn closed_form_state(
    phi: f64,
    theta: f64,
    coeffs: &SolutionCoefficients,
) -> Result<QubitState> {
    ensure_finite("phi", phi)?;
    ensure_finite("theta", theta)?;
    let SolutionCoefficients { a, b1, b2, .. } = *coeffs;
    if !(a > -1.0 && a <= 0.0 && (0.0..=1.0).contains(&b1) && (0.0..=1.0).contains(&b2)) {
        return Err(Error::Domain(format!(
            "invalid solution coefficients A={a}, B1={b1}, B2={b2}"
        )));
    }
    let d = phi - 0.5 * theta;
    let rho_eg = 0.5 * C64::from_polar(1.0, 0.5 * theta) * C64::new(d.cos() * b1, d.sin() * b2);
    Ok(QubitState::from_parts_unchecked(0.5 * (1.0 + a), rho_eg))
}

/// Qubit ladder operators `σ₊ = |e⟩⟨g|`, `σ₋ = |g⟩⟨e|`.
fn ladder() -> (Mat2, Mat2) {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let sp = Mat2::new(zero, one, zero, zero);
    (sp, sp.adjoint())
}

/// Right-hand side of the master equation with precomputed bath data.
#[derive(Debug, Clone, Copy)]
pub struct MasterEquation {
    spec: ReservoirSpec,
    bath: BathCoefficients,
    mode: EvolutionMode,
    sp: Mat2,
    sm: Mat2,
}

impl MasterEquation {
    pub fn new(spec: &ReservoirSpec, mode: EvolutionMode) -> Result<Self> {
        spec.validate()?;
        let (sp, sm) = ladder();
        Ok(MasterEquation {
            spec: *spec,
            bath: spec.bath(),
            mode,
            sp,
            sm,
        })
    }

    pub fn rhs(&self, t: f64, rho: &Mat2) -> Result<Mat2> {
        match self.mode {
            EvolutionMode::NonMarkovian => {
                let a = alpha(t, &self.spec, self.mode)?;
                Ok(self.time_local(a, rho))
            }
            EvolutionMode::Markovian => {
                check_time(t)?;
                Ok(self.markovian(rho))
            }
        }
    }

    fn time_local(&self, a: C64, rho: &Mat2) -> Mat2 {
        let (sp, sm) = (&self.sp, &self.sm);
        let n = C64::new(self.bath.n_eff, 0.0);
        let n1 = n + 1.0;
        let m = self.bath.m;
        let pm = sp * sm;
        let mp = sm * sp;

        let two = C64::from(2.0);
        -(pm * rho - sm * rho * sp) * (n1 * a)
            - (rho * pm - sm * rho * sp) * (n1 * a.conj())
            - (rho * mp - sp * rho * sm) * (n * a)
            - (mp * rho - sp * rho * sm) * (n * a.conj())
            + ((sp * rho * sp) * (a.conj() * m) + (sm * rho * sm) * (a * m.conj())) * two
    }

    fn markovian(&self, rho: &Mat2) -> Mat2 {
        let (sp, sm) = (&self.sp, &self.sm);
        let g = self.spec.gamma;
        let n = self.bath.n_eff;
        let m = self.bath.m;
        let pm = sp * sm;
        let mp = sm * sp;

        let two = C64::from(2.0);
        -(pm * rho - (sm * rho * sp) * two + rho * pm) * C64::from(g * (n + 1.0))
            - (mp * rho - (sp * rho * sm) * two + rho * mp) * C64::from(g * n)
            + ((sp * rho * sp) * m + (sm * rho * sm) * m.conj()) * C64::from(2.0 * g)
    }
}

/// `dρ/dt` at time `t`.
pub fn master_generator(
    rho: &Mat2,
    t: f64,
    spec: &ReservoirSpec,
    mode: EvolutionMode,
) -> Result<Mat2> {
    MasterEquation::new(spec, mode)?.rhs(t, rho)
}

/// Sampled solution of the master equation, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<(f64, QubitState)>,
}

impl Trajectory {
    pub fn points(&self) -> &[(f64, QubitState)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> &(f64, QubitState) {
        self.points
            .last()
            .expect("trajectory always holds the initial point")
    }

    /// Every `stride`-th point, always keeping the final one.
    pub fn thinned(&self, stride: usize) -> Vec<(f64, QubitState)> {
        let stride = stride.max(1);
        let mut out: Vec<_> = self.points.iter().step_by(stride).copied().collect();
        if !(self.points.len() - 1).is_multiple_of(stride) {
            out.push(*self.last());
        }
        out
    }
}

fn check_step(t: f64, dt: f64, rho: Mat2) -> Result<QubitState> {
    let fail = |reason: String| Error::Integration { t, dt, reason };
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(fail("non-finite state".into()));
    }
    let herm = hermiticity_defect(&rho);
    let tr = rho.trace();
    let (lo, hi) = hermitian_eigenvalues(&rho);
    if herm > INTEGRATION_TOL {
        return Err(fail(format!("Hermiticity defect {herm:e}")));
    }
    if (tr.re - 1.0).abs() > INTEGRATION_TOL || tr.im.abs() > INTEGRATION_TOL {
        return Err(fail(format!("trace drifted to {tr}")));
    }
    if lo < -INTEGRATION_TOL || hi > 1.0 + INTEGRATION_TOL {
        return Err(fail(format!("eigenvalues ({lo:e}, {hi:e}) left [0, 1]")));
    }
    QubitState::with_tolerance(rho, INTEGRATION_TOL, INTEGRATION_TOL)
        .map_err(|e| fail(e.to_string()))
}

/// Integrate the master equation with classical fixed-step RK4.
///
/// Steps land on `k·dt`; the last step is shortened to end exactly at
/// `t_end`. Every step is stored.
pub fn evolve_numeric(
    initial: &QubitState,
    spec: &ReservoirSpec,
    mode: EvolutionMode,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    check_time(t_end)?;
    ensure_finite("dt", dt)?;
    let mut points = vec![(0.0, *initial)];
    if t_end == 0.0 {
        return Ok(Trajectory { points });
    }
    if dt <= 0.0 || dt > t_end {
        return Err(Error::Domain(format!(
            "need 0 < dt <= t_end, got dt={dt}, t_end={t_end}"
        )));
    }
    let eq = MasterEquation::new(spec, mode)?;
    let steps = ((t_end / dt) * (1.0 - 1e-12)).ceil() as usize;
    points.reserve(steps);

    let mut rho = *initial.rho();
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { k as f64 * dt };
        let h = t_next - t;
        let k1 = eq.rhs(t, &rho)?;
        let k2 = eq.rhs(t + 0.5 * h, &(rho + k1 * C64::from(0.5 * h)))?;
        let k3 = eq.rhs(t + 0.5 * h, &(rho + k2 * C64::from(0.5 * h)))?;
        let k4 = eq.rhs(t_next, &(rho + k3 * C64::from(h)))?;
        rho += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0);
        t = t_next;
        points.push((t, check_step(t, dt, rho)?));
    }
    Ok(Trajectory { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::prepare_output_state;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(lambda: f64, r: f64, theta: f64, kt: f64) -> ReservoirSpec {
        ReservoirSpec::new(lambda, r, theta, kt).unwrap()
    }

    fn max_diff(a: &Mat2, b: &Mat2) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn alpha_limits() {
        let s = spec(0.1, 1.0, 0.0, 0.0);
        assert_eq!(
            alpha(0.0, &s, EvolutionMode::NonMarkovian).unwrap(),
            C64::new(0.0, 0.0)
        );
        let late = alpha(50.0 / 0.1, &s, EvolutionMode::NonMarkovian).unwrap();
        assert!((late.re - 0.5).abs() < 1e-12 && late.im == 0.0);
        for t in [0.0, 0.3, 7.0] {
            assert_eq!(
                alpha(t, &s, EvolutionMode::Markovian).unwrap(),
                C64::new(1.0, 0.0)
            );
        }
        assert!(alpha(-1.0, &s, EvolutionMode::NonMarkovian).is_err());
    }

    #[test]
    fn vartheta_reference_points() {
        let s = spec(0.1, 0.0, 0.0, 0.0);
        assert_eq!(vartheta(0.0, &s, EvolutionMode::NonMarkovian).unwrap(), 0.0);
        assert_eq!(vartheta(2.0, &s, EvolutionMode::Markovian).unwrap(), 2.0);
        assert!(vartheta(-0.5, &s, EvolutionMode::Markovian).is_err());
    }

    #[test]
    fn vartheta_short_time_expansion() {
        // ϑ ≈ γλt²/4 for λt ≪ 1; at λt = 1e-4 the next term is O(λt) relative.
        let s = spec(0.1, 0.0, 0.0, 0.0);
        let t = 1e-4 / 0.1;
        let v = vartheta(t, &s, EvolutionMode::NonMarkovian).unwrap();
        let leading = 0.1 * t * t / 4.0;
        assert!((v / leading - 1.0).abs() < 1e-4);
        // series branch and direct branch meet continuously
        let x: f64 = 1e-2;
        let direct = x + (-x).exp_m1();
        assert_relative_eq!(ramp_deficit(x * (1.0 - 1e-12)), direct, max_relative = 1e-9);
    }

    #[test]
    fn vartheta_matches_trapezoid_quadrature() {
        for &(lambda, t_end) in &[(0.1, 10.0), (2.0, 3.0), (0.05, 1.0)] {
            let s = spec(lambda, 0.0, 0.0, 0.0);
            let panels = 100_000;
            let h = t_end / panels as f64;
            let f = |t: f64| 0.5 * (1.0 - (-lambda * t).exp());
            let mut sum = 0.5 * (f(0.0) + f(t_end));
            for k in 1..panels {
                sum += f(k as f64 * h);
            }
            let quad = sum * h;
            let v = vartheta(t_end, &s, EvolutionMode::NonMarkovian).unwrap();
            assert!((v - quad).abs() <= 1e-9, "lambda={lambda}: {v} vs {quad}");
        }
    }

    #[test]
    fn coefficient_limits() {
        assert_eq!(
            solution_coefficients(0.0, 0.3, 1.0).unwrap(),
            SolutionCoefficients::INITIAL
        );
        let (vt, n) = (0.7, 0.4);
        let c = solution_coefficients(vt, n, 0.0).unwrap();
        let k = 1.0 + 2.0 * n;
        assert_relative_eq!(c.a, ((-2.0 * k * vt).exp() - 1.0) / k, max_relative = 1e-14);
        assert_eq!(c.b1, c.b2);
        assert_relative_eq!(c.b1, (-k * vt).exp(), max_relative = 1e-14);

        let late = solution_coefficients(1e3, n, 0.5).unwrap();
        assert_relative_eq!(late.a, -1.0 / (k * 1f64.cosh()), max_relative = 1e-14);
        assert_eq!(late.b1, 0.0);
        assert!(late.b2 < 1e-100);
        assert!(solution_coefficients(-1.0, 0.0, 0.0).is_err());
        assert!(solution_coefficients(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_reduces_to_probe_at_start() {
        for &(phi, theta) in &[(0.0, 0.0), (0.3, 2.0), (2.5, 5.9)] {
            let s = closed_form_state(phi, theta, &SolutionCoefficients::INITIAL).unwrap();
            let p = prepare_output_state(phi).unwrap();
            assert!(max_diff(s.rho(), p.rho()) < 1e-15);
        }
    }

    #[test]
    fn equal_b_shrinks_coherence_without_rotation() {
        let c = SolutionCoefficients {
            vartheta: 0.1,
            a: -0.2,
            b1: 0.6,
            b2: 0.6,
        };
        let s = closed_form_state(1.1, 0.8, &c).unwrap();
        let want = 0.3 * C64::from_polar(1.0, 1.1);
        assert!((s.rho_eg() - want).norm() < 1e-15);
    }

    #[test]
    fn generator_vanishes_at_start_of_memory() {
        let s = spec(0.1, 1.0, 0.4, 0.5);
        let rho = *prepare_output_state(0.3).unwrap().rho();
        let d = master_generator(&rho, 0.0, &s, EvolutionMode::NonMarkovian).unwrap();
        assert!(d.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn generator_is_traceless_and_hermitian() {
        let s = spec(0.5, 1.2, 0.9, 0.7);
        let rho = *closed_form_state(
            0.4,
            0.9,
            &SolutionCoefficients::at(1.0, &s, EvolutionMode::NonMarkovian).unwrap(),
        )
        .unwrap()
        .rho();
        for mode in [EvolutionMode::NonMarkovian, EvolutionMode::Markovian] {
            let d = master_generator(&rho, 1.0, &s, mode).unwrap();
            assert!(d.trace().norm() < 1e-12);
            assert!(hermiticity_defect(&d) < 1e-12);
        }
    }

    #[test]
    fn vacuum_decay_drives_population_down() {
        // N = M = 0: dρ_ee/dt = −2α ρ_ee, so −α at the maximally mixed state.
        let s = spec(0.1, 0.0, 0.0, 0.0);
        let half = C64::new(0.5, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mixed = Mat2::new(half, zero, zero, half);
        let t = 3.0;
        let a = alpha(t, &s, EvolutionMode::NonMarkovian).unwrap().re;
        let d = master_generator(&mixed, t, &s, EvolutionMode::NonMarkovian).unwrap();
        assert!(d[(0, 0)].re < 0.0);
        assert_relative_eq!(d[(0, 0)].re, -a, max_relative = 1e-14);
    }

    #[test]
    fn stationary_population_is_fixed_point() {
        // dρ_ee/dt = −2α[(2N+1)ρ_ee − N] ⇒ ρ_ee* = N/(2N+1) = (1 − 1/((1+2n)cosh 2r))/2.
        let s = spec(0.1, 0.8, 0.3, 0.5);
        let n = s.mean_photon_number();
        let pop = 0.5 * (1.0 - 1.0 / ((1.0 + 2.0 * n) * (1.6f64).cosh()));
        let coh = C64::new(0.05, -0.02);
        let rho = Mat2::new(
            C64::new(pop, 0.0),
            coh,
            coh.conj(),
            C64::new(1.0 - pop, 0.0),
        );
        for mode in [EvolutionMode::NonMarkovian, EvolutionMode::Markovian] {
            let d = master_generator(&rho, 200.0, &s, mode).unwrap();
            assert!(d[(0, 0)].re.abs() < 1e-14, "{mode}: {}", d[(0, 0)]);
        }
    }

    #[test]
    fn markovian_generator_equals_time_local_at_alpha_gamma() {
        let s = spec(0.3, 0.9, 1.7, 0.8);
        let eq = MasterEquation::new(&s, EvolutionMode::Markovian).unwrap();
        let rho = *closed_form_state(
            0.2,
            1.7,
            &SolutionCoefficients::at(0.4, &s, EvolutionMode::Markovian).unwrap(),
        )
        .unwrap()
        .rho();
        let literal = eq.markovian(&rho);
        let via_alpha = eq.time_local(C64::new(s.gamma, 0.0), &rho);
        assert!(max_diff(&literal, &via_alpha) < 1e-15);
    }

    #[test]
    fn zero_duration_trajectory() {
        let p = prepare_output_state(0.5).unwrap();
        let tr = evolve_numeric(
            &p,
            &spec(0.1, 1.0, 0.0, 0.0),
            EvolutionMode::NonMarkovian,
            0.0,
            DEFAULT_DT,
        )
        .unwrap();
        assert_eq!(tr.points(), &[(0.0, p)]);
    }

    #[test]
    fn rejects_bad_steps() {
        let p = prepare_output_state(0.5).unwrap();
        let s = spec(0.1, 1.0, 0.0, 0.0);
        assert!(evolve_numeric(&p, &s, EvolutionMode::Markovian, 1.0, 0.0).is_err());
        assert!(evolve_numeric(&p, &s, EvolutionMode::Markovian, 1.0, 2.0).is_err());
        assert!(evolve_numeric(&p, &s, EvolutionMode::Markovian, -1.0, 0.1).is_err());
    }

    #[test]
    fn oversized_step_is_reported() {
        // r = 3 gives coherence rates ~ e^6 ≈ 400γ; dt = 0.05 puts RK4 far
        // outside its stability region.
        let p = prepare_output_state(0.0).unwrap();
        let s = spec(0.1, 3.0, 0.0, 1.0);
        let err = evolve_numeric(&p, &s, EvolutionMode::Markovian, 5.0, 0.05).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }), "{err}");
        assert!(err.to_string().contains("smaller dt"));
    }

    #[test]
    fn rk4_matches_closed_form_at_figure_two_parameters() {
        let s = spec(0.1, 1.5, 0.0, 0.5);
        let phi = 0.0;
        let tr = evolve_numeric(
            &prepare_output_state(phi).unwrap(),
            &s,
            EvolutionMode::NonMarkovian,
            5.0,
            DEFAULT_DT,
        )
        .unwrap();
        let (t, num) = tr.last();
        assert_eq!(*t, 5.0);
        let exact = closed_form_state(
            phi,
            s.theta,
            &SolutionCoefficients::at(5.0, &s, EvolutionMode::NonMarkovian).unwrap(),
        )
        .unwrap();
        assert!(max_diff(num.rho(), exact.rho()) <= 1e-6);
    }

    #[test]
    fn rk4_matches_closed_form_with_squeezing_phase() {
        let s = spec(0.1, 1.0, 0.4, 0.0);
        let tr = evolve_numeric(
            &prepare_output_state(0.3).unwrap(),
            &s,
            EvolutionMode::NonMarkovian,
            5.0,
            DEFAULT_DT,
        )
        .unwrap();
        let exact = closed_form_state(
            0.3,
            0.4,
            &SolutionCoefficients::at(5.0, &s, EvolutionMode::NonMarkovian).unwrap(),
        )
        .unwrap();
        assert!(max_diff(tr.last().1.rho(), exact.rho()) <= 1e-6);
    }

    #[test]
    fn markovian_vacuum_coherence_decays_exponentially() {
        let s = spec(0.1, 0.0, 0.0, 0.0);
        let phi = 0.9;
        let init = prepare_output_state(phi).unwrap();
        let tr = evolve_numeric(&init, &s, EvolutionMode::Markovian, 3.0, DEFAULT_DT).unwrap();
        for (t, st) in tr.thinned(250) {
            let want = (-t).exp() * init.rho_eg();
            assert!((st.rho_eg() - want).norm() <= 1e-6, "t={t}");
        }
    }

    #[test]
    fn trajectory_times_and_thinning() {
        let p = prepare_output_state(0.1).unwrap();
        let s = spec(2.0, 0.5, 0.0, 0.0);
        let tr = evolve_numeric(&p, &s, EvolutionMode::NonMarkovian, 1.05, 0.1).unwrap();
        let times: Vec<f64> = tr.points().iter().map(|p| p.0).collect();
        assert_eq!(times.len(), 12);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*times.last().unwrap(), 1.05);
        let thin = tr.thinned(5);
        assert_eq!(
            thin.iter().map(|p| p.0).collect::<Vec<_>>(),
            vec![0.0, 0.5, 1.0, 1.05]
        );
        for (_, st) in tr.points() {
            assert!((st.rho().trace().re - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "markovian".parse::<EvolutionMode>().unwrap(),
            EvolutionMode::Markovian
        );
        assert_eq!(
            "nonMarkovian".parse::<EvolutionMode>().unwrap(),
            EvolutionMode::NonMarkovian
        );
        assert_eq!(
            "non-markovian".parse::<EvolutionMode>().unwrap(),
            EvolutionMode::NonMarkovian
        );
        assert!("lindblad".parse::<EvolutionMode>().is_err());
    }

    proptest! {
        #[test]
        fn coefficient_invariants(vt in 0.0f64..20.0, n in 0.0f64..3.0, r in 0.0f64..2.0) {
            let c = solution_coefficients(vt, n, r).unwrap();
            let floor = -1.0 / ((1.0 + 2.0 * n) * (2.0 * r).cosh());
            prop_assert!(c.a <= 0.0 && c.a >= floor);
            prop_assert!(c.b1 <= c.b2);
            prop_assert!(c.b1 >= 0.0 && c.b2 <= 1.0);
            let later = solution_coefficients(vt + 0.1, n, r).unwrap();
            prop_assert!(later.a <= c.a);
        }

        #[test]
        fn markovian_clock_dominates(t in 0.0f64..50.0, lambda in 0.01f64..10.0) {
            let s = spec(lambda, 0.0, 0.0, 0.0);
            let nm = vartheta(t, &s, EvolutionMode::NonMarkovian).unwrap();
            let mk = vartheta(t, &s, EvolutionMode::Markovian).unwrap();
            prop_assert!(nm >= 0.0 && nm <= mk);
        }

        #[test]
        fn closed_form_is_a_valid_state(
            vt in 0.0f64..10.0, n in 0.0f64..2.0, r in 0.0f64..2.0,
            phi in -7.0f64..7.0, theta in -7.0f64..7.0,
        ) {
            let c = solution_coefficients(vt, n, r).unwrap();
            let s = closed_form_state(phi, theta, &c).unwrap();
            prop_assert!(QubitState::new(*s.rho()).is_ok());
        }
    }
}
