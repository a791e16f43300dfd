//! Direct integration of the time-dependent Schrödinger equation for the
//! `g/t` drive, used as an independent check on the closed form.
//!
//! Steps use the fourth-order Magnus expansion on two Gauss nodes, so every
//! step is an exact matrix exponential of a Hermitian generator and the norm
//! is conserved to rounding. Step size follows a step-doubling error
//! estimate.

use std::f64::consts::PI;

use nalgebra::SMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clifford::{CMatrix, MatrixRep};
use crate::lz::{tasp, LzError, QuenchKind, QuenchSpec, Start};
use crate::models::Field;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("step size underflow at t = {t:e} (h = {step:e})")]
    StiffnessFailure { t: f64, step: f64 },
    #[error("initial state overlaps the reference subspace only to {overlap:.6}; increase the start factor")]
    BadStart { overlap: f64 },
    #[error("window [{start}, {end}] in half-periods is not covered by the trajectory samples")]
    WindowOutOfRange { start: u64, end: u64 },
    #[error("window bound {value} is not an integer multiple of π/ε")]
    WindowMisaligned { value: f64 },
    #[error("empty averaging window")]
    EmptyWindow,
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lz(#[from] LzError),
}

/// Integration settings. Times are absolute, in units of `1/ε`-free model
/// energy (the same units as the field coefficients).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Start factor `Λ`: integration begins at `t = g/(Λ·max(ε, 1))`.
    pub lambda: f64,
    pub t_max: f64,
    /// Local error target per step on the unit-norm state.
    pub rtol: f64,
    /// Samples recorded per `π/ε`.
    pub samples_per_half_period: u32,
    /// No samples are stored before this time.
    pub record_from: f64,
    pub start: Start,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            lambda: 1e3,
            t_max: 200.0,
            rtol: 1e-9,
            samples_per_half_period: 16,
            record_from: 0.0,
            start: Start::Primary,
        }
    }
}

impl EvolutionConfig {
    fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: &str| Err(EvolveError::InvalidConfig(m.to_string()));
        if !(self.lambda >= 10.0) {
            return bad("start factor must be at least 10");
        }
        if !(self.rtol > 0.0) {
            return bad("tolerance must be positive");
        }
        if self.samples_per_half_period == 0 {
            return bad("need at least one sample per half-period");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("end time must be positive and finite");
        }
        if !(self.record_from >= 0.0 && self.record_from <= self.t_max) {
            return bad("recording must start inside [0, t_max]");
        }
        Ok(())
    }
}

/// Averaging window `[start·π/ε, end·π/ε]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: u64,
    pub end: u64,
}

impl Window {
    pub fn new(start: u64, end: u64) -> Result<Self, EvolveError> {
        if end <= start {
            return Err(EvolveError::EmptyWindow);
        }
        Ok(Self { start, end })
    }

    /// Window from absolute times, which must be integer multiples of `π/ε`.
    pub fn from_times(t_a: f64, t_b: f64, energy: f64) -> Result<Self, EvolveError> {
        let to_units = |t: f64| {
            let u = t * energy / PI;
            let r = u.round();
            if r < 0.0 || (u - r).abs() > 1e-9 * r.max(1.0) {
                Err(EvolveError::WindowMisaligned { value: t })
            } else {
                Ok(r as u64)
            }
        };
        Self::new(to_units(t_a)?, to_units(t_b)?)
    }

    pub fn half_periods(&self) -> u64 {
        self.end - self.start
    }
}

/// Half-periods of averaging used by [`averaging_plan`].
pub const PLAN_WINDOW: u64 = 128;

/// Config and window that place the average well after the drive has
/// decayed: the window opens near `4000·g/ε`, where `g/t < ε/4000`.
pub fn averaging_plan(energy: f64, g: f64) -> (EvolutionConfig, Window) {
    let start = (4000.0 * g / PI).ceil() as u64 + 10;
    let window = Window {
        start,
        end: start + PLAN_WINDOW,
    };
    let half = PI / energy;
    let cfg = EvolutionConfig {
        t_max: window.end as f64 * half,
        record_from: window.start as f64 * half,
        ..EvolutionConfig::default()
    };
    (cfg, window)
}

/// Sampled solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub field: Vec<f64>,
    pub spec: QuenchSpec,
    pub energy: f64,
    pub t_start: f64,
    pub initial: Vec<Complex64>,
    /// Sample `j` is taken at `indices[j] · sample_step`.
    pub sample_step: f64,
    pub samples_per_half_period: u32,
    pub indices: Vec<u64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// `⟨γ_i(t)⟩` for every component of the field.
    pub polarization: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn max_norm_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Upper,
    Lower,
}

/// Integrate from the polarized start to `cfg.t_max`.
pub fn integrate(field: &[f64], spec: &QuenchSpec, cfg: &EvolutionConfig) -> Result<Trajectory, EvolveError> {
    cfg.validate()?;
    let rep = MatrixRep::for_components(field.len()).map_err(|e| EvolveError::InvalidConfig(e.to_string()))?;
    if spec.axis >= field.len() {
        return Err(EvolveError::InvalidConfig(format!(
            "quench axis {} outside {} components",
            spec.axis,
            field.len()
        )));
    }
    let energy = Field::new(field).energy();
    if !(energy > 0.0) {
        return Err(EvolveError::InvalidConfig("field vanishes".into()));
    }
    if rep.rank() == 2 && cfg.start != Start::Primary {
        return Err(EvolveError::InvalidConfig("two-band fields start from the single lower state".into()));
    }
    match rep.rank() {
        2 => Integrator::<2>::new(&rep, field, spec, cfg, energy).run(),
        _ => Integrator::<4>::new(&rep, field, spec, cfg, energy).run(),
    }
}

/// Reference state: the member of the `−γ_q` eigenspace that the rotation
/// onto axis 0 sends to the chosen start vector.
fn reference_state(rep: &MatrixRep, axis: usize, start: Start) -> Vec<Complex64> {
    let target: Vec<Complex64> = if rep.rank() == 2 {
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
    } else {
        start.vector().to_vec()
    };
    let frame = rep.quench_transform(axis).expect("axis checked");
    let w_dag = frame.unitary().adjoint();
    (0..rep.rank())
        .map(|r| (0..rep.rank()).map(|c| w_dag[(r, c)] * target[c]).sum())
        .collect()
}

/// Matrix exponential for the two sizes the integrator runs at.
trait Exponential {
    fn expm(&self) -> Self;
}

impl Exponential for SMatrix<Complex64, 2, 2> {
    fn expm(&self) -> Self {
        self.exp()
    }
}

impl Exponential for SMatrix<Complex64, 4, 4> {
    fn expm(&self) -> Self {
        self.exp()
    }
}

fn to_static<const N: usize>(m: &CMatrix) -> SMatrix<Complex64, N, N> {
    SMatrix::<Complex64, N, N>::from_fn(|r, c| m[(r, c)])
}

fn cvec<const N: usize>(v: &[Complex64]) -> SMatrix<Complex64, N, 1> {
    SMatrix::<Complex64, N, 1>::from_fn(|r, _| v[r])
}

struct Integrator<'a, const N: usize> {
    field: &'a [f64],
    spec: QuenchSpec,
    cfg: &'a EvolutionConfig,
    rep: &'a MatrixRep,
    energy: f64,
    base: SMatrix<Complex64, N, N>,
    drive: SMatrix<Complex64, N, N>,
    commutator: SMatrix<Complex64, N, N>,
    generators: Vec<SMatrix<Complex64, N, N>>,
    /// Spin-orbit energy squared, i.e. the part of `ε²` off the quench axis.
    transverse_sq: f64,
}

impl<'a, const N: usize> Integrator<'a, N>
where
    SMatrix<Complex64, N, N>: Exponential,
{
    fn new(rep: &'a MatrixRep, field: &'a [f64], spec: &QuenchSpec, cfg: &'a EvolutionConfig, energy: f64) -> Self {
        let base = to_static::<N>(&rep.hamiltonian(field).expect("length checked"));
        let drive = to_static::<N>(rep.generator(spec.axis));
        let commutator = base * drive - drive * base;
        let generators = rep.generators().iter().map(to_static::<N>).collect();
        let transverse_sq = energy * energy - field[spec.axis].powi(2);
        Self {
            field,
            spec: *spec,
            cfg,
            rep,
            energy,
            base,
            drive,
            commutator,
            generators,
            transverse_sq,
        }
    }

    fn drive_strength(&self, t: f64) -> f64 {
        if self.spec.rate == 0.0 {
            0.0
        } else {
            self.spec.rate / t
        }
    }

    fn energy_at(&self, t: f64) -> f64 {
        let axial = self.field[self.spec.axis] + self.drive_strength(t);
        (self.transverse_sq + axial * axial).sqrt()
    }

    /// State at `t0` grown from the reference state at `t = 0⁺`.
    ///
    /// Near the origin the drive dominates and the static part acts as a
    /// perturbation. To first order the component leaving the `−γ_q`
    /// subspace is `−t·P_up H_s r/(2g − i)`, which reduces to the adiabatic
    /// dressing for large `g` but stays exact when `g` is small.
    fn initial_state(&self, t0: f64) -> Result<SMatrix<Complex64, N, 1>, EvolveError> {
        let reference = cvec::<N>(&reference_state(self.rep, self.spec.axis, self.cfg.start));
        if self.spec.kind() == QuenchKind::Sudden {
            return Ok(reference);
        }
        let id = SMatrix::<Complex64, N, N>::identity();
        let half = Complex64::new(0.5, 0.0);
        let up = (id + self.drive) * half;
        let leak = up * self.base * reference;
        let mut psi = reference - leak * (Complex64::new(t0, 0.0) / Complex64::new(2.0 * self.spec.rate, -1.0));
        psi /= Complex64::new(psi.norm(), 0.0);
        let down = (id - self.drive) * half;
        let overlap = (psi.adjoint() * down * psi)[(0, 0)].re;
        if overlap < 1.0 - 1e-4 {
            return Err(EvolveError::BadStart { overlap });
        }
        Ok(psi)
    }

    /// One Magnus step of length `h` from time `t`.
    fn step(&self, t: f64, h: f64, psi: &SMatrix<Complex64, N, 1>) -> SMatrix<Complex64, N, 1> {
        let offset = 3f64.sqrt() / 6.0;
        let f1 = self.drive_strength(t + h * (0.5 - offset));
        let f2 = self.drive_strength(t + h * (0.5 + offset));
        let averaged = self.base * Complex64::new(h, 0.0) + self.drive * Complex64::new(0.5 * h * (f1 + f2), 0.0);
        let correction = self.commutator * Complex64::new(0.0, 3f64.sqrt() * h * h * (f2 - f1) / 12.0);
        let generator = (averaged + correction) * Complex64::new(0.0, -1.0);
        generator.expm() * psi
    }

    fn record(&self, traj: &mut Trajectory, index: u64, t: f64, psi: &SMatrix<Complex64, N, 1>) {
        let state: Vec<Complex64> = psi.iter().copied().collect();
        let pol = self.generators.iter().map(|g| (psi.adjoint() * g * psi)[(0, 0)].re).collect();
        traj.indices.push(index);
        traj.times.push(t);
        traj.states.push(state);
        traj.polarization.push(pol);
    }

    fn run(self) -> Result<Trajectory, EvolveError> {
        let t0 = match self.spec.kind() {
            QuenchKind::Sudden => 0.0,
            QuenchKind::Slow => self.spec.rate / (self.cfg.lambda * self.energy.max(1.0)),
        };
        let mut psi = self.initial_state(t0)?;
        let n_s = self.cfg.samples_per_half_period;
        let sample_step = PI / (self.energy * n_s as f64);
        let mut traj = Trajectory {
            field: self.field.to_vec(),
            spec: self.spec,
            energy: self.energy,
            t_start: t0,
            initial: psi.iter().copied().collect(),
            sample_step,
            samples_per_half_period: n_s,
            indices: Vec::new(),
            times: Vec::new(),
            states: Vec::new(),
            polarization: Vec::new(),
            accepted_steps: 0,
            rejected_steps: 0,
        };
        let first = (self.cfg.record_from.max(t0) / sample_step * (1.0 - 1e-12)).ceil() as u64;
        let last = (self.cfg.t_max / sample_step * (1.0 + 1e-12)).floor() as u64;
        let mut t = t0;
        let mut proposal = 0.01 * t0;
        if self.spec.kind() == QuenchKind::Sudden {
            proposal = PI / (4.0 * self.energy);
        }
        for index in first..=last {
            let target = index as f64 * sample_step;
            while t < target {
                let cap = PI / self.energy_at(t);
                let mut h = proposal.min(cap);
                let clamped = t + h >= target * (1.0 - 1e-14);
                if clamped {
                    h = target - t;
                }
                let full = self.step(t, h, &psi);
                let first_half = self.step(t, 0.5 * h, &psi);
                let fine = self.step(t + 0.5 * h, 0.5 * h, &first_half);
                let err = (fine - full).norm() / 15.0;
                let factor = if err == 0.0 {
                    2.0
                } else {
                    (0.9 * (self.cfg.rtol / err).powf(0.2)).clamp(0.2, 2.0)
                };
                if err <= self.cfg.rtol {
                    psi = fine;
                    t = if clamped { target } else { t + h };
                    traj.accepted_steps += 1;
                    if !clamped || factor < 1.0 {
                        proposal = h * factor;
                    }
                } else {
                    traj.rejected_steps += 1;
                    proposal = h * factor;
                    if proposal < 1e-14 * t.max(1.0) {
                        return Err(EvolveError::StiffnessFailure { t, step: proposal });
                    }
                }
            }
            self.record(&mut traj, index, target, &psi);
        }
        Ok(traj)
    }
}

/// Trapezoidal average of the recorded polarizations over `window`.
pub fn finite_tasp(traj: &Trajectory, window: Window) -> Result<Vec<f64>, EvolveError> {
    if window.end <= window.start {
        return Err(EvolveError::EmptyWindow);
    }
    let n_s = traj.samples_per_half_period as u64;
    let (ka, kb) = (window.start * n_s, window.end * n_s);
    let out_of_range = EvolveError::WindowOutOfRange {
        start: window.start,
        end: window.end,
    };
    let first = *traj.indices.first().ok_or(out_of_range.clone())?;
    if ka < first {
        return Err(out_of_range);
    }
    let (ia, ib) = ((ka - first) as usize, (kb - first) as usize);
    if ib >= traj.indices.len() || traj.indices[ia] != ka || traj.indices[ib] != kb {
        return Err(out_of_range);
    }
    let comps = traj.polarization[ia].len();
    let intervals = (ib - ia) as f64;
    let mut out = vec![0.0; comps];
    for (c, o) in out.iter_mut().enumerate() {
        let interior: f64 = traj.polarization[ia + 1..ib].iter().map(|p| p[c]).sum();
        let ends = 0.5 * (traj.polarization[ia][c] + traj.polarization[ib][c]);
        *o = (interior + ends) / intervals;
    }
    Ok(out)
}

/// Closed-form and integrated outcome of one quench, side by side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Differential {
    pub field: Vec<f64>,
    pub rate: f64,
    pub window: Window,
    pub closed_population: f64,
    pub oracle_population: f64,
    pub closed_tasp: Vec<f64>,
    pub oracle_tasp: Vec<f64>,
}

impl Differential {
    pub fn population_error(&self) -> f64 {
        (self.oracle_population - self.closed_population).abs()
    }

    pub fn tasp_error(&self) -> f64 {
        self.oracle_tasp
            .iter()
            .zip(&self.closed_tasp)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrate one quench under [`averaging_plan`] and compare the lower-band
/// population and the finite-window average with the closed form.
pub fn differential(field: &[f64], spec: &QuenchSpec) -> Result<Differential, EvolveError> {
    let closed = tasp(field, spec)?;
    let (cfg, window) = averaging_plan(closed.energy, spec.rate);
    let traj = integrate(field, spec, &cfg)?;
    Ok(Differential {
        field: field.to_vec(),
        rate: spec.rate,
        window,
        closed_population: closed.p_down,
        oracle_population: population(&traj, Band::Lower),
        closed_tasp: closed.tasp.to_vec(),
        oracle_tasp: finite_tasp(&traj, window)?,
    })
}

/// Occupation of a band of the Hamiltonian at the last recorded sample.
pub fn population(traj: &Trajectory, band: Band) -> f64 {
    let (t, psi) = match (traj.times.last(), traj.states.last()) {
        (Some(t), Some(psi)) => (*t, psi),
        _ => return f64::NAN,
    };
    let rep = MatrixRep::for_components(traj.field.len()).expect("validated at integration");
    let mut h = traj.field.clone();
    if traj.spec.rate > 0.0 {
        h[traj.spec.axis] += traj.spec.rate / t;
    }
    let e = Field::new(&h).energy();
    let sign = match band {
        Band::Upper => 1.0,
        Band::Lower => -1.0,
    };
    let ham = rep.hamiltonian(&h).expect("length checked");
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..psi.len() {
        let mut row = Complex64::new(0.0, 0.0);
        for c in 0..psi.len() {
            let proj = 0.5 * (if r == c { 1.0 } else { 0.0 }) + 0.5 * sign * ham[(r, c)] / e;
            row += proj * psi[c];
        }
        acc += psi[r].conj() * row;
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lz::transition_probability;

    fn run(field: &[f64], g: f64) -> (Trajectory, Window) {
        let energy = Field::new(field).energy();
        let (cfg, window) = averaging_plan(energy, g);
        (integrate(field, &QuenchSpec::slow(g).unwrap(), &cfg).unwrap(), window)
    }

    #[test]
    fn two_level_population_matches_closed_form() {
        let (traj, _) = run(&[0.0, 1.0], 1.0);
        let lower = population(&traj, Band::Lower);
        assert!((lower - transition_probability(1.0, 0.0, 1.0).unwrap()).abs() < 1e-5, "{lower}");
        assert!((lower + population(&traj, Band::Upper) - 1.0).abs() < 1e-12);
        assert!(traj.max_norm_error() < 1e-10);
    }

    #[test]
    fn aligned_field_stays_in_lower_band() {
        let (traj, _) = run(&[1.5, 0.0, 0.0, 0.0, 0.0], 1.0);
        assert!((population(&traj, Band::Lower) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_validation() {
        let (traj, _) = run(&[0.2, 0.9, 0.1], 0.3);
        assert_eq!(Window::new(3, 3), Err(EvolveError::EmptyWindow));
        assert!(matches!(
            finite_tasp(&traj, Window::new(0, 5).unwrap()),
            Err(EvolveError::WindowOutOfRange { .. })
        ));
        let e = traj.energy;
        assert!(matches!(
            Window::from_times(1.3 / e, 7.0 * PI / e, e),
            Err(EvolveError::WindowMisaligned { .. })
        ));
        assert!(Window::from_times(4.0 * PI / e, 7.0 * PI / e, e).is_ok());
    }

    #[test]
    fn constant_trajectory_average_is_constant() {
        let field = [1.0, 0.0, 0.0];
        let cfg = EvolutionConfig {
            t_max: 10.0 * PI,
            ..EvolutionConfig::default()
        };
        let traj = integrate(&field, &QuenchSpec::new(0, 0.0).unwrap(), &cfg).unwrap();
        let avg = finite_tasp(&traj, Window::new(2, 8).unwrap()).unwrap();
        assert!((avg[0] + 1.0).abs() < 1e-12 && avg[1].abs() < 1e-14 && avg[2].abs() < 1e-14, "{avg:?}");
    }

    #[test]
    fn pure_oscillation_averages_to_zero() {
        // Sudden quench of a transverse field: ⟨σ_z⟩ = −cos 2t exactly.
        let field = [0.0, 1.0, 0.0];
        let cfg = EvolutionConfig {
            t_max: 12.0 * PI,
            ..EvolutionConfig::default()
        };
        let traj = integrate(&field, &QuenchSpec::new(0, 0.0).unwrap(), &cfg).unwrap();
        for (t, p) in traj.times.iter().zip(&traj.polarization) {
            assert!((p[0] + (2.0 * t).cos()).abs() < 1e-9);
        }
        let avg = finite_tasp(&traj, Window::new(3, 10).unwrap()).unwrap();
        assert!(avg.iter().all(|v| v.abs() < 1e-12), "{avg:?}");
    }

    #[test]
    fn small_start_factor_is_rejected() {
        let cfg = EvolutionConfig {
            lambda: 10.0,
            t_max: 5.0,
            ..EvolutionConfig::default()
        };
        let err = integrate(&[0.0, 1.0, 1.0], &QuenchSpec::slow(1.0).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, EvolveError::BadStart { .. }), "{err:?}");
        let cfg = EvolutionConfig { lambda: 5.0, ..cfg };
        assert!(matches!(
            integrate(&[0.0, 1.0], &QuenchSpec::slow(1.0).unwrap(), &cfg),
            Err(EvolveError::InvalidConfig(_))
        ));
    }
}
