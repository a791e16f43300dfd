//! Closed-form solution of the `g/t` slow quench.
//!
//! The drive `(h_0 + g/t)γ_0 + Σ_{i>0} h_i γ_i` starts fully polarized along
//! `−γ_0` and ends in the static Hamiltonian. Each Kramers sector decouples
//! into a two-level Landau-Zener problem with the same transition
//! probability, so every observable depends on `g`, `h_0/ε` and the
//! direction of the spin-orbit field only.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clifford::{rotate_from_axis, rotate_to_axis, CMatrix, MatrixRep};
use crate::models::Field;

/// Relative size of `ε + h_0` below which the closed-form eigenvectors are
/// replaced by a numerically orthonormalized basis.
pub const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LzError {
    #[error("gap closes: ε = {0:e}")]
    GaplessPoint(f64),
    #[error("band component {h0} exceeds the energy {energy}")]
    InvalidField { h0: f64, energy: f64 },
    #[error("quench rate must be finite and nonnegative, got {0}")]
    InvalidRate(f64),
    #[error("a sudden quench has no spin inversion surface")]
    NoSis,
    #[error("quench axis {axis} outside a field of {len} components")]
    AxisOutOfRange { axis: usize, len: usize },
    #[error("closed-form final states need a five-component field, got {0}")]
    NeedsRankFour(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuenchKind {
    Slow,
    Sudden,
}

/// Quench axis and rate. The kind follows from the rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchSpec {
    pub axis: usize,
    pub rate: f64,
}

impl QuenchSpec {
    pub fn new(axis: usize, rate: f64) -> Result<Self, LzError> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(LzError::InvalidRate(rate));
        }
        Ok(Self { axis, rate })
    }

    pub fn slow(rate: f64) -> Result<Self, LzError> {
        Self::new(0, rate)
    }

    pub fn kind(&self) -> QuenchKind {
        if self.rate == 0.0 {
            QuenchKind::Sudden
        } else {
            QuenchKind::Slow
        }
    }

    fn check(&self, len: usize) -> Result<(), LzError> {
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err(LzError::InvalidRate(self.rate));
        }
        if self.axis >= len {
            return Err(LzError::AxisOutOfRange { axis: self.axis, len });
        }
        Ok(())
    }
}

fn band_ratio(h0: f64, energy: f64) -> Result<f64, LzError> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(LzError::GaplessPoint(energy));
    }
    let ratio = h0 / energy;
    if ratio.abs() > 1.0 + 1e-12 || !ratio.is_finite() {
        return Err(LzError::InvalidField { h0, energy });
    }
    Ok(ratio.clamp(-1.0, 1.0))
}

/// Probability of ending in the lower band.
///
/// Evaluated as `expm1(−2πg(1+h_0/ε)) / expm1(−4πg)`, which is the same
/// ratio of exponentials without overflow at large `g`.
pub fn transition_probability(g: f64, h0: f64, energy: f64) -> Result<f64, LzError> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(LzError::InvalidRate(g));
    }
    let ratio = band_ratio(h0, energy)?;
    Ok(lower_probability(g, ratio))
}

fn lower_probability(g: f64, ratio: f64) -> f64 {
    if g == 0.0 {
        return 0.5 * (1.0 + ratio);
    }
    let p = (-2.0 * PI * g * (1.0 + ratio)).exp_m1() / (-4.0 * PI * g).exp_m1();
    p.clamp(0.0, 1.0)
}

/// `P_u − P_d` as a function of `h_0/ε`.
pub fn spin_factor(g: f64, ratio: f64) -> f64 {
    1.0 - 2.0 * lower_probability(g, ratio.clamp(-1.0, 1.0))
}

/// Ratio of the measured polarization to the unit spin-orbit field on a
/// band inversion surface, `(1 − cosh 2πg)/sinh 2πg = −tanh πg`.
pub fn bis_prefactor(g: f64) -> f64 {
    -(PI * g).tanh()
}

/// `ln cosh x` without overflow or cancellation.
fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        (2.0 * (0.5 * x).sinh().powi(2)).ln_1p()
    } else {
        x + (-2.0 * x).exp().ln_1p() - LN_2
    }
}

/// Value of `h_0/ε` on the spin inversion surface, where both bands are
/// equally populated.
pub fn sis_level(g: f64) -> Result<f64, LzError> {
    if !g.is_finite() || g < 0.0 {
        return Err(LzError::InvalidRate(g));
    }
    if g == 0.0 {
        return Err(LzError::NoSis);
    }
    let x = 2.0 * PI * g;
    Ok(-ln_cosh(x) / x)
}

/// Band probabilities and the time-averaged polarization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LzResult {
    pub p_down: f64,
    pub p_up: f64,
    pub energy: f64,
    pub tasp: Field,
}

impl LzResult {
    pub fn spin_factor(&self) -> f64 {
        self.p_up - self.p_down
    }
}

/// Time-averaged polarization `⟨γ_i⟩̄ = (P_u − P_d) h_i/ε` after a quench
/// along `spec.axis`.
pub fn tasp(field: &[f64], spec: &QuenchSpec) -> Result<LzResult, LzError> {
    spec.check(field.len())?;
    let mut rotated = Field::new(field);
    rotate_to_axis(&mut rotated, spec.axis);
    let energy = rotated.energy();
    let ratio = band_ratio(rotated[0], energy)?;
    let p_down = lower_probability(spec.rate, ratio);
    let factor = 1.0 - 2.0 * p_down;
    let mut out: Vec<f64> = rotated.iter().map(|h| factor * h / energy).collect();
    rotate_from_axis(&mut out, spec.axis);
    Ok(LzResult {
        p_down,
        p_up: 1.0 - p_down,
        energy,
        tasp: Field::new(&out),
    })
}

/// Which state of the `−γ_0` subspace the quench starts from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// `(0, 0, 1, 0)ᵀ`.
    Primary,
    /// `(0, 0, 0, 1)ᵀ`, the symmetry partner of the primary state.
    Partner,
    /// `cos θ (0, 0, 1, 0)ᵀ + e^{iφ} sin θ (0, 0, 0, 1)ᵀ`.
    Superposition { theta: f64, phi: f64 },
}

impl Start {
    /// Coefficients on `(0, 0, 1, 0)ᵀ` and `(0, 0, 0, 1)ᵀ`.
    pub fn coefficients(self) -> [Complex64; 2] {
        match self {
            Start::Primary => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            Start::Partner => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            Start::Superposition { theta, phi } => [Complex64::new(theta.cos(), 0.0), Complex64::from_polar(theta.sin(), phi)],
        }
    }

    pub fn vector(self) -> [Complex64; 4] {
        let [a, b] = self.coefficients();
        let z = Complex64::new(0.0, 0.0);
        [z, z, a, b]
    }
}

type Spinor = [Complex64; 4];

/// Final state of a rank-4 quench in the static eigenbasis.
///
/// `basis` holds `ψ_{+1}, ψ_{+2}, ψ_{−1}, ψ_{−2}`. The state at late time `t`
/// is `√P_u e^{−iεt−iδ} Σ upper_a ψ_{+a} + √P_d e^{iεt} Σ lower_a ψ_{−a}`
/// with an undetermined phase `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalState {
    pub p_down: f64,
    pub p_up: f64,
    pub energy: f64,
    pub basis: [Spinor; 4],
    pub upper: [Complex64; 2],
    pub lower: [Complex64; 2],
    /// Set when `ε + h_0` was too small for the closed-form basis.
    pub numerical_basis: bool,
}

impl FinalState {
    /// Amplitudes on `ψ_{+1}, ψ_{+2}, ψ_{−1}, ψ_{−2}` up to the dynamical phases.
    pub fn weights(&self) -> [Complex64; 4] {
        let su = self.p_up.sqrt();
        let sd = self.p_down.sqrt();
        [su * self.upper[0], su * self.upper[1], sd * self.lower[0], sd * self.lower[1]]
    }

    /// Eigenbasis amplitudes at time `t` for a given phase `δ`.
    pub fn amplitudes(&self, t: f64, delta: f64) -> [Complex64; 4] {
        let w = self.weights();
        let up = Complex64::from_polar(1.0, -self.energy * t - delta);
        let down = Complex64::from_polar(1.0, self.energy * t);
        [w[0] * up, w[1] * up, w[2] * down, w[3] * down]
    }

    /// State vector at time `t` for a given phase `δ`.
    pub fn state(&self, t: f64, delta: f64) -> Spinor {
        let a = self.amplitudes(t, delta);
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (coef, vec) in a.iter().zip(&self.basis) {
            for (o, v) in out.iter_mut().zip(vec) {
                *o += coef * v;
            }
        }
        out
    }

    /// Infinite-time average of `⟨γ_j⟩`: oscillating cross terms between the
    /// bands drop out and only the two band-diagonal blocks survive.
    pub fn time_averaged(&self, rep: &MatrixRep) -> Vec<f64> {
        let up = combine(&self.basis[0], &self.basis[1], self.upper);
        let down = combine(&self.basis[2], &self.basis[3], self.lower);
        (0..rep.len())
            .map(|j| self.p_up * rep.expectation(j, &up) + self.p_down * rep.expectation(j, &down))
            .collect()
    }
}

fn combine(a: &Spinor, b: &Spinor, w: [Complex64; 2]) -> Spinor {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for i in 0..4 {
        out[i] = w[0] * a[i] + w[1] * b[i];
    }
    out
}

/// Closed-form final state of a quench along generator 0 from the chosen
/// member of the `−γ_0` subspace.
pub fn final_state(field: &[f64], g: f64, start: Start) -> Result<FinalState, LzError> {
    if field.len() != 5 {
        return Err(LzError::NeedsRankFour(field.len()));
    }
    let p_down = transition_probability(g, field[0], Field::new(field).energy())?;
    let energy = Field::new(field).energy();
    let h0 = field[0];
    let lead = energy + h0;
    if lead < SINGULAR_RATIO * energy {
        return Ok(numerical_final_state(field, energy, p_down, start));
    }
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let norm = (2.0 * energy * lead).sqrt();
    let hp = c(field[1], field[2]);
    let hm = hp.conj();
    let hpp = c(field[3], field[4]);
    let hpm = hpp.conj();
    let l = c(lead, 0.0);
    let z = c(0.0, 0.0);
    let scale = |v: Spinor| v.map(|x| x / norm);
    let basis = [
        scale([l, z, hpp, hp]),
        scale([z, l, hm, -hpm]),
        scale([-hpm, -hp, l, z]),
        scale([-hm, hpp, z, l]),
    ];
    let so = (field[1..].iter().map(|v| v * v).sum::<f64>()).sqrt();
    let [a, b] = start.coefficients();
    // Upper-band directions reached from (0,0,1,0)ᵀ and (0,0,0,1)ᵀ.
    let (from_primary, from_partner) = if so > 0.0 {
        ([hpm / so, hp / so], [hm / so, -hpp / so])
    } else {
        ([c(1.0, 0.0), z], [z, c(1.0, 0.0)])
    };
    let upper = [a * from_primary[0] + b * from_partner[0], a * from_primary[1] + b * from_partner[1]];
    let lower = [a, b];
    Ok(FinalState {
        p_down,
        p_up: 1.0 - p_down,
        energy,
        basis,
        upper,
        lower,
        numerical_basis: false,
    })
}

/// Band bases from the projectors `(1 ± H/ε)/2`, with the first vector of
/// each band aligned to the projection of the initial state.
fn numerical_final_state(field: &[f64], energy: f64, p_down: f64, start: Start) -> FinalState {
    let rep = MatrixRep::build(4).expect("rank 4");
    let h = rep.hamiltonian(field).expect("five components") / Complex64::new(energy, 0.0);
    let upper_proj = (rep.identity() + &h) * Complex64::new(0.5, 0.0);
    let lower_proj = (rep.identity() - &h) * Complex64::new(0.5, 0.0);
    let seed = start.vector();
    let upper_basis = band_basis(&upper_proj, &seed);
    let lower_basis = band_basis(&lower_proj, &seed);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    FinalState {
        p_down,
        p_up: 1.0 - p_down,
        energy,
        basis: [upper_basis[0], upper_basis[1], lower_basis[0], lower_basis[1]],
        upper: [one, zero],
        lower: [one, zero],
        numerical_basis: true,
    }
}

fn band_basis(proj: &CMatrix, seed: &Spinor) -> [Spinor; 2] {
    let mut found: Vec<Spinor> = Vec::with_capacity(2);
    let project = |v: &Spinor| -> Spinor { std::array::from_fn(|r| (0..4).map(|c| proj[(r, c)] * v[c]).sum()) };
    let unit = |i: usize| -> Spinor { std::array::from_fn(|r| Complex64::new(if r == i { 1.0 } else { 0.0 }, 0.0)) };
    let candidates = std::iter::once(*seed).chain((0..4).map(unit));
    for candidate in candidates {
        let mut v = project(&candidate);
        for b in &found {
            let overlap: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= overlap * bi;
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            found.push(v.map(|x| x / n));
            if found.len() == 2 {
                break;
            }
        }
    }
    [found[0], found[1]]
}

/// Parameters of the decoupled two-level problem inside one Kramers sector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoState {
    pub h0: f64,
    pub coupling: f64,
}

impl TwoState {
    pub fn energy(&self) -> f64 {
        self.h0.hypot(self.coupling)
    }

    /// Two-component field `(h_0, h)` of the reduced problem.
    pub fn field(&self) -> [f64; 2] {
        [self.h0, self.coupling]
    }

    pub fn transition_probability(&self, g: f64) -> Result<f64, LzError> {
        transition_probability(g, self.h0, self.energy())
    }
}

/// Effective two-level problem: band component and total spin-orbit strength.
pub fn two_state_reduce(field: &[f64]) -> TwoState {
    TwoState {
        h0: field[0],
        coupling: field[1..].iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_probability_values() {
        let p = transition_probability(1.0, 0.0, 1.0).unwrap();
        let direct = ((2.0 * PI).exp() - 1.0) / ((2.0 * PI).exp() - (-2.0 * PI).exp());
        assert!((p - direct).abs() < 1e-15);
        assert!((p - 0.99814).abs() < 1e-5);
        assert_eq!(transition_probability(0.7, 2.0, 2.0).unwrap(), 1.0);
        assert!((transition_probability(0.0, 0.3, 1.0).unwrap() - 0.65).abs() < 1e-15);
        assert!((transition_probability(1e-9, 0.3, 1.0).unwrap() - 0.65).abs() < 1e-8);
        assert!(transition_probability(400.0, -0.5, 1.0).unwrap().is_finite());
    }

    #[test]
    fn transition_probability_errors() {
        assert_eq!(transition_probability(1.0, 0.0, 0.0), Err(LzError::GaplessPoint(0.0)));
        assert!(matches!(transition_probability(1.0, 2.0, 1.0), Err(LzError::InvalidField { .. })));
        assert!(matches!(transition_probability(-1.0, 0.0, 1.0), Err(LzError::InvalidRate(_))));
    }

    #[test]
    fn sis_level_limits() {
        let rho = sis_level(1.0).unwrap();
        assert!((rho + 0.8897).abs() < 1e-4);
        assert!(spin_factor(1.0, rho).abs() < 1e-12);
        assert!((sis_level(200.0).unwrap() + 1.0).abs() < 1e-3);
        assert!(sis_level(1e-6).unwrap().abs() < 1e-4);
        assert_eq!(sis_level(0.0), Err(LzError::NoSis));
    }

    #[test]
    fn prefactor_matches_hyperbolic_form() {
        for g in [0.1, 0.5, 1.0, 3.0] {
            let x = 2.0 * PI * g;
            let direct = (1.0 - x.cosh()) / x.sinh();
            assert!((bis_prefactor(g) - direct).abs() < 1e-12);
            assert!(bis_prefactor(g) < 0.0);
        }
        let r = tasp(&[0.0, 1.0], &QuenchSpec::slow(1.0).unwrap()).unwrap();
        assert!((r.tasp[1] + 0.9963).abs() < 1e-4);
    }

    #[test]
    fn tasp_limits() {
        let spec = QuenchSpec::slow(1.0).unwrap();
        let rho = sis_level(1.0).unwrap();
        let on_sis = [1.3 * rho, 1.3 * (1.0 - rho * rho).sqrt(), 0.0];
        let r = tasp(&on_sis, &spec).unwrap();
        assert!(r.tasp.iter().all(|v| v.abs() < 1e-12));
        let adiabatic = tasp(&[0.3, 0.4], &QuenchSpec::slow(50.0).unwrap()).unwrap();
        assert!((adiabatic.tasp[0] + 0.6).abs() < 1e-9);
        assert!((adiabatic.tasp[1] + 0.8).abs() < 1e-9);
    }

    #[test]
    fn final_state_alignment() {
        let s = final_state(&[2.0, 0.0, 0.0, 0.0, 0.0], 1.0, Start::Primary).unwrap();
        let w = s.weights();
        assert!((w[2].norm() - 1.0).abs() < 1e-15);
        assert!(w[0].norm() < 1e-15 && w[1].norm() < 1e-15);
    }

    #[test]
    fn singular_lead_uses_numerical_basis() {
        let s = final_state(&[-1.0, 0.0, 0.0, 0.0, 0.0], 1.0, Start::Primary).unwrap();
        assert!(s.numerical_basis);
        assert!((s.p_up - 1.0).abs() < 1e-15);
        let psi = s.state(0.0, 0.0);
        assert!((psi[2].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_state_values() {
        let r = two_state_reduce(&[0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(r.coupling, 2.0);
        assert_eq!(r.energy(), 2.0);
        assert_eq!(two_state_reduce(&[0.4, 1.0, 0.0, 0.0, 0.0]).coupling, 1.0);
    }
}
