//! Pauli and Gamma matrix representations, the antiunitary symmetry of the
//! rank-4 Hamiltonians, and the Clifford rotation that relabels a quench axis.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("unsupported matrix rank {0}, expected 2 or 4")]
    UnsupportedRank(usize),
    #[error("coefficient vector has {got} entries but the representation has {expected} generators")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis {axis} is outside the {count} available generators")]
    AxisOutOfRange { axis: usize, count: usize },
    #[error("the symmetry operator is only defined for rank 4")]
    NoSymmetry,
}

/// The four Pauli matrices `σ_0, σ_x, σ_y, σ_z` by index.
pub fn pauli(index: usize) -> CMatrix {
    let entries = match index {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => panic!("Pauli index {index} out of range"),
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// A set of mutually anticommuting Hermitian generators.
///
/// Rank 4 uses `σ_z⊗σ_0, σ_x⊗σ_x, σ_x⊗σ_y, σ_x⊗σ_z, σ_y⊗σ_0`; rank 2 uses
/// `σ_z, σ_x, σ_y`. Generator 0 is always diagonal so that its lower
/// eigenspace is spanned by standard basis vectors.
#[derive(Clone, Debug)]
pub struct MatrixRep {
    rank: usize,
    generators: Vec<CMatrix>,
    identity: CMatrix,
}

impl MatrixRep {
    /// Full generator set for the given rank.
    pub fn build(rank: usize) -> Result<Self, CliffordError> {
        let generators = match rank {
            2 => vec![pauli(3), pauli(1), pauli(2)],
            4 => {
                let s0 = pauli(0);
                vec![
                    kron(&pauli(3), &s0),
                    kron(&pauli(1), &pauli(1)),
                    kron(&pauli(1), &pauli(2)),
                    kron(&pauli(1), &pauli(3)),
                    kron(&pauli(2), &s0),
                ]
            }
            other => return Err(CliffordError::UnsupportedRank(other)),
        };
        Ok(Self {
            rank,
            generators,
            identity: CMatrix::identity(rank, rank),
        })
    }

    /// Smallest representation carrying `count` generators, truncated to
    /// exactly that many.
    pub fn for_components(count: usize) -> Result<Self, CliffordError> {
        let rank = match count {
            1..=3 => 2,
            4 | 5 => 4,
            _ => return Err(CliffordError::DimensionMismatch { expected: 5, got: count }),
        };
        let mut rep = Self::build(rank)?;
        rep.generators.truncate(count);
        Ok(rep)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generator(&self, j: usize) -> &CMatrix {
        &self.generators[j]
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn identity(&self) -> &CMatrix {
        &self.identity
    }

    pub fn anticommutator(&self, j: usize, l: usize) -> CMatrix {
        let (a, b) = (&self.generators[j], &self.generators[l]);
        a * b + b * a
    }

    /// `H = Σ h_j γ_j`.
    pub fn hamiltonian(&self, h: &[f64]) -> Result<CMatrix, CliffordError> {
        if h.len() != self.generators.len() {
            return Err(CliffordError::DimensionMismatch {
                expected: self.generators.len(),
                got: h.len(),
            });
        }
        let mut out = CMatrix::zeros(self.rank, self.rank);
        for (coef, gamma) in h.iter().zip(&self.generators) {
            out += gamma * Complex64::new(*coef, 0.0);
        }
        Ok(out)
    }

    /// `⟨ψ|γ_j|ψ⟩`, real because every generator is Hermitian.
    pub fn expectation(&self, j: usize, psi: &[Complex64]) -> f64 {
        let g = &self.generators[j];
        let mut acc = ZERO;
        for r in 0..self.rank {
            let mut row = ZERO;
            for c in 0..self.rank {
                row += g[(r, c)] * psi[c];
            }
            acc += psi[r].conj() * row;
        }
        acc.re
    }

    /// Clifford rotation `W = exp(π/4 · γ_0γ_q)` with `W γ_q W† = γ_0`.
    pub fn quench_transform(&self, q: usize) -> Result<QuenchFrame, CliffordError> {
        if q >= self.generators.len() {
            return Err(CliffordError::AxisOutOfRange {
                axis: q,
                count: self.generators.len(),
            });
        }
        let unitary = if q == 0 {
            self.identity.clone()
        } else {
            let bivector = &self.generators[0] * &self.generators[q];
            &self.identity * Complex64::new(FRAC_1_SQRT_2, 0.0) + bivector * Complex64::new(FRAC_1_SQRT_2, 0.0)
        };
        Ok(QuenchFrame {
            axis: q,
            count: self.generators.len(),
            unitary,
        })
    }

    pub fn symmetry(&self) -> Result<SymmetryOp, CliffordError> {
        if self.rank != 4 {
            return Err(CliffordError::NoSymmetry);
        }
        Ok(SymmetryOp::new())
    }
}

/// The rotation moving quench axis `q` onto generator 0, together with its
/// action on coefficient vectors.
///
/// Under `W`, `γ_q → γ_0` and `γ_0 → −γ_q`, so a field `h` seen in the
/// rotated frame has `h'_0 = h_q`, `h'_q = −h_0` and all other entries fixed.
#[derive(Clone, Debug)]
pub struct QuenchFrame {
    axis: usize,
    count: usize,
    unitary: CMatrix,
}

impl QuenchFrame {
    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// Coefficients of `W H W†` for `H = Σ h_j γ_j`.
    pub fn to_axis_frame(&self, h: &[f64]) -> Vec<f64> {
        let mut out = h.to_vec();
        rotate_to_axis(&mut out, self.axis);
        out
    }

    /// Inverse of [`to_axis_frame`](Self::to_axis_frame); also maps
    /// expectation vectors back, the map being orthogonal.
    pub fn from_axis_frame(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        rotate_from_axis(&mut out, self.axis);
        out
    }

    /// The orthogonal coefficient map as a dense matrix (row = new index).
    pub fn coefficient_map(&self) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::identity(self.count, self.count);
        if self.axis != 0 {
            let q = self.axis;
            m[(0, 0)] = 0.0;
            m[(q, q)] = 0.0;
            m[(0, q)] = 1.0;
            m[(q, 0)] = -1.0;
        }
        m
    }
}

/// In-place coefficient map of [`QuenchFrame::to_axis_frame`].
pub fn rotate_to_axis(h: &mut [f64], q: usize) {
    if q != 0 {
        let h0 = h[0];
        h[0] = h[q];
        h[q] = -h0;
    }
}

/// In-place coefficient map of [`QuenchFrame::from_axis_frame`].
pub fn rotate_from_axis(v: &mut [f64], q: usize) {
    if q != 0 {
        let v0 = v[0];
        v[0] = -v[q];
        v[q] = v0;
    }
}

/// Antiunitary `P = U K` with `U = iσ_z⊗σ_y`.
#[derive(Clone, Debug)]
pub struct SymmetryOp {
    unitary: CMatrix,
}

impl SymmetryOp {
    fn new() -> Self {
        Self {
            unitary: kron(&pauli(3), &pauli(2)) * I,
        }
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// `Pψ = U ψ*`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = psi.len();
        (0..n).map(|r| (0..n).map(|c| self.unitary[(r, c)] * psi[c].conj()).sum()).collect()
    }

    /// `P H P⁻¹ = U H* U†`.
    pub fn conjugate(&self, h: &CMatrix) -> CMatrix {
        &self.unitary * h.map(|z| z.conj()) * self.unitary.adjoint()
    }
}
