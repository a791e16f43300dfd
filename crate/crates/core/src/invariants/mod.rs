//! Integers read off dynamical fields on inversion surfaces.
//!
//! Every surface of the hierarchy carries a degree: a signed count of sign
//! pairs for points, the winding of a planar field along closed curves, the
//! covering number of a unit-sphere field over closed meshes. The degree
//! counts how often the normalized spin-orbit field wraps the target sphere
//! under the orientation conventions of [`crate::surfaces`], and the
//! invariant of the bulk band is its negative.

mod pipeline;

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

pub use pipeline::{
    scheme1, scheme2, sudden_control, InvariantReport, OrderEvidence, PipelineOptions, PointEvidence, Scheme, SuddenControlReport, WindingOutcome,
};

use crate::lz::LzError;
use crate::surfaces::SurfaceError;

/// Field values with magnitude at or below this carry no usable sign.
pub const SIGN_TOL: f64 = 1e-6;
/// Largest accepted distance of an accumulated degree from an integer.
pub const MAX_RESIDUAL: f64 = 0.1;
/// Largest accepted field rotation between neighbouring loop vertices.
pub const MAX_TURN: f64 = FRAC_PI_2;
/// Largest accepted solid angle of a single image triangle.
pub const MAX_SOLID_ANGLE: f64 = PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Lz(#[from] LzError),
    #[error("component {component} has no definite sign at {position:?} (value {value:e})")]
    DegenerateSign { position: [f64; 3], component: usize, value: f64 },
    #[error("{surface}: {reason}")]
    NonQuantized { surface: String, reason: String },
    #[error("inconsistent evidence: {0}")]
    InconsistentEvidence(String),
    #[error("invalid pipeline: {0}")]
    InvalidPipeline(String),
}

impl InvariantError {
    fn non_quantized(reason: impl Into<String>) -> Self {
        InvariantError::NonQuantized {
            surface: String::from("surface"),
            reason: reason.into(),
        }
    }

    /// Attach a surface label to a quantization failure.
    pub fn on(self, label: &str) -> Self {
        match self {
            InvariantError::NonQuantized { reason, .. } => InvariantError::NonQuantized {
                surface: label.to_string(),
                reason,
            },
            other => other,
        }
    }
}

fn sign_of(value: f64) -> Option<i64> {
    if value.abs() <= SIGN_TOL || !value.is_finite() {
        None
    } else if value > 0.0 {
        Some(1)
    } else {
        Some(-1)
    }
}

fn degenerate(component: usize, value: f64) -> InvariantError {
    InvariantError::DegenerateSign {
        position: [f64::NAN; 3],
        component,
        value,
    }
}

/// `½ (sgn v₋ − sgn v₊)` for the field at the two points of a 0D surface.
pub fn signed_pair(minus: f64, plus: f64) -> Result<i64, InvariantError> {
    let a = sign_of(minus).ok_or_else(|| degenerate(0, minus))?;
    let b = sign_of(plus).ok_or_else(|| degenerate(0, plus))?;
    Ok((a - b) / 2)
}

/// Magnitude of [`signed_pair`], the one-dimensional winding number.
pub fn winding_1d_pair(minus: f64, plus: f64) -> Result<i64, InvariantError> {
    signed_pair(minus, plus).map(i64::abs)
}

/// `½ Σ o·sgn(v)` over oriented points. An odd sum means an unpaired point.
pub fn point_degree(points: &[(i8, f64)]) -> Result<i64, InvariantError> {
    let mut sum = 0;
    for (i, &(o, v)) in points.iter().enumerate() {
        let s = sign_of(v).ok_or_else(|| degenerate(i, v))?;
        sum += i64::from(o) * s;
    }
    if sum % 2 != 0 {
        return Err(InvariantError::non_quantized(format!("odd signed point count {sum}")));
    }
    Ok(sum / 2)
}

/// Number of turns of a planar field along a closed loop.
pub fn ring_winding(values: &[[f64; 2]]) -> Result<i64, InvariantError> {
    if values.len() < 3 {
        return Err(InvariantError::non_quantized(format!("loop with {} vertices", values.len())));
    }
    if let Some(v) = values.iter().find(|v| v[0].hypot(v[1]) <= SIGN_TOL) {
        return Err(InvariantError::non_quantized(format!("field vanishes on the loop ({:?})", v)));
    }
    let mut total = 0.0;
    for (i, a) in values.iter().enumerate() {
        let b = &values[(i + 1) % values.len()];
        let turn = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        if turn.abs() >= MAX_TURN {
            return Err(InvariantError::non_quantized(format!(
                "field turns by {turn:.3} rad between neighbouring vertices"
            )));
        }
        total += turn;
    }
    quantize(total / (2.0 * PI))
}

/// Covering number of the normalized field over a closed oriented mesh.
pub fn surface_degree(triangles: &[[usize; 3]], values: &[[f64; 3]]) -> Result<i64, InvariantError> {
    let mut unit = Vec::with_capacity(values.len());
    for v in values {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n <= SIGN_TOL {
            return Err(InvariantError::non_quantized(format!("field vanishes on the mesh ({v:?})")));
        }
        unit.push([v[0] / n, v[1] / n, v[2] / n]);
    }
    let mut total = 0.0;
    for t in triangles {
        let omega = solid_angle(unit[t[0]], unit[t[1]], unit[t[2]]);
        if omega.abs() >= MAX_SOLID_ANGLE {
            return Err(InvariantError::non_quantized(format!("image triangle spans {omega:.3} sr")));
        }
        total += omega;
    }
    quantize(total / (4.0 * PI))
}

/// Signed solid angle of the spherical triangle with unit corners.
fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let cross = [b[1] * c[2] - b[2] * c[1], b[2] * c[0] - b[0] * c[2], b[0] * c[1] - b[1] * c[0]];
    let num = dot(a, cross);
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

fn quantize(x: f64) -> Result<i64, InvariantError> {
    let n = x.round();
    let residual = (x - n).abs();
    if residual >= MAX_RESIDUAL || !x.is_finite() {
        return Err(InvariantError::non_quantized(format!(
            "degree {x:.4} is {residual:.3} away from an integer"
        )));
    }
    Ok(n as i64)
}

/// `−1` when both tested components flip sign between the two points of
/// the highest-order surface, `+1` when neither does.
pub fn z2_index(pair: [[f64; 2]; 2]) -> Result<i64, InvariantError> {
    let mut flips = [0; 2];
    for (c, flip) in flips.iter_mut().enumerate() {
        let a = sign_of(pair[0][c]).ok_or_else(|| degenerate(c, pair[0][c]))?;
        let b = sign_of(pair[1][c]).ok_or_else(|| degenerate(c, pair[1][c]))?;
        *flip = a * b;
    }
    if flips[0] != flips[1] {
        return Err(InvariantError::InconsistentEvidence(String::from(
            "tested components disagree on whether the pair has opposite signs",
        )));
    }
    Ok(flips[0])
}

/// Sign of the permutation that sorts `seq`.
fn permutation_sign(seq: &[usize]) -> i64 {
    let mut inversions = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, turns: f64, radius: f64) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| {
                let a = turns * 2.0 * PI * i as f64 / n as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect()
    }

    #[test]
    fn pair_signs() {
        assert_eq!(winding_1d_pair(0.99, -0.99), Ok(1));
        assert_eq!(winding_1d_pair(0.5, 0.5), Ok(0));
        assert_eq!(signed_pair(-0.3, 0.7), Ok(-1));
        assert!(matches!(winding_1d_pair(1e-7, 1.0), Err(InvariantError::DegenerateSign { .. })));
    }

    #[test]
    fn windings_of_circles() {
        assert_eq!(ring_winding(&circle(64, 1.0, 1.0)), Ok(1));
        assert_eq!(ring_winding(&circle(64, -2.0, 0.3)), Ok(-2));
        let constant = vec![[1.0, 0.5]; 20];
        assert_eq!(ring_winding(&constant), Ok(0));
        assert!(matches!(ring_winding(&circle(6, 2.0, 1.0)), Err(InvariantError::NonQuantized { .. })));
    }

    #[test]
    fn octahedron_degree() {
        let v = [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        // Counterclockwise seen from outside.
        let faces = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
        assert_eq!(surface_degree(&faces, &v), Ok(1));
        let flipped: Vec<[usize; 3]> = faces.iter().map(|f| [f[0], f[2], f[1]]).collect();
        assert_eq!(surface_degree(&flipped, &v), Ok(-1));
        let constant = vec![[0.2, 0.3, 1.0]; 6];
        assert_eq!(surface_degree(&faces, &constant), Ok(0));
    }

    #[test]
    fn point_pairs_and_parity() {
        assert_eq!(point_degree(&[(1, 0.4), (-1, -0.2)]), Ok(1));
        assert_eq!(point_degree(&[(1, 0.4), (-1, 0.2)]), Ok(0));
        assert!(matches!(point_degree(&[(1, 0.4)]), Err(InvariantError::NonQuantized { .. })));
        assert_eq!(permutation_sign(&[1, 2, 3]), 1);
        assert_eq!(permutation_sign(&[2, 1, 3]), -1);
        assert_eq!(permutation_sign(&[3, 1, 2]), 1);
    }

    #[test]
    fn z2_pairs() {
        assert_eq!(z2_index([[0.3, -0.2], [-0.1, 0.5]]), Ok(-1));
        assert_eq!(z2_index([[0.3, 0.2], [0.1, 0.5]]), Ok(1));
        assert!(matches!(
            z2_index([[0.3, 0.2], [-0.1, 0.5]]),
            Err(InvariantError::InconsistentEvidence(_))
        ));
    }
}
