//! Lattice models as momentum-space coefficient fields `h(k)`.
//!
//! Every model stores its components with the band axis first, so that
//! `h[0]` multiplies generator 0 and the remaining entries form the
//! spin-orbit field.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Symmetry class of the invariant a model carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantClass {
    /// Winding of the spin-orbit field in one dimension (absolute value).
    Winding1d,
    /// Signed Chern number.
    Chern,
    /// Three-dimensional winding number.
    Winding3d,
    /// `±1` index of the three-dimensional class-AII model.
    Z2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    /// `h = (m_z − t_0 cos k, t_so sin k)`.
    Aiii1d { m_z: f64, t0: f64, t_so: f64 },
    /// Quantum anomalous Hall model on the square lattice.
    Qah2d {
        #[serde(default)]
        m_x: f64,
        #[serde(default)]
        m_y: f64,
        m_z: f64,
        t0: f64,
        t_so_x: f64,
        t_so_y: f64,
    },
    /// `h = (m_z − t_0 Σ cos k_i, t_so sin k_x, t_so sin k_y, t_so sin k_z)`.
    Chiral3d { m_z: f64, t0: f64, t_so: f64 },
    /// Five-component class-AII model.
    Aii3d { m: f64, t0: f64, t_so: f64 },
    /// QAH variant with doubled harmonics and Chern number ±4.
    HighChern2d { m_z: f64, t0: f64, t_so: f64 },
}

/// A coefficient vector with up to five components.
#[derive(Clone, Copy, PartialEq)]
pub struct Field {
    len: usize,
    values: [f64; 5],
}

impl Field {
    pub fn new(values: &[f64]) -> Self {
        assert!((1..=5).contains(&values.len()), "field length {}", values.len());
        let mut buf = [0.0; 5];
        buf[..values.len()].copy_from_slice(values);
        Self {
            len: values.len(),
            values: buf,
        }
    }

    pub fn energy(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values[..self.len]
    }
}

impl std::ops::DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.values[..self.len]
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

/// Expected invariant at a parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub class: InvariantClass,
    /// `None` on a phase boundary, where the invariant is undefined.
    pub value: Option<i64>,
}

fn sgn(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Aiii1d { .. } => "aiii_1d",
            Model::Qah2d { .. } => "qah_2d",
            Model::Chiral3d { .. } => "chiral_3d",
            Model::Aii3d { .. } => "aii_3d",
            Model::HighChern2d { .. } => "high_chern_2d",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Aiii1d { .. } => 1,
            Model::Qah2d { .. } | Model::HighChern2d { .. } => 2,
            Model::Chiral3d { .. } | Model::Aii3d { .. } => 3,
        }
    }

    /// Number of coefficient components.
    pub fn components(&self) -> usize {
        match self {
            Model::Aiii1d { .. } => 2,
            Model::Qah2d { .. } | Model::HighChern2d { .. } => 3,
            Model::Chiral3d { .. } => 4,
            Model::Aii3d { .. } => 5,
        }
    }

    pub fn rank(&self) -> usize {
        if self.components() <= 3 {
            2
        } else {
            4
        }
    }

    /// Names of the components in storage order. The conventional spin
    /// labels of the two-band models are remapped so the band axis `σ_z`
    /// comes first.
    pub fn labels(&self) -> &'static [&'static str] {
        match self {
            Model::Aiii1d { .. } => &["z", "x"],
            Model::Qah2d { .. } | Model::HighChern2d { .. } => &["z", "x", "y"],
            Model::Chiral3d { .. } => &["0", "1", "2", "3"],
            Model::Aii3d { .. } => &["0", "1", "2", "3", "4"],
        }
    }

    pub fn class(&self) -> InvariantClass {
        match self {
            Model::Aiii1d { .. } => InvariantClass::Winding1d,
            Model::Qah2d { .. } | Model::HighChern2d { .. } => InvariantClass::Chern,
            Model::Chiral3d { .. } => InvariantClass::Winding3d,
            Model::Aii3d { .. } => InvariantClass::Z2,
        }
    }

    /// `h(k)` with `k.len() == self.dim()`.
    pub fn eval(&self, k: &[f64]) -> Field {
        assert_eq!(k.len(), self.dim(), "momentum dimension");
        match *self {
            Model::Aiii1d { m_z, t0, t_so } => Field::new(&[m_z - t0 * k[0].cos(), t_so * k[0].sin()]),
            Model::Qah2d {
                m_x,
                m_y,
                m_z,
                t0,
                t_so_x,
                t_so_y,
            } => Field::new(&[
                m_z - t0 * k[0].cos() - t0 * k[1].cos(),
                m_x + t_so_x * k[0].sin(),
                m_y + t_so_y * k[1].sin(),
            ]),
            Model::Chiral3d { m_z, t0, t_so } => Field::new(&[
                m_z - t0 * (k[0].cos() + k[1].cos() + k[2].cos()),
                t_so * k[0].sin(),
                t_so * k[1].sin(),
                t_so * k[2].sin(),
            ]),
            Model::Aii3d { m, t0, t_so } => {
                let total = k[0] + k[1] + k[2];
                Field::new(&[
                    m - t0 * (k[0].cos() + k[1].cos() + k[2].cos()),
                    t_so * (total - 2.0 * k[0]).sin(),
                    t_so * (total - 2.0 * k[1]).sin(),
                    t_so * (total - 2.0 * k[2]).sin(),
                    t_so * total.sin(),
                ])
            }
            Model::HighChern2d { m_z, t0, t_so } => Field::new(&[
                m_z - t0 * (2.0 * k[0]).cos() - t0 * (2.0 * k[1]).cos(),
                t_so * (2.0 * k[0]).sin(),
                t_so * (2.0 * k[1]).sin(),
            ]),
        }
    }

    /// Analytic phase diagram. Returns `None` for parameter regions the
    /// closed-form diagram does not cover: nonpositive hopping `t_0`, or a
    /// QAH model with nonzero Zeeman offsets `m_x`, `m_y`.
    pub fn ground_truth(&self) -> Option<GroundTruth> {
        let class = self.class();
        if self.hopping() <= 0.0 {
            return None;
        }
        let value = match *self {
            Model::Aiii1d { m_z, t0, t_so } => {
                if t_so == 0.0 || m_z.abs() == t0 {
                    None
                } else if m_z.abs() < t0 {
                    Some(1)
                } else {
                    Some(0)
                }
            }
            Model::Qah2d {
                m_x,
                m_y,
                m_z,
                t0,
                t_so_x,
                t_so_y,
            } => {
                if m_x != 0.0 || m_y != 0.0 {
                    return None;
                }
                two_d_chern(m_z, t0, sgn(t_so_x) * sgn(t_so_y), 1)
            }
            Model::HighChern2d { m_z, t0, t_so } => two_d_chern(m_z, t0, sgn(t_so) * sgn(t_so), 4),
            Model::Chiral3d { m_z, t0, t_so } => {
                let (a, m) = (t0, m_z);
                let s = sgn(t_so).pow(3);
                if s == 0 || [a, 3.0 * a, -a, -3.0 * a].contains(&m) {
                    None
                } else if m.abs() > 3.0 * a {
                    Some(0)
                } else if m.abs() > a {
                    Some(-s)
                } else {
                    Some(2 * s)
                }
            }
            Model::Aii3d { m, t0, t_so } => {
                if t_so == 0.0 {
                    None
                } else {
                    let cs = (m - 3.0 * t0) * (m - t0).powi(3) * (m + t0).powi(3) * (m + 3.0 * t0);
                    match sgn(cs) {
                        0 => None,
                        s => Some(s),
                    }
                }
            }
        };
        Some(GroundTruth { class, value })
    }

    /// Parameter values of the mass term at which the gap closes.
    pub fn phase_boundaries(&self) -> Vec<f64> {
        match *self {
            Model::Aiii1d { t0, .. } => vec![-t0.abs(), t0.abs()],
            Model::Qah2d { t0, .. } | Model::HighChern2d { t0, .. } => {
                vec![-2.0 * t0.abs(), 0.0, 2.0 * t0.abs()]
            }
            Model::Chiral3d { t0, .. } | Model::Aii3d { t0, .. } => {
                let a = t0.abs();
                vec![-3.0 * a, -a, a, 3.0 * a]
            }
        }
    }

    pub fn hopping(&self) -> f64 {
        match *self {
            Model::Aiii1d { t0, .. }
            | Model::Qah2d { t0, .. }
            | Model::Chiral3d { t0, .. }
            | Model::HighChern2d { t0, .. }
            | Model::Aii3d { t0, .. } => t0,
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            Model::Aiii1d { m_z, .. } | Model::Qah2d { m_z, .. } | Model::Chiral3d { m_z, .. } | Model::HighChern2d { m_z, .. } => m_z,
            Model::Aii3d { m, .. } => m,
        }
    }

    pub fn with_mass(&self, value: f64) -> Model {
        let mut out = self.clone();
        match &mut out {
            Model::Aiii1d { m_z, .. } | Model::Qah2d { m_z, .. } | Model::Chiral3d { m_z, .. } | Model::HighChern2d { m_z, .. } => *m_z = value,
            Model::Aii3d { m, .. } => *m = value,
        }
        out
    }

    pub fn aiii_1d(m_z: f64) -> Model {
        Model::Aiii1d { m_z, t0: 1.0, t_so: 1.0 }
    }

    pub fn qah_2d(m_z: f64) -> Model {
        Model::Qah2d {
            m_x: 0.0,
            m_y: 0.0,
            m_z,
            t0: 1.0,
            t_so_x: 1.0,
            t_so_y: 1.0,
        }
    }

    pub fn chiral_3d(m_z: f64) -> Model {
        Model::Chiral3d { m_z, t0: 1.0, t_so: 1.0 }
    }

    pub fn aii_3d(m: f64) -> Model {
        Model::Aii3d { m, t0: 1.0, t_so: 0.2 }
    }

    pub fn high_chern_2d(m_z: f64) -> Model {
        Model::HighChern2d { m_z, t0: 1.0, t_so: 0.2 }
    }
}

fn two_d_chern(m_z: f64, t0: f64, sign: i64, magnitude: i64) -> Option<i64> {
    if sign == 0 || m_z == 0.0 || m_z.abs() == 2.0 * t0 {
        None
    } else if m_z.abs() > 2.0 * t0 {
        Some(0)
    } else if m_z > 0.0 {
        Some(-magnitude * sign)
    } else {
        Some(magnitude * sign)
    }
}
