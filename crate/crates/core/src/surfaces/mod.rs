//! Band- and spin-inversion surfaces on periodic momentum grids.
//!
//! A first-order surface is the zero set of a scalar on the grid: the quench
//! axis component `h_q` for a band inversion surface, `P_d − P_u` for a spin
//! inversion surface. Both scalars are negative on the inverted region `V`,
//! so the outward normal `∇s/|∇s|` points from `V` to its complement. Higher
//! orders intersect the previous order with zeros of successive components
//! of a dynamical field sampled at the surface vertices.

mod contour;
mod field;
mod grid;
mod reduce;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contour::detect_first_order;
pub use field::{gradient_field, normal_direction, FieldSource, VertexField};
pub use grid::{sweep, TaspGrid, Zone};
pub use reduce::reduce_order;

use crate::lz::LzError;

/// Node values with magnitude below this are treated as exact zeros and
/// classified with the positive side.
pub const ZERO_TOL: f64 = 1e-10;
/// Minimum gradient magnitude for a well-defined normal.
pub const FLAT_TOL: f64 = 1e-8;
/// Points closer than this are reported as a degenerate pair.
pub const DEGENERATE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("no {kind} found at order {order}")]
    EmptySurface { kind: SurfaceKind, order: usize },
    #[error("gradient of the defining scalar vanishes at {position:?}")]
    FlatField { position: [f64; 3] },
    #[error("grid extent {0} must be odd and at least 5")]
    BadExtent(usize),
    #[error("grid dimension {0} must be 1, 2 or 3")]
    BadDimension(usize),
    #[error("gapless node at k = {position:?}")]
    GaplessNode { position: Vec<f64> },
    #[error(transparent)]
    Lz(#[from] LzError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Bis,
    Sis,
}

impl std::fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SurfaceKind::Bis => "band inversion surface",
            SurfaceKind::Sis => "spin inversion surface",
        })
    }
}

/// Surface vertex: position, linear stencil over grid nodes and the outward
/// unit normal of the first-order surface.
#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub position: [f64; 3],
    pub stencil: Vec<(usize, f64)>,
    pub normal: [f64; 3],
}

impl Vertex {
    /// Interpolate a node-indexed scalar.
    pub fn interpolate(&self, values: impl Fn(usize) -> f64) -> f64 {
        self.stencil.iter().map(|&(n, w)| w * values(n)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrientedPoint {
    pub vertex: Vertex,
    /// `+1` or `−1`; see [`reduce_order`] for the convention.
    pub orientation: i8,
}

/// Closed curve, traversed with `V` (or the reduced inverted region) on
/// the left.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Vertex>,
}

/// Closed triangulated surface with faces oriented by the outward normal.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vertex>,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Points(Vec<OrientedPoint>),
    Curve(Polyline),
    Mesh(TriMesh),
}

impl Element {
    pub fn vertices(&self) -> Vec<&Vertex> {
        match self {
            Element::Points(p) => p.iter().map(|p| &p.vertex).collect(),
            Element::Curve(c) => c.vertices.iter().collect(),
            Element::Mesh(m) => m.vertices.iter().collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Element::Points(_) => 0,
            Element::Curve(_) => 1,
            Element::Mesh(_) => 2,
        }
    }
}

/// One order of the surface hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub kind: SurfaceKind,
    /// Order label; the first-order surface of a model whose hierarchy is
    /// shifted (the class-AII descendants) carries a label above 1.
    pub order: usize,
    /// Dynamical-field components whose zeros were intersected so far.
    pub cut: Vec<usize>,
    pub elements: Vec<Element>,
    /// Number of point pairs closer than [`DEGENERATE_TOL`].
    pub degenerate_pairs: usize,
}

impl Level {
    pub fn vertex_count(&self) -> usize {
        self.elements.iter().map(|e| e.vertices().len()).sum()
    }

    pub fn points(&self) -> Vec<&OrientedPoint> {
        self.elements
            .iter()
            .flat_map(|e| match e {
                Element::Points(p) => p.iter().collect::<Vec<_>>(),
                _ => Vec::new(),
            })
            .collect()
    }
}

/// Ordered hierarchy of levels for one surface kind.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSet {
    pub kind: SurfaceKind,
    pub levels: Vec<Level>,
}

pub(crate) fn wrap(x: f64, lo: f64) -> f64 {
    let span = 2.0 * std::f64::consts::PI;
    let y = (x - lo).rem_euclid(span) + lo;
    if y >= lo + span {
        lo
    } else {
        y
    }
}

/// Displacement from `a` to `b` on the torus, taking the nearest image.
pub(crate) fn minimal_image(a: &[f64; 3], b: &[f64; 3], dim: usize) -> [f64; 3] {
    let span = 2.0 * std::f64::consts::PI;
    let mut d = [0.0; 3];
    for i in 0..dim {
        let mut x = b[i] - a[i];
        x -= span * (x / span).round();
        d[i] = x;
    }
    d
}

pub(crate) fn normalize(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n < FLAT_TOL || !n.is_finite() {
        None
    } else {
        Some([v[0] / n, v[1] / n, v[2] / n])
    }
}

pub(crate) fn merge_stencils(a: &[(usize, f64)], wa: f64, b: &[(usize, f64)], wb: f64) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(a.len() + b.len());
    for &(n, w) in a {
        out.push((n, w * wa));
    }
    for &(n, w) in b {
        match out.iter_mut().find(|(m, _)| *m == n) {
            Some(entry) => entry.1 += w * wb,
            None => out.push((n, w * wb)),
        }
    }
    out.retain(|&(_, w)| w != 0.0);
    out
}

/// Vertex on the segment from `a` to `b` at fraction `t`.
pub(crate) fn lerp_vertex(a: &Vertex, b: &Vertex, t: f64, zone: &Zone) -> Vertex {
    let d = minimal_image(&a.position, &b.position, zone.dim);
    let lo = zone.lower();
    let mut position = [0.0; 3];
    for i in 0..zone.dim {
        position[i] = wrap(a.position[i] + t * d[i], lo);
    }
    let mut n = [0.0; 3];
    for (i, v) in n.iter_mut().enumerate() {
        *v = (1.0 - t) * a.normal[i] + t * b.normal[i];
    }
    Vertex {
        position,
        stencil: merge_stencils(&a.stencil, 1.0 - t, &b.stencil, t),
        normal: normalize(n).unwrap_or(a.normal),
    }
}

/// Sign class used for contouring: zero counts as positive.
pub(crate) fn positive(v: f64) -> bool {
    v >= 0.0
}

pub(crate) fn snap(v: f64) -> f64 {
    if v.abs() < ZERO_TOL {
        0.0
    } else {
        v
    }
}

/// Interpolation fraction of the zero between values `a` and `b`.
pub(crate) fn crossing(a: f64, b: f64) -> f64 {
    if a == b {
        0.5
    } else {
        (a / (a - b)).clamp(0.0, 1.0)
    }
}
