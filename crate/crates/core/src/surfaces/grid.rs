use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{snap, SurfaceError, SurfaceKind};
use crate::exec::Exec;
use crate::lz::{tasp, QuenchSpec};
use crate::models::Model;

/// Nodes with a smaller band gap are rejected as gapless.
pub const GAP_TOL: f64 = 1e-10;

/// Periodic momentum grid covering one Brillouin zone.
///
/// `extent` counts nodes per axis including the periodic image, so there are
/// `extent − 1` distinct nodes along each axis starting at `origin·π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub dim: usize,
    pub extent: usize,
    /// Lower zone edge in units of `π`.
    pub origin: f64,
}

impl Zone {
    pub fn new(dim: usize, extent: usize) -> Result<Self, SurfaceError> {
        Self::with_origin(dim, extent, -1.0)
    }

    pub fn with_origin(dim: usize, extent: usize, origin: f64) -> Result<Self, SurfaceError> {
        if !(1..=3).contains(&dim) {
            return Err(SurfaceError::BadDimension(dim));
        }
        if extent < 5 || extent.is_multiple_of(2) {
            return Err(SurfaceError::BadExtent(extent));
        }
        Ok(Self { dim, extent, origin })
    }

    pub fn cells(&self) -> usize {
        self.extent - 1
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.cells() as f64
    }

    pub fn lower(&self) -> f64 {
        self.origin * PI
    }

    pub fn node_count(&self) -> usize {
        self.cells().pow(self.dim as u32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lower() + i as f64 * self.spacing()
    }

    /// Axis indices of a node, axis 0 varying fastest.
    pub fn indices(&self, node: usize) -> [usize; 3] {
        let m = self.cells();
        let mut out = [0; 3];
        let mut rest = node;
        for o in out.iter_mut().take(self.dim) {
            *o = rest % m;
            rest /= m;
        }
        out
    }

    /// Node at the given (possibly out-of-range) axis indices, wrapped.
    pub fn node(&self, idx: [isize; 3]) -> usize {
        let m = self.cells() as isize;
        let mut node = 0usize;
        for axis in (0..self.dim).rev() {
            node = node * m as usize + idx[axis].rem_euclid(m) as usize;
        }
        node
    }

    pub fn neighbor(&self, node: usize, axis: usize, step: isize) -> usize {
        let i = self.indices(node);
        let mut idx = [i[0] as isize, i[1] as isize, i[2] as isize];
        idx[axis] += step;
        self.node(idx)
    }

    pub fn position(&self, node: usize) -> [f64; 3] {
        let i = self.indices(node);
        let mut p = [0.0; 3];
        for (axis, v) in p.iter_mut().enumerate().take(self.dim) {
            *v = self.coord(i[axis]);
        }
        p
    }
}

/// Closed-form TASP on every node of a zone.
#[derive(Clone, Debug, PartialEq)]
pub struct TaspGrid {
    pub zone: Zone,
    pub model: Model,
    pub spec: QuenchSpec,
    pub components: usize,
    /// Per node: the TASP vector, then `h_q`, then `P_u − P_d`.
    data: Vec<f64>,
}

impl TaspGrid {
    fn stride(&self) -> usize {
        self.components + 2
    }

    pub fn tasp(&self, node: usize) -> &[f64] {
        let s = self.stride();
        &self.data[node * s..node * s + self.components]
    }

    pub fn tasp_component(&self, node: usize, c: usize) -> f64 {
        self.data[node * self.stride() + c]
    }

    /// Quench-axis field component `h_q`.
    pub fn axis_field(&self, node: usize) -> f64 {
        self.data[node * self.stride() + self.components]
    }

    /// `P_u − P_d`.
    pub fn spin(&self, node: usize) -> f64 {
        self.data[node * self.stride() + self.components + 1]
    }

    /// Defining scalar of a first-order surface, negative on `V` and with
    /// near-zero values snapped to zero.
    pub fn scalar(&self, kind: SurfaceKind, node: usize) -> f64 {
        snap(match kind {
            SurfaceKind::Bis => self.axis_field(node),
            SurfaceKind::Sis => -self.spin(node),
        })
    }

    /// Central-difference gradient of a node scalar.
    pub fn gradient(&self, node: usize, value: impl Fn(usize) -> f64) -> [f64; 3] {
        let h = self.zone.spacing();
        let mut g = [0.0; 3];
        for (axis, v) in g.iter_mut().enumerate().take(self.zone.dim) {
            let fwd = value(self.zone.neighbor(node, axis, 1));
            let bwd = value(self.zone.neighbor(node, axis, -1));
            *v = (fwd - bwd) / (2.0 * h);
        }
        g
    }
}

/// Evaluate the closed-form TASP over the zone.
pub fn sweep(model: &Model, spec: &QuenchSpec, zone: Zone, exec: Exec) -> Result<TaspGrid, SurfaceError> {
    if zone.dim != model.dim() {
        return Err(SurfaceError::BadDimension(zone.dim));
    }
    let components = model.components();
    let stride = components + 2;
    let mut data = vec![0.0; zone.node_count() * stride];
    exec.fill_chunks(&mut data, stride, |node, out| {
        let p = zone.position(node);
        let h = model.eval(&p[..zone.dim]);
        match tasp(&h, spec) {
            Ok(_) if h.energy() < GAP_TOL => out.iter_mut().for_each(|v| *v = f64::NAN),
            Ok(r) => {
                out[..components].copy_from_slice(&r.tasp);
                out[components] = h[spec.axis];
                out[components + 1] = r.spin_factor();
            }
            Err(_) => out.iter_mut().for_each(|v| *v = f64::NAN),
        }
    });
    if let Some(node) = (0..zone.node_count()).find(|&n| data[n * stride].is_nan()) {
        let p = zone.position(node);
        let h = model.eval(&p[..zone.dim]);
        return match tasp(&h, spec) {
            Ok(_) if h.energy() < GAP_TOL => Err(SurfaceError::GaplessNode {
                position: p[..zone.dim].to_vec(),
            }),
            Err(crate::lz::LzError::GaplessPoint(_)) => Err(SurfaceError::GaplessNode {
                position: p[..zone.dim].to_vec(),
            }),
            Err(e) => Err(e.into()),
            Ok(_) => unreachable!("node {node} evaluated inconsistently"),
        };
    }
    Ok(TaspGrid {
        zone,
        model: model.clone(),
        spec: *spec,
        components,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zone_layout() {
        let z = Zone::new(2, 201).unwrap();
        assert_eq!(z.cells(), 200);
        assert_eq!(z.node_count(), 40000);
        assert!((z.coord(50) + PI / 2.0).abs() < 1e-15);
        assert!(z.coord(100).abs() < 1e-15);
        let n = z.node([3, 7, 0]);
        assert_eq!(z.indices(n), [3, 7, 0]);
        assert_eq!(z.neighbor(z.node([199, 0, 0]), 0, 1), z.node([0, 0, 0]));
        assert_eq!(Zone::new(2, 200), Err(SurfaceError::BadExtent(200)));
    }

    #[test]
    fn sweep_paths_agree() {
        let m = Model::qah_2d(1.0);
        let spec = QuenchSpec::slow(1.0).unwrap();
        let z = Zone::new(2, 41).unwrap();
        let a = sweep(&m, &spec, z, Exec::Sequential).unwrap();
        let b = sweep(&m, &spec, z, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gapless_node_reported() {
        let m = Model::aiii_1d(1.0);
        let z = Zone::new(1, 101).unwrap();
        let err = sweep(&m, &QuenchSpec::slow(1.0).unwrap(), z, Exec::Sequential).unwrap_err();
        assert!(matches!(err, SurfaceError::GaplessNode { .. }));
    }
}
