use serde::{Deserialize, Serialize};

use super::{normalize, SurfaceError, SurfaceKind, TaspGrid, Vertex};

/// How the dynamical field at a surface vertex is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSource {
    /// `−⟨γ_i⟩̄` on a band inversion surface.
    BisValue,
    /// `−∂_{k⊥}⟨γ_i⟩̄` on a spin inversion surface.
    SisGradient,
    /// `−⟨γ_i⟩̄` of a second quench, read on the first quench's SIS.
    SisValue,
}

/// Dynamical field evaluated at vertices through their node stencils.
#[derive(Clone, Copy, Debug)]
pub struct VertexField<'a> {
    grid: &'a TaspGrid,
    source: FieldSource,
}

impl<'a> VertexField<'a> {
    pub fn new(grid: &'a TaspGrid, source: FieldSource) -> Self {
        Self { grid, source }
    }

    pub fn source(&self) -> FieldSource {
        self.source
    }

    pub fn grid(&self) -> &'a TaspGrid {
        self.grid
    }

    pub fn component(&self, v: &Vertex, c: usize) -> f64 {
        match self.source {
            FieldSource::BisValue | FieldSource::SisValue => -v.interpolate(|n| self.grid.tasp_component(n, c)),
            FieldSource::SisGradient => {
                let g = &self.grid;
                let mut acc = 0.0;
                for &(n, w) in &v.stencil {
                    let grad = g.gradient(n, |m| g.tasp_component(m, c));
                    acc += w * (grad[0] * v.normal[0] + grad[1] * v.normal[1] + grad[2] * v.normal[2]);
                }
                -acc
            }
        }
    }

    /// Field components `comps` at a vertex.
    pub fn eval(&self, v: &Vertex, comps: &[usize]) -> Vec<f64> {
        comps.iter().map(|&c| self.component(v, c)).collect()
    }
}

/// Outward unit normal of the first-order surface of `kind` at a vertex,
/// recomputed from the node gradients of the defining scalar.
pub fn normal_direction(grid: &TaspGrid, kind: SurfaceKind, v: &Vertex) -> Result<[f64; 3], SurfaceError> {
    let mut g = [0.0; 3];
    for &(n, w) in &v.stencil {
        let d = grid.gradient(n, |m| grid.scalar(kind, m));
        for i in 0..3 {
            g[i] += w * d[i];
        }
    }
    normalize(g).ok_or(SurfaceError::FlatField { position: v.position })
}

/// `g̃_i = −∂_{k⊥}⟨γ_i⟩̄` for the requested components.
pub fn gradient_field(grid: &TaspGrid, v: &Vertex, comps: &[usize]) -> Vec<f64> {
    VertexField::new(grid, FieldSource::SisGradient).eval(v, comps)
}
