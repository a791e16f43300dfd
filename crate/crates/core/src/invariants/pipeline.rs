use serde::{Deserialize, Serialize};

use super::{permutation_sign, point_degree, ring_winding, sign_of, surface_degree, z2_index, InvariantError};
use crate::exec::Exec;
use crate::lz::{tasp, QuenchSpec};
use crate::models::{InvariantClass, Model};
use crate::surfaces::{
    detect_first_order, reduce_order, sweep, Element, FieldSource, Level, SurfaceError, SurfaceKind, SurfaceSet, TaspGrid, Vertex, VertexField, Zone,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// One quench; values on band inversion surfaces and gradients on spin
    /// inversion surfaces.
    Scheme1,
    /// A second quench whose values are read on the first quench's spin
    /// inversion surfaces.
    Scheme2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions {
    /// Nodes per axis, including the periodic image.
    pub extent: usize,
    /// Lower zone edge in units of `π`.
    pub origin: f64,
    pub exec: Exec,
    /// Components whose zeros define successive orders; ascending when unset.
    pub reduction: Option<Vec<usize>>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            extent: 201,
            origin: -1.0,
            exec: Exec::Parallel,
            reduction: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEvidence {
    pub position: Vec<f64>,
    pub orientation: i8,
    /// Field components still unused at this order, in ascending index.
    pub values: Vec<f64>,
}

/// What one order of one surface kind says about the invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderEvidence {
    pub kind: SurfaceKind,
    pub source: FieldSource,
    pub order: usize,
    pub cut: Vec<usize>,
    pub components: Vec<usize>,
    pub elements: usize,
    pub vertices: usize,
    pub degenerate_pairs: usize,
    pub element_degrees: Vec<i64>,
    pub degree: Option<i64>,
    pub invariant: Option<i64>,
    pub min_field_norm: Option<f64>,
    pub points: Vec<PointEvidence>,
    pub empty: bool,
}

impl OrderEvidence {
    pub fn label(&self) -> String {
        let kind = match self.kind {
            SurfaceKind::Bis => "BIS",
            SurfaceKind::Sis => "SIS",
        };
        format!("{}-{kind}", self.order)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub scheme: Scheme,
    pub model: Model,
    pub class: InvariantClass,
    pub rate: f64,
    pub quench_axes: Vec<usize>,
    pub extent: usize,
    pub reduction: Vec<usize>,
    pub orders: Vec<OrderEvidence>,
    pub invariant: i64,
    pub ground_truth: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub surface_files: Vec<String>,
    #[serde(skip)]
    pub surfaces: Vec<SurfaceSet>,
}

impl InvariantReport {
    pub fn evidence(&self, kind: SurfaceKind, order: usize) -> Option<&OrderEvidence> {
        self.orders.iter().find(|e| e.kind == kind && e.order == order)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum WindingOutcome {
    Quantized { value: i64 },
    NotQuantized { reason: String },
}

/// Second-quench values on the band inversion surface of a sudden quench.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuddenControlReport {
    pub model: Model,
    pub extent: usize,
    pub second_axis: usize,
    /// Maximum over the surface of each spin-orbit polarization component.
    pub max_values: Vec<f64>,
    pub winding: WindingOutcome,
    pub positive_control: InvariantReport,
}

impl SuddenControlReport {
    pub fn values_nonpositive(&self, tol: f64) -> bool {
        self.max_values.iter().all(|&v| v <= tol)
    }

    /// True when the sudden values yield no nonzero quantized winding.
    pub fn pattern_absent(&self) -> bool {
        !matches!(self.winding, WindingOutcome::Quantized { value } if value != 0)
    }
}

/// Reduction scheme of a model class.
struct Plan {
    class: InvariantClass,
    components: Vec<usize>,
    first_order: usize,
    reduction: Vec<usize>,
}

impl Plan {
    fn new(model: &Model, custom: Option<&[usize]>) -> Result<Self, InvariantError> {
        let class = model.class();
        let (components, first_order, default): (Vec<usize>, usize, Vec<usize>) = match class {
            InvariantClass::Z2 => (vec![1, 2, 3, 4], 2, vec![2, 3]),
            _ => {
                let d = model.dim();
                ((1..=d).collect(), 1, (1..d).collect())
            }
        };
        let reduction = match custom {
            None => default,
            Some(r) => {
                let mut seen = r.to_vec();
                seen.sort_unstable();
                seen.dedup();
                if r.len() != default.len() || seen.len() != r.len() || !r.iter().all(|c| components.contains(c)) {
                    return Err(InvariantError::InvalidPipeline(format!(
                        "reduction {r:?} must list {} distinct components from {components:?}",
                        default.len()
                    )));
                }
                r.to_vec()
            }
        };
        Ok(Self {
            class,
            components,
            first_order,
            reduction,
        })
    }

    fn remaining(&self, cut: &[usize]) -> Vec<usize> {
        self.components.iter().copied().filter(|c| !cut.contains(c)).collect()
    }

    fn trivial(&self) -> i64 {
        match self.class {
            InvariantClass::Z2 => 1,
            _ => 0,
        }
    }

    fn invariant_of(&self, degree: i64) -> i64 {
        match self.class {
            InvariantClass::Winding1d => degree.abs(),
            _ => -degree,
        }
    }
}

/// Field value with one analytic re-evaluation when the grid value is too
/// small to carry a sign.
fn point_value(field: &VertexField, v: &Vertex, c: usize) -> Result<f64, InvariantError> {
    let value = field.component(v, c);
    if sign_of(value).is_some() {
        return Ok(value);
    }
    let refined = refine(field, v, c)?;
    if sign_of(refined).is_some() {
        Ok(refined)
    } else {
        Err(InvariantError::DegenerateSign {
            position: v.position,
            component: c,
            value: refined,
        })
    }
}

/// Direct evaluation at the vertex position; gradients use a step a quarter
/// of the grid spacing.
fn refine(field: &VertexField, v: &Vertex, c: usize) -> Result<f64, InvariantError> {
    let grid = field.grid();
    let dim = grid.zone.dim;
    let at = |k: [f64; 3]| -> Result<f64, InvariantError> {
        let h = grid.model.eval(&k[..dim]);
        Ok(tasp(&h, &grid.spec)?.tasp[c])
    };
    match field.source() {
        FieldSource::BisValue | FieldSource::SisValue => Ok(-at(v.position)?),
        FieldSource::SisGradient => {
            let s = grid.zone.spacing() / 4.0;
            let shift = |sign: f64| std::array::from_fn(|i| v.position[i] + sign * s * v.normal[i]);
            Ok(-(at(shift(1.0))? - at(shift(-1.0))?) / (2.0 * s))
        }
    }
}

fn empty_evidence(kind: SurfaceKind, source: FieldSource, order: usize, cut: Vec<usize>, plan: &Plan) -> OrderEvidence {
    let components = plan.remaining(&cut);
    let degree = (plan.class != InvariantClass::Z2).then_some(0);
    OrderEvidence {
        kind,
        source,
        order,
        cut,
        components,
        elements: 0,
        vertices: 0,
        degenerate_pairs: 0,
        element_degrees: Vec::new(),
        degree,
        invariant: Some(plan.trivial()),
        min_field_norm: None,
        points: Vec::new(),
        empty: true,
    }
}

fn evaluate(level: &Level, field: &VertexField, plan: &Plan) -> Result<OrderEvidence, InvariantError> {
    let remaining = plan.remaining(&level.cut);
    let mut sequence = level.cut.clone();
    sequence.extend(&remaining);
    let parity = permutation_sign(&sequence);
    let dimension = level.elements.first().map_or(0, Element::dimension);
    let label = format!(
        "{}-{} ({:?})",
        level.order,
        match level.kind {
            SurfaceKind::Bis => "BIS",
            SurfaceKind::Sis => "SIS",
        },
        field.source()
    );
    let min_field_norm = level
        .elements
        .iter()
        .flat_map(|e| e.vertices())
        .map(|v| field.eval(v, &remaining).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(None, |acc: Option<f64>, n| Some(acc.map_or(n, |a| a.min(n))));

    let mut points = Vec::new();
    let mut element_degrees = Vec::new();
    let mut degree = None;
    let mut invariant = None;
    if dimension == 0 {
        for p in level.points() {
            let values = remaining
                .iter()
                .map(|&c| point_value(field, &p.vertex, c))
                .collect::<Result<Vec<_>, _>>()?;
            points.push(PointEvidence {
                position: p.vertex.position[..field.grid().zone.dim].to_vec(),
                orientation: p.orientation,
                values,
            });
        }
    }
    if plan.class == InvariantClass::Z2 {
        if dimension == 0 {
            if points.len() != 2 || remaining.len() != 2 {
                return Err(InvariantError::InconsistentEvidence(format!(
                    "{label}: expected one pair of points, found {}",
                    points.len()
                )));
            }
            let pair = [[points[0].values[0], points[0].values[1]], [points[1].values[0], points[1].values[1]]];
            invariant = Some(z2_index(pair)?);
        }
    } else if remaining.len() == dimension + 1 {
        for element in &level.elements {
            let d = match element {
                Element::Points(ps) => {
                    let signed: Vec<(i8, f64)> = ps
                        .iter()
                        .map(|p| Ok((p.orientation, point_value(field, &p.vertex, remaining[0])?)))
                        .collect::<Result<_, InvariantError>>()?;
                    point_degree(&signed)
                }
                Element::Curve(c) => {
                    let values: Vec<[f64; 2]> = c
                        .vertices
                        .iter()
                        .map(|v| [field.component(v, remaining[0]), field.component(v, remaining[1])])
                        .collect();
                    ring_winding(&values)
                }
                Element::Mesh(m) => {
                    let values: Vec<[f64; 3]> = m
                        .vertices
                        .iter()
                        .map(|v| std::array::from_fn(|i| field.component(v, remaining[i])))
                        .collect();
                    surface_degree(&m.triangles, &values)
                }
            }
            .map_err(|e| e.on(&label))?;
            element_degrees.push(parity * d);
        }
        let total: i64 = element_degrees.iter().sum();
        degree = Some(total);
        invariant = Some(plan.invariant_of(total));
    }
    Ok(OrderEvidence {
        kind: level.kind,
        source: field.source(),
        order: level.order,
        cut: level.cut.clone(),
        components: remaining,
        elements: level.elements.len(),
        vertices: level.vertex_count(),
        degenerate_pairs: level.degenerate_pairs,
        element_degrees,
        degree,
        invariant,
        min_field_norm,
        points,
        empty: false,
    })
}

/// Walk the order hierarchy of one surface kind.
fn hierarchy(
    surface_grid: &TaspGrid,
    field: &VertexField,
    kind: SurfaceKind,
    plan: &Plan,
) -> Result<(Vec<OrderEvidence>, SurfaceSet), InvariantError> {
    let source = field.source();
    let mut evidence = Vec::new();
    let mut set = SurfaceSet { kind, levels: Vec::new() };
    let mut level = match detect_first_order(surface_grid, kind) {
        Ok(level) => level,
        Err(SurfaceError::EmptySurface { .. }) => {
            evidence.push(empty_evidence(kind, source, plan.first_order, Vec::new(), plan));
            return Ok((evidence, set));
        }
        Err(e) => return Err(e.into()),
    };
    level.order = plan.first_order;
    loop {
        evidence.push(evaluate(&level, field, plan)?);
        let step = level.cut.len();
        if step == plan.reduction.len() {
            set.levels.push(level);
            break;
        }
        let next = reduce_order(&level, field, plan.reduction[step]);
        let mut cut = level.cut.clone();
        set.levels.push(level);
        match next {
            Ok(l) => level = l,
            Err(SurfaceError::EmptySurface { order, .. }) => {
                cut.push(plan.reduction[step]);
                evidence.push(empty_evidence(kind, source, order, cut, plan));
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((evidence, set))
}

fn agree(evidence: &[OrderEvidence]) -> Result<i64, InvariantError> {
    let values: Vec<(String, i64)> = evidence.iter().filter_map(|e| e.invariant.map(|v| (e.label(), v))).collect();
    let Some(&(_, first)) = values.first() else {
        return Err(InvariantError::InconsistentEvidence(String::from("no order produced an invariant")));
    };
    if values.iter().any(|(_, v)| *v != first) {
        let listing: Vec<String> = values.iter().map(|(l, v)| format!("{l}={v}")).collect();
        return Err(InvariantError::InconsistentEvidence(listing.join(", ")));
    }
    Ok(first)
}

fn zone_for(model: &Model, opts: &PipelineOptions) -> Result<Zone, InvariantError> {
    Ok(Zone::with_origin(model.dim(), opts.extent, opts.origin)?)
}

/// Single quench along the band axis.
pub fn scheme1(model: &Model, rate: f64, opts: &PipelineOptions) -> Result<InvariantReport, InvariantError> {
    if !(rate > 0.0) {
        return Err(InvariantError::InvalidPipeline(format!("scheme 1 needs a slow quench, got rate {rate}")));
    }
    let plan = Plan::new(model, opts.reduction.as_deref())?;
    let spec = QuenchSpec::new(0, rate)?;
    let grid = sweep(model, &spec, zone_for(model, opts)?, opts.exec)?;
    let mut orders = Vec::new();
    let mut surfaces = Vec::new();
    for (kind, source) in [(SurfaceKind::Bis, FieldSource::BisValue), (SurfaceKind::Sis, FieldSource::SisGradient)] {
        let field = VertexField::new(&grid, source);
        let (evidence, set) = hierarchy(&grid, &field, kind, &plan)?;
        orders.extend(evidence);
        surfaces.push(set);
    }
    finish(Scheme::Scheme1, model, rate, vec![0], opts, plan, orders, surfaces)
}

/// Quench the band axis to locate spin inversion surfaces, then read the
/// values of a second quench along `second_axis` on them.
pub fn scheme2(model: &Model, rate: f64, second_axis: usize, opts: &PipelineOptions) -> Result<InvariantReport, InvariantError> {
    if !(rate > 0.0) {
        return Err(InvariantError::InvalidPipeline(format!("scheme 2 needs a slow quench, got rate {rate}")));
    }
    if second_axis == 0 || second_axis >= model.components() {
        return Err(InvariantError::InvalidPipeline(format!(
            "second quench axis {second_axis} must lie in 1..{}",
            model.components()
        )));
    }
    let plan = Plan::new(model, opts.reduction.as_deref())?;
    let zone = zone_for(model, opts)?;
    let first = sweep(model, &QuenchSpec::new(0, rate)?, zone, opts.exec)?;
    let second = sweep(model, &QuenchSpec::new(second_axis, rate)?, zone, opts.exec)?;
    let field = VertexField::new(&second, FieldSource::SisValue);
    let (orders, set) = hierarchy(&first, &field, SurfaceKind::Sis, &plan)?;
    finish(Scheme::Scheme2, model, rate, vec![0, second_axis], opts, plan, orders, vec![set])
}

#[allow(clippy::too_many_arguments)]
fn finish(
    scheme: Scheme,
    model: &Model,
    rate: f64,
    quench_axes: Vec<usize>,
    opts: &PipelineOptions,
    plan: Plan,
    orders: Vec<OrderEvidence>,
    surfaces: Vec<SurfaceSet>,
) -> Result<InvariantReport, InvariantError> {
    let invariant = agree(&orders)?;
    Ok(InvariantReport {
        scheme,
        model: model.clone(),
        class: plan.class,
        rate,
        quench_axes,
        extent: opts.extent,
        reduction: plan.reduction,
        orders,
        invariant,
        ground_truth: model.ground_truth().and_then(|g| g.value),
        surface_files: Vec::new(),
        surfaces,
    })
}

/// The second-scheme procedure applied to a sudden quench of a planar
/// model, where the band inversion surface stands in for the absent spin
/// inversion surface, together with the same pipeline at unit rate.
pub fn sudden_control(model: &Model, second_axis: usize, opts: &PipelineOptions) -> Result<SuddenControlReport, InvariantError> {
    if model.dim() != 2 {
        return Err(InvariantError::InvalidPipeline(String::from(
            "the sudden control needs a two-dimensional model",
        )));
    }
    let zone = zone_for(model, opts)?;
    let first = sweep(model, &QuenchSpec::new(0, 0.0)?, zone, opts.exec)?;
    let second = sweep(model, &QuenchSpec::new(second_axis, 0.0)?, zone, opts.exec)?;
    let level = detect_first_order(&first, SurfaceKind::Bis)?;
    let mut max_values = vec![f64::NEG_INFINITY; 2];
    let mut winding = WindingOutcome::Quantized { value: 0 };
    let mut total = 0;
    for element in &level.elements {
        let Element::Curve(curve) = element else { continue };
        let mut values = Vec::with_capacity(curve.vertices.len());
        for v in &curve.vertices {
            let t = [1, 2].map(|c| v.interpolate(|n| second.tasp_component(n, c)));
            for (m, x) in max_values.iter_mut().zip(t) {
                *m = m.max(x);
            }
            values.push([-t[0], -t[1]]);
        }
        match ring_winding(&values) {
            Ok(w) => total += w,
            Err(e) => {
                winding = WindingOutcome::NotQuantized {
                    reason: e.on("1-BIS").to_string(),
                };
            }
        }
    }
    if matches!(winding, WindingOutcome::Quantized { .. }) {
        winding = WindingOutcome::Quantized { value: -total };
    }
    let positive_control = scheme2(model, 1.0, second_axis, opts)?;
    Ok(SuddenControlReport {
        model: model.clone(),
        extent: opts.extent,
        second_axis,
        max_values,
        winding,
        positive_control,
    })
}
