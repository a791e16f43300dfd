use std::collections::HashMap;

use super::{
    crossing, lerp_vertex, minimal_image, positive, snap, Element, Level, OrientedPoint, Polyline, SurfaceError, TriMesh, Vertex, VertexField,
    DEGENERATE_TOL,
};

/// Intersect every element of `level` with the zero set of field component
/// `component`.
///
/// A mesh yields closed curves traversed with `{D_c > 0}` on the left when
/// viewed against the face normal. A curve yields points, oriented `+1`
/// where `D_c` changes from positive to negative along the traversal.
pub fn reduce_order(level: &Level, field: &VertexField, component: usize) -> Result<Level, SurfaceError> {
    let zone = field.grid().zone;
    let value = |v: &Vertex| snap(field.component(v, component));
    let mut elements = Vec::new();
    let mut degenerate_pairs = 0;
    for element in &level.elements {
        match element {
            Element::Mesh(mesh) => elements.extend(slice_mesh(mesh, &value, &zone)),
            Element::Curve(curve) => {
                let points = slice_curve(curve, &value, &zone);
                if !points.is_empty() {
                    degenerate_pairs += count_degenerate(&points, zone.dim);
                    elements.push(Element::Points(points));
                }
            }
            Element::Points(_) => {}
        }
    }
    let order = level.order + 1;
    if elements.is_empty() {
        return Err(SurfaceError::EmptySurface { kind: level.kind, order });
    }
    let mut cut = level.cut.clone();
    cut.push(component);
    Ok(Level {
        kind: level.kind,
        order,
        cut,
        elements,
        degenerate_pairs,
    })
}

fn slice_mesh(mesh: &TriMesh, value: &impl Fn(&Vertex) -> f64, zone: &super::Zone) -> Vec<Element> {
    let d: Vec<f64> = mesh.vertices.iter().map(value).collect();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut next: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut starts: Vec<(usize, usize)> = Vec::new();
    for t in &mesh.triangles {
        let mut start = None;
        let mut end = None;
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            match (positive(d[a]), positive(d[b])) {
                (true, false) => start = Some(key(a, b)),
                (false, true) => end = Some(key(a, b)),
                _ => {}
            }
        }
        if let (Some(s), Some(e)) = (start, end) {
            next.insert(s, e);
            starts.push(s);
        }
    }
    let mut cache: HashMap<(usize, usize), Vertex> = HashMap::new();
    let mut vertex = |e: (usize, usize)| {
        cache
            .entry(e)
            .or_insert_with(|| lerp_vertex(&mesh.vertices[e.0], &mesh.vertices[e.1], crossing(d[e.0], d[e.1]), zone))
            .clone()
    };
    let mut visited: HashMap<(usize, usize), ()> = HashMap::new();
    let mut out = Vec::new();
    for &first in &starts {
        if visited.contains_key(&first) {
            continue;
        }
        let mut vertices = Vec::new();
        let mut e = first;
        loop {
            visited.insert(e, ());
            vertices.push(vertex(e));
            match next.get(&e) {
                Some(&n) if n != first => e = n,
                _ => break,
            }
            if visited.contains_key(&e) {
                break;
            }
        }
        out.push(Element::Curve(Polyline { vertices }));
    }
    out
}

fn slice_curve(curve: &Polyline, value: &impl Fn(&Vertex) -> f64, zone: &super::Zone) -> Vec<OrientedPoint> {
    let n = curve.vertices.len();
    let d: Vec<f64> = curve.vertices.iter().map(value).collect();
    let mut points = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let (pa, pb) = (positive(d[i]), positive(d[j]));
        if pa != pb {
            let vertex = lerp_vertex(&curve.vertices[i], &curve.vertices[j], crossing(d[i], d[j]), zone);
            points.push(OrientedPoint {
                vertex,
                orientation: if pa { 1 } else { -1 },
            });
        }
    }
    points
}

fn count_degenerate(points: &[OrientedPoint], dim: usize) -> usize {
    let mut count = 0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = minimal_image(&a.vertex.position, &b.vertex.position, dim);
            if (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() < DEGENERATE_TOL {
                count += 1;
            }
        }
    }
    count
}
