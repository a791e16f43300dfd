use std::collections::{hash_map::Entry, HashMap};

use crate::lz::QuenchKind;

use super::{crossing, normalize, positive, wrap, Element, Level, OrientedPoint, Polyline, SurfaceError, SurfaceKind, TaspGrid, TriMesh, Vertex};

/// Zero set of the defining scalar of `kind`.
///
/// In one dimension the result is a set of oriented points; in two, closed
/// curves traversed with `V` on the left (marching squares with the cell
/// average deciding saddles); in three, closed triangle meshes from a
/// six-tetrahedron split of every cube along its main diagonal, with faces
/// oriented by the outward normal.
///
/// After a sudden quench the spin inversion surface coincides with the band
/// inversion surface and is reported as empty.
pub fn detect_first_order(grid: &TaspGrid, kind: SurfaceKind) -> Result<Level, SurfaceError> {
    if kind == SurfaceKind::Sis && grid.spec.kind() == QuenchKind::Sudden {
        return Err(SurfaceError::EmptySurface { kind, order: 1 });
    }
    let elements = match grid.zone.dim {
        1 => points_1d(grid, kind)?,
        2 => curves_2d(grid, kind)?,
        _ => meshes_3d(grid, kind)?,
    };
    if elements.is_empty() {
        return Err(SurfaceError::EmptySurface { kind, order: 1 });
    }
    Ok(Level {
        kind,
        order: 1,
        cut: Vec::new(),
        elements,
        degenerate_pairs: 0,
    })
}

/// Vertex on the grid edge from node `a` along the 0/1 offset `dir`.
fn edge_vertex(grid: &TaspGrid, kind: SurfaceKind, a: usize, dir: [isize; 3]) -> Result<Vertex, SurfaceError> {
    let zone = &grid.zone;
    let ia = zone.indices(a);
    let b = zone.node([ia[0] as isize + dir[0], ia[1] as isize + dir[1], ia[2] as isize + dir[2]]);
    let (sa, sb) = (grid.scalar(kind, a), grid.scalar(kind, b));
    let t = crossing(sa, sb);
    let pa = zone.position(a);
    let mut position = [0.0; 3];
    for i in 0..zone.dim {
        position[i] = wrap(pa[i] + t * dir[i] as f64 * zone.spacing(), zone.lower());
    }
    let ga = grid.gradient(a, |n| grid.scalar(kind, n));
    let gb = grid.gradient(b, |n| grid.scalar(kind, n));
    let g = [0, 1, 2].map(|i| (1.0 - t) * ga[i] + t * gb[i]);
    let normal = normalize(g).ok_or(SurfaceError::FlatField { position })?;
    let mut stencil = Vec::with_capacity(2);
    if t < 1.0 {
        stencil.push((a, 1.0 - t));
    }
    if t > 0.0 {
        stencil.push((b, t));
    }
    Ok(Vertex { position, stencil, normal })
}

fn points_1d(grid: &TaspGrid, kind: SurfaceKind) -> Result<Vec<Element>, SurfaceError> {
    let m = grid.zone.cells();
    let mut points = Vec::new();
    for a in 0..m {
        let b = (a + 1) % m;
        let (pa, pb) = (positive(grid.scalar(kind, a)), positive(grid.scalar(kind, b)));
        if pa != pb {
            let vertex = edge_vertex(grid, kind, a, [1, 0, 0])?;
            let orientation = if vertex.normal[0] > 0.0 { 1 } else { -1 };
            points.push(OrientedPoint { vertex, orientation });
        }
    }
    Ok(if points.is_empty() { Vec::new() } else { vec![Element::Points(points)] })
}

fn curves_2d(grid: &TaspGrid, kind: SurfaceKind) -> Result<Vec<Element>, SurfaceError> {
    let zone = &grid.zone;
    let m = zone.cells() as isize;
    let mut vertex_of_edge: HashMap<usize, Vertex> = HashMap::new();
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut order: Vec<usize> = Vec::new();
    for j in 0..m {
        for i in 0..m {
            let c = [
                zone.node([i, j, 0]),
                zone.node([i + 1, j, 0]),
                zone.node([i + 1, j + 1, 0]),
                zone.node([i, j + 1, 0]),
            ];
            let v = c.map(|n| grid.scalar(kind, n));
            let neg = v.map(|x| !positive(x));
            if neg.iter().all(|&x| x) || neg.iter().all(|&x| !x) {
                continue;
            }
            let edge_id = [2 * c[0], 2 * c[1] + 1, 2 * c[3], 2 * c[0] + 1];
            let crosses = |k: usize| neg[k] != neg[(k + 1) % 4];
            let saddle = neg[0] == neg[2] && neg[1] == neg[3];
            let center = 0.25 * v.iter().sum::<f64>();
            for k in 0..4 {
                if !(neg[k] && !neg[(k + 1) % 4]) {
                    continue;
                }
                let end = if saddle && positive(center) {
                    (k + 3) % 4
                } else {
                    (1..4).map(|d| (k + d) % 4).find(|&e| crosses(e)).expect("contour closes in cell")
                };
                next.insert(edge_id[k], edge_id[end]);
                order.push(edge_id[k]);
            }
        }
    }
    for &id in next.keys().chain(next.values()) {
        if let Entry::Vacant(slot) = vertex_of_edge.entry(id) {
            let (node, axis) = (id / 2, id % 2);
            let mut dir = [0; 3];
            dir[axis] = 1;
            slot.insert(edge_vertex(grid, kind, node, dir)?);
        }
    }
    let mut visited: HashMap<usize, bool> = HashMap::new();
    let mut elements = Vec::new();
    for &first in &order {
        if visited.contains_key(&first) {
            continue;
        }
        let mut vertices = Vec::new();
        let mut id = first;
        loop {
            visited.insert(id, true);
            vertices.push(vertex_of_edge[&id].clone());
            id = next[&id];
            if id == first {
                break;
            }
        }
        elements.push(Element::Curve(Polyline { vertices }));
    }
    Ok(elements)
}

/// Corner offsets of the six tetrahedra sharing the cube diagonal.
const TETS: [[[isize; 3]; 4]; 6] = {
    const fn path(a: usize, b: usize) -> [[isize; 3]; 4] {
        let mut v1 = [0; 3];
        v1[a] = 1;
        let mut v2 = v1;
        v2[b] = 1;
        [[0, 0, 0], v1, v2, [1, 1, 1]]
    }
    [path(0, 1), path(0, 2), path(1, 0), path(1, 2), path(2, 0), path(2, 1)]
};

fn direction_index(d: [isize; 3]) -> usize {
    (d[0] + 2 * d[1] + 4 * d[2]) as usize - 1
}

fn meshes_3d(grid: &TaspGrid, kind: SurfaceKind) -> Result<Vec<Element>, SurfaceError> {
    let zone = &grid.zone;
    let m = zone.cells() as isize;
    let mut vertex_index: HashMap<usize, usize> = HashMap::new();
    let mut edges: Vec<(usize, [isize; 3])> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let base = [i, j, k];
                let corner = |o: [isize; 3]| zone.node([base[0] + o[0], base[1] + o[1], base[2] + o[2]]);
                let cube: [f64; 8] = std::array::from_fn(|c| {
                    let o = [(c & 1) as isize, ((c >> 1) & 1) as isize, ((c >> 2) & 1) as isize];
                    grid.scalar(kind, corner(o))
                });
                let negs = cube.iter().filter(|&&v| !positive(v)).count();
                if negs == 0 || negs == 8 {
                    continue;
                }
                for tet in &TETS {
                    let value = |o: [isize; 3]| cube[(o[0] + 2 * o[1] + 4 * o[2]) as usize];
                    let neg: Vec<usize> = (0..4).filter(|&q| !positive(value(tet[q]))).collect();
                    if neg.is_empty() || neg.len() == 4 {
                        continue;
                    }
                    let pos: Vec<usize> = (0..4).filter(|&q| positive(value(tet[q]))).collect();
                    let mut id_of = |p: usize, q: usize| -> (usize, [f64; 3]) {
                        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
                        let (oa, ob) = (tet[lo], tet[hi]);
                        let d = [ob[0] - oa[0], ob[1] - oa[1], ob[2] - oa[2]];
                        let a = corner(oa);
                        let id = 7 * a + direction_index(d);
                        let next = vertex_index.len();
                        let idx = *vertex_index.entry(id).or_insert_with(|| {
                            edges.push((a, d));
                            next
                        });
                        // Edge midpoints give the same orientation as the crossings
                        // and never coincide when a corner value is zero.
                        let local = [0, 1, 2].map(|x| oa[x] as f64 + 0.5 * d[x] as f64);
                        (idx, local)
                    };
                    let quads: Vec<[(usize, usize); 3]> = match (neg.len(), pos.len()) {
                        (1, _) => vec![[(neg[0], pos[0]), (neg[0], pos[1]), (neg[0], pos[2])]],
                        (_, 1) => vec![[(pos[0], neg[0]), (pos[0], neg[1]), (pos[0], neg[2])]],
                        _ => {
                            let (a, b, c, d) = (neg[0], neg[1], pos[0], pos[1]);
                            vec![[(a, c), (a, d), (b, d)], [(a, c), (b, d), (b, c)]]
                        }
                    };
                    let centroid = |set: &[usize]| {
                        let mut s = [0.0; 3];
                        for &q in set {
                            for x in 0..3 {
                                s[x] += tet[q][x] as f64 / set.len() as f64;
                            }
                        }
                        s
                    };
                    let (cn, cp) = (centroid(&neg), centroid(&pos));
                    let outward = [cp[0] - cn[0], cp[1] - cn[1], cp[2] - cn[2]];
                    for tri in quads {
                        let v = tri.map(|(p, q)| id_of(p, q));
                        let e1 = [0, 1, 2].map(|x| v[1].1[x] - v[0].1[x]);
                        let e2 = [0, 1, 2].map(|x| v[2].1[x] - v[0].1[x]);
                        let n = [
                            e1[1] * e2[2] - e1[2] * e2[1],
                            e1[2] * e2[0] - e1[0] * e2[2],
                            e1[0] * e2[1] - e1[1] * e2[0],
                        ];
                        let dot = n[0] * outward[0] + n[1] * outward[1] + n[2] * outward[2];
                        let (a, b, c) = (v[0].0, v[1].0, v[2].0);
                        if a == b || b == c || a == c {
                            continue;
                        }
                        triangles.push(if dot >= 0.0 { [a, b, c] } else { [a, c, b] });
                    }
                }
            }
        }
    }
    let vertices: Vec<Vertex> = edges.iter().map(|&(a, d)| edge_vertex(grid, kind, a, d)).collect::<Result<_, _>>()?;
    Ok(split_components(vertices, triangles))
}

/// Separate a triangle soup into connected meshes.
fn split_components(vertices: Vec<Vertex>, triangles: Vec<[usize; 3]>) -> Vec<Element> {
    let n = vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for t in &triangles {
        for e in [(t[0], t[1]), (t[1], t[2])] {
            let (a, b) = (find(&mut parent, e.0), find(&mut parent, e.1));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<usize> = Vec::new();
    let mut group_of_root: HashMap<usize, usize> = HashMap::new();
    let mut local: Vec<usize> = vec![usize::MAX; n];
    let mut meshes: Vec<TriMesh> = Vec::new();
    for t in &triangles {
        let root = find(&mut parent, t[0]);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            groups.push(root);
            meshes.push(TriMesh {
                vertices: Vec::new(),
                triangles: Vec::new(),
            });
            meshes.len() - 1
        });
        let mesh = &mut meshes[g];
        let tri = t.map(|v| {
            if local[v] == usize::MAX {
                local[v] = mesh.vertices.len();
                mesh.vertices.push(vertices[v].clone());
            }
            local[v]
        });
        mesh.triangles.push(tri);
    }
    meshes.into_iter().map(Element::Mesh).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::lz::QuenchSpec;
    use crate::models::Model;
    use crate::surfaces::{sweep, Zone};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn one_dimensional_bis_points() {
        let grid = sweep(
            &Model::aiii_1d(0.0),
            &QuenchSpec::slow(1.0).unwrap(),
            Zone::new(1, 201).unwrap(),
            Exec::Sequential,
        )
        .unwrap();
        let level = detect_first_order(&grid, SurfaceKind::Bis).unwrap();
        let pts = level.points();
        assert_eq!(pts.len(), 2);
        let mut xs: Vec<(f64, i8)> = pts.iter().map(|p| (p.vertex.position[0], p.orientation)).collect();
        xs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!((xs[0].0 + FRAC_PI_2).abs() < 1e-12 && xs[0].1 == -1);
        assert!((xs[1].0 - FRAC_PI_2).abs() < 1e-12 && xs[1].1 == 1);
    }

    #[test]
    fn qah_rings_are_single_closed_loops() {
        let grid = sweep(
            &Model::qah_2d(1.0),
            &QuenchSpec::slow(1.0).unwrap(),
            Zone::new(2, 101).unwrap(),
            Exec::Sequential,
        )
        .unwrap();
        for kind in [SurfaceKind::Bis, SurfaceKind::Sis] {
            let level = detect_first_order(&grid, kind).unwrap();
            assert_eq!(level.elements.len(), 1, "{kind:?}");
            let Element::Curve(c) = &level.elements[0] else { panic!() };
            // Counterclockwise about the origin, normal pointing outward.
            let mut area = 0.0;
            for (i, v) in c.vertices.iter().enumerate() {
                let w = &c.vertices[(i + 1) % c.vertices.len()];
                area += v.position[0] * w.position[1] - w.position[0] * v.position[1];
                let r = v.position[0] * v.normal[0] + v.position[1] * v.normal[1];
                assert!(r > 0.0);
            }
            assert!(area > 0.0);
        }
    }

    #[test]
    fn chiral_mesh_is_closed_and_outward() {
        let grid = sweep(
            &Model::chiral_3d(1.5),
            &QuenchSpec::slow(1.0).unwrap(),
            Zone::new(3, 41).unwrap(),
            Exec::Parallel,
        )
        .unwrap();
        let level = detect_first_order(&grid, SurfaceKind::Bis).unwrap();
        assert_eq!(level.elements.len(), 1);
        let Element::Mesh(mesh) = &level.elements[0] else { panic!() };
        let mut edge_count: HashMap<(usize, usize), i32> = HashMap::new();
        let mut volume = 0.0;
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
            }
            let p = t.map(|v| mesh.vertices[v].position);
            volume += p[0][0] * (p[1][1] * p[2][2] - p[1][2] * p[2][1]) - p[0][1] * (p[1][0] * p[2][2] - p[1][2] * p[2][0])
                + p[0][2] * (p[1][0] * p[2][1] - p[1][1] * p[2][0]);
        }
        assert!(edge_count.values().all(|&c| c == 0), "every edge used once in each direction");
        assert!(volume > 0.0);
    }
}
