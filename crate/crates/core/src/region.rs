//! Triangle-set regions, the cut-and-count separation test (parity coloring
//! of the dual graph), Euler characteristics of sides, and region convexity.

use alloc::vec;
use alloc::vec::Vec;

use crate::curve::{Curve, MeshPoint};
use crate::engine::Engine;
use crate::mesh::{SurfaceMesh, TriId};

/// Bit set over triangle ids.
#[derive(Clone, Debug, Default)]
pub struct TriSet {
    bits: Vec<u64>,
    count: usize,
}

impl TriSet {
    pub fn new(n_tris: usize) -> TriSet {
        TriSet {
            bits: vec![0; n_tris.div_ceil(64)],
            count: 0,
        }
    }

    pub fn from_iter(n_tris: usize, iter: impl IntoIterator<Item = TriId>) -> TriSet {
        let mut s = TriSet::new(n_tris);
        for t in iter {
            s.insert(t);
        }
        s
    }

    pub fn insert(&mut self, t: TriId) {
        let (w, b) = (t as usize / 64, t as usize % 64);
        if self.bits[w] & (1 << b) == 0 {
            self.bits[w] |= 1 << b;
            self.count += 1;
        }
    }

    pub fn contains(&self, t: TriId) -> bool {
        let (w, b) = (t as usize / 64, t as usize % 64);
        self.bits
            .get(w)
            .map_or(false, |word| word & (1 << b) != 0)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = TriId> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            (0..64)
                .filter(move |b| word & (1u64 << b) != 0)
                .map(move |b| (w * 64 + b) as TriId)
        })
    }

    /// Closed-region point membership (edge/vertex points count if any
    /// incident face is inside).
    pub fn contains_point(&self, mesh: &SurfaceMesh, p: &MeshPoint) -> bool {
        if self.contains(p.face) {
            return true;
        }
        if let Some(c) = p.at_corner() {
            let v = mesh.tri(p.face)[c as usize];
            return mesh.fan(v).iter().any(|&(t, _)| self.contains(t));
        }
        if let Some(s) = p.on_edge() {
            if let Some((n, _)) = mesh.neighbor(p.face, s) {
                return self.contains(n);
            }
        }
        false
    }
}

/// Cut structure of a closed curve against the mesh skeleton: transversal
/// crossing parity per edge, vertices the curve passes through or runs
/// along, and edges carrying along-edge runs.
pub struct CurveCut {
    pub parity: Vec<u8>,
    pub on_vertex: Vec<bool>,
    pub along_edge: Vec<bool>,
    pub trivial: bool,
}

/// Mesh edge that both points lie on (for along-edge moves); zero-length
/// same-vertex hops return None.
fn common_edge_of(mesh: &SurfaceMesh, a: &MeshPoint, b: &MeshPoint) -> Option<crate::mesh::EdgeId> {
    let edges_of = |p: &MeshPoint| -> alloc::vec::Vec<crate::mesh::EdgeId> {
        if let Some(c) = p.at_corner() {
            let v = mesh.tri(p.face)[c as usize];
            let mut out = alloc::vec::Vec::new();
            for &(t, tc) in mesh.fan(v) {
                out.push(mesh.tri_edge(t, tc));
                out.push(mesh.tri_edge(t, (tc + 2) % 3));
            }
            out
        } else if let Some(s) = p.on_edge() {
            alloc::vec![mesh.tri_edge(p.face, s)]
        } else {
            alloc::vec::Vec::new()
        }
    };
    if let (Some(ca), Some(cb)) = (a.at_corner(), b.at_corner()) {
        if mesh.tri(a.face)[ca as usize] == mesh.tri(b.face)[cb as usize] {
            return None;
        }
    }
    let ea = edges_of(a);
    if ea.is_empty() {
        return None;
    }
    edges_of(b).into_iter().find(|e| ea.contains(e))
}

/// Point-local crossing record: a curve point on an edge crosses it iff its
/// polyline neighbors lie on opposite sides; vertex passages and along-edge
/// runs mark skeleton elements as occupied instead.
pub fn curve_cut(mesh: &SurfaceMesh, curve: &Curve) -> CurveCut {
    let mut parity = vec![0u8; mesh.n_edges()];
    let mut on_vertex = vec![false; mesh.n_verts()];
    let mut along_edge = vec![false; mesh.n_edges()];
    let mut any = false;
    let n = curve.points.len();
    if n < 2 {
        return CurveCut {
            parity,
            on_vertex,
            along_edge,
            trivial: true,
        };
    }
    let tol = 1e-11 * (1.0 + mesh.max_edge_len());
    let neighbor_of = |i: usize, dir: i64| -> Option<MeshPoint> {
        let mut k = i as i64;
        for _ in 0..n {
            k = if curve.closed {
                (k + dir).rem_euclid(n as i64)
            } else {
                let t = k + dir;
                if t < 0 || t >= n as i64 {
                    return None;
                }
                t
            };
            let q = curve.points[k as usize];
            if crate::curve::segment_length(mesh, &curve.points[i], &q).unwrap_or(0.0) > tol {
                return Some(q);
            }
        }
        None
    };
    let side_sign = |pface: TriId, side: u8, q: &MeshPoint| -> Option<f64> {
        let lt = mesh.layout(pface);
        let a = lt.p[side as usize];
        let b = lt.p[((side + 1) % 3) as usize];
        let xy = if let Some(q2) = q.express_in(mesh, pface) {
            q2.xy(mesh)
        } else if let Some((ka, _)) = mesh.shared_side(pface, q.face) {
            crate::chart::unfold_neighbor(mesh, pface, ka).apply(q.xy(mesh))
        } else {
            return None;
        };
        let s = (b[0] - a[0]) * (xy[1] - a[1]) - (b[1] - a[1]) * (xy[0] - a[0]);
        let scale = ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1])).max(1e-300);
        let rel = s / scale;
        if rel.abs() < 1e-10 {
            None
        } else {
            Some(rel)
        }
    };
    let idxs: alloc::vec::Vec<usize> = if curve.closed {
        (0..n).collect()
    } else {
        (1..n.saturating_sub(1)).collect()
    };
    for i in idxs {
        let p = curve.points[i];
        if let Some(c) = p.at_corner() {
            let v = mesh.tri(p.face)[c as usize];
            on_vertex[v as usize] = true;
            any = true;
            continue;
        }
        let (Some(prev), Some(next)) = (neighbor_of(i, -1), neighbor_of(i, 1)) else {
            continue;
        };
        if let Some(side) = p.on_edge() {
            let e = mesh.tri_edge(p.face, side);
            let run_prev = common_edge_of(mesh, &p, &prev) == Some(e);
            let run_next = common_edge_of(mesh, &p, &next) == Some(e);
            if run_prev || run_next {
                along_edge[e as usize] = true;
                let [va, vb] = mesh.edge_verts(e);
                on_vertex[va as usize] = true;
                on_vertex[vb as usize] = true;
                any = true;
                continue;
            }
            let (sp, sn) = (side_sign(p.face, side, &prev), side_sign(p.face, side, &next));
            match (sp, sn) {
                (Some(a), Some(b)) if a * b < 0.0 => {
                    parity[e as usize] ^= 1;
                    any = true;
                }
                (None, _) | (_, None) => {
                    along_edge[e as usize] = true;
                    any = true;
                }
                _ => {}
            }
        }
    }
    CurveCut {
        parity,
        on_vertex,
        along_edge,
        trivial: !any,
    }
}

pub enum Separation {
    NonSeparating,
    Separating {
        /// Side per triangle, derived from the vertex coloring.
        side: Vec<bool>,
        /// Triangles the curve passes through (side unreliable there).
        crossed: Vec<bool>,
    },
}

/// Cut-and-count on the vertex graph: color mesh vertices, flipping across
/// odd-crossing edges; vertices and edges the curve occupies impose no
/// constraint. A parity contradiction, or a cut that fails to split the
/// vertex classes, means the curve does not separate (hence is essential).
pub fn separation(mesh: &SurfaceMesh, curve: &Curve) -> Separation {
    let cut = curve_cut(mesh, curve);
    let nt = mesh.n_tris();
    let nv = mesh.n_verts();
    let mut crossed = vec![false; nt];
    for p in &curve.points {
        crossed[p.face as usize] = true;
        // Faces incident to occupied skeleton pieces are fuzzy too.
        if let Some(c) = p.at_corner() {
            let v = mesh.tri(p.face)[c as usize];
            for &(t, _) in mesh.fan(v) {
                crossed[t as usize] = true;
            }
        }
    }
    if cut.trivial {
        return Separation::Separating {
            side: vec![false; nt],
            crossed,
        };
    }
    // Vertex BFS with (component, color) classes.
    let mut comp = vec![u32::MAX; nv];
    let mut color = vec![false; nv];
    let mut n_comp = 0u32;
    let blocked_vertex = |v: u32| cut.on_vertex[v as usize];
    for start in 0..nv as u32 {
        if comp[start as usize] != u32::MAX || blocked_vertex(start) {
            continue;
        }
        comp[start as usize] = n_comp;
        color[start as usize] = false;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &(t, c) in mesh.fan(v) {
                // Edges incident to v within this fan wedge: side c
                // (v -> next corner) walks the full vertex link as the fan
                // rotates, so visiting side c alone covers every incident
                // edge exactly once per wedge.
                let e = mesh.tri_edge(t, c);
                if cut.along_edge[e as usize] {
                    continue;
                }
                let u = mesh.tri(t)[((c + 1) % 3) as usize];
                if blocked_vertex(u) {
                    continue;
                }
                let want = color[v as usize] ^ (cut.parity[e as usize] == 1);
                if comp[u as usize] == u32::MAX {
                    comp[u as usize] = n_comp;
                    color[u as usize] = want;
                    stack.push(u);
                } else if color[u as usize] != want {
                    return Separation::NonSeparating;
                }
            }
            // Boundary fans miss the trailing edge (v -> last wedge's far
            // corner across side c+2); cover it explicitly.
            if let Some(&(t, c)) = mesh.fan(v).last() {
                let e = mesh.tri_edge(t, (c + 2) % 3);
                if !cut.along_edge[e as usize] {
                    let u = mesh.tri(t)[((c + 2) % 3) as usize];
                    if !blocked_vertex(u) {
                        let want = color[v as usize] ^ (cut.parity[e as usize] == 1);
                        if comp[u as usize] == u32::MAX {
                            comp[u as usize] = n_comp;
                            color[u as usize] = want;
                            stack.push(u);
                        } else if color[u as usize] != want {
                            return Separation::NonSeparating;
                        }
                    }
                }
            }
        }
        n_comp += 1;
    }
    // Collect realized classes over free vertices.
    let mut classes: alloc::vec::Vec<(u32, bool)> = alloc::vec::Vec::new();
    for v in 0..nv {
        if comp[v] == u32::MAX {
            continue;
        }
        let class = (comp[v], color[v]);
        if !classes.contains(&class) {
            classes.push(class);
        }
    }
    if classes.len() < 2 {
        return Separation::NonSeparating;
    }
    let c0 = classes[0];
    // Triangle side: first free corner's class.
    let side: Vec<bool> = (0..nt as u32)
        .map(|t| {
            let tv = mesh.tri(t);
            for &v in &tv {
                if comp[v as usize] != u32::MAX {
                    return (comp[v as usize], color[v as usize]) != c0;
                }
            }
            false
        })
        .collect();
    Separation::Separating { side, crossed }
}

/// Side color of a point under a separating curve; falls back to the nearest
/// uncrossed triangle when the point's own face is crossed.
pub fn side_of_point(
    mesh: &SurfaceMesh,
    side: &[bool],
    crossed: &[bool],
    p: &MeshPoint,
) -> bool {
    let t0 = p.face;
    if !crossed[t0 as usize] {
        return side[t0 as usize];
    }
    // Small BFS to the nearest clean triangle.
    let mut seen = alloc::collections::BTreeMap::new();
    let mut queue = alloc::collections::VecDeque::new();
    queue.push_back(t0);
    seen.insert(t0, ());
    while let Some(t) = queue.pop_front() {
        if !crossed[t as usize] {
            return side[t as usize];
        }
        for k in 0..3u8 {
            if let Some((u, _)) = mesh.neighbor(t, k) {
                if !seen.contains_key(&u) {
                    seen.insert(u, ());
                    queue.push_back(u);
                }
            }
        }
        if seen.len() > 512 {
            break;
        }
    }
    side[t0 as usize]
}

/// Euler characteristic of the subcomplex induced by the triangles where
/// `inside` holds (counting their vertices and edges).
pub fn euler_characteristic(mesh: &SurfaceMesh, inside: &dyn Fn(TriId) -> bool) -> i64 {
    let mut v_seen = vec![false; mesh.n_verts()];
    let mut e_seen = vec![false; mesh.n_edges()];
    let mut f = 0i64;
    let mut v = 0i64;
    let mut e = 0i64;
    for t in 0..mesh.n_tris() as u32 {
        if !inside(t) {
            continue;
        }
        f += 1;
        for c in 0..3 {
            let vid = mesh.tri(t)[c] as usize;
            if !v_seen[vid] {
                v_seen[vid] = true;
                v += 1;
            }
        }
        for k in 0..3u8 {
            let eid = mesh.tri_edge(t, k) as usize;
            if !e_seen[eid] {
                e_seen[eid] = true;
                e += 1;
            }
        }
    }
    v - e + f
}

/// Whether a side of a separating simple loop is a topological disk: Euler
/// characteristic one and no truncation boundary inside.
pub fn side_is_disk(mesh: &SurfaceMesh, side: &[bool], crossed: &[bool], want: bool) -> bool {
    let inside = |t: TriId| side[t as usize] == want && !crossed[t as usize];
    let chi = euler_characteristic(mesh, &inside);
    if chi != 1 {
        return false;
    }
    for end in mesh.ends() {
        if end
            .collar_tris
            .iter()
            .any(|&t| side[t as usize] == want && !crossed[t as usize])
        {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionNotConvex {
    pub vertex: u32,
    pub wedge: f64,
}

/// Verify every boundary vertex of the region has inward wedge ≤ π + tol:
/// the sum of the region's corner angles at that vertex.
pub fn region_convexity(
    engine: &Engine,
    region: &TriSet,
    tol: f64,
) -> Result<(), RegionNotConvex> {
    let mesh = engine.mesh;
    let pi = core::f64::consts::PI;
    for v in 0..mesh.n_verts() as u32 {
        let fan = mesh.fan(v);
        if fan.is_empty() {
            continue;
        }
        let inside = fan.iter().filter(|&&(t, _)| region.contains(t)).count();
        if inside == 0 || inside == fan.len() {
            continue;
        }
        let wedge: f64 = fan
            .iter()
            .filter(|&&(t, _)| region.contains(t))
            .map(|&(t, c)| crate::chart::wedge_span(mesh, t, c))
            .sum();
        if wedge > pi + tol {
            return Err(RegionNotConvex { vertex: v, wedge });
        }
    }
    Ok(())
}

/// All snapshot points stay within the closed region.
pub fn region_contains_curve(mesh: &SurfaceMesh, region: &TriSet, curve: &Curve) -> bool {
    curve
        .points
        .iter()
        .all(|p| region.contains_point(mesh, p))
}

/// Region grown from a seed set by triangle adjacency, stopping at a
/// blocking predicate.
pub fn flood_region(
    mesh: &SurfaceMesh,
    seeds: impl IntoIterator<Item = TriId>,
    blocked_edge: &dyn Fn(crate::mesh::EdgeId) -> bool,
) -> TriSet {
    let mut set = TriSet::new(mesh.n_tris());
    let mut stack: Vec<TriId> = Vec::new();
    for s in seeds {
        if !set.contains(s) {
            set.insert(s);
            stack.push(s);
        }
    }
    while let Some(t) = stack.pop() {
        for k in 0..3u8 {
            let e = mesh.tri_edge(t, k);
            if blocked_edge(e) {
                continue;
            }
            if let Some((u, _)) = mesh.neighbor(t, k) {
                if !set.contains(u) {
                    set.insert(u);
                    stack.push(u);
                }
            }
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn wrapping_loop_separates_cylinder_directions() {
        // On a torus, a (1,0) loop is non-separating; a small contractible
        // loop separates.
        let m = gen::flat_torus(1.0, 2.0, 3).unwrap();
        let eng = Engine::new(&m);
        let p = |x: f64, y: f64| gen::flat_torus_point(&m, 3, 1.0, 2.0, x, y);
        // Non-separating: straight loop around the short direction.
        let start = p(0.31, 0.7);
        let dir = gen::flat_torus_dir(&m, 3, 1.0, 2.0, &start, [1.0, 0.0]);
        let wrap = crate::path::trace_geodesic(&eng, &start, dir, 1.0);
        let mut pts = wrap.points.clone();
        pts.pop();
        let wrap_loop = Curve::new(&m, pts, true).unwrap();
        assert!(matches!(separation(&m, &wrap_loop), Separation::NonSeparating));
        // Separating: a small square loop.
        let mut sq = Vec::new();
        let corners = [
            p(0.2, 0.2),
            p(0.55, 0.2),
            p(0.55, 0.55),
            p(0.2, 0.55),
        ];
        for k in 0..4 {
            let seg = eng.shortest_path(&corners[k], &corners[(k + 1) % 4]).unwrap();
            sq.extend(seg.points);
        }
        let mut c = Curve::new(&m, sq, true).unwrap();
        c.dedup(&m);
        match separation(&m, &c) {
            Separation::Separating { side, crossed } => {
                let inside = side_of_point(&m, &side, &crossed, &p(0.375, 0.375));
                let outside = side_of_point(&m, &side, &crossed, &p(0.9, 1.5));
                assert_ne!(inside, outside);
                // The small side is a disk, the big side is not.
                let small = side_is_disk(&m, &side, &crossed, inside);
                let big = side_is_disk(&m, &side, &crossed, outside);
                assert!(small, "inner side should be a disk");
                assert!(!big, "outer side of a torus loop is not a disk");
            }
            _ => panic!("square loop must separate"),
        }
    }
}




