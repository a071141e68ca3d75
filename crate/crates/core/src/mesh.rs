//! Intrinsic triangle mesh for a complete surface of finite area.
//!
//! The metric is piecewise flat: every triangle carries its three edge
//! lengths, curvature concentrates at vertices. Ends (cusps, funnels) are
//! truncated at a collar and the analytic area of the omitted tail is kept
//! in the bookkeeping, so `total_area` is the area of the ideal surface.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // used in no_std builds only
use num_traits::Float;

pub type VertId = u32;
pub type TriId = u32;
pub type EdgeId = u32;

/// Raw geometry handed to `build_mesh`: either 3D coordinates (edge lengths
/// become Euclidean distances) or an explicit edge-length table keyed by
/// canonical vertex pairs.
pub enum MeshInput {
    Coords(Vec<[f64; 3]>),
    EdgeLengths {
        n_vertices: u32,
        lengths: Vec<((u32, u32), f64)>,
    },
}

/// Declaration of one truncated end.
#[derive(Clone, Debug)]
pub struct EndSpec {
    /// Area of the omitted infinite tail beyond the truncation.
    pub tail_area: f64,
    /// Collar depth in triangle rings from the boundary (None = 2).
    pub collar_rings: Option<u32>,
    /// Explicit collar triangles; overrides `collar_rings` when non-empty.
    pub collar_tris: Vec<TriId>,
}

impl EndSpec {
    pub fn tail(tail_area: f64) -> Self {
        EndSpec {
            tail_area,
            collar_rings: None,
            collar_tris: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BuildError {
    /// An edge with more than two incident triangles, inconsistent
    /// orientation, or a disconnected complex.
    NonManifold(String),
    /// Triangle inequality violated or non-positive edge length.
    DegenerateTriangle(TriId),
    /// Boundary components do not match the declared ends.
    EndMismatch { declared: usize, found: usize },
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::NonManifold(s) => write!(f, "non-manifold mesh: {s}"),
            BuildError::DegenerateTriangle(t) => write!(f, "degenerate triangle {t}"),
            BuildError::EndMismatch { declared, found } => {
                write!(f, "declared {declared} ends but found {found} boundary components")
            }
        }
    }
}

/// One truncated end: its boundary loop, collar band and tail bookkeeping.
#[derive(Clone, Debug)]
pub struct End {
    pub boundary_verts: Vec<VertId>,
    pub boundary_edges: Vec<EdgeId>,
    pub collar_tris: Vec<TriId>,
    pub tail_area: f64,
    /// Length of the truncation boundary loop.
    pub ring_len: f64,
}

/// Planar layout of one triangle: corner 0 at the origin, corner 1 on the
/// positive x-axis, corner 2 in the upper half plane (CCW).
#[derive(Clone, Copy, Debug)]
pub struct TriLayout {
    pub p: [[f64; 2]; 3],
}

impl TriLayout {
    pub fn bary_to_xy(&self, b: [f64; 3]) -> [f64; 2] {
        [
            b[0] * self.p[0][0] + b[1] * self.p[1][0] + b[2] * self.p[2][0],
            b[0] * self.p[0][1] + b[1] * self.p[1][1] + b[2] * self.p[2][1],
        ]
    }

    pub fn xy_to_bary(&self, xy: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.p;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((xy[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (xy[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (xy[1] - a[1]) - (xy[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Numerically stable Heron area (Kahan), inputs are the three side lengths.
pub fn heron_area(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let [a, b, c] = s;
    let t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if t <= 0.0 {
        0.0
    } else {
        0.25 * t.sqrt()
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub struct SurfaceMesh {
    tris: Vec<[VertId; 3]>,
    n_verts: u32,
    edge_verts: Vec<[VertId; 2]>,
    edge_len: Vec<f64>,
    /// Edge id of side k (corner k -> corner k+1) of each triangle.
    tri_edges: Vec<[EdgeId; 3]>,
    /// Neighbor across side k and the matching side index there.
    tri_nbr: Vec<[Option<(TriId, u8)>; 3]>,
    layouts: Vec<TriLayout>,
    tri_area: Vec<f64>,
    /// Incident (tri, corner) around each vertex in CCW fan order; boundary
    /// fans start at the boundary side.
    fans: Vec<Vec<(TriId, u8)>>,
    cone_angle: Vec<f64>,
    ends: Vec<End>,
    mesh_area: f64,
    total_area: f64,
    max_edge: f64,
    median_edge: f64,
    coords: Option<Vec<[f64; 3]>>,
    /// One or two incident triangles per edge (u32::MAX = none).
    edge_tri_cache: Vec<[u32; 2]>,
}

impl SurfaceMesh {
    pub fn n_tris(&self) -> usize {
        self.tris.len()
    }
    pub fn n_verts(&self) -> usize {
        self.n_verts as usize
    }
    pub fn n_edges(&self) -> usize {
        self.edge_verts.len()
    }
    pub fn tri(&self, t: TriId) -> [VertId; 3] {
        self.tris[t as usize]
    }
    pub fn tris(&self) -> &[[VertId; 3]] {
        &self.tris
    }
    pub fn layout(&self, t: TriId) -> &TriLayout {
        &self.layouts[t as usize]
    }
    pub fn tri_area(&self, t: TriId) -> f64 {
        self.tri_area[t as usize]
    }
    pub fn edge_len(&self, e: EdgeId) -> f64 {
        self.edge_len[e as usize]
    }
    pub fn edge_verts(&self, e: EdgeId) -> [VertId; 2] {
        self.edge_verts[e as usize]
    }
    pub fn tri_edge(&self, t: TriId, side: u8) -> EdgeId {
        self.tri_edges[t as usize][side as usize]
    }
    pub fn neighbor(&self, t: TriId, side: u8) -> Option<(TriId, u8)> {
        self.tri_nbr[t as usize][side as usize]
    }
    pub fn side_len(&self, t: TriId, side: u8) -> f64 {
        self.edge_len[self.tri_edges[t as usize][side as usize] as usize]
    }
    pub fn fan(&self, v: VertId) -> &[(TriId, u8)] {
        &self.fans[v as usize]
    }
    pub fn cone_angle(&self, v: VertId) -> f64 {
        self.cone_angle[v as usize]
    }
    /// 2π minus the cone angle; positive at convex cone points.
    pub fn angle_deficit(&self, v: VertId) -> f64 {
        core::f64::consts::TAU - self.cone_angle[v as usize]
    }
    pub fn is_boundary_vertex(&self, v: VertId) -> bool {
        let fan = &self.fans[v as usize];
        match fan.last() {
            // Open fans end where the CCW crossing side has no neighbor.
            Some(&(t, c)) => self.tri_nbr[t as usize][((c + 2) % 3) as usize].is_none(),
            None => false,
        }
    }
    pub fn ends(&self) -> &[End] {
        &self.ends
    }
    pub fn n_ends(&self) -> usize {
        self.ends.len()
    }
    pub fn mesh_area(&self) -> f64 {
        self.mesh_area
    }
    pub fn total_area(&self) -> f64 {
        self.total_area
    }
    pub fn sqrt_area(&self) -> f64 {
        self.total_area.sqrt()
    }
    pub fn max_edge_len(&self) -> f64 {
        self.max_edge
    }
    pub fn median_edge_len(&self) -> f64 {
        self.median_edge
    }
    /// Discretization slack used in the length bounds.
    pub fn delta_mesh(&self) -> f64 {
        2.0 * self.max_edge
    }
    pub fn coords(&self) -> Option<&[[f64; 3]]> {
        self.coords.as_deref()
    }
    pub fn is_boundary_edge(&self, e: EdgeId) -> bool {
        self.edge_tris(e).1.is_none()
    }

    /// The one or two triangles incident to an edge.
    pub fn edge_tris(&self, e: EdgeId) -> (TriId, Option<TriId>) {
        let r = self.edge_tri_cache[e as usize];
        (r[0], if r[1] == u32::MAX { None } else { Some(r[1]) })
    }

    /// Corner index of vertex `v` in triangle `t`.
    pub fn corner_of(&self, t: TriId, v: VertId) -> Option<u8> {
        let tv = self.tris[t as usize];
        (0..3).find(|&c| tv[c] == v).map(|c| c as u8)
    }

    /// Shared side indices when `t` and `u` are edge-adjacent.
    pub fn shared_side(&self, t: TriId, u: TriId) -> Option<(u8, u8)> {
        for k in 0..3u8 {
            if let Some((n, nk)) = self.neighbor(t, k) {
                if n == u {
                    return Some((k, nk));
                }
            }
        }
        None
    }

    pub fn geometry_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x100000001b3);
        };
        eat(self.n_verts as u64);
        eat(self.tris.len() as u64);
        for t in &self.tris {
            eat(t[0] as u64 ^ ((t[1] as u64) << 20) ^ ((t[2] as u64) << 40));
        }
        for l in &self.edge_len {
            eat(l.to_bits());
        }
        for e in &self.ends {
            eat(e.tail_area.to_bits());
        }
        h
    }
}

pub fn build_mesh(
    input: MeshInput,
    raw_tris: Vec<[VertId; 3]>,
    end_spec: Vec<EndSpec>,
) -> Result<SurfaceMesh, BuildError> {
    let (n_verts, coords, length_table) = match input {
        MeshInput::Coords(c) => (c.len() as u32, Some(c), None),
        MeshInput::EdgeLengths { n_vertices, lengths } => {
            let mut map = BTreeMap::new();
            for ((a, b), l) in lengths {
                let key = if a < b { (a, b) } else { (b, a) };
                map.insert(key, l);
            }
            (n_vertices, None, Some(map))
        }
    };

    // Edge table keyed by canonical vertex pair.
    let mut edge_ids: BTreeMap<(u32, u32), EdgeId> = BTreeMap::new();
    let mut edge_verts: Vec<[VertId; 2]> = Vec::new();
    let mut edge_incident: Vec<Vec<(TriId, u8)>> = Vec::new();
    let mut tri_edges = vec![[0u32; 3]; raw_tris.len()];

    for (ti, tri) in raw_tris.iter().enumerate() {
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(BuildError::DegenerateTriangle(ti as TriId));
        }
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if a >= n_verts || b >= n_verts {
                return Err(BuildError::NonManifold(String::from("vertex id out of range")));
            }
            let key = if a < b { (a, b) } else { (b, a) };
            let e = *edge_ids.entry(key).or_insert_with(|| {
                edge_verts.push([key.0, key.1]);
                edge_incident.push(Vec::new());
                (edge_verts.len() - 1) as EdgeId
            });
            tri_edges[ti][k] = e;
            edge_incident[e as usize].push((ti as TriId, k as u8));
        }
    }

    // Lengths.
    let mut edge_len = vec![0.0f64; edge_verts.len()];
    for (e, &[a, b]) in edge_verts.iter().enumerate() {
        let l = if let Some(c) = &coords {
            let (p, q) = (c[a as usize], c[b as usize]);
            let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        } else {
            *length_table
                .as_ref()
                .unwrap()
                .get(&(a, b))
                .ok_or_else(|| BuildError::NonManifold(String::from("missing edge length")))?
        };
        if !(l.is_finite() && l > 0.0) {
            let t = edge_incident[e][0].0;
            return Err(BuildError::DegenerateTriangle(t));
        }
        edge_len[e] = l;
    }

    // Manifold and orientation checks; build neighbor table.
    let mut tri_nbr = vec![[None; 3]; raw_tris.len()];
    let mut edge_tri_cache = vec![[u32::MAX; 2]; edge_verts.len()];
    for (e, inc) in edge_incident.iter().enumerate() {
        match inc.len() {
            1 => {
                edge_tri_cache[e][0] = inc[0].0;
            }
            2 => {
                let (t0, k0) = inc[0];
                let (t1, k1) = inc[1];
                // Consistent global orientation: the two triangles must
                // traverse the shared edge in opposite directions.
                let d0 = raw_tris[t0 as usize][k0 as usize];
                let d1 = raw_tris[t1 as usize][k1 as usize];
                if d0 == d1 {
                    return Err(BuildError::NonManifold(String::from(
                        "inconsistent orientation across an edge",
                    )));
                }
                tri_nbr[t0 as usize][k0 as usize] = Some((t1, k1));
                tri_nbr[t1 as usize][k1 as usize] = Some((t0, k0));
                edge_tri_cache[e][0] = t0;
                edge_tri_cache[e][1] = t1;
            }
            n => {
                return Err(BuildError::NonManifold(alloc::format!(
                    "edge with {n} incident triangles"
                )))
            }
        }
    }

    // Triangle validity and layouts.
    let mut layouts = Vec::with_capacity(raw_tris.len());
    let mut tri_area = Vec::with_capacity(raw_tris.len());
    for (ti, _) in raw_tris.iter().enumerate() {
        let l01 = edge_len[tri_edges[ti][0] as usize];
        let l12 = edge_len[tri_edges[ti][1] as usize];
        let l20 = edge_len[tri_edges[ti][2] as usize];
        let scale = l01.max(l12).max(l20);
        if l01 + l12 - l20 <= 1e-13 * scale
            || l12 + l20 - l01 <= 1e-13 * scale
            || l20 + l01 - l12 <= 1e-13 * scale
        {
            return Err(BuildError::DegenerateTriangle(ti as TriId));
        }
        let x = (l01 * l01 + l20 * l20 - l12 * l12) / (2.0 * l01);
        let y2 = l20 * l20 - x * x;
        let y = if y2 > 0.0 { y2.sqrt() } else { 0.0 };
        if y <= 0.0 {
            return Err(BuildError::DegenerateTriangle(ti as TriId));
        }
        layouts.push(TriLayout {
            p: [[0.0, 0.0], [l01, 0.0], [x, y]],
        });
        tri_area.push(heron_area(l01, l12, l20));
    }

    // Connectivity.
    if !raw_tris.is_empty() {
        let mut seen = vec![false; raw_tris.len()];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                if let Some((n, _)) = tri_nbr[t as usize][k] {
                    if !seen[n as usize] {
                        seen[n as usize] = true;
                        count += 1;
                        stack.push(n);
                    }
                }
            }
        }
        if count != raw_tris.len() {
            return Err(BuildError::NonManifold(String::from("disconnected mesh")));
        }
    }

    // Vertex fans (CCW; crossing side (c+2) advances the fan).
    let mut vert_tri: Vec<Vec<(TriId, u8)>> = vec![Vec::new(); n_verts as usize];
    for (ti, tri) in raw_tris.iter().enumerate() {
        for c in 0..3 {
            vert_tri[tri[c] as usize].push((ti as TriId, c as u8));
        }
    }
    let mut fans: Vec<Vec<(TriId, u8)>> = Vec::with_capacity(n_verts as usize);
    for v in 0..n_verts as usize {
        let inc = &vert_tri[v];
        if inc.is_empty() {
            fans.push(Vec::new());
            continue;
        }
        // Walk clockwise (across side c, where v is the tail) to find the
        // CW-most wedge; closed fans may start anywhere.
        let mut start = inc[0];
        for _ in 0..inc.len() {
            let (t, c) = start;
            match tri_nbr[t as usize][c as usize] {
                Some((n, nk)) => {
                    // The edge reverses across the gluing, so v sits at the
                    // head of side nk in the neighbor: corner (nk+1)%3.
                    let next = (n, (nk + 1) % 3);
                    debug_assert_eq!(raw_tris[next.0 as usize][next.1 as usize], v as u32);
                    if next == inc[0] {
                        break;
                    }
                    start = next;
                }
                None => break,
            }
        }
        let mut fan = Vec::with_capacity(inc.len());
        let mut cur = start;
        loop {
            fan.push(cur);
            let (t, c) = cur;
            let back = (c + 2) % 3;
            match tri_nbr[t as usize][back as usize] {
                Some((n, nk)) => {
                    let nc = nk; // v is the tail of side nk in the neighbor
                    debug_assert_eq!(raw_tris[n as usize][nc as usize], v as u32);
                    cur = (n, nc);
                    if cur == start {
                        break;
                    }
                }
                None => break,
            }
            if fan.len() > inc.len() {
                return Err(BuildError::NonManifold(String::from(
                    "vertex with non-disk neighborhood",
                )));
            }
        }
        if fan.len() != inc.len() {
            return Err(BuildError::NonManifold(String::from(
                "vertex with multiple wedges",
            )));
        }
        fans.push(fan);
    }

    // Cone angles.
    let corner_angle = |t: usize, c: usize| -> f64 {
        let a = edge_len[tri_edges[t][c] as usize]; // side c: c -> c+1
        let b = edge_len[tri_edges[t][(c + 2) % 3] as usize]; // side c+2: c+2 -> c
        let opp = edge_len[tri_edges[t][(c + 1) % 3] as usize];
        let cosv = ((a * a + b * b - opp * opp) / (2.0 * a * b)).clamp(-1.0, 1.0);
        cosv.acos()
    };
    let mut cone_angle = vec![0.0f64; n_verts as usize];
    for v in 0..n_verts as usize {
        cone_angle[v] = neumaier_sum(
            fans[v]
                .iter()
                .map(|&(t, c)| corner_angle(t as usize, c as usize)),
        );
    }

    // Boundary loops -> ends.
    let mut boundary_next: BTreeMap<VertId, (VertId, EdgeId)> = BTreeMap::new();
    for (ti, tri) in raw_tris.iter().enumerate() {
        for k in 0..3 {
            if tri_nbr[ti][k].is_none() {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                boundary_next.insert(a, (b, tri_edges[ti][k]));
            }
        }
    }
    let mut loops: Vec<(Vec<VertId>, Vec<EdgeId>)> = Vec::new();
    let mut seen_bv: BTreeMap<VertId, bool> = BTreeMap::new();
    let starts: Vec<VertId> = boundary_next.keys().copied().collect();
    for s in starts {
        if seen_bv.contains_key(&s) {
            continue;
        }
        let mut verts = Vec::new();
        let mut edges = Vec::new();
        let mut cur = s;
        loop {
            seen_bv.insert(cur, true);
            verts.push(cur);
            let (next, e) = boundary_next[&cur];
            edges.push(e);
            cur = next;
            if cur == s {
                break;
            }
            if verts.len() > boundary_next.len() {
                return Err(BuildError::NonManifold(String::from("broken boundary loop")));
            }
        }
        loops.push((verts, edges));
    }

    if loops.len() != end_spec.len() {
        return Err(BuildError::EndMismatch {
            declared: end_spec.len(),
            found: loops.len(),
        });
    }

    let mut ends = Vec::with_capacity(loops.len());
    for ((verts, edges), spec) in loops.into_iter().zip(end_spec.into_iter()) {
        let ring_len = neumaier_sum(edges.iter().map(|&e| edge_len[e as usize]));
        let collar_tris = if !spec.collar_tris.is_empty() {
            spec.collar_tris.clone()
        } else {
            // Rings of triangles grown from the boundary loop.
            let rings = spec.collar_rings.unwrap_or(2);
            let mut in_collar = vec![false; raw_tris.len()];
            let mut frontier: Vec<TriId> = Vec::new();
            for &v in &verts {
                for &(t, _) in &fans[v as usize] {
                    if !in_collar[t as usize] {
                        in_collar[t as usize] = true;
                        frontier.push(t);
                    }
                }
            }
            for _ in 1..rings {
                let mut next = Vec::new();
                for &t in &frontier {
                    for k in 0..3 {
                        if let Some((n, _)) = tri_nbr[t as usize][k] {
                            if !in_collar[n as usize] {
                                in_collar[n as usize] = true;
                                next.push(n);
                            }
                        }
                    }
                }
                frontier = next;
            }
            (0..raw_tris.len() as u32)
                .filter(|&t| in_collar[t as usize])
                .collect()
        };
        ends.push(End {
            boundary_verts: verts,
            boundary_edges: edges,
            collar_tris,
            tail_area: spec.tail_area,
            ring_len,
        });
    }

    let mesh_area = neumaier_sum(tri_area.iter().copied());
    let total_area = mesh_area + neumaier_sum(ends.iter().map(|e| e.tail_area));
    let mut sorted = edge_len.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max_edge = *sorted.last().unwrap_or(&0.0);
    let median_edge = if sorted.is_empty() {
        0.0
    } else {
        sorted[sorted.len() / 2]
    };

    Ok(SurfaceMesh {
        tris: raw_tris,
        n_verts,
        edge_verts,
        edge_len,
        tri_edges,
        tri_nbr,
        layouts,
        tri_area,
        fans,
        cone_angle,
        ends,
        mesh_area,
        total_area,
        max_edge,
        median_edge,
        coords,
        edge_tri_cache,
    })
}

impl SurfaceMesh {
    /// Uniform 4-to-1 midpoint subdivision. Sub-edge lengths follow the flat
    /// triangle geometry exactly (each is half of a parent edge), so the
    /// intrinsic metric is unchanged. Tail areas carry over per end.
    ///
    /// Fails on meshes where two triangles share two or more edges (their
    /// midlines would coincide); generators handle those cases directly.
    pub fn refine(&self) -> Result<SurfaceMesh, BuildError> {
        let nv = self.n_verts;
        let ne = self.edge_verts.len() as u32;
        let mid = |e: EdgeId| nv + e;
        let mut tris = Vec::with_capacity(self.tris.len() * 4);
        for (ti, tri) in self.tris.iter().enumerate() {
            let m01 = mid(self.tri_edges[ti][0]);
            let m12 = mid(self.tri_edges[ti][1]);
            let m20 = mid(self.tri_edges[ti][2]);
            tris.push([tri[0], m01, m20]);
            tris.push([tri[1], m12, m01]);
            tris.push([tri[2], m20, m12]);
            tris.push([m01, m12, m20]);
        }
        let mut lengths: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let mut put = |a: u32, b: u32, l: f64| {
            let key = if a < b { (a, b) } else { (b, a) };
            lengths.insert(key, l);
        };
        for (e, &[a, b]) in self.edge_verts.iter().enumerate() {
            let m = mid(e as u32);
            let half = self.edge_len[e] * 0.5;
            put(a, m, half);
            put(m, b, half);
        }
        for (ti, _) in self.tris.iter().enumerate() {
            // Midline opposite side k has half the length of side (k+1)+...:
            // midline m01-m12 connects midpoints of sides 0 and 1 and is
            // parallel to side 2, half its length; similarly cyclic.
            let m01 = mid(self.tri_edges[ti][0]);
            let m12 = mid(self.tri_edges[ti][1]);
            let m20 = mid(self.tri_edges[ti][2]);
            put(m01, m12, 0.5 * self.edge_len[self.tri_edges[ti][2] as usize]);
            put(m12, m20, 0.5 * self.edge_len[self.tri_edges[ti][0] as usize]);
            put(m20, m01, 0.5 * self.edge_len[self.tri_edges[ti][1] as usize]);
        }
        let specs = self
            .ends
            .iter()
            .map(|e| EndSpec::tail(e.tail_area))
            .collect();
        let coords = self.coords.as_ref().map(|c| {
            let mut out = c.clone();
            out.extend(self.edge_verts.iter().map(|&[a, b]| {
                let (p, q) = (c[a as usize], c[b as usize]);
                [(p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5, (p[2] + q[2]) * 0.5]
            }));
            out
        });
        let input = match coords {
            Some(c) => MeshInput::Coords(c),
            None => MeshInput::EdgeLengths {
                n_vertices: nv + ne,
                lengths: lengths.into_iter().collect(),
            },
        };
        build_mesh(input, tris, specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pillow(h: f64) -> SurfaceMesh {
        // Two congruent triangles glued along all three edges.
        let a = 2.0 * h / 3.0f64.sqrt();
        let lengths = vec![((0, 1), a), ((1, 2), a), ((0, 2), a)];
        build_mesh(
            MeshInput::EdgeLengths {
                n_vertices: 3,
                lengths,
            },
            vec![[0, 1, 2], [0, 2, 1]],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn pillow_area_and_ends() {
        let m = pillow(1.0);
        assert_eq!(m.n_ends(), 0);
        let expect = 2.0 / 3.0f64.sqrt();
        assert!((m.total_area() - expect).abs() < 1e-12 * expect);
        // Cone angle at each vertex: two equilateral corners.
        for v in 0..3 {
            assert!((m.cone_angle(v) - 2.0 * core::f64::consts::PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pillow_area_scales_with_height() {
        let m = pillow(2.0);
        let expect = 8.0 / 3.0f64.sqrt();
        assert!((m.total_area() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn refine_preserves_area_exactly() {
        // A flat 2x2 grid square with one declared boundary end.
        let mut coords = alloc::vec::Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                coords.push([i as f64, j as f64, 0.0]);
            }
        }
        let vid = |i: usize, j: usize| (j * 3 + i) as u32;
        let mut tris = alloc::vec::Vec::new();
        for j in 0..2 {
            for i in 0..2 {
                tris.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
                tris.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
        let m = build_mesh(MeshInput::Coords(coords), tris, vec![EndSpec::tail(0.05)]).unwrap();
        let r = m.refine().unwrap();
        assert_eq!(r.n_tris(), 4 * m.n_tris());
        assert!((r.total_area() - m.total_area()).abs() < 1e-12);
        let rr = r.refine().unwrap();
        assert!((rr.total_area() - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn refine_rejects_doubly_glued_pairs() {
        let m = pillow(1.0);
        assert!(m.refine().is_err());
    }

    #[test]
    fn nonmanifold_edge_rejected() {
        let lengths = vec![
            ((0, 1), 1.0),
            ((1, 2), 1.0),
            ((0, 2), 1.0),
            ((1, 3), 1.0),
            ((2, 3), 1.0),
            ((1, 4), 1.0),
            ((2, 4), 1.0),
        ];
        let r = build_mesh(
            MeshInput::EdgeLengths {
                n_vertices: 5,
                lengths,
            },
            vec![[0, 1, 2], [2, 1, 3], [2, 1, 4]],
            vec![],
        );
        assert!(matches!(r, Err(BuildError::NonManifold(_))));
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let lengths = vec![((0, 1), 1.0), ((1, 2), 1.0), ((0, 2), 2.5)];
        let r = build_mesh(
            MeshInput::EdgeLengths {
                n_vertices: 3,
                lengths,
            },
            vec![[0, 1, 2], [0, 2, 1]],
            vec![],
        );
        assert!(matches!(r, Err(BuildError::DegenerateTriangle(_))));
    }

    #[test]
    fn end_mismatch_rejected() {
        let m = build_mesh(
            MeshInput::Coords(vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
            ]),
            vec![[0, 1, 2]],
            vec![],
        );
        assert!(matches!(m, Err(BuildError::EndMismatch { .. })));
    }

    #[test]
    fn single_triangle_with_declared_end() {
        let m = build_mesh(
            MeshInput::Coords(vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
            ]),
            vec![[0, 1, 2]],
            vec![EndSpec::tail(0.01)],
        )
        .unwrap();
        assert_eq!(m.n_ends(), 1);
        assert!((m.total_area() - (0.5 + 0.01)).abs() < 1e-14);
    }
}
