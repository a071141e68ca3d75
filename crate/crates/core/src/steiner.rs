//! Graph of mesh vertices plus `k` Steiner points per edge, connected inside
//! each triangle with exact layout distances. Dijkstra on this graph is the
//! workhorse approximation of polyhedral distance; error is O(edge length)
//! and shrinks under refinement.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)] // used in no_std builds only
use num_traits::Float;

use crate::curve::MeshPoint;
use crate::mesh::{EdgeId, SurfaceMesh, TriId};

pub type NodeId = u32;

pub struct SteinerGraph {
    pub k: u32,
    n_verts: u32,
    n_nodes: u32,
    off: Vec<u32>,
    nbr: Vec<(NodeId, f64)>,
    /// Representative (tri, side) per edge for node -> mesh point mapping.
    edge_home: Vec<(TriId, u8)>,
}

impl SteinerGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes as usize
    }

    pub fn node_of_vertex(&self, v: u32) -> NodeId {
        v
    }

    fn edge_node(&self, e: EdgeId, j: u32) -> NodeId {
        self.n_verts + e * self.k + j
    }

    /// Fraction along the canonical edge direction for edge node j.
    fn frac(&self, j: u32) -> f64 {
        (j as f64 + 1.0) / (self.k as f64 + 1.0)
    }

    pub fn build(mesh: &SurfaceMesh, k: u32) -> SteinerGraph {
        let nv = mesh.n_verts() as u32;
        let ne = mesh.n_edges() as u32;
        let n_nodes = nv + ne * k;

        let mut edge_home = vec![(u32::MAX, 0u8); ne as usize];
        for t in 0..mesh.n_tris() as u32 {
            for s in 0..3u8 {
                let e = mesh.tri_edge(t, s);
                if edge_home[e as usize].0 == u32::MAX {
                    edge_home[e as usize] = (t, s);
                }
            }
        }

        let mut g = SteinerGraph {
            k,
            n_verts: nv,
            n_nodes,
            off: Vec::new(),
            nbr: Vec::new(),
            edge_home,
        };

        // Gather per-triangle nodes with layout positions, emit all pairs.
        let mut pairs: Vec<(NodeId, NodeId, f64)> = Vec::new();
        let mut tri_nodes: Vec<(NodeId, [f64; 2], Option<EdgeId>)> = Vec::new();
        for t in 0..mesh.n_tris() as u32 {
            tri_nodes.clear();
            let lt = mesh.layout(t);
            let tv = mesh.tri(t);
            for c in 0..3usize {
                tri_nodes.push((tv[c], lt.p[c], None));
            }
            for s in 0..3u8 {
                let e = mesh.tri_edge(t, s);
                let [ea, _eb] = mesh.edge_verts(e);
                let tail = tv[s as usize];
                let p_tail = lt.p[s as usize];
                let p_head = lt.p[((s + 1) % 3) as usize];
                for j in 0..k {
                    let f_canonical = g.frac(j);
                    // Position measured from the side's tail corner.
                    let f = if tail == ea { f_canonical } else { 1.0 - f_canonical };
                    let pos = [
                        p_tail[0] + f * (p_head[0] - p_tail[0]),
                        p_tail[1] + f * (p_head[1] - p_tail[1]),
                    ];
                    tri_nodes.push((g.edge_node(e, j), pos, Some(e)));
                }
            }
            let primary = |e: EdgeId| mesh.edge_tris(e).0 == t || mesh.edge_tris(e).1.is_none();
            for i in 0..tri_nodes.len() {
                for jn in (i + 1)..tri_nodes.len() {
                    let (a, pa, ea) = tri_nodes[i];
                    let (b, pb, eb) = tri_nodes[jn];
                    // Same-edge pairs would be duplicated by the twin
                    // triangle; keep them only in the edge's home triangle.
                    if let (Some(x), Some(y)) = (ea, eb) {
                        if x == y && !primary(x) {
                            continue;
                        }
                    }
                    let d = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
                    pairs.push((a, b, d));
                }
            }
        }

        // CSR assembly.
        let mut deg = vec![0u32; n_nodes as usize];
        for &(a, b, _) in &pairs {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let mut off = vec![0u32; n_nodes as usize + 1];
        for i in 0..n_nodes as usize {
            off[i + 1] = off[i] + deg[i];
        }
        let mut nbr = vec![(0u32, 0.0f64); off[n_nodes as usize] as usize];
        let mut cursor = off.clone();
        for &(a, b, d) in &pairs {
            nbr[cursor[a as usize] as usize] = (b, d);
            cursor[a as usize] += 1;
            nbr[cursor[b as usize] as usize] = (a, d);
            cursor[b as usize] += 1;
        }
        g.off = off;
        g.nbr = nbr;
        g
    }

    /// Mesh point of a node, for path reconstruction.
    pub fn node_point(&self, mesh: &SurfaceMesh, n: NodeId) -> MeshPoint {
        if n < self.n_verts {
            return MeshPoint::vertex(mesh, n);
        }
        let idx = n - self.n_verts;
        let e = idx / self.k;
        let j = idx % self.k;
        let (t, s) = self.edge_home[e as usize];
        let [ea, _] = mesh.edge_verts(e);
        let tail = mesh.tri(t)[s as usize];
        let f_canonical = self.frac(j);
        let f = if tail == ea { f_canonical } else { 1.0 - f_canonical };
        MeshPoint::on_side(t, s, f)
    }

    /// Graph nodes on the boundary of `face` with straight-line distances
    /// from `p` (which must lie in `face`).
    pub fn face_links(&self, mesh: &SurfaceMesh, face: TriId, p: &MeshPoint) -> Vec<(NodeId, f64)> {
        let q = p
            .express_in(mesh, face)
            .unwrap_or(*p);
        let lt = mesh.layout(face);
        let pq = lt.bary_to_xy(q.bary);
        let tv = mesh.tri(face);
        let mut out = Vec::with_capacity(3 + 3 * self.k as usize);
        for c in 0..3usize {
            let d = dist(pq, lt.p[c]);
            out.push((tv[c], d));
        }
        for s in 0..3u8 {
            let e = mesh.tri_edge(face, s);
            let [ea, _] = mesh.edge_verts(e);
            let tail = tv[s as usize];
            let p_tail = lt.p[s as usize];
            let p_head = lt.p[((s + 1) % 3) as usize];
            for j in 0..self.k {
                let f_canonical = self.frac(j);
                let f = if tail == ea { f_canonical } else { 1.0 - f_canonical };
                let pos = [
                    p_tail[0] + f * (p_head[0] - p_tail[0]),
                    p_tail[1] + f * (p_head[1] - p_tail[1]),
                ];
                out.push((self.edge_node(e, j), dist(pq, pos)));
            }
        }
        out
    }

    /// Source links for an arbitrary mesh point: the containing face's nodes,
    /// plus the twin face's when the point sits on an edge.
    pub fn point_links(&self, mesh: &SurfaceMesh, p: &MeshPoint) -> Vec<(NodeId, f64)> {
        if let Some(c) = p.at_corner() {
            let v = mesh.tri(p.face)[c as usize];
            return vec![(v, 0.0)];
        }
        let mut out = self.face_links(mesh, p.face, p);
        if let Some(side) = p.on_edge() {
            if let Some((n, _)) = mesh.neighbor(p.face, side) {
                out.extend(self.face_links(mesh, n, p));
            }
        }
        out
    }

    /// All nodes lying on an end's truncation boundary (for rays/lines).
    pub fn boundary_nodes(&self, mesh: &SurfaceMesh, end: usize) -> Vec<NodeId> {
        let e = &mesh.ends()[end];
        let mut out: Vec<NodeId> = e.boundary_verts.iter().copied().collect();
        for &edge in &e.boundary_edges {
            for j in 0..self.k {
                out.push(self.edge_node(edge, j));
            }
        }
        out
    }
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
}

struct HeapEntry {
    d: f64,
    n: NodeId,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.n == other.n
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by distance, ties by node id for determinism.
        other
            .d
            .total_cmp(&self.d)
            .then_with(|| other.n.cmp(&self.n))
    }
}

pub const UNREACHED: f64 = f64::INFINITY;

/// Reusable Dijkstra workspace with generation stamps, so repeated local
/// queries don't pay for clearing.
pub struct Scratch {
    dist: Vec<f64>,
    pred: Vec<NodeId>,
    stamp: Vec<u32>,
    settled: Vec<u32>,
    epoch: u32,
}

impl Scratch {
    pub fn new(n: usize) -> Scratch {
        Scratch {
            dist: vec![0.0; n],
            pred: vec![u32::MAX; n],
            stamp: vec![0; n],
            settled: vec![0; n],
            epoch: 0,
        }
    }

    pub fn dist(&self, n: NodeId) -> f64 {
        if self.stamp[n as usize] == self.epoch {
            self.dist[n as usize]
        } else {
            UNREACHED
        }
    }

    pub fn is_settled(&self, n: NodeId) -> bool {
        self.settled[n as usize] == self.epoch
    }

    pub fn pred(&self, n: NodeId) -> Option<NodeId> {
        if self.stamp[n as usize] == self.epoch && self.pred[n as usize] != u32::MAX {
            Some(self.pred[n as usize])
        } else {
            None
        }
    }
}

/// Run Dijkstra from `sources`; stop early once every node in `until` is
/// settled or the radius exceeds `bound`.
pub fn dijkstra(
    graph: &SteinerGraph,
    scratch: &mut Scratch,
    sources: &[(NodeId, f64)],
    until: Option<&[NodeId]>,
    bound: f64,
) {
    scratch.epoch = scratch.epoch.wrapping_add(1);
    if scratch.epoch == 0 {
        // Stamp wrap: force-reset.
        for s in scratch.stamp.iter_mut() {
            *s = u32::MAX;
        }
        for s in scratch.settled.iter_mut() {
            *s = u32::MAX;
        }
        scratch.epoch = 1;
    }
    let epoch = scratch.epoch;
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(sources.len() * 2);
    for &(n, d) in sources {
        if scratch.stamp[n as usize] != epoch || d < scratch.dist[n as usize] {
            scratch.stamp[n as usize] = epoch;
            scratch.dist[n as usize] = d;
            scratch.pred[n as usize] = u32::MAX;
            heap.push(HeapEntry { d, n });
        }
    }
    let mut remaining = until.map(|u| {
        u.iter()
            .filter(|&&n| scratch.settled[n as usize] != epoch)
            .count()
    });
    while let Some(HeapEntry { d, n }) = heap.pop() {
        if scratch.settled[n as usize] == epoch {
            continue;
        }
        if d > bound {
            break;
        }
        scratch.settled[n as usize] = epoch;
        if let (Some(rem), Some(u)) = (remaining.as_mut(), until) {
            if u.contains(&n) {
                *rem -= 1;
                if *rem == 0 {
                    break;
                }
            }
        }
        let s = graph.off[n as usize] as usize;
        let e = graph.off[n as usize + 1] as usize;
        for &(m, w) in &graph.nbr[s..e] {
            let nd = d + w;
            if scratch.stamp[m as usize] != epoch || nd < scratch.dist[m as usize] {
                scratch.stamp[m as usize] = epoch;
                scratch.dist[m as usize] = nd;
                scratch.pred[m as usize] = n;
                heap.push(HeapEntry { d: nd, n: m });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::mesh::{build_mesh, EndSpec, MeshInput};

    #[test]
    fn straight_distance_on_two_triangles() {
        let m = build_mesh(
            MeshInput::Coords(vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ]),
            vec![[0, 1, 2], [0, 2, 3]],
            vec![EndSpec::tail(0.0)],
        )
        .unwrap();
        let g = SteinerGraph::build(&m, 3);
        let mut sc = Scratch::new(g.n_nodes());
        dijkstra(&g, &mut sc, &[(0, 0.0)], None, f64::INFINITY);
        // Vertex 2 is diagonal: exact distance sqrt(2) via the shared edge.
        let d = sc.dist(2);
        assert!((d - 2.0f64.sqrt()).abs() < 1e-12, "d = {d}");
        // Vertex 1 and 3: unit sides.
        assert!((sc.dist(1) - 1.0).abs() < 1e-12);
        assert!((sc.dist(3) - 1.0).abs() < 1e-12);
    }
}
