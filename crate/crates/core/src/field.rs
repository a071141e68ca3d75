//! Geodesic distance fields from a source point, realized as Dijkstra over
//! the Steiner graph. Vertex values drive level-set extraction; full node
//! values serve path certificates.

use alloc::vec::Vec;

use crate::curve::MeshPoint;
use crate::engine::Engine;
use crate::mesh::VertId;
use crate::steiner::{dijkstra, NodeId, UNREACHED};

pub struct DistanceField {
    pub source: MeshPoint,
    node_dist: Vec<f64>,
}

impl DistanceField {
    pub fn vertex(&self, v: VertId) -> f64 {
        self.node_dist[v as usize]
    }

    pub fn node(&self, n: NodeId) -> f64 {
        self.node_dist[n as usize]
    }

    /// Distance at an arbitrary point: best entry through its face's nodes.
    pub fn at_point(&self, engine: &Engine, p: &MeshPoint) -> f64 {
        engine
            .graph
            .point_links(engine.mesh, p)
            .into_iter()
            .map(|(n, w)| self.node_dist[n as usize] + w)
            .fold(UNREACHED, f64::min)
    }

    pub fn max_vertex(&self, engine: &Engine) -> (VertId, f64) {
        let nv = engine.mesh.n_verts();
        let mut best = (0u32, -1.0);
        for v in 0..nv {
            let d = self.node_dist[v];
            if d < UNREACHED && d > best.1 {
                best = (v as u32, d);
            }
        }
        best
    }

    /// Vertex whose fan neighbors all carry strictly smaller values.
    pub fn is_local_max_vertex(&self, engine: &Engine, v: VertId) -> bool {
        let dv = self.vertex(v);
        if dv >= UNREACHED {
            return false;
        }
        let mesh = engine.mesh;
        for &(t, c) in mesh.fan(v) {
            let tv = mesh.tri(t);
            for off in [1u8, 2u8] {
                let u = tv[((c + off) % 3) as usize];
                if u != v && self.vertex(u) >= dv {
                    return false;
                }
            }
        }
        true
    }

    /// Max over interior edges of |d(u)-d(v)| - len(u,v); Dijkstra keeps this
    /// non-positive up to round-off.
    pub fn eikonal_violation(&self, engine: &Engine) -> f64 {
        let mesh = engine.mesh;
        let mut worst = f64::NEG_INFINITY;
        for e in 0..mesh.n_edges() as u32 {
            let [a, b] = mesh.edge_verts(e);
            let (da, db) = (self.vertex(a), self.vertex(b));
            if da >= UNREACHED || db >= UNREACHED {
                continue;
            }
            worst = worst.max((da - db).abs() - mesh.edge_len(e));
        }
        worst
    }
}

impl<'m> Engine<'m> {
    pub fn distance_field(&self, source: &MeshPoint) -> DistanceField {
        let sources = self.graph.point_links(self.mesh, source);
        let node_dist = self.with_scratch(|sc| {
            dijkstra(&self.graph, sc, &sources, None, f64::INFINITY);
            (0..self.graph.n_nodes() as u32)
                .map(|n| sc.dist(n))
                .collect::<Vec<_>>()
        });
        DistanceField {
            source: *source,
            node_dist,
        }
    }

    /// Field measured from an end's truncation boundary (distance to the end).
    pub fn boundary_field(&self, end: usize) -> DistanceField {
        let nodes = self.graph.boundary_nodes(self.mesh, end);
        let sources: Vec<(NodeId, f64)> = nodes.into_iter().map(|n| (n, 0.0)).collect();
        let node_dist = self.with_scratch(|sc| {
            dijkstra(&self.graph, sc, &sources, None, f64::INFINITY);
            (0..self.graph.n_nodes() as u32)
                .map(|n| sc.dist(n))
                .collect::<Vec<_>>()
        });
        let rep = self.mesh.ends()[end].boundary_verts[0];
        DistanceField {
            source: MeshPoint::vertex(self.mesh, rep),
            node_dist,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::mesh::SurfaceMesh;

    fn torus() -> SurfaceMesh {
        gen::flat_torus(1.0, 2.0, 3).unwrap()
    }

    #[test]
    fn flat_torus_short_distance() {
        let m = torus();
        let eng = Engine::new(&m);
        // Source at vertex (0,0); the grid has spacing 1/8 at refinement 3.
        let src = MeshPoint::vertex(&m, 0);
        let f = eng.distance_field(&src);
        // Point (0.5, 0): distance 0.5 exactly (straight along the grid).
        let p = gen::flat_torus_point(&m, 3, 1.0, 2.0, 0.5, 0.0);
        let d = f.at_point(&eng, &p);
        assert!((d - 0.5).abs() < 0.01, "d = {d}");
        assert!(f.eikonal_violation(&eng) < 1e-9);
    }
}
