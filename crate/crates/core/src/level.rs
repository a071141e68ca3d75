//! Level sets of a distance field by per-triangle linear interpolation of
//! vertex values. Regular levels decompose into simple closed polylines; on
//! truncated meshes a component that runs into a collar boundary is closed
//! along the boundary arc on the far side of the level.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::curve::{Curve, MeshPoint};
use crate::engine::Engine;
use crate::field::DistanceField;
use crate::mesh::EdgeId;
use crate::steiner::UNREACHED;

#[derive(Clone, Debug, PartialEq)]
pub enum LevelError {
    /// The level passes through a vertex (critical value); callers nudge t.
    Singular,
    /// t outside (0, max field value).
    OutOfRange,
}

impl fmt::Display for LevelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelError::Singular => write!(f, "level value at a vertex (singular)"),
            LevelError::OutOfRange => write!(f, "level value out of range"),
        }
    }
}

pub struct LevelSet {
    pub t: f64,
    pub components: Vec<Curve>,
    pub total_length: f64,
    /// True when some component was closed along a truncation boundary.
    pub touched_boundary: bool,
}

impl<'m> Engine<'m> {
    pub fn level_set(&self, field: &DistanceField, t: f64) -> Result<LevelSet, LevelError> {
        let mesh = self.mesh;
        let (_, dmax) = field.max_vertex(self);
        if !(t > 0.0 && t < dmax) {
            return Err(LevelError::OutOfRange);
        }
        let eps = 1e-9 * (1.0 + self.sqrt_area());

        // Refuse levels passing through a vertex whose star straddles t.
        for v in 0..mesh.n_verts() as u32 {
            let dv = field.vertex(v);
            if dv >= UNREACHED || (dv - t).abs() >= eps {
                continue;
            }
            let (mut below, mut above) = (false, false);
            for &(tr, c) in mesh.fan(v) {
                let tv = mesh.tri(tr);
                for off in [1u8, 2u8] {
                    let u = tv[((c + off) % 3) as usize];
                    let du = field.vertex(u);
                    if du < t - eps {
                        below = true;
                    }
                    if du > t + eps {
                        above = true;
                    }
                }
            }
            if below && above {
                return Err(LevelError::Singular);
            }
        }

        // Crossing parameter per edge in the canonical direction, shared by
        // both incident triangles so chains match exactly.
        let ne = mesh.n_edges();
        let mut crossing = vec![f64::NAN; ne];
        for e in 0..ne as u32 {
            let [a, b] = mesh.edge_verts(e);
            let (da, db) = (field.vertex(a), field.vertex(b));
            if da >= UNREACHED || db >= UNREACHED {
                continue;
            }
            if (da - t) * (db - t) < 0.0 && (da - t).abs() >= eps && (db - t).abs() >= eps {
                crossing[e as usize] = (t - da) / (db - da);
            }
        }

        let point_on = |e: EdgeId, tri: u32| -> MeshPoint {
            let s = crossing[e as usize];
            let side = (0..3u8)
                .find(|&k| mesh.tri_edge(tri, k) == e)
                .expect("edge belongs to tri");
            let [a, _] = mesh.edge_verts(e);
            let tail = mesh.tri(tri)[side as usize];
            let f = if tail == a { s } else { 1.0 - s };
            MeshPoint::on_side(tri, side, f)
        };

        let crossed_sides = |tri: u32| -> Vec<u8> {
            (0..3u8)
                .filter(|&k| !crossing[mesh.tri_edge(tri, k) as usize].is_nan())
                .collect()
        };

        let nt = mesh.n_tris();
        let mut visited = vec![false; nt];
        let mut components: Vec<Curve> = Vec::new();
        // Open chain: points plus the boundary edges where it terminates.
        let mut open_chains: Vec<(Vec<MeshPoint>, EdgeId, EdgeId)> = Vec::new();

        for start_tri in 0..nt as u32 {
            if visited[start_tri as usize] {
                continue;
            }
            let sides = crossed_sides(start_tri);
            match sides.len() {
                0 => continue,
                2 => {}
                _ => return Err(LevelError::Singular),
            }
            let e0 = mesh.tri_edge(start_tri, sides[0]);
            let e1 = mesh.tri_edge(start_tri, sides[1]);

            // Walk from start_tri entering through `enter`; returns the point
            // list, and the boundary edge where the walk stopped (None when
            // the chain closed).
            let walk = |enter: EdgeId, visited: &mut Vec<bool>| -> (Vec<MeshPoint>, Option<EdgeId>) {
                let mut pts = Vec::new();
                let mut cur = start_tri;
                let mut enter_edge = enter;
                loop {
                    visited[cur as usize] = true;
                    pts.push(point_on(enter_edge, cur));
                    let exit = crossed_sides(cur)
                        .iter()
                        .map(|&k| mesh.tri_edge(cur, k))
                        .find(|&e| e != enter_edge)
                        .expect("regular triangle has two crossings");
                    let exit_side = (0..3u8)
                        .find(|&k| mesh.tri_edge(cur, k) == exit)
                        .unwrap();
                    match mesh.neighbor(cur, exit_side) {
                        Some((nxt, _)) => {
                            if nxt == start_tri || visited[nxt as usize] {
                                return (pts, None);
                            }
                            cur = nxt;
                            enter_edge = exit;
                        }
                        None => {
                            pts.push(point_on(exit, cur));
                            return (pts, Some(exit));
                        }
                    }
                }
            };

            let (fwd, fwd_bdry) = walk(e0, &mut visited);
            match fwd_bdry {
                None => {
                    // Closed component.
                    let mut c = Curve::new(mesh, fwd, true).expect("level chain valid");
                    c.dedup(mesh);
                    if c.points.len() >= 3 {
                        components.push(c);
                    }
                }
                Some(stop_fwd) => {
                    visited[start_tri as usize] = false;
                    let (bwd, bwd_bdry) = walk(e1, &mut visited);
                    let stop_bwd = bwd_bdry.expect("other direction also hits boundary");
                    let mut pts: Vec<MeshPoint> = bwd.into_iter().rev().collect();
                    pts.pop(); // start_tri entry point duplicated
                    pts.extend(fwd);
                    open_chains.push((pts, stop_bwd, stop_fwd));
                }
            }
        }

        let mut touched_boundary = false;
        if !open_chains.is_empty() {
            touched_boundary = true;
            components.extend(stitch_boundary_chains(self, field, t, open_chains, &crossing));
        }

        let total_length = components.iter().map(|c| c.length).sum();
        Ok(LevelSet {
            t,
            components,
            total_length,
            touched_boundary,
        })
    }
}

/// Close open level chains along truncation boundaries, following each
/// boundary loop through the arcs whose vertices sit on the far side
/// (d >= t) of the level.
fn stitch_boundary_chains(
    engine: &Engine,
    field: &DistanceField,
    t: f64,
    chains: Vec<(Vec<MeshPoint>, EdgeId, EdgeId)>,
    crossing: &[f64],
) -> Vec<Curve> {
    let mesh = engine.mesh;

    // Terminal = (chain, at_head). Locate every terminal on its boundary
    // loop as (end index, arclength position).
    #[derive(Clone, Copy)]
    struct Terminal {
        end: usize,
        pos: f64,
        chain: usize,
        at_head: bool,
    }
    let locate = |edge: EdgeId| -> Option<(usize, f64)> {
        for (ei, end) in mesh.ends().iter().enumerate() {
            let mut acc = 0.0;
            for (k, &be) in end.boundary_edges.iter().enumerate() {
                if be == edge {
                    let [a, _] = mesh.edge_verts(edge);
                    let tail = end.boundary_verts[k];
                    let s = crossing[edge as usize];
                    let f = if tail == a { s } else { 1.0 - s };
                    return Some((ei, acc + f * mesh.edge_len(edge)));
                }
                acc += mesh.edge_len(be);
            }
        }
        None
    };

    let mut terminals: Vec<Terminal> = Vec::new();
    for (ci, &(_, tail_edge, head_edge)) in chains.iter().enumerate() {
        if let Some((end, pos)) = locate(tail_edge) {
            terminals.push(Terminal {
                end,
                pos,
                chain: ci,
                at_head: false,
            });
        }
        if let Some((end, pos)) = locate(head_edge) {
            terminals.push(Terminal {
                end,
                pos,
                chain: ci,
                at_head: true,
            });
        }
    }

    // Far-side boundary arcs between cyclically consecutive terminals pair
    // them up; emit the connecting vertex run for each.
    // link[terminal_key] = (other_chain, other_at_head, arc points)
    let mut links: Vec<Option<(usize, bool, Vec<MeshPoint>)>> = vec![None; chains.len() * 2];
    let key = |chain: usize, at_head: bool| chain * 2 + usize::from(at_head);
    for end_idx in 0..mesh.n_ends() {
        let mut eps: Vec<&Terminal> = terminals.iter().filter(|t| t.end == end_idx).collect();
        if eps.is_empty() {
            continue;
        }
        eps.sort_by(|a, b| a.pos.partial_cmp(&b.pos).unwrap());
        let end = &mesh.ends()[end_idx];
        let n = eps.len();
        for i in 0..n {
            let a = eps[i];
            let b = eps[(i + 1) % n];
            // Vertices strictly inside the arc a.pos -> b.pos (wrapping).
            let mut arc: Vec<MeshPoint> = Vec::new();
            let mut far = true;
            let mut acc = 0.0;
            for (k, &be) in end.boundary_edges.iter().enumerate() {
                let vpos = acc; // position of the edge's tail vertex
                acc += mesh.edge_len(be);
                if k == 0 {
                    continue; // tail of edge 0 handled at wrap below
                }
                let inside = if a.pos <= b.pos {
                    vpos > a.pos && vpos < b.pos
                } else {
                    vpos > a.pos || vpos < b.pos
                };
                if inside {
                    let v = end.boundary_verts[k];
                    if field.vertex(v) < t {
                        far = false;
                        break;
                    }
                    // Express in both adjacent boundary triangles so the
                    // polyline stays face-adjacent.
                    let prev_tri = mesh.edge_tris(end.boundary_edges[k - 1]).0;
                    let this_tri = mesh.edge_tris(be).0;
                    push_vertex_in(mesh, &mut arc, v, prev_tri);
                    push_vertex_in(mesh, &mut arc, v, this_tri);
                }
            }
            // Wrap vertex (tail of edge 0).
            {
                let vpos = 0.0;
                let inside = if a.pos <= b.pos {
                    vpos > a.pos && vpos < b.pos
                } else {
                    vpos > a.pos || vpos < b.pos
                };
                if inside && far {
                    let v = end.boundary_verts[0];
                    if field.vertex(v) < t {
                        far = false;
                    } else {
                        let last = end.boundary_edges.len() - 1;
                        let prev_tri = mesh.edge_tris(end.boundary_edges[last]).0;
                        let this_tri = mesh.edge_tris(end.boundary_edges[0]).0;
                        push_vertex_in(mesh, &mut arc, v, prev_tri);
                        push_vertex_in(mesh, &mut arc, v, this_tri);
                    }
                }
            }
            if far {
                links[key(a.chain, a.at_head)] = Some((b.chain, b.at_head, arc.clone()));
                arc.reverse();
                links[key(b.chain, b.at_head)] = Some((a.chain, a.at_head, arc));
            }
        }
    }

    // Trace cycles: chain -> connector -> chain -> ... until back to start.
    let mut used = vec![false; chains.len()];
    let mut out = Vec::new();
    for start in 0..chains.len() {
        if used[start] {
            continue;
        }
        let mut pts: Vec<MeshPoint> = Vec::new();
        let mut cur = start;
        let mut forward = true;
        let mut ok = true;
        loop {
            used[cur] = true;
            if forward {
                pts.extend(chains[cur].0.iter().copied());
            } else {
                pts.extend(chains[cur].0.iter().rev().copied());
            }
            // Leave through the end we arrived at: forward -> head.
            let leave_head = forward;
            match &links[key(cur, leave_head)] {
                Some((next, next_at_head, arc)) => {
                    pts.extend(arc.iter().copied());
                    cur = *next;
                    forward = !*next_at_head; // entering at head means we traverse backwards
                    if cur == start {
                        break;
                    }
                    if used[cur] {
                        ok = false;
                        break;
                    }
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        if let Ok(mut c) = Curve::new(mesh, pts, true) {
            c.dedup(mesh);
            if c.points.len() >= 2 {
                out.push(c);
            }
        }
    }
    out
}

fn push_vertex_in(
    mesh: &crate::mesh::SurfaceMesh,
    arc: &mut Vec<MeshPoint>,
    v: u32,
    tri: u32,
) {
    if let Some(c) = mesh.corner_of(tri, v) {
        let mut bary = [0.0; 3];
        bary[c as usize] = 1.0;
        arc.push(MeshPoint { face: tri, bary });
    } else {
        arc.push(MeshPoint::vertex(mesh, v));
    }
}
