//! Locally shortest paths: straight-line tracing across triangles, corridor
//! unfolding with the funnel (string pulling) algorithm, vertex rewrapping,
//! and Dijkstra-seeded point-to-point shortest paths.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // used in no_std builds only
use num_traits::Float;

use crate::chart::{direction_angle, unfold_neighbor, Frame};
use crate::curve::{Curve, MeshPoint};
use crate::engine::Engine;
use crate::mesh::{SurfaceMesh, TriId};
use crate::steiner::{dijkstra, NodeId};

#[derive(Clone, Debug, PartialEq)]
pub enum PathError {
    /// Target unreachable (within the given bound).
    NoPath,
    /// Degenerate input.
    BadInput,
}

impl fmt::Display for PathError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathError::NoPath => write!(f, "no path found"),
            PathError::BadInput => write!(f, "bad path query"),
        }
    }
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

// ---------------------------------------------------------------------------
// Straight-line tracing
// ---------------------------------------------------------------------------

/// Host triangle and layout-frame direction for shooting from `p` at chart
/// angle `theta` (mesh point may sit on an edge or vertex).
pub fn shoot_frame(mesh: &SurfaceMesh, p: &MeshPoint, theta: f64) -> (MeshPoint, [f64; 2]) {
    if let Some(c) = p.at_corner() {
        let v = mesh.tri(p.face)[c as usize];
        let total = mesh.cone_angle(v);
        let mut th = theta % total;
        if th < 0.0 {
            th += total;
        }
        let mut alpha = 0.0;
        for &(t, tc) in mesh.fan(v) {
            let span = crate::chart::wedge_span(mesh, t, tc);
            if th <= alpha + span || (t, tc) == *mesh.fan(v).last().unwrap() {
                let lt = mesh.layout(t);
                let pc = lt.p[tc as usize];
                let pn = lt.p[((tc + 1) % 3) as usize];
                let base = (pn[1] - pc[1]).atan2(pn[0] - pc[0]);
                let local = base + (th - alpha).clamp(0.0, span);
                let mut bary = [0.0; 3];
                bary[tc as usize] = 1.0;
                return (
                    MeshPoint { face: t, bary },
                    [local.cos(), local.sin()],
                );
            }
            alpha += span;
        }
        unreachable!("fan covers the cone angle");
    }
    // Edge or interior point: theta is an absolute layout angle of its face.
    (*p, [theta.cos(), theta.sin()])
}

/// Walk a straight line from `p` in direction `dir` (layout frame of
/// `p.face`) for length `len`. Stops early at a truncation boundary.
pub fn trace_geodesic(
    engine: &Engine,
    p: &MeshPoint,
    dir: [f64; 2],
    len: f64,
) -> Curve {
    let mesh = engine.mesh;
    let mut pts: Vec<MeshPoint> = vec![*p];
    let mut face = p.face;
    let mut pos = p.xy(mesh);
    let mut d = {
        let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        [dir[0] / n, dir[1] / n]
    };
    let mut remaining = len;
    let eps = 1e-12 * (1.0 + mesh.max_edge_len());
    let max_steps = 64 * 1024;
    for _ in 0..max_steps {
        if remaining <= eps {
            break;
        }
        let lt = mesh.layout(face);
        // Intersect the ray with the three sides; take the nearest exit.
        let mut best: Option<(f64, u8, f64)> = None; // (ray param, side, side param)
        for s in 0..3u8 {
            let a = lt.p[s as usize];
            let b = lt.p[((s + 1) % 3) as usize];
            let e = [b[0] - a[0], b[1] - a[1]];
            let denom = d[0] * e[1] - d[1] * e[0];
            if denom.abs() < 1e-300 {
                continue;
            }
            let w = [pos[0] - a[0], pos[1] - a[1]];
            let t_ray = (e[0] * w[1] - e[1] * w[0]) / denom;
            let t_side = (d[0] * w[1] - d[1] * w[0]) / denom;
            if t_ray > eps && (-1e-12..=1.0 + 1e-12).contains(&t_side) {
                if best.map_or(true, |(bt, _, _)| t_ray < bt) {
                    best = Some((t_ray, s, t_side.clamp(0.0, 1.0)));
                }
            }
        }
        let Some((t_ray, side, t_side)) = best else {
            break; // numerically stuck (grazing a corner): stop here
        };
        if t_ray >= remaining {
            // Endpoint inside this face.
            let end = [pos[0] + remaining * d[0], pos[1] + remaining * d[1]];
            let bary = crate::curve::clamp_bary(lt.xy_to_bary(end));
            pts.push(MeshPoint::new(face, bary));
            break;
        }
        // Corner graze: nudge the direction a hair and retry this step.
        if t_side < 1e-9 || t_side > 1.0 - 1e-9 {
            let rot = 1e-7;
            let (c, s) = (rot.cos(), rot.sin());
            d = [c * d[0] - s * d[1], s * d[0] + c * d[1]];
            continue;
        }
        let crossing = MeshPoint::on_side(face, side, t_side);
        remaining -= t_ray;
        match mesh.neighbor(face, side) {
            Some((nxt, _)) => {
                pts.push(crossing);
                let f = unfold_neighbor(mesh, face, side).inverse();
                pos = f.apply([pos[0] + t_ray * d[0], pos[1] + t_ray * d[1]]);
                d = f.apply_vec(d);
                face = nxt;
                pts.push(crossing.express_in(mesh, nxt).unwrap_or(crossing));
            }
            None => {
                pts.push(crossing);
                break;
            }
        }
    }
    let mut c = Curve::new(mesh, pts, false).expect("trace produces a valid polyline");
    c.dedup(mesh);
    c
}

// ---------------------------------------------------------------------------
// Corridor extraction and funnel straightening
// ---------------------------------------------------------------------------

struct Corridor {
    tris: Vec<(TriId, Frame)>,
    /// Portal k sits between corridor tris k and k+1: plane coords of the
    /// shared edge endpoints (left, right w.r.t. travel) plus the side index
    /// in the entered triangle.
    portals: Vec<([f64; 2], [f64; 2], u8)>,
}

/// Faces that contain the point geometrically (its face, the edge twin, or
/// the whole vertex fan).
pub(crate) fn hosts_of(mesh: &SurfaceMesh, p: &MeshPoint) -> Vec<TriId> {
    if let Some(c) = p.at_corner() {
        let v = mesh.tri(p.face)[c as usize];
        return mesh.fan(v).iter().map(|&(t, _)| t).collect();
    }
    let mut out = vec![p.face];
    if let Some(s) = p.on_edge() {
        if let Some((n, _)) = mesh.neighbor(p.face, s) {
            out.push(n);
        }
    }
    out
}

/// Triangle sequence the polyline passes through (the corridor without
/// frames); used by the separation test to record dual-walk crossings.
pub fn corridor_tris(mesh: &SurfaceMesh, pts: &[MeshPoint]) -> Option<alloc::vec::Vec<TriId>> {
    let corridor = build_corridor(mesh, pts)?;
    Some(corridor.tris.iter().map(|&(t, _)| t).collect())
}

fn build_corridor(mesh: &SurfaceMesh, pts: &[MeshPoint]) -> Option<Corridor> {
    let mut tris = vec![(pts[0].face, Frame::identity())];
    let mut portals = Vec::new();
    // Push the corridor across one side of the current triangle. A pinch
    // vertex collapses the portal to that corner: the sleeve of a curve
    // passing through a vertex must not widen there, or the funnel could
    // pull the path across the fan and change its homotopy class.
    let advance = |tris: &mut Vec<(TriId, Frame)>,
                   portals: &mut Vec<([f64; 2], [f64; 2], u8)>,
                   sa: u8,
                   pinch: Option<u32>| {
        let (cur, frame) = *tris.last().unwrap();
        let (cand, sb) = mesh.neighbor(cur, sa).expect("interior side");
        let lt = mesh.layout(cur);
        let mut pa = frame.apply(lt.p[sa as usize]);
        let mut pb = frame.apply(lt.p[((sa + 1) % 3) as usize]);
        if let Some(v) = pinch {
            let vpos = if mesh.tri(cur)[sa as usize] == v {
                frame.apply(lt.p[sa as usize])
            } else {
                frame.apply(lt.p[((sa + 1) % 3) as usize])
            };
            pa = vpos;
            pb = vpos;
        }
        let next_frame = frame.compose(&unfold_neighbor(mesh, cur, sa));
        // Orient the portal by the entered triangle's interior.
        let lt_n = mesh.layout(cand);
        let third = next_frame.apply(lt_n.p[((sb + 2) % 3) as usize]);
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let ahead = [third[0] - mid[0], third[1] - mid[1]];
        let c = ahead[0] * (pa[1] - mid[1]) - ahead[1] * (pa[0] - mid[0]);
        let (left, right) = if c >= 0.0 { (pa, pb) } else { (pb, pa) };
        portals.push((left, right, sb));
        tris.push((cand, next_frame));
    };

    for p in &pts[1..] {
        // Advance the corridor until the current triangle hosts `p`.
        for _ in 0..4 {
            let (cur, _) = *tris.last().unwrap();
            let h = hosts_of(mesh, p);
            if h.contains(&cur) {
                break;
            }
            // Cross into a host adjacent to the current triangle.
            let mut sa_found: Option<u8> = None;
            'cands: for cand in &h {
                for k in 0..3u8 {
                    if let Some((n, _)) = mesh.neighbor(cur, k) {
                        if n == *cand {
                            sa_found = Some(k);
                            break 'cands;
                        }
                    }
                }
            }
            if let Some(sa) = sa_found {
                advance(&mut tris, &mut portals, sa, None);
                continue;
            }
            // No host is edge-adjacent: the polyline hops across a vertex
            // fan. Walk the fan from the current triangle to a host.
            let mut done = false;
            'verts: for c in 0..3u8 {
                let v = mesh.tri(cur)[c as usize];
                let fan = mesh.fan(v);
                let Some(ic) = fan.iter().position(|&(t, _)| t == cur) else {
                    continue;
                };
                for target in &h {
                    if let Some(it) = fan.iter().position(|&(t, _)| t == *target) {
                        // Choose the shorter cyclic route (closed fans) or
                        // the in-range route (open fans).
                        let nfan = fan.len() as i64;
                        let fwd = (it as i64 - ic as i64).rem_euclid(nfan);
                        let bwd = (ic as i64 - it as i64).rem_euclid(nfan);
                        let closed_fan = {
                            let &(lt, lc) = fan.last().unwrap();
                            mesh.neighbor(lt, (lc + 2) % 3).is_some()
                        };
                        let go_fwd = if closed_fan {
                            fwd <= bwd
                        } else {
                            it > ic
                        };
                        let steps = if go_fwd { fwd } else { bwd };
                        for _ in 0..steps {
                            let (cur2, _) = *tris.last().unwrap();
                            let cc = mesh
                                .corner_of(cur2, v)
                                .expect("fan walk stays incident");
                            // CCW fan step crosses side (cc+2); CW crosses cc.
                            let sa = if go_fwd { (cc + 2) % 3 } else { cc };
                            if mesh.neighbor(cur2, sa).is_none() {
                                return None;
                            }
                            advance(&mut tris, &mut portals, sa, Some(v));
                        }
                        done = true;
                        break 'verts;
                    }
                }
            }
            if !done {
                return None;
            }
        }
        let (cur, _) = *tris.last().unwrap();
        if !hosts_of(mesh, p).contains(&cur) {
            return None;
        }
    }
    Some(Corridor { tris, portals })
}

/// Simple stupid funnel over the corridor portals. Returns the taut path as
/// (portal index it belongs to, plane position, vertex flag) for interior
/// corners; start/end are implicit.
fn funnel(
    start: [f64; 2],
    end: [f64; 2],
    portals: &[([f64; 2], [f64; 2], u8)],
) -> Vec<(usize, [f64; 2])> {
    let mut corners = Vec::new();
    let n = portals.len();
    let eps = 1e-14;
    let mut apex = start;
    let mut left = start;
    let mut right = start;
    let (mut apex_i, mut left_i, mut right_i): (usize, usize, usize) = (0, 0, 0);
    let _ = apex_i;
    let mut i = 0usize;
    let mut guard = 0usize;
    while i <= n {
        guard += 1;
        if guard > 16 * (n + 2) * (n + 2) + 64 {
            break;
        }
        let (pl, pr) = if i < n {
            (portals[i].0, portals[i].1)
        } else {
            (end, end)
        };
        // Tighten right: the new point must not lie right of the right ray.
        if cross2(apex, right, pr) >= -eps {
            if (apex[0] == right[0] && apex[1] == right[1]) || cross2(apex, left, pr) < eps {
                right = pr;
                right_i = i;
            } else {
                // Right crossed over left: left endpoint becomes a corner.
                corners.push((left_i, left));
                apex = left;
                apex_i = left_i;
                left = apex;
                right = apex;
                left_i = apex_i;
                right_i = apex_i;
                i = apex_i + 1;
                continue;
            }
        }
        // Tighten left: symmetric.
        if cross2(apex, left, pl) <= eps {
            if (apex[0] == left[0] && apex[1] == left[1]) || cross2(apex, right, pl) > -eps {
                left = pl;
                left_i = i;
            } else {
                corners.push((right_i, right));
                apex = right;
                apex_i = right_i;
                left = apex;
                right = apex;
                left_i = apex_i;
                right_i = apex_i;
                i = apex_i + 1;
                continue;
            }
        }
        i += 1;
    }
    corners
}

/// One funnel pass over an open polyline with fixed endpoints; output is a
/// valid dense polyline that is taut within the corridor of the input.
pub fn funnel_straighten(engine: &Engine, curve: &Curve) -> Option<Curve> {
    let mesh = engine.mesh;
    let pts = &curve.points;
    if pts.len() < 3 {
        return Some(curve.clone());
    }
    let corridor = build_corridor(mesh, pts)?;
    if corridor.portals.is_empty() {
        // Single face: straight segment.
        return Curve::new(mesh, vec![pts[0], *pts.last().unwrap()], false).ok();
    }
    let start = pts[0]
        .express_in(mesh, corridor.tris[0].0)
        .unwrap_or(pts[0])
        .xy(mesh);
    let endp = *pts.last().unwrap();
    let end_local = endp
        .express_in(mesh, corridor.tris.last().unwrap().0)
        .unwrap_or(endp);
    let end = corridor
        .tris
        .last()
        .unwrap()
        .1
        .apply(end_local.xy(mesh));
    let corners = funnel(start, end, &corridor.portals);

    // Re-trace: walk straight plane segments between consecutive anchor
    // points, emitting portal crossings.
    let mut anchors = Vec::with_capacity(corners.len() + 2);
    anchors.push((0usize, start));
    for &(pi, pos) in &corners {
        anchors.push((pi + 1, pos)); // corner sits on portal pi; segments
                                     // after it start from corridor tri pi+1
    }
    anchors.push((corridor.portals.len(), end));

    let mut out: Vec<MeshPoint> = vec![pts[0]];
    for w in anchors.windows(2) {
        let (i0, p0) = w[0];
        let (i1, p1) = w[1];
        // Crossings with portals i0..i1 (portal k leads into tri k+1).
        for k in i0..i1 {
            let (pl, pr, side_in_next) = corridor.portals[k];
            let (next_tri, next_frame) = corridor.tris[k + 1];
            let lt = mesh.layout(next_tri);
            let tail = next_frame.apply(lt.p[side_in_next as usize]);
            if dist2(pl, pr) < 1e-13 {
                // Pinched portal at a vertex: emit that endpoint.
                let f = if dist2(tail, pl) < 1e-12 { 1e-9 } else { 1.0 - 1e-9 };
                out.push(MeshPoint::on_side(next_tri, side_in_next, f));
                continue;
            }
            let e = [pr[0] - pl[0], pr[1] - pl[1]];
            let d = [p1[0] - p0[0], p1[1] - p0[1]];
            let denom = d[0] * e[1] - d[1] * e[0];
            let s = if denom.abs() < 1e-300 {
                0.5
            } else {
                let wv = [p0[0] - pl[0], p0[1] - pl[1]];
                ((d[0] * wv[1] - d[1] * wv[0]) / denom).clamp(1e-9, 1.0 - 1e-9)
            };
            // Portal left endpoint corresponds to which end of the entered
            // side? Recover by mapping the side's tail through the frame.
            let from_tail = dist2(tail, pl) < dist2(tail, pr);
            let f = if from_tail { s } else { 1.0 - s };
            out.push(MeshPoint::on_side(next_tri, side_in_next, f));
        }
        if i1 <= corridor.portals.len() && w[1].1 != end {
            // Interior corner: a portal endpoint, i.e. a mesh vertex; it is
            // already emitted as a crossing with f clamped near 0/1, good
            // enough for the polyline; the exact vertex snap happens below.
        }
    }
    out.push(endp);
    let mut c = Curve::new(mesh, out, false).ok()?;
    c.dedup(mesh);
    // Snap near-corner crossings onto vertices so wedge tests see them.
    for p in &mut c.points {
        for k in 0..3 {
            if p.bary[k] > 1.0 - 1e-7 {
                let mut b = [0.0; 3];
                b[k] = 1.0;
                p.bary = b;
            }
        }
    }
    c.length = c.recompute_length(mesh)?;
    Some(c)
}

/// Build a curve from points, inserting zero-length representation bridges
/// wherever consecutive points fail the adjacency requirement.
pub fn heal_curve(
    mesh: &SurfaceMesh,
    mut pts: Vec<MeshPoint>,
    closed: bool,
) -> Option<Curve> {
    for _ in 0..32 {
        match Curve::new(mesh, pts.clone(), closed) {
            Ok(mut c) => {
                c.dedup(mesh);
                return Some(c);
            }
            Err(crate::curve::CurveError::OffMesh { index }) => {
                let n = pts.len();
                let a = pts[index];
                let b = pts[(index + 1) % n];
                let mut fixed = false;
                for h in hosts_of(mesh, &a) {
                    if let Some(bridge) = a.express_in(mesh, h) {
                        if crate::curve::segment_length(mesh, &bridge, &b).is_some() {
                            pts.insert(index + 1, bridge);
                            fixed = true;
                            break;
                        }
                    }
                }
                if !fixed {
                    for h in hosts_of(mesh, &b) {
                        if let Some(bridge) = b.express_in(mesh, h) {
                            if crate::curve::segment_length(mesh, &a, &bridge).is_some() {
                                pts.insert(index + 1, bridge);
                                fixed = true;
                                break;
                            }
                        }
                    }
                }
                if !fixed {
                    return None;
                }
            }
            Err(_) => return None,
        }
    }
    None
}

/// Polyline assembly that bridges broken joints with short local paths
/// (used after independent node moves).
pub fn connect_polyline(
    engine: &Engine,
    pts: &[MeshPoint],
    closed: bool,
) -> Option<Curve> {
    let mesh = engine.mesh;
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let segs = if closed { n } else { n - 1 };
    let mut out: Vec<MeshPoint> = Vec::with_capacity(n * 2);
    for i in 0..segs {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        out.push(a);
        if crate::curve::segment_length(mesh, &a, &b).is_none() {
            // Try a representation bridge first, else a short path.
            let mut bridged = false;
            for h in hosts_of(mesh, &a) {
                if let Some(r) = a.express_in(mesh, h) {
                    if crate::curve::segment_length(mesh, &r, &b).is_some() {
                        out.push(r);
                        bridged = true;
                        break;
                    }
                }
            }
            if !bridged {
                if let Ok(leg) = engine.shortest_path(&a, &b) {
                    out.extend(leg.points.iter().skip(1).take(leg.points.len().saturating_sub(2)));
                } else {
                    return None;
                }
            }
        }
    }
    if !closed {
        out.push(pts[n - 1]);
    }
    let mut c = Curve::new(mesh, out, closed).ok()?;
    c.dedup(mesh);
    Some(c)
}

/// Rays (incident edges) at a vertex, as (chart angle, face, side, length).
fn fan_edge_rays(mesh: &SurfaceMesh, v: u32) -> Vec<(f64, TriId, u8, f64)> {
    let mut out = Vec::new();
    let mut alpha = 0.0;
    let fan = mesh.fan(v);
    for &(t, c) in fan {
        out.push((alpha, t, c, mesh.side_len(t, c)));
        alpha += crate::chart::wedge_span(mesh, t, c);
    }
    // Open fans expose one more ray at the far side.
    let &(t, c) = fan.last().unwrap();
    if mesh.neighbor(t, ((c + 2) % 3) as u8).is_none() {
        // Side (c+2) runs from corner c+2 to c; as a ray from v it is that
        // side traversed backwards.
        out.push((alpha, t, (c + 2) % 3, mesh.side_len(t, (c + 2) % 3)));
    }
    out
}

/// Reroute the curve around vertex bends whose far-side wedge is < π.
/// Returns a strictly shorter curve or None if no rewrap applies.
fn rewrap_once(engine: &Engine, curve: &Curve) -> Option<Curve> {
    let mesh = engine.mesh;
    let n = curve.points.len();
    if n < 3 {
        return None;
    }
    let min_r = 1e-9 * (1.0 + engine.sqrt_area());
    let distinct = |i: usize, dir: i64| -> Option<MeshPoint> {
        let mut k = i as i64;
        for _ in 0..n {
            let t = k + dir;
            if t < 0 || t >= n as i64 {
                return None;
            }
            k = t;
            let q = curve.points[k as usize];
            if crate::curve::segment_length(mesh, &curve.points[i], &q).unwrap_or(0.0) > min_r {
                return Some(q);
            }
        }
        None
    };
    for i in 1..n - 1 {
        let p = curve.points[i];
        let Some(ci) = p.at_corner() else { continue };
        let v = mesh.tri(p.face)[ci as usize];
        let (Some(prev), Some(next)) = (distinct(i, -1), distinct(i, 1)) else {
            continue;
        };
        let (Some((phi_a, total)), Some((phi_b, _))) = (
            direction_angle(mesh, &p, &prev),
            direction_angle(mesh, &p, &next),
        ) else {
            continue;
        };
        let mut w1 = (phi_b - phi_a) % total;
        if w1 < 0.0 {
            w1 += total;
        }
        let w2 = total - w1;
        let pi_ = core::f64::consts::PI;
        let tol = 1e-9;
        let (lo, hi, wmin) = if w1 <= w2 {
            (phi_a, phi_b, w1)
        } else {
            (phi_b, phi_a, w2)
        };
        if wmin >= pi_ - tol {
            continue;
        }
        // Insert points on the fan edges strictly inside the small wedge,
        // at a small radius, then let the next funnel pass pull them taut.
        let rays = fan_edge_rays(mesh, v);
        let mut inserts: Vec<(f64, MeshPoint)> = Vec::new();
        for &(ang, t, s, len) in &rays {
            let mut rel = (ang - lo) % total;
            if rel < 0.0 {
                rel += total;
            }
            let span = {
                let mut sp = (hi - lo) % total;
                if sp < 0.0 {
                    sp += total;
                }
                sp
            };
            if rel > 1e-9 && rel < span - 1e-9 {
                let r = (0.45 * len).min(0.5 * engine.rho()).max(1e-9);
                let f = r / len;
                // The ray of fan wedge (t, side c) is the side from corner c
                // (== v) toward c+1; side s == c here except the trailing
                // open-fan ray where v is the head.
                let point = if mesh.tri(t)[s as usize] == v {
                    MeshPoint::on_side(t, s, f)
                } else {
                    MeshPoint::on_side(t, s, 1.0 - f)
                };
                inserts.push((rel, point));
            }
        }
        if inserts.is_empty() {
            continue;
        }
        inserts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Order must run from prev-side to next-side: if the small wedge is
        // (phi_b -> phi_a), the inserts currently run next -> prev.
        let mut seq: Vec<MeshPoint> = inserts.into_iter().map(|x| x.1).collect();
        if w1 > w2 {
            seq.reverse();
        }
        // Replace the whole run of this vertex's representations.
        let same_vertex = |q: &MeshPoint| -> bool {
            q.at_corner()
                .map_or(false, |c| mesh.tri(q.face)[c as usize] == v)
        };
        let mut lo = i;
        while lo > 0 && same_vertex(&curve.points[lo - 1]) {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < n && same_vertex(&curve.points[hi + 1]) {
            hi += 1;
        }
        let mut pts: Vec<MeshPoint> = Vec::with_capacity(n + seq.len());
        pts.extend_from_slice(&curve.points[..lo]);
        pts.extend(seq);
        pts.extend_from_slice(&curve.points[hi + 1..]);
        if let Some(c) = heal_curve(mesh, pts, false) {
            return Some(c);
        }
    }
    None
}

/// Straighten an open polyline with fixed endpoints: alternate funnel passes
/// and vertex rewrapping while the length strictly decreases.
pub fn straighten_open(engine: &Engine, curve: &Curve) -> Curve {
    let mut best = curve.clone();
    for _round in 0..8 {
        let mut cur = match funnel_straighten(engine, &best) {
            Some(c) if c.length <= best.length + 1e-12 => c,
            _ => best.clone(),
        };
        if let Some(re) = rewrap_once(engine, &cur) {
            if let Some(tight) = funnel_straighten(engine, &re) {
                if tight.length < cur.length - 1e-13 * (1.0 + cur.length) {
                    cur = tight;
                }
            }
        }
        let gain = best.length - cur.length;
        if cur.length <= best.length {
            best = cur;
        }
        if gain <= 1e-12 * (1.0 + best.length) {
            break;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Point-to-point shortest paths
// ---------------------------------------------------------------------------

impl<'m> Engine<'m> {
    /// Locally shortest path from `p` to `q` in the homotopy class found by
    /// the Steiner-graph search; length matches the graph distance up to the
    /// straightening gain.
    pub fn shortest_path(&self, p: &MeshPoint, q: &MeshPoint) -> Result<Curve, PathError> {
        self.shortest_path_bounded(p, q, f64::INFINITY)
    }

    pub fn shortest_path_bounded(
        &self,
        p: &MeshPoint,
        q: &MeshPoint,
        bound: f64,
    ) -> Result<Curve, PathError> {
        let mesh = self.mesh;
        // Trivial same-face case.
        if q.express_in(mesh, p.face).is_some() || p.express_in(mesh, q.face).is_some() {
            if let Ok(c) = Curve::new(mesh, vec![*p, *q], false) {
                return Ok(c);
            }
        }
        // Adjacent faces: accept the direct segment when it actually crosses
        // the shared edge.
        if let Some((sa, _)) = mesh.shared_side(p.face, q.face) {
            let lt = mesh.layout(p.face);
            let a = p.xy(mesh);
            let b = unfold_neighbor(mesh, p.face, sa).apply(q.xy(mesh));
            let e0 = lt.p[sa as usize];
            let e1 = lt.p[((sa + 1) % 3) as usize];
            let d = [b[0] - a[0], b[1] - a[1]];
            let e = [e1[0] - e0[0], e1[1] - e0[1]];
            let denom = d[0] * e[1] - d[1] * e[0];
            if denom.abs() > 1e-300 {
                let w = [a[0] - e0[0], a[1] - e0[1]];
                let t_ray = (e[0] * w[1] - e[1] * w[0]) / denom;
                let t_side = (d[0] * w[1] - d[1] * w[0]) / denom;
                if (0.0..=1.0).contains(&t_ray) && (1e-9..=1.0 - 1e-9).contains(&t_side) {
                    let mid = MeshPoint::on_side(p.face, sa, t_side);
                    if let Ok(c) = Curve::new(mesh, vec![*p, mid, *q], false) {
                        return Ok(c);
                    }
                }
            }
        }

        let sources = self.graph.point_links(mesh, p);
        let targets = self.graph.point_links(mesh, q);
        let target_nodes: Vec<NodeId> = targets.iter().map(|&(n, _)| n).collect();
        let (best_node, node_path) = self.with_scratch(|sc| {
            dijkstra(&self.graph, sc, &sources, Some(&target_nodes), bound);
            let mut best: Option<(f64, NodeId)> = None;
            for &(n, w) in &targets {
                let d = sc.dist(n);
                if d + w < best.map_or(f64::INFINITY, |b| b.0) {
                    best = Some((d + w, n));
                }
            }
            let Some((total, n0)) = best else {
                return (None, Vec::new());
            };
            if total > bound {
                return (None, Vec::new());
            }
            let mut nodes = vec![n0];
            let mut cur = n0;
            while let Some(prev) = sc.pred(cur) {
                nodes.push(prev);
                cur = prev;
            }
            nodes.reverse();
            (Some(n0), nodes)
        });
        if best_node.is_none() {
            return Err(PathError::NoPath);
        }

        // Assemble a valid polyline: express each node in a host triangle
        // that keeps the segment from the previous point measurable.
        let mut pts: Vec<MeshPoint> = Vec::with_capacity(node_path.len() + 2);
        pts.push(*p);
        for &n in &node_path {
            let raw = self.graph.node_point(mesh, n);
            let prev = *pts.last().unwrap();
            let mut chosen = None;
            for h in hosts_of(mesh, &raw) {
                if let Some(b) = raw.express_in(mesh, h) {
                    if crate::curve::segment_length(mesh, &prev, &b).is_some() {
                        chosen = Some(b);
                        break;
                    }
                }
            }
            pts.push(chosen.unwrap_or(raw));
        }
        {
            let prev = *pts.last().unwrap();
            if crate::curve::segment_length(mesh, &prev, q).is_none() {
                // Bridge with an extra representation of the final node so
                // the previous segment stays intact.
                for h in hosts_of(mesh, &prev) {
                    if let Some(b) = prev.express_in(mesh, h) {
                        if crate::curve::segment_length(mesh, &b, q).is_some() {
                            pts.push(b);
                            break;
                        }
                    }
                }
            }
        }
        pts.push(*q);
        let mut c = match Curve::new(mesh, pts, false) {
            Ok(c) => c,
            Err(_) => return Err(PathError::NoPath),
        };
        c.dedup(mesh);
        Ok(straighten_open(self, &c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn straight_on_flat_torus() {
        let m = gen::flat_torus(1.0, 2.0, 3).unwrap();
        let eng = Engine::new(&m);
        let p = gen::flat_torus_point(&m, 3, 1.0, 2.0, 0.1, 0.3);
        let q = gen::flat_torus_point(&m, 3, 1.0, 2.0, 0.5, 0.3);
        let c = eng.shortest_path(&p, &q).unwrap();
        assert!((c.length - 0.4).abs() < 1e-6, "len = {}", c.length);
    }

    #[test]
    fn wrapping_distance_on_flat_torus() {
        let m = gen::flat_torus(1.0, 2.0, 3).unwrap();
        let eng = Engine::new(&m);
        let p = gen::flat_torus_point(&m, 3, 1.0, 2.0, 0.05, 0.5);
        let q = gen::flat_torus_point(&m, 3, 1.0, 2.0, 0.95, 0.5);
        let c = eng.shortest_path(&p, &q).unwrap();
        // Wraps around the short direction: distance 0.1.
        assert!((c.length - 0.1).abs() < 1e-6, "len = {}", c.length);
    }

    #[test]
    fn trace_accumulates_requested_length() {
        let m = gen::flat_torus(1.0, 2.0, 3).unwrap();
        let eng = Engine::new(&m);
        let p = gen::flat_torus_point(&m, 3, 1.0, 2.0, 0.21, 0.37);
        let c = trace_geodesic(&eng, &p, [0.6, 0.8], 1.7);
        assert!((c.length - 1.7).abs() < 1e-9, "len = {}", c.length);
    }
}








