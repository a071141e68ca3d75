//! Curve self-intersection and curve-curve intersection tests, bucketed per
//! face (every dense-curve segment lies within one triangle).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)] // used in no_std builds only
use num_traits::Float;

use crate::curve::{Curve, MeshPoint};
use crate::mesh::{SurfaceMesh, TriId};

/// (face, 2D endpoints, curve segment index)
fn segment_table(mesh: &SurfaceMesh, curve: &Curve) -> Vec<(TriId, [f64; 2], [f64; 2], usize)> {
    let n = curve.points.len();
    let segs = if curve.closed { n } else { n.saturating_sub(1) };
    let mut out = Vec::with_capacity(segs);
    for i in 0..segs {
        let a = &curve.points[i];
        let b = &curve.points[(i + 1) % n];
        // Host face: prefer a's face when b is expressible there.
        if let Some(b2) = b.express_in(mesh, a.face) {
            out.push((a.face, a.xy(mesh), b2.xy(mesh), i));
        } else if let Some(a2) = a.express_in(mesh, b.face) {
            out.push((b.face, a2.xy(mesh), b.xy(mesh), i));
        } else if let Some((ka, _)) = mesh.shared_side(a.face, b.face) {
            // Split at the shared edge; register both halves.
            let f = crate::chart::unfold_neighbor(mesh, a.face, ka);
            let pb = f.apply(b.xy(mesh));
            let pa = a.xy(mesh);
            // Crossing point with the shared edge.
            let lt = mesh.layout(a.face);
            let e0 = lt.p[ka as usize];
            let e1 = lt.p[((ka + 1) % 3) as usize];
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let e = [e1[0] - e0[0], e1[1] - e0[1]];
            let den = d[0] * e[1] - d[1] * e[0];
            let t = if den.abs() < 1e-300 {
                0.5
            } else {
                let w = [pa[0] - e0[0], pa[1] - e0[1]];
                ((e[0] * w[1] - e[1] * w[0]) / den).clamp(0.0, 1.0)
            };
            let mid = [pa[0] + t * d[0], pa[1] + t * d[1]];
            out.push((a.face, pa, mid, i));
            let inv = f.inverse();
            out.push((b.face, inv.apply(mid), b.xy(mesh), i));
        }
    }
    out
}

fn seg_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> Option<(f64, f64)> {
    let d = [p2[0] - p1[0], p2[1] - p1[1]];
    let e = [q2[0] - q1[0], q2[1] - q1[1]];
    let den = d[0] * e[1] - d[1] * e[0];
    if den.abs() < 1e-300 {
        return None;
    }
    let w = [q1[0] - p1[0], q1[1] - p1[1]];
    let s = (w[0] * e[1] - w[1] * e[0]) / den;
    let t = (w[0] * d[1] - w[1] * d[0]) / den;
    if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
        Some((s, t))
    } else {
        None
    }
}

pub struct Crossing {
    pub seg_a: usize,
    pub seg_b: usize,
    pub point: MeshPoint,
}

/// Transverse self-intersections, ignoring polyline adjacency and endpoint
/// touches within `tol`.
pub fn self_intersections(mesh: &SurfaceMesh, curve: &Curve, tol: f64) -> Vec<Crossing> {
    let table = segment_table(mesh, curve);
    let mut by_face: BTreeMap<TriId, Vec<usize>> = BTreeMap::new();
    for (k, &(f, _, _, _)) in table.iter().enumerate() {
        by_face.entry(f).or_default().push(k);
    }
    let n = curve.points.len();
    let neighbors = |i: usize, j: usize| -> bool {
        let d = (i as i64 - j as i64).unsigned_abs() as usize;
        d <= 1 || (curve.closed && d == n - 1)
    };
    let mut out: Vec<Crossing> = Vec::new();
    for entries in by_face.values() {
        for x in 0..entries.len() {
            for y in (x + 1)..entries.len() {
                let (f, a1, a2, i) = table[entries[x]];
                let (_, b1, b2, j) = table[entries[y]];
                if i == j || neighbors(i, j) {
                    continue;
                }
                // Skip degenerate pieces.
                if dist(a1, a2) < tol || dist(b1, b2) < tol {
                    continue;
                }
                if let Some((s, t)) = seg_intersect(a1, a2, b1, b2) {
                    let _ = t;
                    let xy = [a1[0] + s * (a2[0] - a1[0]), a1[1] + s * (a2[1] - a1[1])];
                    let bary = crate::curve::clamp_bary(mesh.layout(f).xy_to_bary(xy));
                    let point = MeshPoint::new(f, bary);
                    // The same crossing can appear from both face pieces when
                    // it sits on a shared edge.
                    let dup = out.iter().any(|c| {
                        (c.seg_a == i || c.seg_b == j || c.seg_a == j || c.seg_b == i)
                            && crate::curve::segment_length(mesh, &c.point, &point)
                                .map_or(false, |d| d < 10.0 * tol)
                    });
                    if !dup {
                        out.push(Crossing {
                            seg_a: i,
                            seg_b: j,
                            point,
                        });
                    }
                }
            }
        }
    }
    out
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Crossings between two curves as (arclength on a, arclength on b, point).
pub fn curve_intersections(
    mesh: &SurfaceMesh,
    ca: &Curve,
    cb: &Curve,
    tol: f64,
) -> Vec<(f64, f64, MeshPoint)> {
    let ta = segment_table(mesh, ca);
    let tb = segment_table(mesh, cb);
    let cum_a = ca.cumlen(mesh);
    let cum_b = cb.cumlen(mesh);
    let mut by_face: BTreeMap<TriId, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (k, &(f, _, _, _)) in ta.iter().enumerate() {
        by_face.entry(f).or_default().0.push(k);
    }
    for (k, &(f, _, _, _)) in tb.iter().enumerate() {
        by_face.entry(f).or_default().1.push(k);
    }
    let mut out = Vec::new();
    for (xs, ys) in by_face.values() {
        for &x in xs {
            for &y in ys {
                let (f, a1, a2, i) = ta[x];
                let (_, b1, b2, j) = tb[y];
                if let Some((s, t)) = seg_intersect(a1, a2, b1, b2) {
                    let la = dist(a1, a2);
                    let lb = dist(b1, b2);
                    if la < tol || lb < tol {
                        continue;
                    }
                    let xy = [a1[0] + s * (a2[0] - a1[0]), a1[1] + s * (a2[1] - a1[1])];
                    let bary = crate::curve::clamp_bary(mesh.layout(f).xy_to_bary(xy));
                    // Arclength positions (approximate: segment fraction).
                    let sa = cum_a[i] + s * (cum_a[i + 1] - cum_a[i]);
                    let sb = cum_b[j] + t * (cum_b[j + 1] - cum_b[j]);
                    out.push((sa, sb, MeshPoint::new(f, bary)));
                }
            }
        }
    }
    out.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // Merge duplicates from split segments registered in two faces.
    out.dedup_by(|p, q| (p.0 - q.0).abs() < tol && (p.1 - q.1).abs() < tol);
    out
}

/// Simplicity test; `base_tol` forgives touches near a loop basepoint.
pub fn is_simple(mesh: &SurfaceMesh, curve: &Curve, base: Option<&MeshPoint>) -> bool {
    let tol = 1e-7 * (1.0 + curve.length);
    for c in self_intersections(mesh, curve, tol) {
        if let Some(b) = base {
            if let Some(d) = crate::curve::segment_length(mesh, &c.point, b) {
                if d < 1e-3 * (1.0 + curve.length) {
                    continue;
                }
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::gen;

    #[test]
    fn figure_eight_detected() {
        let m = gen::flat_torus(2.0, 2.0, 3).unwrap();
        let eng = Engine::new(&m);
        let p = |x: f64, y: f64| gen::flat_torus_point(&m, 3, 2.0, 2.0, x, y);
        // A bowtie: (0,0) -> (1,1) -> (0,1) -> (1,0) -> close.
        let pts = alloc::vec![p(0.2, 0.2), p(1.0, 1.0), p(0.2, 1.0), p(1.0, 0.2)];
        // Connect with straight traces so the polyline is dense.
        let mut dense = Vec::new();
        for k in 0..4 {
            let a = pts[k];
            let b = pts[(k + 1) % 4];
            let seg = eng.shortest_path(&a, &b).unwrap();
            dense.extend(seg.points);
        }
        let mut c = Curve::new(&m, dense, true).unwrap();
        c.dedup(&m);
        assert!(!is_simple(&m, &c, None));
        let m2 = gen::flat_torus(2.0, 2.0, 3).unwrap();
        let eng2 = Engine::new(&m2);
        let straight = eng2.shortest_path(&p(0.2, 0.2), &p(1.0, 1.0)).unwrap();
        assert!(is_simple(&m2, &straight, None));
    }
}
