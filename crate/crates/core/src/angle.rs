//! Wedge-angle measurement along curves: geodesic stationarity certificates
//! and the inward-angle test behind every convexity check.


use crate::chart::wedge_angles;
use crate::curve::{segment_length, Curve, MeshPoint};
use crate::engine::Engine;
use crate::path::{shoot_frame, trace_geodesic};
use crate::region::TriSet;

/// Neighbor of curve point `i` at arclength at least `min_r`, walking
/// `dir = ±1`. The walk stops at `barrier` (measurements near a pinned base
/// must not see past it).
fn probe_neighbor(
    engine: &Engine,
    curve: &Curve,
    i: usize,
    dir: i64,
    min_r: f64,
    barrier: Option<usize>,
) -> Option<MeshPoint> {
    let n = curve.points.len();
    if n < 2 {
        return None;
    }
    let mut acc = 0.0;
    let mut k = i as i64;
    for _ in 0..n {
        let next = if curve.closed {
            (k + dir).rem_euclid(n as i64)
        } else {
            let t = k + dir;
            if t < 0 || t >= n as i64 {
                return Some(curve.points[k as usize]).filter(|_| acc > 0.0);
            }
            t
        };
        acc += segment_length(
            engine.mesh,
            &curve.points[k as usize],
            &curve.points[next as usize],
        )?;
        k = next;
        if barrier == Some(k as usize) {
            return Some(curve.points[k as usize]).filter(|_| acc > 0.1 * min_r);
        }
        if acc >= min_r {
            return Some(curve.points[k as usize]);
        }
    }
    None
}

/// Both wedge angles at curve point `i` (between incoming and outgoing
/// directions). Probes a short arclength to either side so collinear
/// interior samples don't degenerate the measurement.
pub fn wedges_at(engine: &Engine, curve: &Curve, i: usize) -> Option<(f64, f64)> {
    wedges_at_with_barrier(engine, curve, i, None)
}

pub fn wedges_at_with_barrier(
    engine: &Engine,
    curve: &Curve,
    i: usize,
    barrier: Option<usize>,
) -> Option<(f64, f64)> {
    let min_r = 1e-7 * (1.0 + engine.sqrt_area());
    let prev = probe_neighbor(engine, curve, i, -1, min_r, barrier)?;
    let next = probe_neighbor(engine, curve, i, 1, min_r, barrier)?;
    wedge_angles(engine.mesh, &curve.points[i], &prev, &next)
}

/// Max pointwise deviation from geodesy. At interior flat points this is
/// π − (smaller wedge) = |w1 − w2|/2. Through vertices whose angle deficit
/// is within the discretization allowance, the straightest convention
/// applies (equal wedges are stationary: strict minimizers through positive
/// cone points do not exist on a piecewise-flat surface). Vertices carrying
/// more deficit than the allowance are genuine cone points and stay under
/// the strict rule. `exempt` skips the basepoint of a loop.
pub fn stationarity_defect(engine: &Engine, curve: &Curve, exempt: Option<usize>) -> f64 {
    let n = curve.points.len();
    if n < 3 {
        return 0.0;
    }
    let mesh = engine.mesh;
    let pi = core::f64::consts::PI;
    let allowance = engine.params.vertex_allowance;
    let mut worst: f64 = 0.0;
    let range: alloc::vec::Vec<usize> = if curve.closed {
        (0..n).collect()
    } else {
        (1..n - 1).collect()
    };
    for i in range {
        if exempt == Some(i) {
            continue;
        }
        if let Some((w1, w2)) = wedges_at_with_barrier(engine, curve, i, exempt) {
            let straightest_ok = curve.points[i].at_corner().map_or(false, |c| {
                let v = mesh.tri(curve.points[i].face)[c as usize];
                mesh.angle_deficit(v).abs() <= allowance
            });
            let defect = if straightest_ok {
                0.5 * (w1 - w2).abs()
            } else {
                (pi - w1.min(w2)).max(0.0)
            };
            worst = worst.max(defect);
        }
    }
    worst
}

/// The wedge at `at` between the ends of `incoming` and `outgoing`, measured
/// inside the region: returns (inside angle, outside angle). The side is
/// resolved by shooting a short probe down the wedge bisector.
pub fn interior_angle(
    engine: &Engine,
    incoming: &Curve,
    outgoing: &Curve,
    at: &MeshPoint,
    region: &TriSet,
) -> Option<(f64, f64)> {
    let mesh = engine.mesh;
    let min_r = 1e-7 * (1.0 + engine.sqrt_area());
    // Walk towards `at` from each curve to find nearby probe points.
    let pick = |c: &Curve, from_end: bool| -> Option<MeshPoint> {
        let pts = &c.points;
        let idx: alloc::vec::Vec<usize> = if from_end {
            (0..pts.len()).rev().collect()
        } else {
            (0..pts.len()).collect()
        };
        let mut prev: Option<MeshPoint> = None;
        for i in idx {
            let d = segment_length(mesh, &pts[i], at);
            if let Some(d) = d {
                if d > min_r {
                    return Some(pts[i]);
                }
                prev = Some(pts[i]);
            } else {
                return prev;
            }
        }
        prev
    };
    let a = pick(incoming, true)?;
    let b = pick(outgoing, false)?;
    let (phi_a, total) = crate::chart::direction_angle(mesh, at, &a)?;
    let (phi_b, _) = crate::chart::direction_angle(mesh, at, &b)?;
    let mut w1 = (phi_b - phi_a) % total;
    if w1 < 0.0 {
        w1 += total;
    }
    let w2 = total - w1;
    // Probe the wedge from a to b (CCW): bisector direction.
    let theta = phi_a + 0.5 * w1;
    let (host, dir) = shoot_frame(mesh, at, theta);
    let step = 0.05 * mesh.median_edge_len().max(1e-9);
    let probe = trace_geodesic(engine, &host, dir, step);
    let landing = probe.points.last().copied().unwrap_or(host);
    let inside_first = region.contains_point(mesh, &landing);
    if inside_first {
        Some((w1, w2))
    } else {
        Some((w2, w1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn straight_segment_has_no_defect() {
        let m = gen::flat_torus(1.0, 2.0, 3).unwrap();
        let eng = Engine::new(&m);
        let p = gen::flat_torus_point(&m, 3, 1.0, 2.0, 0.1, 0.9);
        let dir = gen::flat_torus_dir(&m, 3, 1.0, 2.0, &p, [1.0, 0.4]);
        let c = crate::path::trace_geodesic(&eng, &p, dir, 0.8);
        let d = stationarity_defect(&eng, &c, None);
        assert!(d < 1e-7, "defect = {d}");
    }

    #[test]
    fn right_angle_measures_half_pi() {
        let m = gen::flat_torus(1.0, 1.0, 3).unwrap();
        let eng = Engine::new(&m);
        // L-shaped corner at (0.5, 0.5).
        let a = gen::flat_torus_point(&m, 3, 1.0, 1.0, 0.45, 0.5);
        let v = gen::flat_torus_point(&m, 3, 1.0, 1.0, 0.5, 0.5);
        let b = gen::flat_torus_point(&m, 3, 1.0, 1.0, 0.5, 0.55);
        let (w1, w2) = crate::chart::wedge_angles(&m, &v, &a, &b).unwrap();
        let q = core::f64::consts::FRAC_PI_2;
        assert!(
            (w1 - q).abs() < 1e-9 || (w2 - q).abs() < 1e-9,
            "w1={w1} w2={w2}"
        );
        let _ = eng;
    }
}
