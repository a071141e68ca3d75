//! Discrete curves: ordered mesh points with consecutive points in the same
//! or edge-adjacent triangles, so every segment length is computable by a
//! one-step unfolding.

use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // used in no_std builds only
use num_traits::Float;

use crate::chart::unfold_neighbor;
use crate::mesh::{SurfaceMesh, TriId, VertId};

pub const BARY_TOL: f64 = 1e-12;

/// A point on the mesh: containing face plus barycentric coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshPoint {
    pub face: TriId,
    pub bary: [f64; 3],
}

impl MeshPoint {
    pub fn new(face: TriId, bary: [f64; 3]) -> MeshPoint {
        let s = bary[0] + bary[1] + bary[2];
        debug_assert!((s - 1.0).abs() < 1e-6, "barycentric sum {s}");
        let bary = [bary[0] / s, bary[1] / s, bary[2] / s];
        MeshPoint { face, bary }
    }

    pub fn vertex(mesh: &SurfaceMesh, v: VertId) -> MeshPoint {
        let (t, c) = mesh.fan(v)[0];
        let mut bary = [0.0; 3];
        bary[c as usize] = 1.0;
        MeshPoint { face: t, bary }
    }

    /// Point on side `side` of `face` at parameter `s` in [0,1] from the
    /// side's tail corner.
    pub fn on_side(face: TriId, side: u8, s: f64) -> MeshPoint {
        let mut bary = [0.0; 3];
        bary[side as usize] = 1.0 - s;
        bary[((side + 1) % 3) as usize] = s;
        MeshPoint { face, bary }
    }

    pub fn centroid(face: TriId) -> MeshPoint {
        MeshPoint {
            face,
            bary: [1.0 / 3.0; 3],
        }
    }

    pub fn xy(&self, mesh: &SurfaceMesh) -> [f64; 2] {
        mesh.layout(self.face).bary_to_xy(self.bary)
    }

    /// The corner index if this point coincides with a vertex of its face.
    pub fn at_corner(&self) -> Option<u8> {
        (0..3).find(|&c| self.bary[c as usize] >= 1.0 - 1e-9)
    }

    /// The side index if this point lies on an edge of its face (including
    /// corners; returns the first zero coordinate's opposite side).
    pub fn on_edge(&self) -> Option<u8> {
        // bary[k] == 0 means the point is on the side from k+1 to k+2,
        // which is side (k+1) in our side numbering.
        (0..3u8)
            .find(|&k| self.bary[k as usize] <= 1e-9)
            .map(|k| (k + 1) % 3)
    }

    /// Re-express this point in an adjacent face when it lies on the shared
    /// edge (or at a shared vertex).
    pub fn express_in(&self, mesh: &SurfaceMesh, target: TriId) -> Option<MeshPoint> {
        if self.face == target {
            return Some(*self);
        }
        if let Some(c) = self.at_corner() {
            let v = mesh.tri(self.face)[c as usize];
            let tc = mesh.corner_of(target, v)?;
            let mut bary = [0.0; 3];
            bary[tc as usize] = 1.0;
            return Some(MeshPoint { face: target, bary });
        }
        let side = self.on_edge()?;
        let (nbr, nside) = mesh.neighbor(self.face, side)?;
        if nbr != target {
            return None;
        }
        // Parameter along the side from its tail corner.
        let tail = side as usize;
        let head = ((side + 1) % 3) as usize;
        let s = self.bary[head] / (self.bary[tail] + self.bary[head]);
        // The neighbor traverses the edge in the opposite direction.
        Some(MeshPoint::on_side(nbr, nside, 1.0 - s))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveError {
    /// Consecutive points in non-adjacent faces.
    OffMesh { index: usize },
    Empty,
}

impl fmt::Display for CurveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveError::OffMesh { index } => write!(f, "curve leaves the mesh at point {index}"),
            CurveError::Empty => write!(f, "empty curve"),
        }
    }
}

/// Polyline curve; `length` is cached and maintained by constructors.
#[derive(Clone, Debug)]
pub struct Curve {
    pub points: Vec<MeshPoint>,
    pub closed: bool,
    pub length: f64,
}

/// Length of the segment between two points in the same or adjacent faces.
pub fn segment_length(mesh: &SurfaceMesh, a: &MeshPoint, b: &MeshPoint) -> Option<f64> {
    // Same vertex seen from different fan triangles.
    if let (Some(ca), Some(cb)) = (a.at_corner(), b.at_corner()) {
        if mesh.tri(a.face)[ca as usize] == mesh.tri(b.face)[cb as usize] {
            return Some(0.0);
        }
    }
    let pa = a.xy(mesh);
    if b.face == a.face {
        let pb = b.xy(mesh);
        return Some(dist2(pa, pb));
    }
    if let Some(b2) = b.express_in(mesh, a.face) {
        let pb = b2.xy(mesh);
        return Some(dist2(pa, pb));
    }
    if let Some(a2) = a.express_in(mesh, b.face) {
        let pb = b.xy(mesh);
        return Some(dist2(a2.xy(mesh), pb));
    }
    // Adjacent faces: unfold b's face across the shared edge into a's frame.
    let (ka, _kb) = mesh.shared_side(a.face, b.face)?;
    let frame = unfold_neighbor(mesh, a.face, ka);
    let pb = frame.apply(b.xy(mesh));
    Some(dist2(pa, pb))
}

fn dist2(p: [f64; 2], q: [f64; 2]) -> f64 {
    let dx = q[0] - p[0];
    let dy = q[1] - p[1];
    (dx * dx + dy * dy).sqrt()
}

impl Curve {
    pub fn new(mesh: &SurfaceMesh, points: Vec<MeshPoint>, closed: bool) -> Result<Curve, CurveError> {
        if points.is_empty() {
            return Err(CurveError::Empty);
        }
        let mut c = Curve {
            points,
            closed,
            length: 0.0,
        };
        let mut sum = 0.0;
        for (i, j) in c.seg_indices() {
            match segment_length(mesh, &c.points[i], &c.points[j]) {
                Some(d) => sum += d,
                None => return Err(CurveError::OffMesh { index: i }),
            }
        }
        c.length = sum;
        Ok(c)
    }

    pub fn point(p: MeshPoint) -> Curve {
        Curve {
            points: alloc::vec![p],
            closed: true,
            length: 0.0,
        }
    }

    pub fn is_point(&self) -> bool {
        self.points.len() <= 1
    }

    fn seg_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.points.len();
        let wrap = if self.closed && n > 1 { n } else { n.saturating_sub(1) };
        (0..wrap).map(move |i| (i, (i + 1) % n))
    }

    pub fn recompute_length(&self, mesh: &SurfaceMesh) -> Option<f64> {
        let mut sum = 0.0;
        for (i, j) in self.seg_indices() {
            sum += segment_length(mesh, &self.points[i], &self.points[j])?;
        }
        Some(sum)
    }

    /// Arclength position of every point (closed curves get n+1 entries,
    /// the last being the full length).
    pub fn cumlen(&self, mesh: &SurfaceMesh) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.points.len() + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for (i, j) in self.seg_indices() {
            acc += segment_length(mesh, &self.points[i], &self.points[j]).unwrap_or(f64::INFINITY);
            out.push(acc);
        }
        out
    }

    pub fn reversed(&self) -> Curve {
        let mut points = self.points.clone();
        points.reverse();
        Curve {
            points,
            closed: self.closed,
            length: self.length,
        }
    }

    /// Rotate a closed curve's point list so it starts at `idx`.
    pub fn rebased_at(&self, idx: usize) -> Curve {
        debug_assert!(self.closed);
        let mut points = Vec::with_capacity(self.points.len());
        points.extend_from_slice(&self.points[idx..]);
        points.extend_from_slice(&self.points[..idx]);
        Curve {
            points,
            closed: true,
            length: self.length,
        }
    }

    /// Drop consecutive same-face duplicates. Zero-length hops that change
    /// the face representation are kept: they bridge otherwise non-adjacent
    /// neighbors.
    pub fn dedup(&mut self, mesh: &SurfaceMesh) {
        let tol = 1e-12 * (1.0 + mesh.max_edge_len());
        let vertex_of = |p: &MeshPoint| -> Option<u32> {
            p.at_corner().map(|c| mesh.tri(p.face)[c as usize])
        };
        let mut out: Vec<MeshPoint> = Vec::with_capacity(self.points.len());
        for p in &self.points {
            if let Some(last) = out.last() {
                if last.face == p.face {
                    if let Some(d) = segment_length(mesh, last, p) {
                        if d < tol {
                            continue;
                        }
                    }
                }
                // Runs of representations of one vertex collapse to the
                // entry and exit copies.
                if out.len() >= 2 {
                    let v = vertex_of(p);
                    if v.is_some()
                        && vertex_of(last) == v
                        && vertex_of(&out[out.len() - 2]) == v
                    {
                        let n = out.len();
                        out[n - 1] = *p;
                        continue;
                    }
                }
            }
            out.push(*p);
        }
        if self.closed && out.len() > 1 {
            let last = *out.last().unwrap();
            if last.face == out[0].face {
                if let Some(d) = segment_length(mesh, &last, &out[0]) {
                    if d < tol {
                        out.pop();
                    }
                }
            }
        }
        self.points = out;
        if let Some(l) = self.recompute_length(mesh) {
            self.length = l;
        }
    }

    /// Concatenate (open curves sharing an endpoint, tolerance not checked).
    pub fn concat(mesh: &SurfaceMesh, parts: &[&Curve], closed: bool) -> Curve {
        let mut points = Vec::new();
        for part in parts {
            points.extend_from_slice(&part.points);
        }
        let mut c = Curve {
            points,
            closed,
            length: 0.0,
        };
        c.dedup(mesh);
        c
    }

    /// Open sub-curve between arclength positions `s0 <= s1` (open curves).
    pub fn sub_curve(&self, mesh: &SurfaceMesh, s0: f64, s1: f64) -> Curve {
        let cum = self.cumlen(mesh);
        let mut points = Vec::new();
        points.push(self.point_at(mesh, &cum, s0));
        for (i, &c) in cum.iter().enumerate().skip(1) {
            if c > s0 && c < s1 {
                points.push(self.points[i % self.points.len()]);
            }
        }
        points.push(self.point_at(mesh, &cum, s1));
        let mut c = Curve {
            points,
            closed: false,
            length: 0.0,
        };
        c.dedup(mesh);
        c
    }

    /// Point at arclength `s` (cum = cumlen output).
    pub fn point_at(&self, mesh: &SurfaceMesh, cum: &[f64], s: f64) -> MeshPoint {
        let n = self.points.len();
        let total = *cum.last().unwrap();
        let s = s.clamp(0.0, total);
        // Find segment containing s.
        let mut i = match cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        };
        if i >= cum.len() - 1 {
            i = cum.len() - 2;
        }
        let (a, b) = (&self.points[i % n], &self.points[(i + 1) % n]);
        let seg = cum[i + 1] - cum[i];
        if seg <= 0.0 {
            return *a;
        }
        let t = ((s - cum[i]) / seg).clamp(0.0, 1.0);
        interpolate(mesh, a, b, t)
    }
}

/// Interpolate between two points of a valid segment (same/adjacent faces),
/// staying in `a`'s face for t small and `b`'s face otherwise.
pub fn interpolate(mesh: &SurfaceMesh, a: &MeshPoint, b: &MeshPoint, t: f64) -> MeshPoint {
    if let Some(b2) = b.express_in(mesh, a.face) {
        let pa = a.xy(mesh);
        let pb = b2.xy(mesh);
        let xy = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        return clamp_into(mesh, a.face, xy);
    }
    if let Some(a2) = a.express_in(mesh, b.face) {
        let pa = a2.xy(mesh);
        let pb = b.xy(mesh);
        let xy = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        return clamp_into(mesh, b.face, xy);
    }
    if let Some((ka, _)) = mesh.shared_side(a.face, b.face) {
        let frame = unfold_neighbor(mesh, a.face, ka);
        let pa = a.xy(mesh);
        let pb = frame.apply(b.xy(mesh));
        let xy = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        // The midpoint may land in either face; pick by barycentric sign.
        let cand = mesh.layout(a.face).xy_to_bary(xy);
        if cand.iter().all(|&x| x >= -1e-9) {
            return MeshPoint::new(a.face, clamp_bary(cand));
        }
        let back = frame.inverse().apply(xy);
        let cand_b = mesh.layout(b.face).xy_to_bary(back);
        return MeshPoint::new(b.face, clamp_bary(cand_b));
    }
    if t < 0.5 {
        *a
    } else {
        *b
    }
}

fn clamp_into(mesh: &SurfaceMesh, face: TriId, xy: [f64; 2]) -> MeshPoint {
    let bary = mesh.layout(face).xy_to_bary(xy);
    MeshPoint::new(face, clamp_bary(bary))
}

/// Euclidean remainder for f64 (not available in core).
pub fn fmod_pos(x: f64, m: f64) -> f64 {
    let r = x % m;
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

pub fn clamp_bary(mut b: [f64; 3]) -> [f64; 3] {
    for x in &mut b {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s = b[0] + b[1] + b[2];
    [b[0] / s, b[1] / s, b[2] / s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::mesh::{build_mesh, EndSpec, MeshInput};

    fn two_tris() -> SurfaceMesh {
        // Unit square split along the diagonal.
        build_mesh(
            MeshInput::Coords(vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ]),
            alloc::vec![[0, 1, 2], [0, 2, 3]],
            alloc::vec![EndSpec::tail(0.0)],
        )
        .unwrap()
    }

    #[test]
    fn segment_across_shared_edge() {
        let m = two_tris();
        // (0.75, 0.25) in tri 0 and (0.25, 0.75) in tri 1: distance sqrt(0.5).
        let a = MeshPoint::new(0, [0.25, 0.5, 0.25]);
        // tri 1 = [0,2,3]; (0.25,0.75): bary w.r.t. (0,0),(1,1),(0,1):
        // x = b1, y = b1 + b2 => b1 = 0.25, b2 = 0.5, b0 = 0.25.
        let b = MeshPoint::new(1, [0.25, 0.25, 0.5]);
        let d = segment_length(&m, &a, &b).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn point_curve_has_zero_length() {
        let m = two_tris();
        let c = Curve::new(&m, alloc::vec![MeshPoint::centroid(0)], true).unwrap();
        assert_eq!(c.length, 0.0);
    }

    #[test]
    fn express_on_shared_edge() {
        let m = two_tris();
        // Midpoint of the diagonal (vertices 0 and 2), seen from both faces.
        let p0 = MeshPoint::on_side(0, 2, 0.5); // side 2 of tri 0: 2 -> 0
        let p1 = p0.express_in(&m, 1).unwrap();
        assert_eq!(p1.face, 1);
        let d = segment_length(&m, &p0, &p1).unwrap();
        assert!(d < 1e-12);
    }
}
