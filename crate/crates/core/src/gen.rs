//! Benchmark surface generators: flat tori, spheres, surfaces of revolution
//! with cusped or truncated ends, and the two-triangle pillow (with optional
//! thin funnels replacing vertices).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;
#[allow(unused_imports)] // used in no_std builds only
use num_traits::Float;

use crate::curve::{Curve, MeshPoint};
use crate::mesh::{build_mesh, BuildError, EndSpec, MeshInput, SurfaceMesh};

#[derive(Clone, Debug)]
pub enum GenError {
    TooManyCusps(usize),
    NonPositiveProfile(f64),
    /// Tail area quadrature failed to converge.
    InfiniteArea,
    /// Refinement too low for the requested construction.
    TooCoarse,
    Build(BuildError),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::TooManyCusps(n) => write!(f, "{n} cusps requested, at most 3"),
            GenError::NonPositiveProfile(x) => write!(f, "profile not positive at x={x}"),
            GenError::InfiniteArea => write!(f, "tail area integral diverges"),
            GenError::TooCoarse => write!(f, "refinement too low"),
            GenError::Build(e) => write!(f, "mesh build failed: {e}"),
        }
    }
}

impl From<BuildError> for GenError {
    fn from(e: BuildError) -> Self {
        GenError::Build(e)
    }
}

// ---------------------------------------------------------------------------
// Flat torus
// ---------------------------------------------------------------------------

/// Flat torus with side lengths `a` x `b` on a 2^r-based grid.
pub fn flat_torus(a: f64, b: f64, refinement: u32) -> Result<SurfaceMesh, GenError> {
    let nx = (1usize << refinement).max(4);
    let ny = ((nx as f64 * b / a).round() as usize).max(4);
    let dx = a / nx as f64;
    let dy = b / ny as f64;
    let diag = (dx * dx + dy * dy).sqrt();
    let vid = |i: usize, j: usize| ((j % ny) * nx + (i % nx)) as u32;
    let mut tris = Vec::with_capacity(nx * ny * 2);
    let mut lengths: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut put = |u: u32, v: u32, l: f64| {
        let key = if u < v { (u, v) } else { (v, u) };
        lengths.insert(key, l);
    };
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            tris.push([v00, v10, v11]);
            tris.push([v00, v11, v01]);
            put(v00, v10, dx);
            put(v01, v11, dx);
            put(v00, v01, dy);
            put(v10, v11, dy);
            put(v00, v11, diag);
        }
    }
    build_mesh(
        MeshInput::EdgeLengths {
            n_vertices: (nx * ny) as u32,
            lengths: lengths.into_iter().collect(),
        },
        tris,
        vec![],
    )
    .map_err(GenError::from)
}

/// Mesh point at coordinates (x, y) on a torus built by `flat_torus`.
pub fn flat_torus_point(
    mesh: &SurfaceMesh,
    refinement: u32,
    a: f64,
    b: f64,
    x: f64,
    y: f64,
) -> MeshPoint {
    let nx = (1usize << refinement).max(4);
    let ny = ((nx as f64 * b / a).round() as usize).max(4);
    let dx = a / nx as f64;
    let dy = b / ny as f64;
    let xm = crate::curve::fmod_pos(x, a);
    let ym = crate::curve::fmod_pos(y, b);
    let i = ((xm / dx) as usize).min(nx - 1);
    let j = ((ym / dy) as usize).min(ny - 1);
    let u = (xm - i as f64 * dx) / dx;
    let v = (ym - j as f64 * dy) / dy;
    let cell = 2 * (j * nx + i);
    // Lower triangle [v00,v10,v11] covers u >= v.
    let (t, bary) = if u >= v {
        (cell as u32, [1.0 - u, u - v, v])
    } else {
        ((cell + 1) as u32, [1.0 - v, u, v - u])
    };
    let _ = mesh;
    MeshPoint::new(t, bary)
}

/// Convert a global (x, y) direction on a `flat_torus` mesh into the layout
/// frame of the face containing `p`.
pub fn flat_torus_dir(
    mesh: &SurfaceMesh,
    refinement: u32,
    a: f64,
    b: f64,
    p: &MeshPoint,
    dir: [f64; 2],
) -> [f64; 2] {
    let nx = (1usize << refinement).max(4);
    let ny = ((nx as f64 * b / a).round() as usize).max(4);
    let dx = a / nx as f64;
    let dy = b / ny as f64;
    let cell = (p.face / 2) as usize;
    let lower = p.face % 2 == 0;
    let (_i, _j) = (cell % nx, cell / nx);
    // Global vector of the face's corner0 -> corner1 edge.
    let g = if lower { [dx, 0.0] } else { [dx, dy] };
    let lt = mesh.layout(p.face);
    let l = [lt.p[1][0] - lt.p[0][0], lt.p[1][1] - lt.p[0][1]];
    let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
    let ln = (l[0] * l[0] + l[1] * l[1]).sqrt();
    let (cg, sg) = (g[0] / gn, g[1] / gn);
    let (cl, sl) = (l[0] / ln, l[1] / ln);
    // Rotation taking the global frame to the layout frame.
    let c = cl * cg + sl * sg;
    let s = sl * cg - cl * sg;
    [c * dir[0] - s * dir[1], s * dir[0] + c * dir[1]]
}

// ---------------------------------------------------------------------------
// Spheres
// ---------------------------------------------------------------------------

/// Latitude-longitude sphere with polar fans; the equator is a vertex ring,
/// which makes hemispheres triangle-exact regions with geodesic boundary.
pub fn sphere_uv(radius: f64, refinement: u32) -> Result<SurfaceMesh, GenError> {
    let n_lat = (4usize << refinement).max(8); // even
    let n_lon = 2 * n_lat;
    let mut coords: Vec<[f64; 3]> = Vec::new();
    coords.push([0.0, 0.0, radius]); // north pole
    for j in 1..n_lat {
        let theta = PI * j as f64 / n_lat as f64;
        for i in 0..n_lon {
            let phi = TAU * i as f64 / n_lon as f64;
            coords.push([
                radius * theta.sin() * phi.cos(),
                radius * theta.sin() * phi.sin(),
                radius * theta.cos(),
            ]);
        }
    }
    coords.push([0.0, 0.0, -radius]); // south pole
    let ring = |j: usize, i: usize| (1 + (j - 1) * n_lon + (i % n_lon)) as u32;
    let south = (coords.len() - 1) as u32;
    let mut tris = Vec::new();
    for i in 0..n_lon {
        tris.push([0, ring(1, i + 1), ring(1, i)]);
    }
    for j in 1..n_lat - 1 {
        for i in 0..n_lon {
            let (v00, v10, v11, v01) = (ring(j, i), ring(j, i + 1), ring(j + 1, i + 1), ring(j + 1, i));
            if (i + j) % 2 == 0 {
                tris.push([v00, v11, v01]);
                tris.push([v00, v10, v11]);
            } else {
                tris.push([v00, v10, v01]);
                tris.push([v10, v11, v01]);
            }
        }
    }
    for i in 0..n_lon {
        tris.push([south, ring(n_lat - 1, i), ring(n_lat - 1, i + 1)]);
    }
    build_mesh(MeshInput::Coords(coords), tris, vec![]).map_err(GenError::from)
}

/// Icosahedral sphere (subdivision level `level`, vertices projected onto
/// the sphere).
pub fn icosphere(radius: f64, level: u32) -> Result<SurfaceMesh, GenError> {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let norm = |p: [f64; 3]| {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [radius * p[0] / n, radius * p[1] / n, radius * p[2] / n]
    };
    for v in verts.iter_mut() {
        *v = norm(*v);
    }
    for _ in 0..level {
        let mut mid: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let mut m = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                m[k] = *mid.entry(key).or_insert_with(|| {
                    let (p, q) = (verts[a as usize], verts[b as usize]);
                    verts.push(norm([
                        (p[0] + q[0]) / 2.0,
                        (p[1] + q[1]) / 2.0,
                        (p[2] + q[2]) / 2.0,
                    ]));
                    (verts.len() - 1) as u32
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([t[1], m[1], m[0]]);
            next.push([t[2], m[2], m[1]]);
            next.push([m[0], m[1], m[2]]);
        }
        tris = next;
    }
    build_mesh(MeshInput::Coords(verts), tris, vec![]).map_err(GenError::from)
}

// ---------------------------------------------------------------------------
// Surfaces of revolution
// ---------------------------------------------------------------------------

/// Named radial profiles r(x).
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// scale / (1 + x²): two cusped ends of finite area.
    Witch { scale: f64 },
    /// r0 · e^(-rate·x): one cusped end on the right.
    Exp { r0: f64, rate: f64 },
    /// Constant radius (flat cylinder).
    Const { r: f64 },
    /// Neck at x=0, bulbs at ±width, exponential cusps beyond.
    Dumbbell { neck: f64, bulb: f64, width: f64 },
}

impl Profile {
    pub fn r(&self, x: f64) -> f64 {
        match *self {
            Profile::Witch { scale } => scale / (1.0 + x * x),
            Profile::Exp { r0, rate } => r0 * (-rate * x).exp(),
            Profile::Const { r } => r,
            Profile::Dumbbell { neck, bulb, width } => {
                let ax = x.abs();
                if ax <= width {
                    neck + (bulb - neck) * (PI * x / (2.0 * width)).sin().powi(2)
                } else {
                    bulb * (-2.0 * (ax - width)).exp()
                }
            }
        }
    }

    fn r_prime(&self, x: f64) -> f64 {
        let h = 1e-6;
        (self.r(x + h) - self.r(x - h)) / (2.0 * h)
    }

    fn ds(&self, x: f64) -> f64 {
        let rp = self.r_prime(x);
        (1.0 + rp * rp).sqrt()
    }
}

/// Domain of a revolution surface.
#[derive(Clone, Debug, PartialEq)]
pub enum RevDomain {
    /// Unbounded both ways (profile must have finite area): cusps truncated
    /// at the collar threshold.
    Line,
    /// [x0, ∞): pole cap or open boundary on the left, cusp on the right.
    HalfLine { x0: f64, cap: bool },
    /// Finite strip with two open boundaries and declared tail areas.
    Interval { x0: f64, x1: f64, tail0: f64, tail1: f64 },
}

/// Simpson quadrature of the area element 2π·r·√(1+r'²).
pub fn revolution_area_quadrature(profile: &Profile, x0: f64, x1: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (x1 - x0) / n as f64;
    let f = |x: f64| TAU * profile.r(x) * profile.ds(x);
    let mut s = f(x0) + f(x1);
    for k in 1..n {
        s += f(x0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Tail area from `x_from` toward +∞ (or -∞ when `dir < 0`).
fn tail_area(profile: &Profile, x_from: f64, dir: f64) -> Result<f64, GenError> {
    let mut total = 0.0;
    let mut x = x_from;
    let mut step = 1.0;
    for _ in 0..64 {
        let x_next = x + dir * step;
        let (a, b) = if dir > 0.0 { (x, x_next) } else { (x_next, x) };
        let inc = revolution_area_quadrature(profile, a, b, 64);
        total += inc;
        x = x_next;
        step *= 2.0;
        if inc < 1e-10 * (1.0 + total) {
            return Ok(total);
        }
    }
    Err(GenError::InfiniteArea)
}

/// Truncation abscissa: smallest |x| in the given direction where the
/// cross-section length 2πr drops below `eps_collar`.
fn truncation_x(profile: &Profile, dir: f64, eps_collar: f64) -> Result<f64, GenError> {
    let mut x = 0.0;
    let mut step = 0.25;
    for _ in 0..200 {
        if TAU * profile.r(x + dir * step) < eps_collar {
            // Bisect.
            let (mut lo, mut hi) = (x, x + dir * step);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if TAU * profile.r(mid) < eps_collar {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        x += dir * step;
        step *= 1.5;
    }
    Err(GenError::InfiniteArea)
}

pub struct Revolution {
    pub mesh: SurfaceMesh,
    /// Axial sample positions of the vertex rings.
    pub ring_x: Vec<f64>,
    pub ring_first: Vec<u32>,
    pub n_around: usize,
    pub profile: Profile,
}

/// Build a surface of revolution. `refinement` controls the around-count
/// (8·2^(refinement-1)); the axial step adapts to the local circumference.
pub fn revolution(
    profile: Profile,
    domain: RevDomain,
    refinement: u32,
    eps_collar: Option<f64>,
) -> Result<Revolution, GenError> {
    let n_th = (8usize << refinement.saturating_sub(1)).clamp(8, 96);
    let is_line = matches!(domain, RevDomain::Line);
    // Rough area estimate to size the collar threshold.
    let (x0, x1, tail0, tail1, cap_left) = match domain {
        RevDomain::Interval { x0, x1, tail0, tail1 } => (x0, x1, tail0, tail1, false),
        RevDomain::Line => {
            let probe = revolution_area_quadrature(&profile, -8.0, 8.0, 512)
                + tail_area(&profile, 8.0, 1.0)?
                + tail_area(&profile, -8.0, -1.0)?;
            let eps = eps_collar.unwrap_or(0.05 * probe.sqrt());
            let xr = truncation_x(&profile, 1.0, eps)?;
            let xl = truncation_x(&profile, -1.0, eps)?;
            let t_r = tail_area(&profile, xr, 1.0)?;
            let t_l = tail_area(&profile, xl, -1.0)?;
            (xl, xr, t_l, t_r, false)
        }
        RevDomain::HalfLine { x0, cap } => {
            let probe = revolution_area_quadrature(&profile, x0, x0 + 12.0, 512)
                + tail_area(&profile, x0 + 12.0, 1.0)?;
            let eps = eps_collar.unwrap_or(0.05 * probe.sqrt());
            let xr = truncation_x(&profile, 1.0, eps)?;
            let t_r = tail_area(&profile, xr, 1.0)?;
            (x0, xr, 0.0, t_r, cap)
        }
    };
    if x1 <= x0 {
        return Err(GenError::NonPositiveProfile(x0));
    }

    // Axial sampling: arclength step tied to the local ring edge. Line
    // domains sample outward from x = 0 so the fattest parallel (r'=0 there
    // for symmetric profiles) is an exact vertex ring.
    let span = x1 - x0;
    let ds_min = span / 4000.0;
    let ds_max = span / 60.0;
    let step_from = |x: f64| -> Result<f64, GenError> {
        let r = profile.r(x);
        if !(r > 0.0) {
            return Err(GenError::NonPositiveProfile(x));
        }
        let ring_edge = TAU * r / n_th as f64;
        let ds = (1.3 * ring_edge).clamp(ds_min, ds_max);
        Ok(ds / profile.ds(x))
    };
    let walk = |from: f64, to: f64| -> Result<Vec<f64>, GenError> {
        // Strictly between `from` and `to` (direction given by their order).
        let dir = if to >= from { 1.0 } else { -1.0 };
        let mut out = Vec::new();
        let mut x = from;
        loop {
            let dx = dir * step_from(x)?;
            x += dx;
            if (to - x) * dir <= 0.25 * dx.abs() {
                break;
            }
            out.push(x);
        }
        Ok(out)
    };
    let mut ring_x: Vec<f64> = Vec::new();
    if is_line {
        let center = 0.0;
        let neg = walk(center, x0)?;
        ring_x.push(x0);
        ring_x.extend(neg.into_iter().rev());
        ring_x.push(center);
        ring_x.extend(walk(center, x1)?);
        ring_x.push(x1);
    } else {
        ring_x.push(x0);
        ring_x.extend(walk(x0, x1)?);
        ring_x.push(x1);
    }

    let n_rings = ring_x.len();
    let mut coords: Vec<[f64; 3]> = Vec::with_capacity(n_rings * n_th + 2);
    let mut ring_first = Vec::with_capacity(n_rings);
    for (j, &xj) in ring_x.iter().enumerate() {
        ring_first.push(coords.len() as u32);
        let r = profile.r(xj);
        let off = if j % 2 == 0 { 0.0 } else { 0.5 };
        for i in 0..n_th {
            let phi = TAU * (i as f64 + off) / n_th as f64;
            coords.push([xj, r * phi.cos(), r * phi.sin()]);
        }
    }
    let mut tris: Vec<[u32; 3]> = Vec::new();
    let vat = |j: usize, i: usize| ring_first[j] + (i % n_th) as u32;
    for j in 0..n_rings - 1 {
        for i in 0..n_th {
            // Antiprism band between offset rings.
            let a = vat(j, i);
            let b = vat(j, i + 1);
            let c = vat(j + 1, i);
            let d = vat(j + 1, i + 1);
            if j % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([b, d, c]);
            } else {
                tris.push([a, d, c]);
                tris.push([a, b, d]);
            }
        }
    }
    let mut ends: Vec<EndSpec> = Vec::new();
    if cap_left {
        let pole = coords.len() as u32;
        coords.push([x0 - profile.r(x0) * 0.5, 0.0, 0.0]);
        for i in 0..n_th {
            tris.push([pole, vat(0, i), vat(0, i + 1)]);
        }
    } else {
        ends.push(EndSpec::tail(tail0));
    }
    ends.push(EndSpec::tail(tail1));
    // Boundary loop discovery order: the x0 ring uses smaller vertex ids, so
    // it is found first; EndSpec order matches when the left end is open.
    let mesh = build_mesh(MeshInput::Coords(coords), tris, ends)?;
    Ok(Revolution {
        mesh,
        ring_x,
        ring_first,
        n_around: n_th,
        profile,
    })
}

impl Revolution {
    /// The parallel circle through ring `j` as a closed curve.
    pub fn ring_curve(&self, j: usize) -> Curve {
        let n = self.n_around;
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            pts.push(MeshPoint::vertex(&self.mesh, self.ring_first[j] + i as u32));
        }
        let mut c = assemble_vertex_loop(&self.mesh, &pts);
        c.dedup(&self.mesh);
        c
    }

    /// Index of the ring nearest to abscissa x.
    pub fn ring_near(&self, x: f64) -> usize {
        let mut best = 0;
        for (j, &xj) in self.ring_x.iter().enumerate() {
            if (xj - x).abs() < (self.ring_x[best] - x).abs() {
                best = j;
            }
        }
        best
    }
}

/// Join vertex points into a closed curve, inserting each vertex in faces
/// shared with its neighbors (vertex loops run along mesh edges).
pub fn assemble_vertex_loop(mesh: &SurfaceMesh, pts: &[MeshPoint]) -> Curve {
    let mut out: Vec<MeshPoint> = Vec::with_capacity(pts.len() * 2);
    let n = pts.len();
    for k in 0..n {
        let cur = pts[k];
        let nxt = pts[(k + 1) % n];
        // Find a face containing both endpoints.
        let vc = mesh.tri(cur.face)[cur.at_corner().unwrap() as usize];
        let vn = mesh.tri(nxt.face)[nxt.at_corner().unwrap() as usize];
        let mut host = None;
        'outer: for &(t, _) in mesh.fan(vc) {
            for c in 0..3 {
                if mesh.tri(t)[c] == vn {
                    host = Some(t);
                    break 'outer;
                }
            }
        }
        let t = host.expect("consecutive loop vertices share a triangle");
        let mut b0 = [0.0; 3];
        b0[mesh.corner_of(t, vc).unwrap() as usize] = 1.0;
        let mut b1 = [0.0; 3];
        b1[mesh.corner_of(t, vn).unwrap() as usize] = 1.0;
        out.push(MeshPoint { face: t, bary: b0 });
        out.push(MeshPoint { face: t, bary: b1 });
    }
    Curve::new(mesh, out, true).expect("vertex loop is valid")
}

// ---------------------------------------------------------------------------
// Calabi-Croke pillow (two equilateral triangles of height h)
// ---------------------------------------------------------------------------

pub struct CalabiCroke {
    pub mesh: SurfaceMesh,
    pub h: f64,
    pub refinement: u32,
    /// Per cusp: ids of the 4-vertex funnel rings (outermost first) and the
    /// ring perimeters.
    pub funnels: Vec<FunnelInfo>,
    /// Vertex ids of the three pillow corners that remain cone points
    /// (cusped corners are removed).
    pub corner_verts: Vec<u32>,
}

pub struct FunnelInfo {
    pub rings: Vec<[u32; 4]>,
    pub perimeters: Vec<f64>,
    /// Axial depth of each ring measured from the attachment.
    pub depths: Vec<f64>,
}

/// Pillow 2-sphere with optional cusps (0..=3) replacing corner vertices by
/// thin funnels of small declared area.
///
/// The two faces share only their boundary vertices; the three corner-cutting
/// edges would otherwise coincide as vertex pairs between the faces, so the
/// back copy of each is split at its midpoint (a metric-preserving
/// refinement of the same flat surface).
pub fn calabi_croke(h: f64, cusps: usize, refinement: u32) -> Result<CalabiCroke, GenError> {
    if cusps > 3 {
        return Err(GenError::TooManyCusps(cusps));
    }
    if refinement < 2 || (cusps > 0 && refinement < 3) {
        return Err(GenError::TooCoarse);
    }
    let n = 1usize << refinement;
    let a = 2.0 * h / 3.0f64.sqrt();
    let ell = a / n as f64;
    let pillow_area = 2.0 * h * h / 3.0f64.sqrt();
    let area_budget = 0.019 * pillow_area; // per cusp, tail included

    // Integer-barycentric grid (i + j + k = n); boundary shared between the
    // two faces, interiors separate.
    let mut ids: BTreeMap<(bool, usize, usize), u32> = BTreeMap::new();
    let mut n_verts: u32 = 0;
    let mut tris: Vec<[u32; 3]> = Vec::new();
    let mut lengths: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    {
        let mut id_of = |back: bool, i: usize, j: usize| -> u32 {
            let boundary = i == 0 || j == 0 || i + j == n;
            let key = (back && !boundary, i, j);
            *ids.entry(key).or_insert_with(|| {
                n_verts += 1;
                n_verts - 1
            })
        };
        let mut put = |u: u32, v: u32, l: f64| {
            let key = if u < v { (u, v) } else { (v, u) };
            lengths.insert(key, l);
        };
        for back in [false, true] {
            for i in 0..n {
                for j in 0..(n - i) {
                    let v00 = id_of(back, i, j);
                    let v10 = id_of(back, i + 1, j);
                    let v01 = id_of(back, i, j + 1);
                    if back {
                        tris.push([v00, v01, v10]);
                    } else {
                        tris.push([v00, v10, v01]);
                    }
                    put(v00, v10, ell);
                    put(v00, v01, ell);
                    put(v10, v01, ell);
                    if i + j < n - 1 {
                        let v11 = id_of(back, i + 1, j + 1);
                        if back {
                            tris.push([v10, v01, v11]);
                        } else {
                            tris.push([v10, v11, v01]);
                        }
                        put(v10, v11, ell);
                        put(v01, v11, ell);
                    }
                }
            }
        }
    }
    let grid_id = |back: bool, i: usize, j: usize| -> u32 {
        let boundary = i == 0 || j == 0 || i + j == n;
        ids[&(back && !boundary, i, j)]
    };
    let mut put = {
        let lengths = &mut lengths;
        move |u: u32, v: u32, l: f64| {
            let key = if u < v { (u, v) } else { (v, u) };
            lengths.insert(key, l);
        }
    };

    // Big-triangle corners and the endpoints of each corner's cut edge.
    let corner_ij = [(n, 0), (0, n), (0, 0)];
    let cut_ij: [((usize, usize), (usize, usize)); 3] = [
        ((n - 1, 0), (n - 1, 1)),
        ((0, n - 1), (1, n - 1)),
        ((1, 0), (0, 1)),
    ];
    let corners: Vec<u32> = corner_ij.iter().map(|&(i, j)| grid_id(false, i, j)).collect();

    let mut removed = vec![false; tris.len() + 64];
    let mut funnels = Vec::new();
    let mut end_specs: Vec<EndSpec> = Vec::new();

    // Splits triangle `pos` along edge (ea, eb) with new midpoint `mid`.
    let split_at = |tris: &mut Vec<[u32; 3]>, pos: usize, ea: u32, eb: u32, mid: u32| {
        let old = tris[pos];
        let mut t1 = old;
        let mut t2 = old;
        for v in t1.iter_mut() {
            if *v == eb {
                *v = mid;
            }
        }
        for v in t2.iter_mut() {
            if *v == ea {
                *v = mid;
            }
        }
        tris[pos] = t1;
        tris.push(t2);
    };

    for ci in 0..3 {
        let corner = corners[ci];
        let (aij, bij) = cut_ij[ci];
        let side_a = grid_id(false, aij.0, aij.1);
        let side_b = grid_id(false, bij.0, bij.1);
        // Front entries precede back entries in `tris`.
        let corner_pos: Vec<usize> = (0..tris.len())
            .filter(|&p| !removed[p] && tris[p].contains(&corner))
            .collect();
        let cut_pos: Vec<usize> = (0..tris.len())
            .filter(|&p| {
                !removed[p]
                    && !tris[p].contains(&corner)
                    && tris[p].contains(&side_a)
                    && tris[p].contains(&side_b)
            })
            .collect();
        debug_assert_eq!(corner_pos.len(), 2);
        debug_assert_eq!(cut_pos.len(), 2);
        let median = ell * 3.0f64.sqrt() / 2.0;

        if ci >= cusps {
            // Keep the corner; disambiguate the coincident cut edges by
            // splitting the back copy (corner triangle + its cut neighbor).
            let mid = n_verts;
            n_verts += 1;
            for &p in [corner_pos[1], cut_pos[1]].iter() {
                let other = *tris[p]
                    .iter()
                    .find(|&&v| v != side_a && v != side_b)
                    .unwrap();
                split_at(&mut tris, p, side_a, side_b, mid);
                put(mid, other, median);
                if removed.len() < tris.len() {
                    removed.push(false);
                }
            }
            put(side_a, mid, 0.5 * ell);
            put(side_b, mid, 0.5 * ell);
            while removed.len() < tris.len() {
                removed.push(false);
            }
            continue;
        }

        // Cusp surgery: drop both corner triangles, split both cut copies.
        removed[corner_pos[0]] = true;
        removed[corner_pos[1]] = true;
        let mut ring0 = [side_a, 0, side_b, 0];
        for (slot, &p) in [(1usize, &cut_pos[0]), (3usize, &cut_pos[1])] {
            let mid = n_verts;
            n_verts += 1;
            let other = *tris[p]
                .iter()
                .find(|&&v| v != side_a && v != side_b)
                .unwrap();
            split_at(&mut tris, p, side_a, side_b, mid);
            put(mid, other, median);
            ring0[slot] = mid;
            while removed.len() < tris.len() {
                removed.push(false);
            }
        }
        put(side_a, ring0[1], 0.5 * ell);
        put(side_b, ring0[1], 0.5 * ell);
        put(side_a, ring0[3], 0.5 * ell);
        put(side_b, ring0[3], 0.5 * ell);

        // The funnel bands traverse ring0 edges backwards, so the surface
        // side must traverse them forwards; flip the ring cycle if not.
        let forward = {
            let (u, v) = (ring0[0], ring0[1]);
            let mut fwd = false;
            for (p, t) in tris.iter().enumerate() {
                if removed[p] {
                    continue;
                }
                for k in 0..3 {
                    if t[k] == u && t[(k + 1) % 3] == v {
                        fwd = true;
                    }
                }
            }
            fwd
        };
        if !forward {
            ring0.swap(1, 3);
        }

        // Funnel rings: square cross-sections, antiprism bands; a virtual
        // embedding supplies the intrinsic lengths.
        let c0 = 2.0 * ell;
        let sqrt_a2 = ((pillow_area + cusps as f64 * area_budget) / 2.0).sqrt();
        let depth_needed = 6.5 * sqrt_a2 + 0.6 * pillow_area.sqrt() - 0.9 * h;
        let (ring_defs, tail, _funnel_area) =
            funnel_schedule(c0, depth_needed.max(2.0 * pillow_area.sqrt()), area_budget);
        let mut rings: Vec<[u32; 4]> = vec![ring0];
        let mut perims = vec![c0];
        let mut depths = vec![0.0];
        let mut prev_ring = ring0;
        let mut prev_c = c0;
        let mut prev_z = 0.0;
        for (band, &(c_i, z_i)) in ring_defs.iter().enumerate() {
            let mut ring = [0u32; 4];
            for r in ring.iter_mut() {
                *r = n_verts;
                n_verts += 1;
            }
            let rot_prev = 0.125 * TAU * ((band % 2) as f64);
            let rot_cur = 0.125 * TAU * (((band + 1) % 2) as f64);
            let vpos = |c: f64, z: f64, idx: usize, rot: f64| -> [f64; 3] {
                let rr = (c / 4.0) / 2.0f64.sqrt();
                let ang = rot + 0.25 * TAU * idx as f64;
                [rr * ang.cos(), rr * ang.sin(), z]
            };
            let d3 = |p: [f64; 3], q: [f64; 3]| -> f64 {
                ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2)).sqrt()
            };
            for idx in 0..4 {
                let p = vpos(c_i, z_i, idx, rot_cur);
                let q = vpos(c_i, z_i, (idx + 1) % 4, rot_cur);
                put(ring[idx], ring[(idx + 1) % 4], d3(p, q));
            }
            for idx in 0..4 {
                let p_prev = vpos(prev_c, prev_z, idx, rot_prev);
                let p_prev_n = vpos(prev_c, prev_z, (idx + 1) % 4, rot_prev);
                let p_cur = vpos(c_i, z_i, idx, rot_cur);
                put(prev_ring[idx], ring[idx], d3(p_prev, p_cur));
                put(prev_ring[(idx + 1) % 4], ring[idx], d3(p_prev_n, p_cur));
                tris.push([prev_ring[idx], ring[idx], prev_ring[(idx + 1) % 4]]);
                tris.push([prev_ring[(idx + 1) % 4], ring[idx], ring[(idx + 1) % 4]]);
            }
            while removed.len() < tris.len() {
                removed.push(false);
            }
            rings.push(ring);
            perims.push(c_i);
            depths.push(z_i);
            prev_ring = ring;
            prev_c = c_i;
            prev_z = z_i;
        }
        end_specs.push(EndSpec {
            tail_area: tail,
            collar_rings: Some(6),
            collar_tris: Vec::new(),
        });
        funnels.push(FunnelInfo {
            rings,
            perimeters: perims,
            depths,
        });
    }

    let final_tris: Vec<[u32; 3]> = tris
        .into_iter()
        .enumerate()
        .filter(|&(p, _)| !removed.get(p).copied().unwrap_or(false))
        .map(|(_, t)| t)
        .collect();
    let mesh = build_mesh(
        MeshInput::EdgeLengths {
            n_vertices: n_verts,
            lengths: lengths.into_iter().collect(),
        },
        final_tris,
        end_specs,
    )?;
    let corner_verts = corners
        .iter()
        .enumerate()
        .filter(|&(i, _)| i >= cusps)
        .map(|(_, &v)| v)
        .collect();
    Ok(CalabiCroke {
        mesh,
        h,
        refinement,
        funnels,
        corner_verts,
    })
}

/// Funnel cross-section schedule: fast ramp from c0, then slow decay, within
/// an area budget. Returns ((perimeter, depth) list, declared tail area,
/// meshed funnel area estimate).
fn funnel_schedule(c0: f64, depth: f64, budget: f64) -> (Vec<(f64, f64)>, f64, f64) {
    let mut out = Vec::new();
    let mut c = c0;
    let mut z = 0.0;
    let mut area = 0.0;
    // Ramp: multiply by 0.55 per band until the slow target.
    let ramp_area_cap = 0.45 * budget;
    let mut ramp_area = 0.0;
    loop {
        let dz = 0.45 * c;
        let c_next = 0.55 * c;
        let inc = 0.5 * (c + c_next) * dz;
        if ramp_area + inc > ramp_area_cap && !out.is_empty() {
            break;
        }
        z += dz;
        ramp_area += inc;
        area += inc;
        c = c_next;
        out.push((c, z));
        if out.len() > 24 {
            break;
        }
    }
    // Slow decay to cover the remaining depth within the remaining budget.
    let remaining_depth = (depth - z).max(0.5 * depth);
    let avail = (budget - area).max(0.1 * budget);
    // Average perimeter over the slow stretch ≈ avail / remaining_depth.
    let c_slow = (avail / remaining_depth * 0.8).min(c);
    // Step down to c_slow quickly if the ramp stopped early.
    while c > 1.35 * c_slow {
        let dz = 0.45 * c;
        let c_next = (0.55 * c).max(c_slow);
        area += 0.5 * (c + c_next) * dz;
        z += dz;
        c = c_next;
        out.push((c, z));
        if out.len() > 64 {
            break;
        }
    }
    let z_end = z + remaining_depth;
    let decay = 0.4 / remaining_depth; // gentle monotone narrowing
    let n_bands = ((remaining_depth / (z_end / 260.0)).ceil() as usize).clamp(40, 320);
    let dz = remaining_depth / n_bands as f64;
    for _ in 0..n_bands {
        let c_next = c * (-decay * dz).exp();
        area += 0.5 * (c + c_next) * dz;
        z += dz;
        c = c_next;
        out.push((c, z));
    }
    // Declared analytic tail beyond the cut: a virtual cusp of the same
    // cross-section decaying at unit rate.
    let tail = c;
    (out, tail, area)
}

// ---------------------------------------------------------------------------
// CLI-facing spec
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceKind {
    CalabiCroke { h: f64, cusps: usize },
    Revolution { profile: Profile, domain: RevDomain },
    Sphere { radius: f64 },
    FlatTorus { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub refinement: u32,
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<SurfaceMesh, GenError> {
        match &self.kind {
            SurfaceKind::CalabiCroke { h, cusps } => {
                Ok(calabi_croke(*h, *cusps, self.refinement)?.mesh)
            }
            SurfaceKind::Revolution { profile, domain } => Ok(revolution(
                profile.clone(),
                domain.clone(),
                self.refinement,
                None,
            )?
            .mesh),
            SurfaceKind::Sphere { radius } => sphere_uv(*radius, self.refinement),
            SurfaceKind::FlatTorus { a, b } => flat_torus(*a, *b, self.refinement),
        }
    }

    pub fn describe(&self) -> String {
        use alloc::format;
        match &self.kind {
            SurfaceKind::CalabiCroke { h, cusps } => format!("calabi_croke h={h} cusps={cusps}"),
            SurfaceKind::Revolution { profile, .. } => format!("revolution {profile:?}"),
            SurfaceKind::Sphere { radius } => format!("sphere r={radius}"),
            SurfaceKind::FlatTorus { a, b } => format!("flat_torus {a}x{b}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_torus_area() {
        let m = flat_torus(1.0, 2.0, 3).unwrap();
        assert_eq!(m.n_ends(), 0);
        assert!((m.total_area() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_area_converges() {
        let m = sphere_uv(1.0, 3).unwrap();
        let err = (m.total_area() - 4.0 * PI).abs() / (4.0 * PI);
        assert!(err < 0.01, "err = {err}");
        let m5 = sphere_uv(1.0, 5).unwrap();
        let err5 = (m5.total_area() - 4.0 * PI).abs() / (4.0 * PI);
        assert!(err5 < 0.001, "err5 = {err5}");
    }

    #[test]
    fn icosphere_area() {
        let m = icosphere(1.0, 4).unwrap();
        let err = (m.total_area() - 4.0 * PI).abs() / (4.0 * PI);
        assert!(err < 0.002, "err = {err}");
    }

    #[test]
    fn pillow_closed_area() {
        let cc = calabi_croke(1.0, 0, 4).unwrap();
        let expect = 2.0 / 3.0f64.sqrt();
        assert_eq!(cc.mesh.n_ends(), 0);
        assert!((cc.mesh.total_area() - expect).abs() < 1e-9);
        // 2·n² grid triangles plus two per corner-diagonal split.
        assert_eq!(cc.mesh.n_tris(), 2 * 16 * 16 + 6);
    }

    #[test]
    fn witch_revolution_two_ends() {
        let rev = revolution(
            Profile::Witch { scale: 1.0 },
            RevDomain::Line,
            3,
            None,
        )
        .unwrap();
        assert_eq!(rev.mesh.n_ends(), 2);
        // Quadrature area (including tails) within 1% of the mesh total.
        let quad = revolution_area_quadrature(&Profile::Witch { scale: 1.0 }, -40.0, 40.0, 20000)
            + 2.0 * (TAU * (PI / 2.0 - 40.0f64.atan())); // asymptotic tails ≈ 2π∫1/x²
        let rel = (rev.mesh.total_area() - quad).abs() / quad;
        assert!(rel < 0.01, "mesh {} vs quad {quad}", rev.mesh.total_area());
        // Fattest parallel at x = 0 has length 2π up to polygon deficit.
        let j0 = rev.ring_near(0.0);
        let ring = rev.ring_curve(j0);
        assert!((ring.length - TAU).abs() / TAU < 0.02, "ring = {}", ring.length);
    }

    #[test]
    fn cylinder_strip() {
        let rev = revolution(
            Profile::Const { r: 0.5 / TAU },
            RevDomain::Interval {
                x0: 0.0,
                x1: 10.0,
                tail0: 0.01,
                tail1: 0.01,
            },
            2,
            None,
        )
        .unwrap();
        assert_eq!(rev.mesh.n_ends(), 2);
        let expect = 0.5 * 10.0 + 0.02;
        let rel = (rev.mesh.total_area() - expect).abs() / expect;
        assert!(rel < 0.01, "area = {}", rev.mesh.total_area());
    }
}
