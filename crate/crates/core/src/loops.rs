//! Short essential loops: the co-area sweep that yields an essential curve
//! of length at most √(2A) through a prescribed point, shortest essential
//! geodesic loops at a base point, convexity certificates, and the dichotomy
//! scan along a ray or line.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
#[allow(unused_imports)] // used in no_std builds only
use num_traits::Float;

use crate::angle::wedges_at;
use crate::birkhoff::{
    is_certified_geodesic, shorten_closed, shorten_fixed_point, ShortenOpts, Termination,
};
use crate::curve::{Curve, MeshPoint};
use crate::engine::Engine;
use crate::field::DistanceField;
use crate::intersect::{curve_intersections, is_simple};
use crate::level::LevelError;
use crate::path::{shoot_frame, trace_geodesic};
use crate::region::{separation, side_is_disk, side_of_point, Separation};
use crate::rng::Rng;

#[derive(Debug)]
pub enum LoopError {
    /// Distance preconditions of the co-area argument fail.
    HypothesisViolated(String),
    /// The level sweep found no admissible slice; the mesh is too coarse.
    NoAdmissibleT { finest_dt: f64 },
    /// Every seed shortened to a point.
    AllContracted,
    /// The loop does not separate; it shortens freely to a closed geodesic.
    NonSeparating(Curve),
    Budget,
}

impl fmt::Display for LoopError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoopError::HypothesisViolated(s) => write!(f, "hypothesis violated: {s}"),
            LoopError::NoAdmissibleT { finest_dt } => {
                write!(f, "no admissible level found (finest grid {finest_dt:.3e})")
            }
            LoopError::AllContracted => write!(f, "all seeds contracted to points"),
            LoopError::NonSeparating(_) => write!(f, "loop is non-separating"),
            LoopError::Budget => write!(f, "iteration budget exhausted"),
        }
    }
}

/// Whether `curve` is essential in the surface punctured at `marked`: it is
/// non-separating, or no side of the cut is a disk free of marked points.
pub fn is_essential(engine: &Engine, curve: &Curve, marked: &[MeshPoint]) -> bool {
    match separation(engine.mesh, curve) {
        Separation::NonSeparating => true,
        Separation::Separating { side, crossed } => {
            let mut any_class = [false, false];
            for t in 0..engine.mesh.n_tris() {
                if !crossed[t] {
                    any_class[usize::from(side[t])] = true;
                }
            }
            if !(any_class[0] && any_class[1]) {
                // Degenerate split: nothing on one side at triangle scale.
                return false;
            }
            for want in [false, true] {
                if side_is_disk(engine.mesh, &side, &crossed, want) {
                    let marked_inside = marked.iter().any(|m| {
                        side_of_point(engine.mesh, &side, &crossed, m) == want
                    });
                    if !marked_inside {
                        return false;
                    }
                }
            }
            true
        }
    }
}

pub struct EssentialCurve {
    pub curve: Curve,
    /// Level slice used and its component.
    pub t_used: f64,
    pub sigma_len: f64,
    pub sigma: Curve,
}

/// The co-area construction: for `w = tau(t0)` with both tau endpoints
/// farther than √(A/2) from it, sweep level values of the distance from the
/// tau start until a slice component through tau closes a curve of length at
/// most √(2A) (plus mesh slack) that is essential in the punctured surface.
pub fn essential_curve_through(
    engine: &Engine,
    field_x: &DistanceField,
    tau: &Curve,
    t0: f64,
) -> Result<EssentialCurve, LoopError> {
    let mesh = engine.mesh;
    let area = mesh.total_area();
    let half = (area / 2.0).sqrt();
    let cum = tau.cumlen(mesh);
    let tau_len = *cum.last().unwrap();
    if t0 <= half {
        return Err(LoopError::HypothesisViolated(alloc::format!(
            "d(x,w) = {t0:.4} <= sqrt(A/2) = {half:.4}"
        )));
    }
    if tau_len - t0 <= half {
        return Err(LoopError::HypothesisViolated(alloc::format!(
            "d(y,w) = {:.4} <= sqrt(A/2) = {half:.4}",
            tau_len - t0
        )));
    }
    let x = tau.points[0];
    let y = *tau.points.last().unwrap();
    let delta = engine.mesh.delta_mesh();
    let nudge = engine.params.level_nudge_factor * engine.sqrt_area();

    let mut dt = (0.04 * engine.sqrt_area()).max(4.0 * nudge);
    for _refine in 0..5 {
        // Expand outward from t0.
        let steps = (half / dt) as i64;
        let mut order: Vec<f64> = vec![t0];
        for k in 1..=steps {
            order.push(t0 + k as f64 * dt);
            order.push(t0 - k as f64 * dt);
        }
        for t in order {
            if (t - t0).abs() >= half {
                continue;
            }
            let budget = (2.0 * area).sqrt() - 2.0 * (t - t0).abs() + delta;
            if budget <= 0.0 {
                continue;
            }
            let mut t_try = t;
            let mut level = None;
            for _ in 0..4 {
                match engine.level_set(field_x, t_try) {
                    Ok(l) => {
                        level = Some(l);
                        break;
                    }
                    Err(LevelError::Singular) => t_try += nudge,
                    Err(LevelError::OutOfRange) => break,
                }
            }
            let Some(level) = level else { continue };
            // Component crossing tau near parameter t.
            let mut best: Option<(usize, f64, f64, MeshPoint)> = None;
            for (ci, comp) in level.components.iter().enumerate() {
                for (s_sigma, s_tau, pt) in
                    curve_intersections(mesh, comp, tau, 1e-9 * (1.0 + area))
                {
                    let gap = (s_tau - t).abs();
                    if gap < 2.5 * engine.mesh.max_edge_len() + dt
                        && best.as_ref().map_or(true, |&(_, _, g, _)| gap < g)
                    {
                        best = Some((ci, s_sigma, gap, pt));
                    }
                }
            }
            let Some((ci, s_sigma, _, crossing)) = best else { continue };
            let sigma = &level.components[ci];
            if sigma.length > budget {
                continue;
            }
            // Splice gamma = tau[t0..s] + sigma (rotated) + reversed leg.
            let s_tau_here = {
                let mut found = t;
                for (ss, st, _) in curve_intersections(mesh, sigma, tau, 1e-9) {
                    if (ss - s_sigma).abs() < 1e-6 * (1.0 + sigma.length) {
                        found = st;
                        break;
                    }
                }
                found
            };
            let (lo, hi) = if s_tau_here >= t0 {
                (t0, s_tau_here)
            } else {
                (s_tau_here, t0)
            };
            let leg = tau.sub_curve(mesh, lo, hi);
            let leg = if s_tau_here >= t0 { leg } else { leg.reversed() };
            let sigma_rot = rotate_closed_at(mesh, sigma, s_sigma, &crossing);
            let back = leg.reversed();
            let mut pts = Vec::new();
            pts.extend_from_slice(&leg.points);
            pts.extend_from_slice(&sigma_rot.points);
            pts.push(crossing);
            pts.extend_from_slice(&back.points);
            let Ok(mut gamma) = Curve::new(mesh, pts, true) else { continue };
            gamma.dedup(mesh);
            // Essential in the surface punctured at the tau endpoints; test
            // the slice component (gamma is the component plus a doubled
            // whisker).
            if !is_essential(engine, sigma, &[x, y]) {
                continue;
            }
            return Ok(EssentialCurve {
                curve: gamma,
                t_used: t_try,
                sigma_len: sigma.length,
                sigma: sigma.clone(),
            });
        }
        dt *= 0.5;
    }
    Err(LoopError::NoAdmissibleT { finest_dt: dt })
}

/// Rotate a closed curve so it starts (and ends) at arclength `s`, using the
/// provided representation for the new basepoint.
fn rotate_closed_at(
    mesh: &crate::mesh::SurfaceMesh,
    curve: &Curve,
    s: f64,
    base_rep: &MeshPoint,
) -> Curve {
    let cum = curve.cumlen(mesh);
    let total = *cum.last().unwrap();
    let s = crate::curve::fmod_pos(s, total);
    let n = curve.points.len();
    let mut idx = match cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
        Ok(k) => k,
        Err(k) => k.saturating_sub(1),
    };
    if idx >= n {
        idx = n - 1;
    }
    let mut pts = Vec::with_capacity(n + 2);
    pts.push(*base_rep);
    for k in 1..=n {
        pts.push(curve.points[(idx + k) % n]);
    }
    pts.push(*base_rep);
    let mut c = Curve::new(mesh, pts, true).unwrap_or_else(|_| curve.clone());
    c.dedup(mesh);
    c
}

#[derive(Clone, Debug)]
pub struct GeodesicLoop {
    pub curve: Curve,
    pub base: MeshPoint,
    /// Wedge angles at the base: (CCW from incoming to outgoing, remainder).
    pub vertex_angles: (f64, f64),
    pub simple: bool,
}

impl GeodesicLoop {
    pub fn length(&self) -> f64 {
        self.curve.length
    }
}

/// Shortest essential geodesic loop at `base`: runs the fixed-point
/// shortening from the seed and perturbed variants, keeps the shortest
/// outcome that stays essential in the punctured surface. When `tau` is
/// given, results must meet it only at the base (the loops of the co-area
/// family have this property; deep wraps crossing tau are rejected).
pub fn shortest_essential_loop(
    engine: &Engine,
    base: &MeshPoint,
    marked: &[MeshPoint],
    seed: &Curve,
    tau: Option<&Curve>,
    rng: &mut Rng,
) -> Result<GeodesicLoop, LoopError> {
    let mesh = engine.mesh;
    let opts = ShortenOpts {
        max_iters: 2_000,
        ..ShortenOpts::for_engine(engine)
    };
    let mut seeds = vec![seed.clone()];
    for _ in 0..2 {
        if let Some(p) = perturbed_variant(engine, seed, 0.05 * engine.sqrt_area(), rng) {
            seeds.push(p);
        }
    }
    let crossing_tol = 4.0 * mesh.median_edge_len() + 0.015 * engine.sqrt_area();
    let meets_tau_only_at_base = |g: &Curve| -> bool {
        let Some(tau) = tau else { return true };
        for (_, _, pt) in curve_intersections(mesh, g, tau, 1e-9) {
            let d = crate::curve::segment_length(mesh, &pt, base);
            if d.map_or(true, |d| d > crossing_tol) {
                return false;
            }
        }
        true
    };
    let mut best: Option<Curve> = None;
    let mut budget = 0;
    for s in seeds {
        let trace = shorten_fixed_point(engine, s, *base, opts.clone());
        match &trace.termination {
            Termination::Point(_) | Termination::Escape(_) => {}
            Termination::Budget => budget += 1,
            Termination::Geodesic(g) => {
                if !is_essential(engine, g, marked) {
                    continue;
                }
                if !meets_tau_only_at_base(g) {
                    continue;
                }
                if best.as_ref().map_or(true, |b| g.length < b.length) {
                    best = Some(g.clone());
                }
            }
        }
    }
    let Some(curve) = best else {
        if budget > 0 {
            return Err(LoopError::Budget);
        }
        return Err(LoopError::AllContracted);
    };
    let vertex_angles = wedges_at(engine, &curve, 0).unwrap_or((PI, PI));
    let simple = is_simple(mesh, &curve, Some(base));
    Ok(GeodesicLoop {
        curve,
        base: *base,
        vertex_angles,
        simple,
    })
}

/// Random smooth-ish variant: displace a few anchors and reconnect with
/// shortest paths. Returns None when reconnection fails.
pub fn perturbed_variant(
    engine: &Engine,
    curve: &Curve,
    amplitude: f64,
    rng: &mut Rng,
) -> Option<Curve> {
    let mesh = engine.mesh;
    let cum = curve.cumlen(mesh);
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return None;
    }
    let n = 6.max((total / engine.rho()).ceil() as usize).min(24);
    let mut anchors = Vec::with_capacity(n);
    for k in 0..n {
        let s = (k as f64 + rng.uniform() * 0.3) / n as f64 * total;
        let p = curve.point_at(mesh, &cum, s);
        let theta = rng.range(0.0, core::f64::consts::TAU);
        let amp = amplitude * rng.uniform();
        let (host, dir) = shoot_frame(mesh, &p, theta);
        let moved = trace_geodesic(engine, &host, dir, amp);
        anchors.push(moved.points.last().copied().unwrap_or(p));
    }
    let mut pts = Vec::new();
    for k in 0..n {
        let a = anchors[k];
        let b = anchors[(k + 1) % n];
        let leg = engine.shortest_path(&a, &b).ok()?;
        pts.extend_from_slice(&leg.points);
    }
    let mut c = Curve::new(mesh, pts, true).ok()?;
    c.dedup(mesh);
    Some(c)
}

/// Reference for the "toward infinity" side of a separating loop.
#[derive(Clone, Debug)]
pub enum RefSide {
    End(usize),
    Point(MeshPoint),
}

#[derive(Clone, Debug)]
pub struct ConvexityCert {
    /// True when the wedge not exceeding π faces the reference side.
    pub toward_ref: bool,
    /// The convex-side wedge angle.
    pub wedge: f64,
    /// π minus the wedge.
    pub margin: f64,
    /// Both wedges within tolerance of π: a closed-geodesic candidate.
    pub candidate_geodesic: bool,
}

/// Classify which side a geodesic loop is convex to, by the inward wedge at
/// its base. `ref_hint` is a point near the base known to lie on the
/// reference side (for scan loops: a tau point just beyond the base, since
/// the loop meets tau only at the base); without it, a bisector probe
/// against the separation coloring decides. Errors with the loop when it
/// fails to separate (the caller then shortens it freely).
pub fn classify_convexity(
    engine: &Engine,
    lp: &GeodesicLoop,
    toward: &RefSide,
    ref_hint: Option<&MeshPoint>,
) -> Result<ConvexityCert, LoopError> {
    let mesh = engine.mesh;
    let (w1, w2) = lp.vertex_angles;
    let base = lp.base;
    let before = neighbor_at(engine, &lp.curve, 0, -1);
    let after = neighbor_at(engine, &lp.curve, 0, 1);
    let (Some(bpt), Some(apt)) = (before, after) else {
        return Err(LoopError::AllContracted);
    };
    let (Some((phi_in, total)), Some((phi_out, _))) = (
        crate::chart::direction_angle(mesh, &base, &bpt),
        crate::chart::direction_angle(mesh, &base, &apt),
    ) else {
        return Err(LoopError::AllContracted);
    };
    let w_ccw = crate::curve::fmod_pos(phi_out - phi_in, total);

    // Does wedge 1 (CCW from incoming to outgoing) face the reference side?
    let mut w1_faces_ref: Option<bool> = None;
    if let Some(h) = ref_hint {
        if let Some((phi_h, _)) = crate::chart::direction_angle(mesh, &base, h) {
            let rel = crate::curve::fmod_pos(phi_h - phi_in, total);
            w1_faces_ref = Some(rel < w_ccw);
        }
    }
    if w1_faces_ref.is_none() {
        // Fall back to a bisector probe against the separation coloring.
        let (side, crossed) = match separation(mesh, &lp.curve) {
            Separation::NonSeparating => {
                return Err(LoopError::NonSeparating(lp.curve.clone()));
            }
            Separation::Separating { side, crossed } => (side, crossed),
        };
        let ref_class = match toward {
            RefSide::Point(p) => side_of_point(mesh, &side, &crossed, p),
            RefSide::End(e) => {
                let mut votes = [0usize; 2];
                for &t in &mesh.ends()[*e].collar_tris {
                    if !crossed[t as usize] {
                        votes[usize::from(side[t as usize])] += 1;
                    }
                }
                votes[1] >= votes[0]
            }
        };
        let theta = phi_in + 0.5 * w_ccw;
        let (host, dir) = shoot_frame(mesh, &base, theta);
        let step = 0.35 * mesh.median_edge_len().max(1e-12);
        let probe = trace_geodesic(engine, &host, dir, step);
        let landing = probe.points.last().copied().unwrap_or(host);
        w1_faces_ref = Some(side_of_point(mesh, &side, &crossed, &landing) == ref_class);
    }
    let (w_ref, w_base) = if w1_faces_ref.unwrap_or(true) {
        (w1, w2)
    } else {
        (w2, w1)
    };
    let tol = 12.0 * engine.params.tol_angle;
    let candidate = (w_ref - PI).abs() <= tol && (w_base - PI).abs() <= tol;
    let toward_ref = w_ref <= w_base;
    let wedge = w_ref.min(w_base);
    Ok(ConvexityCert {
        toward_ref,
        wedge,
        margin: PI - wedge,
        candidate_geodesic: candidate,
    })
}

fn neighbor_at(engine: &Engine, curve: &Curve, i: usize, dir: i64) -> Option<MeshPoint> {
    let n = curve.points.len();
    let min_r = 1e-7 * (1.0 + engine.sqrt_area());
    let mut k = i as i64;
    for _ in 0..n {
        k = (k + dir).rem_euclid(n as i64);
        let q = curve.points[k as usize];
        if crate::curve::segment_length(engine.mesh, &curve.points[i], &q).unwrap_or(0.0) > min_r {
            return Some(q);
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct ScanSample {
    pub t: f64,
    pub loop_len: f64,
    pub toward_ref: bool,
    pub wedge: f64,
    pub base_face: u32,
}

pub struct PairOutcome {
    pub t0: f64,
    pub t_gap: f64,
    pub shared_base: MeshPoint,
    pub toward_base: GeodesicLoop,
    pub toward_inf: GeodesicLoop,
}

pub enum ScanOutcome {
    /// Two loops at (nearly) one base, convex to opposite sides.
    Pair(PairOutcome),
    /// Every sampled loop is convex toward the reference end.
    AllConvexToInfinity,
    /// A closed geodesic fell out of the scan (non-separating loop or a
    /// π-wedge candidate); the caller short-circuits with it.
    IncidentalGeodesic(Curve),
}

pub struct ScanResult {
    pub samples: Vec<ScanSample>,
    pub outcome: ScanOutcome,
    /// Σ L(γ_t)·Δt over the sampled grid.
    pub coarea_sum: f64,
}

#[derive(Debug)]
pub enum ScanError {
    /// A line scan found no side change, contradicting the dichotomy; the
    /// samples are returned for inspection.
    LineInconclusive(Vec<ScanSample>),
    /// Too few samples could be computed.
    TooFewSamples(Vec<String>),
}

impl fmt::Display for ScanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanError::LineInconclusive(s) => {
                write!(f, "line scan found no convexity side change over {} samples", s.len())
            }
            ScanError::TooFewSamples(errs) => {
                write!(f, "scan produced too few samples ({} errors)", errs.len())
            }
        }
    }
}

pub struct ScanOpts {
    pub is_line: bool,
    pub t_min: f64,
    pub t_max: f64,
    pub dt: f64,
    pub tol_t: f64,
    pub toward: RefSide,
}

impl ScanOpts {
    pub fn for_ray(engine: &Engine, tau_len: f64, end: usize) -> ScanOpts {
        let half = (engine.mesh.total_area() / 2.0).sqrt();
        let s = engine.sqrt_area();
        ScanOpts {
            is_line: false,
            t_min: half * 1.02,
            t_max: tau_len - half * 1.02,
            dt: engine.params.scan_dt_factor * s,
            tol_t: engine.params.scan_tol_factor * s,
            toward: RefSide::End(end),
        }
    }

    pub fn for_line(engine: &Engine, tau_len: f64, end_plus: usize) -> ScanOpts {
        let half = (engine.mesh.total_area() / 2.0).sqrt();
        let s = engine.sqrt_area();
        ScanOpts {
            is_line: true,
            t_min: half * 1.02,
            t_max: tau_len - half * 1.02,
            dt: engine.params.scan_dt_factor * s,
            tol_t: engine.params.scan_tol_factor * s,
            toward: RefSide::End(end_plus),
        }
    }
}

/// One scan lane: the loop at tau(t) plus its convexity side.
fn sample_at(
    engine: &Engine,
    field_x: &DistanceField,
    tau: &Curve,
    cum: &[f64],
    t: f64,
    marked: &[MeshPoint],
    toward: &RefSide,
    rng: &mut Rng,
) -> Result<(GeodesicLoop, ConvexityCert), LoopError> {
    let mesh = engine.mesh;
    let base = tau.point_at(mesh, cum, t);
    let essential = essential_curve_through(engine, field_x, tau, t)?;
    // Scan by-product: a level slice that is already nearly stationary is a
    // closed-geodesic candidate in its own right.
    if crate::angle::stationarity_defect(engine, &essential.sigma, None) < 0.12 {
        if let Some(g) = crate::birkhoff::capture_geodesic(engine, essential.sigma.clone(), 80) {
            if is_certified_geodesic(engine, &g) {
                return Err(LoopError::NonSeparating(g));
            }
        }
    }
    let lp = shortest_essential_loop(engine, &base, marked, &essential.curve, Some(tau), rng)?;
    // Tau continues toward the reference end and meets the loop only at the
    // base, so a nearby forward tau point marks the reference side.
    let total = *cum.last().unwrap();
    let mut hint = None;
    for step in [0.5, 1.0, 2.0, 4.0] {
        let s_h = (t + step * mesh.median_edge_len()).min(total);
        let h = tau.point_at(mesh, cum, s_h);
        if crate::chart::direction_angle(mesh, &lp.base, &h).is_some() {
            hint = Some(h);
            break;
        }
    }
    let cert = classify_convexity(engine, &lp, toward, hint.as_ref())?;
    Ok((lp, cert))
}

/// Sweep the loop family γ_t along tau, looking for the convexity dichotomy:
/// either a parameter where the convex side flips (bisected to `tol_t`, the
/// flanking loops re-based to the common point) or all samples convex toward
/// the reference end.
pub fn dichotomy_scan(
    engine: &Engine,
    tau: &Curve,
    opts: &ScanOpts,
    rng: &mut Rng,
) -> Result<ScanResult, ScanError> {
    let mesh = engine.mesh;
    let cum = tau.cumlen(mesh);
    let x = tau.points[0];
    let y = *tau.points.last().unwrap();
    let marked: Vec<MeshPoint> = if opts.is_line { vec![] } else { vec![x, y] };
    let field_x = engine.distance_field(&x);

    let mut samples: Vec<ScanSample> = Vec::new();
    let mut detail: Vec<(f64, GeodesicLoop, ConvexityCert)> = Vec::new();
    let mut errors: Vec<String> = Vec::new();
    let mut t = opts.t_min;
    while t <= opts.t_max + 1e-12 {
        match sample_at(engine, &field_x, tau, &cum, t, &marked, &opts.toward, rng) {
            Ok((lp, cert)) => {
                if cert.candidate_geodesic && is_certified_geodesic(engine, &lp.curve) {
                    return Ok(ScanResult {
                        samples,
                        outcome: ScanOutcome::IncidentalGeodesic(lp.curve),
                        coarea_sum: 0.0,
                    });
                }
                samples.push(ScanSample {
                    t,
                    loop_len: lp.length(),
                    toward_ref: cert.toward_ref,
                    wedge: cert.wedge,
                    base_face: lp.base.face,
                });
                detail.push((t, lp, cert));
            }
            Err(LoopError::NonSeparating(c)) => {
                // Shorten freely; per the topology this yields a geodesic.
                let trace = shorten_closed(engine, c, ShortenOpts::for_engine(engine));
                if let Termination::Geodesic(g) = trace.termination {
                    return Ok(ScanResult {
                        samples,
                        outcome: ScanOutcome::IncidentalGeodesic(g),
                        coarea_sum: 0.0,
                    });
                }
                errors.push(String::from("non-separating loop failed to certify"));
            }
            Err(e) => errors.push(alloc::format!("t={t:.4}: {e}")),
        }
        t += opts.dt;
    }
    if detail.len() < 2 {
        return Err(ScanError::TooFewSamples(errors));
    }

    let coarea_sum: f64 = samples.iter().map(|s| s.loop_len * opts.dt).sum();

    // Find a side change.
    let mut flip: Option<(usize, usize)> = None;
    for k in 0..detail.len() - 1 {
        if detail[k].2.toward_ref != detail[k + 1].2.toward_ref {
            flip = Some((k, k + 1));
            break;
        }
    }
    let Some((ka, kb)) = flip else {
        if detail.iter().all(|(_, _, c)| c.toward_ref) {
            return Ok(ScanResult {
                samples,
                outcome: ScanOutcome::AllConvexToInfinity,
                coarea_sum,
            });
        }
        if opts.is_line {
            return Err(ScanError::LineInconclusive(samples));
        }
        return Err(ScanError::TooFewSamples(vec![String::from(
            "every loop convex toward the base on a ray scan",
        )]));
    };

    // Bisect the flip interval.
    let (mut t_lo, mut lp_lo) = (detail[ka].0, detail[ka].1.clone());
    let (mut t_hi, mut lp_hi) = (detail[kb].0, detail[kb].1.clone());
    let lo_side = detail[ka].2.toward_ref;
    for _ in 0..24 {
        if (t_hi - t_lo) <= opts.tol_t {
            break;
        }
        let tm = 0.5 * (t_lo + t_hi);
        match sample_at(engine, &field_x, tau, &cum, tm, &marked, &opts.toward, rng) {
            Ok((lp, cert)) => {
                if cert.candidate_geodesic && is_certified_geodesic(engine, &lp.curve) {
                    return Ok(ScanResult {
                        samples,
                        outcome: ScanOutcome::IncidentalGeodesic(lp.curve),
                        coarea_sum,
                    });
                }
                if cert.toward_ref == lo_side {
                    t_lo = tm;
                    lp_lo = lp;
                } else {
                    t_hi = tm;
                    lp_hi = lp;
                }
            }
            Err(LoopError::NonSeparating(c)) => {
                let trace = shorten_closed(engine, c, ShortenOpts::for_engine(engine));
                if let Termination::Geodesic(g) = trace.termination {
                    return Ok(ScanResult {
                        samples,
                        outcome: ScanOutcome::IncidentalGeodesic(g),
                        coarea_sum,
                    });
                }
                break;
            }
            Err(_) => break,
        }
    }

    // Re-base both flanking loops at the midpoint.
    let t0 = 0.5 * (t_lo + t_hi);
    let base0 = tau.point_at(mesh, &cum, t0);
    let rebase = |lp: &GeodesicLoop, rng: &mut Rng| -> GeodesicLoop {
        match conjugate_to(engine, lp, &base0) {
            Some(seed) => shortest_essential_loop(engine, &base0, &marked, &seed, Some(tau), rng)
                .unwrap_or_else(|_| lp.clone()),
            None => lp.clone(),
        }
    };
    let (toward_base, toward_inf) = if lo_side {
        (rebase(&lp_hi, rng), rebase(&lp_lo, rng))
    } else {
        (rebase(&lp_lo, rng), rebase(&lp_hi, rng))
    };
    Ok(ScanResult {
        samples,
        outcome: ScanOutcome::Pair(PairOutcome {
            t0,
            t_gap: t_hi - t_lo,
            shared_base: base0,
            toward_base,
            toward_inf,
        }),
        coarea_sum,
    })
}

/// Conjugate a loop to a new base: connecting leg + loop + reversed leg.
fn conjugate_to(engine: &Engine, lp: &GeodesicLoop, base_new: &MeshPoint) -> Option<Curve> {
    let mesh = engine.mesh;
    let leg = engine.shortest_path(base_new, &lp.base).ok()?;
    let mut pts = Vec::new();
    pts.extend_from_slice(&leg.points);
    pts.extend_from_slice(&lp.curve.points);
    pts.push(lp.base);
    pts.extend(leg.points.iter().rev().copied());
    let mut c = Curve::new(mesh, pts, true).ok()?;
    c.dedup(mesh);
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use core::f64::consts::TAU;

    fn cylinder() -> gen::Revolution {
        gen::revolution(
            gen::Profile::Const { r: 0.5 / TAU },
            gen::RevDomain::Interval {
                x0: 0.0,
                x1: 10.0,
                tail0: 0.0,
                tail1: 0.0,
            },
            2,
            None,
        )
        .unwrap()
    }

    #[test]
    fn essential_curve_on_flat_cylinder() {
        let rev = cylinder();
        let m = &rev.mesh;
        let eng = Engine::new(m);
        let a = MeshPoint::vertex(m, rev.ring_first[0]);
        let b = MeshPoint::vertex(m, rev.ring_first[rev.ring_x.len() - 1]);
        let tau = eng.shortest_path(&a, &b).unwrap();
        assert!((tau.length - 10.0).abs() < 0.05, "tau len {}", tau.length);
        let field = eng.distance_field(&a);
        let t0 = 0.5 * tau.length;
        let ec = essential_curve_through(&eng, &field, &tau, t0).unwrap();
        let bound = (2.0f64 * 5.0).sqrt() + m.delta_mesh();
        assert!(
            ec.curve.length <= bound,
            "len {} bound {bound}",
            ec.curve.length
        );
        assert!((ec.sigma_len - 0.5).abs() < 0.05, "sigma {}", ec.sigma_len);
    }

    #[test]
    fn hypothesis_violation_detected() {
        let m = gen::sphere_uv(1.0, 3).unwrap();
        let eng = Engine::new(&m);
        let north = MeshPoint::vertex(&m, 0);
        let south = MeshPoint::vertex(&m, (m.n_verts() - 1) as u32);
        let tau = eng.shortest_path(&north, &south).unwrap();
        let field = eng.distance_field(&north);
        let r = essential_curve_through(&eng, &field, &tau, 0.5 * tau.length);
        assert!(matches!(r, Err(LoopError::HypothesisViolated(_))));
    }

    #[test]
    fn shortest_loop_on_cylinder_is_circumference() {
        let rev = cylinder();
        let m = &rev.mesh;
        let eng = Engine::new(m);
        let a = MeshPoint::vertex(m, rev.ring_first[0]);
        let b = MeshPoint::vertex(m, rev.ring_first[rev.ring_x.len() - 1]);
        let tau = eng.shortest_path(&a, &b).unwrap();
        let field = eng.distance_field(&a);
        let t0 = 0.5 * tau.length;
        let ec = essential_curve_through(&eng, &field, &tau, t0).unwrap();
        let base = tau.point_at(m, &tau.cumlen(m), t0);
        let mut rng = Rng::new(7);
        let lp = shortest_essential_loop(&eng, &base, &[a, b], &ec.curve, Some(&tau), &mut rng).unwrap();
        assert!((lp.length() - 0.5).abs() < 0.01, "len {}", lp.length());
        assert!(lp.simple);
        let (w1, w2) = lp.vertex_angles;
        assert!(
            (w1 - PI).abs() < 0.05 && (w2 - PI).abs() < 0.05,
            "wedges {w1} {w2}"
        );
    }
}



#[cfg(test)]
mod dbg_sigma {
    use super::*;
    use crate::gen;

    #[test]
    fn dbg_sigma_defect() {
        let rev = gen::revolution(gen::Profile::Witch { scale: 1.0 }, gen::RevDomain::Line, 2, None).unwrap();
        let m = &rev.mesh;
        let eng = Engine::new(m);
        let tau = crate::pipeline::line_between_ends(&eng, 0, 1).unwrap();
        let field = eng.distance_field(&tau.points[0]);
        for t in [5.0, 5.2, 5.35, 5.5] {
            match essential_curve_through(&eng, &field, &tau, t) {
                Ok(ec) => {
                    let d = crate::angle::stationarity_defect(&eng, &ec.sigma, None);
                    std::println!("t={t}: sigma len {:.4} defect {:.4}", ec.sigma_len, d);
                    if (t - 5.35f64).abs() < 0.01 {
                        let opts = crate::birkhoff::ShortenOpts::for_engine(&eng);
                        let mut sh = crate::birkhoff::Shortener::new(&eng, ec.sigma.clone(), None, opts);
                        for it in 0..60 {
                            if it < 8 || it % 3 == 0 { sh.step(); } else { sh.polish_step(); }
                            let dd = crate::angle::stationarity_defect(&eng, &sh.curve, None);
                            if it % 4 == 0 {
                                std::println!("  it {it}: len {:.5} defect {dd:.5}", sh.curve.length);
                            }
                        }
                    }
                }
                Err(e) => std::println!("t={t}: {e}"),
            }
        }
    }
}
